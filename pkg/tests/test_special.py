"""Gamma, zeta, quadrature, and the Bose integral."""

import math

import pytest

from beincome.special import (
    Accuracy,
    DEFAULT_ACCURACY,
    DomainError,
    NonConvergenceError,
    bose_integral,
    bose_tail_cutoff,
    gamma,
    integrate,
    zeta,
)

# Reference values rounded to float64 from 40-digit evaluations of the
# defining series/products (checked against two independent
# implementations before being frozen here).
ZETA_25 = 1.341487257250917
ZETA_35 = 1.1267338673170566
GAMMA_25 = 1.329340388179137  # 3 sqrt(pi) / 4
GAMMA_35 = 3.3233509704478426  # (5/2) * Gamma(5/2)
BOSE_15 = 1.7832931912913002  # Gamma(5/2) zeta(5/2)
BOSE_25 = 3.744532091384591  # Gamma(7/2) zeta(7/2)


def zeta_by_summation(s, n=10**6):
    """Direct partial sum plus integral tail bracket.

    sum_{k>n} k^-s lies between int_{n+1}^inf x^-s dx and
    int_n^inf x^-s dx; the midpoint of the bracket gives a value good
    to ~half the bracket width (~1e-10 at s=2.5, n=1e6).
    """
    partial = math.fsum(k ** (-s) for k in range(1, n + 1))
    hi_tail = n ** (1.0 - s) / (s - 1.0)
    lo_tail = (n + 1.0) ** (1.0 - s) / (s - 1.0)
    return partial + 0.5 * (hi_tail + lo_tail), 0.5 * (hi_tail - lo_tail)


def test_gamma_classical_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma(2.5) == pytest.approx(GAMMA_25, rel=1e-13)
    assert gamma(3.5) == pytest.approx(GAMMA_35, rel=1e-13)
    assert gamma(2.5) == pytest.approx(3.0 * math.sqrt(math.pi) / 4.0, rel=1e-13)
    assert gamma(3.5) == pytest.approx(2.5 * gamma(2.5), rel=1e-13)


def test_gamma_agrees_with_libm():
    # math.gamma is an independent C implementation.
    x = 0.07
    while x < 170.0:
        assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-12), x
        x *= 1.13


def test_gamma_recurrence():
    for i in range(0, 196):
        x = 0.5 + 0.1 * i
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gamma_integer_factorials():
    for n in range(1, 20):
        assert gamma(float(n)) == pytest.approx(math.factorial(n - 1), rel=1e-13)


def test_gamma_domain_and_overflow():
    with pytest.raises(DomainError):
        gamma(0.0)
    with pytest.raises(DomainError):
        gamma(-1.5)
    with pytest.raises(DomainError):
        gamma(float("nan"))
    with pytest.raises(OverflowError):
        gamma(172.0)
    # Just under the edge still returns a finite double.
    assert math.isfinite(gamma(171.6))


def test_zeta_basel():
    assert zeta(2.0) == pytest.approx(math.pi**2 / 6.0, rel=1e-14)


def test_zeta_frozen_values():
    assert zeta(2.5) == pytest.approx(ZETA_25, rel=1e-13)
    assert zeta(3.5) == pytest.approx(ZETA_35, rel=1e-13)


def test_zeta_against_direct_summation():
    for s in (2.5, 3.5, 2.0, 4.0):
        ref, halfwidth = zeta_by_summation(s)
        assert abs(zeta(s) - ref) <= halfwidth + 1e-12


def test_zeta_strictly_decreasing_and_limit():
    grid = [1.05, 1.2, 1.5, 2.0, 2.5, 3.0, 3.5, 5.0, 10.0, 20.0, 30.0]
    values = [zeta(s) for s in grid]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert 1.0 < zeta(30.0) < 1.0 + 1e-8
    assert zeta(700.0) == 1.0  # every term beyond the first underflows


def test_zeta_domain():
    for s in (1.0, 0.5, -3.0, float("nan")):
        with pytest.raises(DomainError):
            zeta(s)


def test_integrate_constant():
    assert integrate(lambda x: 1.0, 0.0, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_integrate_exponential():
    val = integrate(lambda x: math.exp(-x), 0.0, 40.0)
    assert val == pytest.approx(1.0 - math.exp(-40.0), rel=1e-12)


def test_integrate_matches_bose_closed_form():
    f = lambda x: x**1.5 / math.expm1(x)
    val = integrate(f, 1e-301, 60.0)
    assert val == pytest.approx(BOSE_15, abs=1e-9)


def test_integrate_additive_over_adjacent_intervals():
    f = lambda x: math.sin(x) * math.exp(-0.3 * x)
    whole = integrate(f, 0.0, 9.0)
    split = integrate(f, 0.0, 2.7) + integrate(f, 2.7, 9.0)
    assert whole == pytest.approx(split, abs=2e-10)


def test_integrate_endpoint_singularity():
    # x^-1/2 is integrable at 0; endpoints are never sampled.
    acc = Accuracy(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=4000)
    val = integrate(lambda x: x**-0.5, 0.0, 1.0, acc)
    assert val == pytest.approx(2.0, rel=1e-8)


def test_integrate_rejects_bad_interval():
    with pytest.raises(DomainError):
        integrate(lambda x: x, 1.0, 1.0)
    with pytest.raises(DomainError):
        integrate(lambda x: x, 2.0, 1.0)


def test_integrate_nonconvergence_carries_estimate():
    acc = Accuracy(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=3)
    with pytest.raises(NonConvergenceError) as info:
        integrate(lambda x: math.sin(40.0 * x) ** 2 / math.sqrt(x), 0.0, 12.0, acc)
    err = info.value
    assert math.isfinite(err.estimate)
    assert err.error_bound > 0.0


def test_accuracy_validation():
    with pytest.raises(DomainError):
        Accuracy(abs_tol=0.0)
    with pytest.raises(DomainError):
        Accuracy(rel_tol=-1e-9)
    with pytest.raises(DomainError):
        Accuracy(max_subdivisions=0)


def test_bose_integral_basel_case():
    assert bose_integral(1.0) == pytest.approx(math.pi**2 / 6.0, rel=1e-13)


def test_bose_integral_frozen_values():
    assert bose_integral(1.5) == pytest.approx(BOSE_15, rel=1e-12)
    assert bose_integral(2.5) == pytest.approx(BOSE_25, rel=1e-12)
    assert bose_integral(2.5) == pytest.approx(gamma(3.5) * zeta(3.5), rel=1e-14)


def test_bose_integral_quadrature_matches_closed_form():
    for alpha in (0.5, 1.0, 1.5, 2.0, 2.5):
        closed = bose_integral(alpha, method="closed")
        quad = bose_integral(alpha, method="quadrature")
        assert quad == pytest.approx(closed, rel=1e-8)
        assert bose_integral(alpha, method="checked") == closed


def test_bose_integral_domain():
    with pytest.raises(DomainError):
        bose_integral(0.0)
    with pytest.raises(DomainError):
        bose_integral(-1.0)
    with pytest.raises(DomainError):
        bose_integral(1.5, method="series")


def test_bose_tail_cutoff_bound_holds():
    for alpha, tol in ((1.5, 1e-12), (2.5, 1e-12), (8.0, 1e-14)):
        t = bose_tail_cutoff(alpha, tol)
        assert 2.0 * t**alpha * math.exp(-t) < tol
        # The discarded tail really is below tol: bound it by the
        # first neglected slab with the same geometric argument.
        tail = integrate(
            lambda x: x**alpha * math.exp(-x) / -math.expm1(-x),
            t,
            t + 200.0,
            DEFAULT_ACCURACY,
        )
        assert tail < tol
