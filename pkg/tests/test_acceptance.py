"""Acceptance criteria, one test per criterion.

Each test prints a single pass/fail line (run with ``pytest -s`` to
see them live) and asserts the same condition, so the suite is green
exactly when every runnable criterion holds.  Criterion 7 needs
user-supplied census tables and is skipped unless BEINCOME_CENSUS_DIR
points at a directory of bracket CSVs.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from beincome.fit import FitOptions, fit, fit_years
from beincome.ingest import normalize, parse_file
from beincome.kinetics import (
    IncomeLevel,
    Society,
    bose_rate_pairs,
    partition_function,
    simulate,
)
from beincome.model import (
    ModelKind,
    ModelParams,
    beta_for_population,
    density,
    density_gradient,
    total_income,
    total_population,
)
from beincome.special import Accuracy, bose_integral, gamma, integrate, zeta
from beincome.synth import synthesize

BE = ModelKind.BOSE_EINSTEIN
GA = ModelKind.GAMMA


def _record(number: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {number}: {verdict} - {detail}")
    assert ok, f"criterion {number} failed: {detail}"


def test_criterion_1_quadrature_matches_gamma_zeta():
    start = time.perf_counter()
    worst = 0.0
    for alpha in (0.5, 1.0, 1.5, 2.0, 2.5):
        closed = gamma(alpha + 1.0) * zeta(alpha + 1.0)
        numeric = bose_integral(alpha, method="quadrature")
        worst = max(worst, abs(numeric - closed) / closed)
    elapsed = time.perf_counter() - start
    _record(
        1,
        worst < 1e-8 and elapsed < 1.0,
        f"quadrature vs Gamma*zeta, worst rel err {worst:.2e}, {elapsed:.2f} s",
    )


def test_criterion_2_closed_form_population_and_income():
    c, beta = 0.37, 0.041
    p = ModelParams(c=c, alpha=1.5, beta=beta)
    sqrt_pi = math.sqrt(math.pi)
    n_formula = 3.0 * c * sqrt_pi / (4.0 * beta**2.5) * zeta(2.5)
    r_formula = 15.0 * c * sqrt_pi / (8.0 * beta**3.5) * zeta(3.5)

    acc = Accuracy(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=4000)
    cutoff = 800.0 / beta
    n_quad = integrate(lambda r: density(BE, p, r), 1e-12, cutoff, acc)
    r_quad = integrate(lambda r: r * density(BE, p, r), 1e-12, cutoff, acc)

    err_n = max(
        abs(total_population(p) - n_formula) / n_formula,
        abs(n_quad - n_formula) / n_formula,
    )
    err_r = max(
        abs(total_income(p) - r_formula) / r_formula,
        abs(r_quad - r_formula) / r_formula,
    )

    # Scaling laws via beta_for_population round trips.
    n0 = total_population(p)
    beta1 = beta_for_population(n0, c, 1.5)
    beta2 = beta_for_population(2.0 * n0, c, 1.5)
    err_scale = abs(beta2 / beta1 - 2.0 ** (-0.4))
    income_per_unit = []
    for scale in (1.0, 2.0, 5.0):
        b = beta_for_population(scale * n0, c, 1.5)
        q = ModelParams(c=c, alpha=1.5, beta=b)
        income_per_unit.append(total_income(q) * q.beta / (scale * n0))
    err_ratio = max(
        abs(v - income_per_unit[0]) / income_per_unit[0] for v in income_per_unit
    )

    ok = err_n < 1e-10 and err_r < 1e-10 and err_scale < 1e-12 and err_ratio < 1e-12
    _record(
        2,
        ok,
        f"N err {err_n:.2e}, R err {err_r:.2e}, beta scaling err {err_scale:.2e}, "
        f"R*beta/N spread {err_ratio:.2e}",
    )


def test_criterion_3_gradients_match_finite_differences():
    rng = np.random.default_rng(20240817)
    cube = np.cbrt(np.finfo(float).eps)
    worst = 0.0
    for _ in range(100):
        kind = BE if rng.random() < 0.5 else GA
        c = float(np.exp(rng.uniform(np.log(1e-3), np.log(10.0))))
        alpha = float(rng.uniform(0.6, 2.5))
        beta = float(np.exp(rng.uniform(np.log(0.01), np.log(2.0))))
        r = float(np.exp(rng.uniform(np.log(0.05), np.log(60.0))))
        p = ModelParams(c=c, alpha=alpha, beta=beta)
        analytic = density_gradient(kind, p, r)
        scale = density(kind, p, r) * max(1.0, abs(math.log(r)))
        for i, name in enumerate(("c", "alpha", "beta")):
            x = getattr(p, name)
            h = cube * max(abs(x), 1e-8)
            hi = replace(p, **{name: x + h})
            lo = replace(p, **{name: x - h})
            fd = (density(kind, hi, r) - density(kind, lo, r)) / (2.0 * h)
            denom = max(abs(analytic[i]), 1e-9 * scale)
            worst = max(worst, abs(fd - analytic[i]) / denom)
    _record(
        3,
        worst < 1e-6,
        f"100 random points, both families, worst gradient rel err {worst:.2e}",
    )


EDGES = [2.5 * i for i in range(41)]
TRUE_ALPHA, TRUE_BETA = 1.5, 0.035


def _true_params() -> ModelParams:
    c = TRUE_BETA ** (TRUE_ALPHA + 1.0) / bose_integral(TRUE_ALPHA)
    return ModelParams(c=c, alpha=TRUE_ALPHA, beta=TRUE_BETA)


@pytest.fixture(scope="module")
def recovery_runs():
    params = _true_params()
    runs = []
    for seed in range(1, 21):
        hist = synthesize(BE, params, EDGES, 10**6, seed, year=2000 + seed)
        points = normalize(hist).points
        start = time.perf_counter()
        be = fit(points, FitOptions(model=BE))
        be_seconds = time.perf_counter() - start
        ga = fit(points, FitOptions(model=GA, fix_alpha=1.0))
        runs.append((seed, be, ga, be_seconds))
    return runs


def test_criterion_4_parameter_recovery(recovery_runs):
    hits = 0
    worst_alpha = worst_beta = slowest = 0.0
    for _, be, _, seconds in recovery_runs:
        d_alpha = abs(be.params.alpha - TRUE_ALPHA)
        d_beta = abs(be.params.beta - TRUE_BETA) / TRUE_BETA
        worst_alpha = max(worst_alpha, d_alpha)
        worst_beta = max(worst_beta, d_beta)
        slowest = max(slowest, seconds)
        if d_alpha <= 0.05 and d_beta <= 0.02 and be.converged:
            hits += 1
    ok = hits >= 19 and slowest < 1.0
    _record(
        4,
        ok,
        f"{hits}/20 seeds within alpha +/-0.05 and beta +/-2% "
        f"(worst d_alpha {worst_alpha:.4f}, worst d_beta {worst_beta:.3%}, "
        f"slowest fit {slowest * 1e3:.0f} ms)",
    )


def test_criterion_5_model_comparison_ordering(recovery_runs):
    margins = [be.r_squared - ga.r_squared for _, be, ga, _ in recovery_runs]
    wins = sum(1 for m in margins if m > 0.0)
    _record(
        5,
        wins == len(recovery_runs),
        f"BE R^2 > gamma R^2 in {wins}/{len(recovery_runs)} seeds "
        f"(smallest margin {min(margins):.4f})",
    )


def test_criterion_6_kinetic_equilibrium():
    start = time.perf_counter()
    levels = [IncomeLevel(index=i, r=float(i), g=1.0) for i in range(1, 6)]
    society = Society.build(levels, beta=1.0)
    result = simulate(society, bose_rate_pairs(levels), horizon=20000.0, seed=42)
    worst_z = 0.0
    for mean, stderr, target in zip(result.means, result.stderrs, result.analytic):
        worst_z = max(worst_z, abs(mean - target) / stderr)

    # Partition product vs truncated brute-force occupation sum.
    beta = 1.0
    two = [IncomeLevel(index=1, r=0.6, g=1.0), IncomeLevel(index=2, r=1.3, g=1.0)]
    x1, x2 = math.exp(-beta * 0.6), math.exp(-beta * 1.3)
    brute = math.fsum(
        x1**n1 * x2**n2 for n1 in range(201) for n2 in range(201)
    )
    tail = x1**201 / (1 - x1) + x2**201 / (1 - x2)
    z_err = abs(partition_function(two, beta) - brute)
    elapsed = time.perf_counter() - start

    ok = worst_z <= 3.0 and z_err <= tail + 1e-12 * brute and elapsed < 30.0
    _record(
        6,
        ok,
        f"worst |z| {worst_z:.2f} (limit 3), partition gap {z_err:.2e} "
        f"(tail bound {tail:.2e}), {elapsed:.1f} s",
    )


def test_criterion_7_census_reproduction():
    data_dir = os.environ.get("BEINCOME_CENSUS_DIR")
    if not data_dir:
        print(
            "criterion 7: SKIP - optional; set BEINCOME_CENSUS_DIR to a directory "
            "of census bracket CSVs to run it"
        )
        pytest.skip("census tables not bundled; set BEINCOME_CENSUS_DIR to run")
    paths = sorted(
        os.path.join(data_dir, f)
        for f in os.listdir(data_dir)
        if f.endswith(".csv")
    )
    assert paths, f"no CSV files in {data_dir}"
    series = fit_years([parse_file(p) for p in paths])
    alphas, failures = [], []
    for entry in series.entries:
        if entry.be is None:
            failures.append(f"{entry.year}: {entry.be_error}")
            continue
        alphas.append((entry.year, entry.be.params.alpha))
        r2 = entry.be.r_squared
        floor = 0.982 if 2009 <= entry.year <= 2013 else 0.95
        if not r2 > floor:
            failures.append(f"{entry.year}: R^2 {r2:.4f} <= {floor}")
        if not 1.15 <= entry.be.params.alpha <= 1.85:
            failures.append(f"{entry.year}: alpha {entry.be.params.alpha:.3f}")
    mean_alpha = sum(a for _, a in alphas) / len(alphas) if alphas else float("nan")
    _record(
        7,
        not failures,
        f"{len(series.entries)} years, mean alpha {mean_alpha:.3f}; "
        + ("all within bounds" if not failures else "; ".join(failures)),
    )
