"""Nonlinear least squares for the income-density families.

The fitter minimizes sum w_i (m_i(theta) - rho_i)^2 over theta =
(c, alpha, beta) with a damped Gauss-Newton (Levenberg-Marquardt)
iteration.  Positivity is built in by stepping in log-parameters, and
the Jacobian is analytic throughout.

m_i is either the density at the bracket midpoint ("point" residuals)
or the bracket-averaged mass bin_mass/width ("mass" residuals, the
default): census counts are integrals over brackets, not point
samples, and averaging removes the arbitrariness of the midpoint on
wide brackets.

Two numerical choices worth knowing about:

* Incomes are rescaled internally to units of the empirical mean
  income before optimizing, and the fitted parameters mapped back.
  This keeps the normal equations well conditioned whether the input
  is in dollars or kilo-dollars and makes the two fits agree to
  rounding (beta in exact ratio, same R^2).
* Mass residuals use a fixed 20-node Gauss-Legendre rule per bracket
  (with the r = t^2 substitution on a bracket touching zero).  On
  these smooth integrands the rule agrees with the adaptive
  quadrature of bin_mass far below fit tolerances, and it vectorizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ingest import DensityPoint, IncomeHistogram, TopBinPolicy, normalize
from .model import ModelKind, ModelParams, total_population
from .special import gamma, zeta

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


class DegenerateDataError(ValueError):
    """Input points cannot support the requested fit."""


class UndefinedRSquaredError(ValueError):
    """All rho values identical: SS_tot = 0, R^2 has no meaning."""


class SingularJacobianError(RuntimeError):
    """Normal equations singular; carries the damping value in force."""

    def __init__(self, message: str, damping: float):
        super().__init__(message)
        self.damping = damping


@dataclass(frozen=True)
class FitOptions:
    """Knobs for one fit.

    fix_alpha pins the exponent (1.0 reproduces the plain
    c r e^(-beta r) baseline; 1.5 the closed-form population/income
    results).  residual_mode is "mass" or "point".
    """

    model: ModelKind = ModelKind.BOSE_EINSTEIN
    fix_alpha: Optional[float] = None
    residual_mode: str = "mass"
    max_iterations: int = 200
    step_tol: float = 1e-10
    grad_tol: float = 1e-10
    damping_init: float = 1e-3

    def __post_init__(self):
        if self.residual_mode not in ("mass", "point"):
            raise DegenerateDataError(
                f"residual_mode must be 'mass' or 'point', got {self.residual_mode!r}"
            )
        if self.fix_alpha is not None and not self.fix_alpha > 0.0:
            raise DegenerateDataError(f"fix_alpha must be positive, got {self.fix_alpha!r}")
        if self.max_iterations < 1:
            raise DegenerateDataError("max_iterations must be at least 1")
        for name in ("step_tol", "grad_tol", "damping_init"):
            if not getattr(self, name) > 0.0:
                raise DegenerateDataError(f"{name} must be positive")


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters plus convergence diagnostics.

    residuals are the weighted signed residuals sqrt(w_i)(m_i - rho_i)
    in the units of the input points; objective is their sum of
    squares, and objective_trace the accepted-iteration history of it.
    """

    params: ModelParams
    r_squared: float
    residuals: tuple[float, ...]
    iterations: int
    converged: bool
    objective: float
    objective_trace: tuple[float, ...]
    model: ModelKind
    residual_mode: str


@dataclass(frozen=True)
class YearEntry:
    year: int
    be: Optional[FitResult]
    gamma: Optional[FitResult]
    be_error: Optional[str]
    gamma_error: Optional[str]
    dropped_share: float


@dataclass(frozen=True)
class YearSeries:
    entries: tuple[YearEntry, ...]


class _Predictor:
    """Vectorized m_i(theta) and gradients for a fixed point set."""

    def __init__(self, points: Sequence[DensityPoint], kind: ModelKind, residual_mode: str):
        self.kind = kind
        n = len(points)
        if residual_mode == "point":
            radii = np.array([[p.r] for p in points])
            weights = np.ones((n, 1))
        else:
            k = _GL_NODES.size
            radii = np.empty((n, k))
            weights = np.empty((n, k))
            for i, p in enumerate(points):
                width = p.bin_hi - p.bin_lo
                if p.bin_lo == 0.0:
                    # int_0^hi rho dr = int_0^hi^(1/4) 4 t^3 rho(t^4) dt;
                    # the quartic substitution keeps the fixed rule at
                    # full accuracy for fractional alpha down to ~0.5.
                    s = p.bin_hi**0.25
                    t = 0.5 * s * (_GL_NODES + 1.0)
                    radii[i] = t**4
                    weights[i] = _GL_WEIGHTS * (0.5 * s) * 4.0 * t**3 / width
                else:
                    half = 0.5 * width
                    radii[i] = 0.5 * (p.bin_lo + p.bin_hi) + half * _GL_NODES
                    weights[i] = _GL_WEIGHTS * half / width
        self.radii = radii
        self.quad_w = weights
        self.log_radii = np.log(radii)
        self.rho = np.array([p.rho for p in points])
        self.sqrt_w = np.sqrt(np.array([p.weight for p in points]))

    def _density_nodes(self, c: float, alpha: float, beta: float):
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            x = beta * self.radii
            dens = c * np.power(self.radii, alpha)
            if self.kind is ModelKind.BOSE_EINSTEIN:
                dens = dens * (np.exp(-x) / -np.expm1(-x))
            else:
                dens = dens * np.exp(-x)
        return dens, x

    def values(self, c: float, alpha: float, beta: float) -> np.ndarray:
        dens, _ = self._density_nodes(c, alpha, beta)
        return (self.quad_w * dens).sum(axis=1)

    def values_and_gradient(self, c: float, alpha: float, beta: float):
        dens, x = self._density_nodes(c, alpha, beta)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if self.kind is ModelKind.BOSE_EINSTEIN:
                d_beta = dens * self.radii / np.expm1(-x)
            else:
                d_beta = -dens * self.radii
            d_alpha = dens * self.log_radii
        m = (self.quad_w * dens).sum(axis=1)
        return (
            m,
            m / c,
            (self.quad_w * d_alpha).sum(axis=1),
            (self.quad_w * d_beta).sum(axis=1),
        )


def _kept_mass_and_mean(points: Sequence[DensityPoint]) -> tuple[float, float]:
    mass = math.fsum(p.rho * (p.bin_hi - p.bin_lo) for p in points)
    first_moment = math.fsum(p.r * p.rho * (p.bin_hi - p.bin_lo) for p in points)
    if not mass > 0.0:
        raise DegenerateDataError("all density points carry zero mass")
    mean = first_moment / mass
    if not mean > 0.0:
        raise DegenerateDataError("empirical mean income is zero")
    return mass, mean


def initial_guess(
    points: Sequence[DensityPoint],
    model: ModelKind,
    fix_alpha: Optional[float] = None,
) -> ModelParams:
    """Moment-matching starting point.

    alpha starts at 3/2 unless pinned.  beta comes from the mean
    income: the model mean is I(alpha+1)/(beta I(alpha)) for the
    Bose-Einstein family and (alpha+1)/beta for the gamma family, so
    beta0 = mu_ratio / empirical mean.  c0 normalizes the total
    population to 1.
    """
    positive = [p for p in points if p.rho > 0.0]
    if len(positive) < 3:
        raise DegenerateDataError(
            f"need at least 3 points with positive density, got {len(positive)}"
        )
    alpha0 = 1.5 if fix_alpha is None else fix_alpha
    _, mean = _kept_mass_and_mean(points)
    if model is ModelKind.BOSE_EINSTEIN:
        mu_ratio = (alpha0 + 1.0) * zeta(alpha0 + 2.0) / zeta(alpha0 + 1.0)
        family_integral = gamma(alpha0 + 1.0) * zeta(alpha0 + 1.0)
    else:
        mu_ratio = alpha0 + 1.0
        family_integral = gamma(alpha0 + 1.0)
    beta0 = mu_ratio / mean
    c0 = beta0 ** (alpha0 + 1.0) / family_integral
    return ModelParams(c=c0, alpha=alpha0, beta=beta0)


def _unpack(u: np.ndarray, fix_alpha: Optional[float]) -> tuple[float, float, float]:
    if fix_alpha is None:
        return math.exp(u[0]), math.exp(u[1]), math.exp(u[2])
    return math.exp(u[0]), fix_alpha, math.exp(u[1])


def _residuals_and_jacobian(pred: _Predictor, u: np.ndarray, fix_alpha: Optional[float]):
    c, alpha, beta = _unpack(u, fix_alpha)
    m, d_c, d_alpha, d_beta = pred.values_and_gradient(c, alpha, beta)
    e = pred.sqrt_w * (m - pred.rho)
    # Chain rule for log-parameters: d/d(log t) = t d/dt.
    cols = [pred.sqrt_w * d_c * c]
    if fix_alpha is None:
        cols.append(pred.sqrt_w * d_alpha * alpha)
    cols.append(pred.sqrt_w * d_beta * beta)
    return e, np.column_stack(cols)


def _levenberg_marquardt(pred: _Predictor, guess: ModelParams, opts: FitOptions):
    if opts.fix_alpha is None:
        u = np.log([guess.c, guess.alpha, guess.beta])
    else:
        u = np.log([guess.c, guess.beta])
    e, jac = _residuals_and_jacobian(pred, u, opts.fix_alpha)
    objective = float(e @ e)
    if not math.isfinite(objective):
        raise DegenerateDataError("objective not finite at the starting point")
    damping = opts.damping_init
    growth = 2.0
    trace = [objective]
    converged = False
    iterations = 0
    while iterations < opts.max_iterations:
        iterations += 1
        grad = jac.T @ e
        if np.max(np.abs(grad)) < opts.grad_tol:
            converged = True
            break
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        if not np.all(np.isfinite(hess)) or np.any(diag <= 0.0):
            raise SingularJacobianError(
                f"normal equations singular at damping {damping!r}", damping=damping
            )
        try:
            step = np.linalg.solve(hess + damping * np.diag(diag), -grad)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(
                f"normal equations unsolvable at damping {damping!r}", damping=damping
            ) from None
        predicted = float(step @ (damping * diag * step - grad))
        u_try = u + step
        e_try, jac_try = _residuals_and_jacobian(pred, u_try, opts.fix_alpha)
        if np.all(np.isfinite(e_try)):
            obj_try = float(e_try @ e_try)
        else:
            obj_try = math.inf
        small_step = np.linalg.norm(step) < opts.step_tol * (
            np.linalg.norm(u) + opts.step_tol
        )
        if obj_try < objective and predicted > 0.0:
            gain = (objective - obj_try) / predicted
            u, e, jac, objective = u_try, e_try, jac_try, obj_try
            trace.append(objective)
            damping *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
            growth = 2.0
            if small_step:
                converged = True
                break
        else:
            # The damped step can only shrink from here; once it is
            # already below step_tol no acceptable move of meaningful
            # size exists, which is convergence, not failure.
            if small_step:
                converged = True
                break
            damping *= growth
            growth *= 2.0
            if damping > 1e120:
                break
    return u, e, objective, trace, iterations, converged


def _validated_points(points: Sequence[DensityPoint]) -> tuple[DensityPoint, ...]:
    points = tuple(points)
    for p in points:
        if not p.bin_hi > p.bin_lo:
            raise DegenerateDataError(f"bracket [{p.bin_lo!r}, {p.bin_hi!r}] has no width")
        if not (math.isfinite(p.rho) and p.rho >= 0.0):
            raise DegenerateDataError(f"bad density value {p.rho!r}")
        if not p.weight > 0.0:
            raise DegenerateDataError(f"weights must be positive, got {p.weight!r}")
    return points


def r_squared(
    points: Sequence[DensityPoint],
    kind: ModelKind,
    params: ModelParams,
    residual_mode: str = "mass",
) -> float:
    """1 - SS_res/SS_tot against the rho values, unweighted.

    Model values are computed in the given residual mode, matching
    what the fit optimized.  Raises UndefinedRSquaredError when all
    rho are equal (SS_tot = 0).
    """
    points = _validated_points(points)
    if len(points) < 2:
        raise DegenerateDataError("r_squared needs at least 2 points")
    pred = _Predictor(points, kind, residual_mode)
    m = pred.values(params.c, params.alpha, params.beta)
    rho = pred.rho
    ss_res = float(np.sum((m - rho) ** 2))
    ss_tot = float(np.sum((rho - rho.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedRSquaredError("constant density data: SS_tot = 0")
    return 1.0 - ss_res / ss_tot


def fit(points: Sequence[DensityPoint], opts: FitOptions = FitOptions()) -> FitResult:
    """Fit one family to density points; see the module docstring.

    Returns a FitResult whether or not the iteration converged (the
    flag says which).  Raises SingularJacobianError if the normal
    equations degenerate, DegenerateDataError for unusable input.
    """
    points = _validated_points(points)
    n_free = 2 if opts.fix_alpha is not None else 3
    if len(points) < n_free:
        raise DegenerateDataError(
            f"{len(points)} points cannot determine {n_free} free parameters"
        )
    _, unit = _kept_mass_and_mean(points)
    hat_points = [
        DensityPoint(
            r=p.r / unit,
            rho=p.rho * unit,
            weight=p.weight,
            bin_lo=p.bin_lo / unit,
            bin_hi=p.bin_hi / unit,
        )
        for p in points
    ]
    guess = initial_guess(hat_points, opts.model, opts.fix_alpha)
    pred = _Predictor(hat_points, opts.model, opts.residual_mode)
    u, e_hat, obj_hat, trace_hat, iterations, converged = _levenberg_marquardt(
        pred, guess, opts
    )
    c_hat, alpha, beta_hat = _unpack(u, opts.fix_alpha)
    params = ModelParams(
        c=c_hat * unit ** -(alpha + 1.0),
        alpha=alpha,
        beta=beta_hat / unit,
    )
    try:
        r2 = r_squared(points, opts.model, params, opts.residual_mode)
    except UndefinedRSquaredError:
        r2 = math.nan
    scale = 1.0 / unit
    return FitResult(
        params=params,
        r_squared=r2,
        residuals=tuple(float(v) * scale for v in e_hat),
        iterations=iterations,
        converged=converged,
        objective=obj_hat * scale * scale,
        objective_trace=tuple(v * scale * scale for v in trace_hat),
        model=opts.model,
        residual_mode=opts.residual_mode,
    )


def fit_histogram(
    hist: IncomeHistogram,
    opts: FitOptions = FitOptions(),
    policy: TopBinPolicy = TopBinPolicy.DROP,
) -> tuple[FitResult, float]:
    """Normalize then fit; returns (result, dropped open-bracket share)."""
    sample = normalize(hist, policy)
    return fit(sample.points, opts), sample.dropped_share


def fit_years(
    histograms: Sequence[IncomeHistogram], opts: FitOptions = FitOptions()
) -> YearSeries:
    """Per-year fits of both families.

    The primary family follows ``opts`` (including fix_alpha); the
    gamma baseline is always fitted with alpha pinned to 1, the
    convention of the published comparison table.  Failures are
    recorded per entry and the batch continues.
    """
    if not histograms:
        return YearSeries(entries=())
    years = [h.year for h in histograms]
    if any(y is None for y in years):
        raise DegenerateDataError("every histogram in a series needs a year")
    if len(set(years)) != len(years):
        raise DegenerateDataError(f"duplicate years in series: {sorted(years)}")
    entries = []
    for hist in sorted(histograms, key=lambda h: h.year):
        sample = normalize(hist)
        results: dict[str, Optional[FitResult]] = {}
        errors: dict[str, Optional[str]] = {}
        for label, fit_opts in (
            ("be", replace(opts, model=ModelKind.BOSE_EINSTEIN)),
            ("gamma", replace(opts, model=ModelKind.GAMMA, fix_alpha=1.0)),
        ):
            try:
                results[label] = fit(sample.points, fit_opts)
                errors[label] = None
            except (DegenerateDataError, SingularJacobianError) as err:
                results[label] = None
                errors[label] = str(err)
        entries.append(
            YearEntry(
                year=hist.year,
                be=results["be"],
                gamma=results["gamma"],
                be_error=errors["be"],
                gamma_error=errors["gamma"],
                dropped_share=sample.dropped_share,
            )
        )
    return YearSeries(entries=tuple(entries))


def fit_report(
    result: FitResult, year: Optional[int] = None, dropped_top_share: float = 0.0
) -> dict:
    """The serializable fit record (one JSON document per fit)."""
    return {
        "year": year,
        "model": result.model.value,
        "params": {
            "c": result.params.c,
            "alpha": result.params.alpha,
            "beta": result.params.beta,
        },
        "r_squared": result.r_squared,
        "converged": result.converged,
        "iterations": result.iterations,
        "objective": result.objective,
        "dropped_top_share": dropped_top_share,
    }


def series_table(series: YearSeries) -> list[dict]:
    """Flat per-year rows: fitted constants, population, both R^2."""
    rows = []
    for entry in series.entries:
        row: dict = {"year": entry.year, "dropped_top_share": entry.dropped_share}
        if entry.be is not None:
            row.update(
                c=entry.be.params.c,
                alpha=entry.be.params.alpha,
                beta=entry.be.params.beta,
                population=total_population(entry.be.params),
                r_squared=entry.be.r_squared,
                converged=entry.be.converged,
            )
        else:
            row.update(error=entry.be_error)
        if entry.gamma is not None:
            row.update(
                gamma_r_squared=entry.gamma.r_squared,
                gamma_converged=entry.gamma.converged,
            )
        else:
            row.update(gamma_error=entry.gamma_error)
        rows.append(row)
    return rows
