"""File-based figure rendering for the command-line reports.

Every function draws onto an explicit matplotlib Figure with the Agg
canvas and writes straight to disk, so no global backend or pyplot
state is involved.  The CLI calls these when --figure is passed; the
delimited output is unaffected.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .ingest import DensityPoint, IncomeHistogram
from .model import ModelKind, ModelParams, density

_COLORS = {"be": "#1f77b4", "gamma": "#d62728"}


def _new_figure(nrows: int = 1, height: float = 4.0):
    fig = Figure(figsize=(6.4, height * nrows))
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, 1, squeeze=False)[:, 0]
    return fig, axes


def _save(fig: Figure, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def density_figure(
    points: Sequence[DensityPoint],
    curves: Sequence[tuple[str, ModelKind, ModelParams]],
    path: str,
    unit_label: str = "income",
) -> str:
    """Empirical density markers with fitted curves on a log scale."""
    fig, (ax,) = _new_figure()
    radii = [p.r for p in points]
    rho = [p.rho for p in points]
    ax.plot(radii, rho, "o", ms=4, color="black", label="data")
    if radii:
        grid = np.linspace(min(radii) * 0.5 + 1e-9, max(radii), 400)
        for label, kind, params in curves:
            vals = [density(kind, params, float(r)) for r in grid]
            ax.plot(grid, vals, color=_COLORS.get(kind.value, None), label=label)
    ax.set_yscale("log")
    ax.set_xlabel(unit_label)
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, path)


def compare_figure(rows: Sequence[dict], path: str) -> str:
    """R-squared of both families against year."""
    fig, (ax,) = _new_figure()
    years = [row["year"] for row in rows]
    ax.plot(
        years,
        [row["r2_be"] for row in rows],
        "o-",
        color=_COLORS["be"],
        label="Bose-Einstein",
    )
    ax.plot(
        years,
        [row["r2_gamma"] for row in rows],
        "s--",
        color=_COLORS["gamma"],
        label="gamma",
    )
    ax.set_xlabel("year")
    ax.set_ylabel("R^2")
    ax.legend()
    return _save(fig, path)


def series_figure(rows: Sequence[dict], path: str) -> str:
    """Fitted alpha, beta, and R-squared traces by year.

    Takes the flat per-year rows of the series table; rows that
    recorded a fit failure instead of parameters are skipped.
    """
    fig, axes = _new_figure(nrows=3, height=2.6)
    ok = [r for r in rows if "alpha" in r]
    years = [r["year"] for r in ok]
    axes[0].plot(years, [r["alpha"] for r in ok], "o-", color=_COLORS["be"])
    axes[0].set_ylabel("alpha")
    axes[1].plot(years, [r["beta"] for r in ok], "o-", color=_COLORS["be"])
    axes[1].set_ylabel("beta")
    axes[2].plot(
        years,
        [r["r_squared"] for r in ok],
        "o-",
        color=_COLORS["be"],
        label="Bose-Einstein",
    )
    gam = [r for r in rows if "gamma_r_squared" in r]
    axes[2].plot(
        [r["year"] for r in gam],
        [r["gamma_r_squared"] for r in gam],
        "s--",
        color=_COLORS["gamma"],
        label="gamma",
    )
    axes[2].set_ylabel("R^2")
    axes[2].legend()
    axes[-1].set_xlabel("year")
    return _save(fig, path)


def simulation_figure(report: dict, path: str) -> str:
    """Simulated mean occupations with error bars against the analytic curve."""
    fig, (ax,) = _new_figure()
    radii = [lv["r"] for lv in report["levels"]]
    means = [o["mean"] for o in report["occupations"]]
    errs = [o["stderr"] for o in report["occupations"]]
    ax.errorbar(radii, means, yerr=errs, fmt="o", capsize=3, label="simulation")
    ax.plot(radii, report["analytic"], "-", color="black", label="analytic")
    if all(v > 0.0 for v in means) and all(v > 0.0 for v in report["analytic"]):
        ax.set_yscale("log")
    ax.set_xlabel("income level r")
    ax.set_ylabel("mean occupation")
    ax.legend()
    return _save(fig, path)


def histogram_figure(hist: IncomeHistogram, path: str, unit_label: str = "income") -> str:
    """Bar chart of household counts per bracket; an open top bin is hatched."""
    fig, (ax,) = _new_figure()
    for b in hist.bins:
        if b.is_open:
            width = hist.bins[-2].width if len(hist.bins) > 1 else 1.0
            ax.bar(
                b.lower,
                b.count,
                width=width,
                align="edge",
                color="none",
                edgecolor="gray",
                hatch="//",
            )
        else:
            ax.bar(
                b.lower,
                b.count,
                width=b.width,
                align="edge",
                color="#1f77b4",
                edgecolor="white",
            )
    ax.set_xlabel(unit_label)
    ax.set_ylabel("households")
    ax.set_title(f"{hist.year}: {hist.total_households:.0f} households")
    return _save(fig, path)
