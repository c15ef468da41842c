"""Batch command line: fit, compare, series, synth, simulate, plotdata.

Reports go to standard output (or --out); diagnostics go to the error
stream.  Exit codes: 0 success, 1 numerical non-convergence, 2
input or usage error.

Bracket bounds in files are kilodollars by default; --unit dollar
declares dollar-valued input, which is converted to the canonical
kilodollar unit internally and converted back for every emitted
number.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .fit import (
    DegenerateDataError,
    FitOptions,
    SingularJacobianError,
    fit_report,
    fit_years,
    fit_histogram,
    series_table,
)
from .ingest import (
    IncomeBin,
    IncomeHistogram,
    ParseError,
    TopBinPolicy,
    ValidationError,
    normalize,
    parse_file,
    serialize,
)
from .kinetics import (
    IncomeLevel,
    Society,
    bose_rate_pairs,
    simulate,
    simulation_report,
)
from .model import ModelKind, ModelParams, density
from .special import DomainError, NonConvergenceError
from .synth import synthesize

log = logging.getLogger(__name__)

_DOLLARS_PER_KILODOLLAR = 1000.0


def _unit_factor(unit: str) -> float:
    """File units per kilodollar: 1000 for dollar input, 1 otherwise."""
    return _DOLLARS_PER_KILODOLLAR if unit == "dollar" else 1.0


def _scale_histogram(hist: IncomeHistogram, divisor: float) -> IncomeHistogram:
    if divisor == 1.0:
        return hist
    bins = [
        IncomeBin(
            lower=b.lower / divisor,
            upper=None if b.upper is None else b.upper / divisor,
            count=b.count,
        )
        for b in hist.bins
    ]
    return IncomeHistogram.build(hist.year, bins)


def _params_in_unit(params: ModelParams, factor: float) -> ModelParams:
    """Re-express canonical-unit constants in the declared file unit."""
    if factor == 1.0:
        return params
    u = 1.0 / factor
    return ModelParams(
        c=params.c * u ** (params.alpha + 1.0),
        alpha=params.alpha,
        beta=params.beta * u,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _figure_path(base: str, tag, many: bool) -> str:
    if not many:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}_{tag}{p.suffix}"))


def _fit_options(args) -> FitOptions:
    return FitOptions(
        model=ModelKind.from_name(args.model),
        fix_alpha=args.fix_alpha,
        residual_mode=args.residuals,
    )


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit value")
    return value


def _run_fit(args) -> int:
    factor = _unit_factor(args.unit)
    opts = _fit_options(args)
    policy = TopBinPolicy(args.top_bin)
    reports = []
    figures = []
    all_converged = True
    for path in args.files:
        hist = _scale_histogram(parse_file(path), factor)
        result, dropped = fit_histogram(hist, opts, policy)
        all_converged = all_converged and result.converged
        shown = _params_in_unit(result.params, factor)
        report = fit_report(result, year=hist.year, dropped_top_share=dropped)
        report["params"] = {"c": shown.c, "alpha": shown.alpha, "beta": shown.beta}
        report["objective"] = result.objective / factor**2
        reports.append(report)
        if args.figure:
            figures.append((path, hist, result))
    if args.format == "csv":
        header = [
            "year",
            "model",
            "alpha",
            "beta",
            "c",
            "r_squared",
            "converged",
            "iterations",
            "objective",
            "dropped_top_share",
        ]
        rows = [
            [
                rep["year"],
                rep["model"],
                rep["params"]["alpha"],
                rep["params"]["beta"],
                rep["params"]["c"],
                rep["r_squared"],
                rep["converged"],
                rep["iterations"],
                rep["objective"],
                rep["dropped_top_share"],
            ]
            for rep in reports
        ]
        _emit(_csv_text(header, rows), args.out)
    else:
        payload = reports[0] if len(reports) == 1 else reports
        _emit(json.dumps(payload, indent=2), args.out)
    if args.figure:
        from . import figures as figmod

        unit_label = f"income ({args.unit})"
        for path, hist, result in figures:
            sample = normalize(_scale_histogram(hist, 1.0 / factor))
            shown = _params_in_unit(result.params, factor)
            target = _figure_path(
                args.figure, hist.year or Path(path).stem, len(figures) > 1
            )
            figmod.density_figure(
                sample.points,
                [(result.model.value, result.model, shown)],
                target,
                unit_label=unit_label,
            )
            log.info("figure written to %s", target)
    return 0 if all_converged else 1


def _series_entries(args):
    factor = _unit_factor(args.unit)
    hists = [_scale_histogram(parse_file(p), factor) for p in args.files]
    return fit_years(hists, _fit_options(args)), factor


def _series_ok(series) -> bool:
    for entry in series.entries:
        for result, err in ((entry.be, entry.be_error), (entry.gamma, entry.gamma_error)):
            if err is not None or result is None or not result.converged:
                return False
    return True


def _run_compare(args) -> int:
    series, _ = _series_entries(args)
    rows = []
    for entry in series.entries:
        rows.append(
            {
                "year": entry.year,
                "r2_be": entry.be.r_squared if entry.be else math.nan,
                "r2_gamma": entry.gamma.r_squared if entry.gamma else math.nan,
            }
        )
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        _emit(
            _csv_text(
                ["year", "r2_be", "r2_gamma"],
                [[r["year"], r["r2_be"], r["r2_gamma"]] for r in rows],
            ),
            args.out,
        )
    if args.figure:
        from . import figures as figmod

        figmod.compare_figure(rows, args.figure)
    return 0 if _series_ok(series) else 1


_SERIES_COLUMNS = [
    "year",
    "alpha",
    "beta",
    "c",
    "population",
    "r_squared",
    "converged",
    "gamma_r_squared",
    "gamma_converged",
    "dropped_top_share",
    "error",
    "gamma_error",
]


def _run_series(args) -> int:
    series, factor = _series_entries(args)
    rows = series_table(series)
    if factor != 1.0:
        for row in rows:
            if "alpha" in row:
                shown = _params_in_unit(
                    ModelParams(c=row["c"], alpha=row["alpha"], beta=row["beta"]),
                    factor,
                )
                row["c"], row["beta"] = shown.c, shown.beta
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        used = [k for k in _SERIES_COLUMNS if any(k in row for row in rows)]
        table = [[row.get(k, "") for k in used] for row in rows]
        _emit(_csv_text(used, table), args.out)
    if args.figure:
        from . import figures as figmod

        figmod.series_figure(rows, args.figure)
    return 0 if _series_ok(series) else 1


def _edges_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad edge list {text!r}")


def _run_synth(args) -> int:
    if args.edges is not None:
        edges = args.edges
    else:
        if args.bins < 2:
            raise ValidationError("need at least 2 brackets")
        width = args.max / args.bins
        edges = [i * width for i in range(args.bins + 1)]
    params = ModelParams(c=args.c, alpha=args.alpha, beta=args.beta)
    hist = synthesize(
        ModelKind.from_name(args.model),
        params,
        edges,
        args.households,
        args.seed,
        open_top=not args.closed_top,
        year=args.year,
    )
    _emit(serialize(hist), args.out)
    if args.figure:
        from . import figures as figmod

        figmod.histogram_figure(hist, args.figure, unit_label=f"income ({args.unit})")
    return 0


_DEFAULT_SIM_CONFIG = {
    "beta": 1.0,
    "levels": [{"r": float(i), "g": 1.0} for i in range(1, 6)],
    "b": 1.0,
    "horizon": 20000.0,
}

_SIM_KEYS = {"beta", "levels", "occupations", "b", "horizon", "burn_in", "reservoir_rate"}


def _load_sim_config(path: Optional[str]) -> dict:
    if path is None:
        return dict(_DEFAULT_SIM_CONFIG)
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"bad simulation config {path}: {err}")
    if not isinstance(config, dict):
        raise ValidationError("simulation config must be a JSON object")
    unknown = set(config) - _SIM_KEYS
    if unknown:
        raise ValidationError(f"unknown simulation config keys: {sorted(unknown)}")
    if "levels" not in config or "beta" not in config:
        raise ValidationError("simulation config needs 'levels' and 'beta'")
    return config


def _run_simulate(args) -> int:
    config = _load_sim_config(args.config)
    try:
        levels = [
            IncomeLevel(index=i + 1, r=float(lv["r"]), g=float(lv.get("g", 1.0)))
            for i, lv in enumerate(config["levels"])
        ]
    except (TypeError, KeyError) as err:
        raise ValidationError(f"bad level entry in simulation config: {err}")
    society = Society.build(
        levels, beta=float(config["beta"]), occupations=config.get("occupations")
    )
    rates = bose_rate_pairs(levels, b=float(config.get("b", 1.0)))
    horizon = args.horizon if args.horizon is not None else config.get("horizon", 20000.0)
    burn_in = args.burn_in if args.burn_in is not None else config.get("burn_in")
    reservoir = (
        args.reservoir_rate
        if args.reservoir_rate is not None
        else config.get("reservoir_rate", 1.0)
    )
    result = simulate(
        society,
        rates,
        horizon=float(horizon),
        seed=args.seed,
        burn_in=None if burn_in is None else float(burn_in),
        reservoir_rate=float(reservoir),
    )
    report = simulation_report(society, result)
    _emit(json.dumps(report, indent=2), args.out)
    if args.figure:
        from . import figures as figmod

        figmod.simulation_figure(report, args.figure)
    return 0


def _run_plotdata(args) -> int:
    hist = parse_file(args.file)
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    if report.get("year") != hist.year:
        raise ValidationError(
            f"report year {report.get('year')!r} does not match file year {hist.year!r}"
        )
    kind = ModelKind.from_name(report["model"])
    params = ModelParams(
        c=report["params"]["c"],
        alpha=report["params"]["alpha"],
        beta=report["params"]["beta"],
    )
    sample = normalize(hist)
    rows = [
        [p.r, p.rho, density(kind, params, p.r)] for p in sample.points
    ]
    _emit(_csv_text(["r", "rho_empirical", "rho_model"], rows), args.out)
    if args.figure:
        from . import figures as figmod

        figmod.density_figure(
            sample.points, [(kind.value, kind, params)], args.figure
        )
    return 0


def _add_common(sub, fitting: bool = True) -> None:
    if fitting:
        sub.add_argument("--model", choices=["be", "gamma"], default="be")
        sub.add_argument("--fix-alpha", type=float, default=None, metavar="REAL")
        sub.add_argument("--residuals", choices=["point", "mass"], default="mass")
        sub.add_argument("--top-bin", choices=["drop"], default="drop")
    sub.add_argument("--unit", choices=["dollar", "kilodollar"], default="kilodollar")
    sub.add_argument("--out", metavar="PATH", default=None)
    sub.add_argument("--format", choices=["json", "csv"], default=None)
    sub.add_argument(
        "--figure",
        metavar="PATH",
        default=None,
        help="also render a figure of the output to this file",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beincome",
        description="Fit and verify the Bose-Einstein household-income density.",
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p_fit = sub.add_parser("fit", help="fit one density per input file")
    p_fit.add_argument("files", nargs="+", metavar="FILE")
    _add_common(p_fit)
    p_fit.set_defaults(func=_run_fit, default_format="json")

    p_cmp = sub.add_parser("compare", help="R-squared table, both families, by year")
    p_cmp.add_argument("files", nargs="+", metavar="FILE")
    _add_common(p_cmp)
    p_cmp.set_defaults(func=_run_compare, default_format="csv")

    p_ser = sub.add_parser("series", help="fitted constants by year")
    p_ser.add_argument("files", nargs="+", metavar="FILE")
    _add_common(p_ser)
    p_ser.set_defaults(func=_run_series, default_format="csv")

    p_syn = sub.add_parser("synth", help="sample a synthetic bracket table")
    p_syn.add_argument("--model", choices=["be", "gamma"], default="be")
    p_syn.add_argument("--alpha", type=float, required=True)
    p_syn.add_argument("--beta", type=float, required=True)
    p_syn.add_argument("--c", type=float, default=1.0)
    p_syn.add_argument("--bins", type=int, default=40)
    p_syn.add_argument("--max", type=float, default=100.0)
    p_syn.add_argument("--edges", type=_edges_list, default=None, metavar="E0,E1,...")
    p_syn.add_argument("--households", type=int, required=True)
    p_syn.add_argument("--seed", type=_seed, required=True)
    p_syn.add_argument("--year", type=int, default=None)
    p_syn.add_argument(
        "--closed-top",
        action="store_true",
        help="condition on incomes below the last edge instead of an open bracket",
    )
    _add_common(p_syn, fitting=False)
    p_syn.set_defaults(func=_run_synth, default_format="csv")

    p_sim = sub.add_parser("simulate", help="kinetic Monte Carlo of income levels")
    p_sim.add_argument("config", nargs="?", default=None, metavar="CONFIG.json")
    p_sim.add_argument("--seed", type=_seed, required=True)
    p_sim.add_argument("--horizon", type=float, default=None)
    p_sim.add_argument("--burn-in", type=float, default=None)
    p_sim.add_argument("--reservoir-rate", type=float, default=None)
    _add_common(p_sim, fitting=False)
    p_sim.set_defaults(func=_run_simulate, default_format="json")

    p_plt = sub.add_parser("plotdata", help="three-column density table for plotting")
    p_plt.add_argument("file", metavar="FILE")
    p_plt.add_argument("--report", required=True, metavar="REPORT.json")
    _add_common(p_plt, fitting=False)
    p_plt.set_defaults(func=_run_plotdata, default_format="csv")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except (NonConvergenceError, SingularJacobianError) as err:
        log.error("did not converge: %s", err)
        return 1
    except (
        ParseError,
        ValidationError,
        DegenerateDataError,
        DomainError,
        OSError,
        KeyError,
        json.JSONDecodeError,
        ValueError,
    ) as err:
        log.error("%s", err)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
