"""Synthetic census-style tables drawn from a known density.

The generator computes exact bracket masses by adaptive quadrature,
assigns the remaining closed-form mass to an open top bracket, and
draws one multinomial sample of households over the brackets.  Output
is an IncomeHistogram, so it serializes through the ingest schema;
the same seed always yields the same table.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .ingest import IncomeBin, IncomeHistogram, ValidationError
from .model import ModelKind, ModelParams, bin_mass, total_population
from .special import Accuracy

_SYNTH_ACC = Accuracy(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=2000)


def synthesize(
    kind: ModelKind,
    params: ModelParams,
    edges: Sequence[float],
    households: int,
    seed: int,
    open_top: bool = True,
    year: Optional[int] = None,
) -> IncomeHistogram:
    """Sample a bracket table with `households` draws from the density.

    ``edges`` are the increasing bracket boundaries (first may be 0).
    With ``open_top`` the mass beyond the last edge becomes an
    open-ended bracket; otherwise the draw is conditioned on incomes
    below it.
    """
    edges = [float(e) for e in edges]
    if len(edges) < 2:
        raise ValidationError("need at least 2 bracket edges")
    if any(a >= b for a, b in zip(edges, edges[1:])):
        raise ValidationError("bracket edges must be strictly increasing")
    if edges[0] < 0.0:
        raise ValidationError("bracket edges must be nonnegative")
    n_brackets = (len(edges) - 1) + (1 if open_top else 0)
    if n_brackets < 2:
        raise ValidationError("need at least 2 brackets")
    if not isinstance(households, int) or households < 1:
        raise ValidationError(f"households must be a positive integer, got {households!r}")

    masses = [
        bin_mass(kind, params, lo, hi, _SYNTH_ACC)
        for lo, hi in zip(edges, edges[1:])
    ]
    if open_top:
        tail = total_population(params, kind=kind) - math.fsum(masses)
        masses.append(max(tail, 0.0))
    probs = np.asarray(masses)
    probs = probs / probs.sum()

    rng = np.random.default_rng(seed)
    counts = rng.multinomial(households, probs)

    bins = [
        IncomeBin(lower=lo, upper=hi, count=float(n))
        for lo, hi, n in zip(edges, edges[1:], counts)
    ]
    if open_top:
        bins.append(IncomeBin(lower=edges[-1], upper=None, count=float(counts[-1])))
    return IncomeHistogram.build(year, bins)


def expected_histogram(
    kind: ModelKind,
    params: ModelParams,
    edges: Sequence[float],
    households: float = 1.0,
    open_top: bool = True,
    year: Optional[int] = None,
) -> IncomeHistogram:
    """The noiseless counterpart: fractional counts equal to the masses."""
    edges = [float(e) for e in edges]
    if len(edges) < 2:
        raise ValidationError("need at least 2 bracket edges")
    scale = households / total_population(params, kind=kind)
    bins = [
        IncomeBin(lo, hi, scale * bin_mass(kind, params, lo, hi, _SYNTH_ACC))
        for lo, hi in zip(edges, edges[1:])
    ]
    if open_top:
        tail = households - math.fsum(b.count for b in bins)
        bins.append(IncomeBin(edges[-1], None, max(tail, 0.0)))
    return IncomeHistogram.build(year, bins)
