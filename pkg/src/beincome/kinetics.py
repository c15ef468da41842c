"""Kinetic Monte Carlo over discrete income levels.

Agents occupy income levels r_1 < r_2 < ... with degeneracies g_i.
Three kinds of events drive the dynamics:

* spontaneous drops p -> m at rate n_p A,
* stimulated drops p -> m at rate n_p B n_m (the occupancy of the
  receiving level plays the role of the income density there), and
* stimulated raises m -> p at rate B e^(-beta (r_p - r_m)) n_m
  (g_p + n_p): uphill moves carry the Boltzmann factor of the income
  gained.

With A = B g_m this chain satisfies detailed balance with respect to
independent negative-binomial occupations with ratio e^(-beta r_i),
whose means are the Bose-Einstein values g_i/(e^(beta r_i) - 1).
Pairwise moves conserve the total population, so a per-level
reservoir (birth rate w e^(-beta r_i) (g_i + n_i), death rate w n_i)
is included to realize the grand-canonical ensemble in which those
means hold; switching it off (reservoir_rate=0) freezes the total
population, and with all B = 0 the spontaneous drops then drain
everything into the lowest level.

The analytic side (mean occupation, partition function, equilibrium
density) is exact and serves as the oracle for the simulation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .special import DomainError

log = logging.getLogger(__name__)

RNG_ALGORITHM = "pcg64"


@dataclass(frozen=True)
class IncomeLevel:
    """One income state: index (1-based), income r, degeneracy g."""

    index: int
    r: float
    g: float

    def __post_init__(self):
        if self.index < 1:
            raise DomainError(f"level index must be >= 1, got {self.index!r}")
        if not self.r > 0.0:
            raise DomainError(f"level income must be positive, got {self.r!r}")
        if not (math.isfinite(self.g) and self.g >= 0.0):
            raise DomainError(f"degeneracy must be >= 0, got {self.g!r}")


@dataclass(frozen=True)
class RatePair:
    """Transition coefficients for one downhill pair p -> m.

    A is the spontaneous drop rate, B the stimulated coefficient.
    The reverse (raise) coefficient is not free: degeneracy-weighted
    reciprocity fixes it as B_raise = g_from B / g_to.
    """

    from_level: int
    to_level: int
    A: float
    B: float

    def __post_init__(self):
        if self.from_level == self.to_level:
            raise DomainError("a transition needs two distinct levels")
        if not (self.A >= 0.0 and self.B >= 0.0):
            raise DomainError("rate coefficients must be nonnegative")


@dataclass(frozen=True)
class Society:
    """Levels, current occupations, and the reservoir temperature."""

    levels: tuple[IncomeLevel, ...]
    occupations: tuple[int, ...]
    beta: float

    @classmethod
    def build(
        cls,
        levels: Sequence[IncomeLevel],
        beta: float,
        occupations: Optional[Sequence[int]] = None,
    ) -> "Society":
        levels = tuple(levels)
        if not levels:
            raise DomainError("society needs at least one income level")
        if [lv.index for lv in levels] != list(range(1, len(levels) + 1)):
            raise DomainError("level indices must be 1..n in order")
        if any(a.r >= b.r for a, b in zip(levels, levels[1:])):
            raise DomainError("level incomes must increase strictly with index")
        if not beta > 0.0:
            raise DomainError(f"beta must be positive, got {beta!r}")
        if occupations is None:
            occupations = (0,) * len(levels)
        occupations = tuple(int(n) for n in occupations)
        if len(occupations) != len(levels):
            raise DomainError("one occupation number per level required")
        if any(n < 0 for n in occupations):
            raise DomainError("occupations must be nonnegative")
        return cls(levels=levels, occupations=occupations, beta=beta)


def mean_occupation(r: float, beta: float) -> float:
    """1/(e^(beta r) - 1), the equilibrium occupation per state.

    Evaluated via expm1 so the 1/(beta r) divergence for small
    arguments comes out clean.
    """
    x = beta * r
    if math.isnan(x) or x <= 0.0:
        raise DomainError(f"mean_occupation needs beta*r > 0, got {x!r}")
    return 1.0 / math.expm1(x)


def log_partition_function(levels: Sequence[IncomeLevel], beta: float) -> float:
    """log of prod_i (1 - e^(-beta r_i))^-1."""
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    total = 0.0
    for lv in levels:
        # log(1 - e^(-beta r)) without cancellation.
        total -= math.log(-math.expm1(-beta * lv.r))
    return total


def partition_function(levels: Sequence[IncomeLevel], beta: float) -> float:
    """The occupation-sum product form, assembled in log space.

    The per-level factors are multiplied as a sum of logs and
    exponentiated once at the end, so intermediate products cannot
    overflow; only a final value beyond the double range raises.
    """
    return math.exp(log_partition_function(levels, beta))


def equilibrium_density(levels: Sequence[IncomeLevel], beta: float) -> list[float]:
    """Expected occupation g_i/(e^(beta r_i) - 1) per level."""
    return [
        0.0 if lv.g == 0.0 else lv.g * mean_occupation(lv.r, beta) for lv in levels
    ]


def raise_coefficient(levels: Sequence[IncomeLevel], pair: RatePair) -> float:
    """The derived uphill coefficient g_from B / g_to."""
    by_index = {lv.index: lv for lv in levels}
    g_from = by_index[pair.from_level].g
    g_to = by_index[pair.to_level].g
    if g_to == 0.0:
        raise DomainError("raise coefficient undefined for zero destination degeneracy")
    return g_from * pair.B / g_to


def bose_rate_pairs(levels: Sequence[IncomeLevel], b: float = 1.0) -> list[RatePair]:
    """All downhill pairs with the ratio that makes the chain stationary.

    A = B g_to per pair; with that choice the drop propensity
    n_p B (g_m + n_m) balances the tilted raise exactly.
    """
    pairs = []
    for hi in levels:
        for lo in levels:
            if hi.r > lo.r:
                pairs.append(
                    RatePair(from_level=hi.index, to_level=lo.index, A=b * lo.g, B=b)
                )
    return pairs


def _check_pair_stationarity(levels, beta, pair) -> None:
    # For the matched ratio A = B g_to the analytic means must give
    # equal downhill and uphill fluxes; this is an identity of the
    # construction, so any violation signals a programming error.
    if pair.B == 0.0:
        return
    by_index = {lv.index: lv for lv in levels}
    p = by_index[pair.from_level]
    m = by_index[pair.to_level]
    if m.g == 0.0 or p.g == 0.0:
        return
    if abs(pair.A - pair.B * m.g) > 1e-12 * max(pair.A, pair.B * m.g):
        return  # not the matched ratio; no stationarity claim
    n_p = p.g * mean_occupation(p.r, beta)
    n_m = m.g * mean_occupation(m.r, beta)
    down = n_p * (pair.A + pair.B * n_m)
    up = pair.B * math.exp(-beta * (p.r - m.r)) * n_m * (p.g + n_p)
    if abs(down - up) > 1e-10 * max(down, up):
        raise RuntimeError(
            f"stationary flux identity violated for pair "
            f"{pair.from_level}->{pair.to_level}: {down!r} vs {up!r}"
        )


def _check_connected(n_levels: int, pairs: Sequence[RatePair]) -> None:
    parent = list(range(n_levels + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for pair in pairs:
        if pair.A > 0.0 or pair.B > 0.0:
            a, b = find(pair.from_level), find(pair.to_level)
            parent[a] = b
    roots = {find(i) for i in range(1, n_levels + 1)}
    if len(roots) > 1:
        raise DomainError("rate graph does not connect all levels")


@dataclass(frozen=True)
class SimulationResult:
    """Time-averaged occupations with batch-means standard errors."""

    means: tuple[float, ...]
    stderrs: tuple[float, ...]
    analytic: tuple[float, ...]
    horizon: float
    burn_in: float
    seed: int
    events: int
    final_occupations: tuple[int, ...]
    terminated_early: bool
    rng: str = RNG_ALGORITHM


def simulate(
    society: Society,
    rates: Sequence[RatePair],
    horizon: float,
    seed: int,
    burn_in: Optional[float] = None,
    reservoir_rate: float = 1.0,
    batches: int = 32,
) -> SimulationResult:
    """Event-driven continuous-time Monte Carlo of the level dynamics.

    Draws exponential waiting times from the total event rate, applies
    one transition per event, and returns per-level time averages over
    (burn_in, horizon] with batch-means standard errors.  burn_in
    defaults to a fifth of the horizon.  The same seed reproduces the
    trajectory exactly (PCG64).

    If every propensity hits zero (possible once reservoir_rate=0 and
    all B=0), the state is absorbing: a warning is logged, the state
    is frozen through the remaining time, and the result is flagged.
    """
    if not horizon > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    if burn_in is None:
        burn_in = 0.2 * horizon
    if not 0.0 <= burn_in < horizon:
        raise DomainError(f"burn_in must lie in [0, horizon), got {burn_in!r}")
    if reservoir_rate < 0.0:
        raise DomainError("reservoir_rate must be nonnegative")
    if batches < 2:
        raise DomainError("need at least 2 batches for a standard error")

    levels = society.levels
    n_levels = len(levels)
    for pair in rates:
        if not (1 <= pair.from_level <= n_levels and 1 <= pair.to_level <= n_levels):
            raise DomainError(f"rate pair references unknown level: {pair}")
        if levels[pair.from_level - 1].r <= levels[pair.to_level - 1].r:
            raise DomainError(
                f"pair {pair.from_level}->{pair.to_level} must go downhill in income"
            )
        _check_pair_stationarity(levels, society.beta, pair)
    if reservoir_rate == 0.0:
        _check_connected(n_levels, rates)

    r = np.array([lv.r for lv in levels])
    g = np.array([lv.g for lv in levels])
    boltz = np.exp(-society.beta * r)
    p_idx = np.array([pair.from_level - 1 for pair in rates], dtype=np.intp)
    m_idx = np.array([pair.to_level - 1 for pair in rates], dtype=np.intp)
    pair_a = np.array([pair.A for pair in rates])
    pair_b = np.array([pair.B for pair in rates])
    pair_tilt = np.exp(-society.beta * (r[p_idx] - r[m_idx])) if rates else np.array([])

    n = np.array(society.occupations, dtype=np.int64)
    rng = np.random.default_rng(seed)

    span = horizon - burn_in
    batch_len = span / batches
    batch_sums = np.zeros((batches, n_levels))
    events = 0
    terminated_early = False
    t = 0.0

    def credit(start: float, stop: float) -> None:
        # Distribute the holding interval [start, stop) of the current
        # state over the measurement batches.
        lo = max(start, burn_in)
        if lo >= stop:
            return
        while lo < stop:
            b = min(int((lo - burn_in) / batch_len), batches - 1)
            edge = burn_in + (b + 1) * batch_len
            hi = min(stop, edge)
            batch_sums[b] += n * (hi - lo)
            lo = hi

    while t < horizon:
        drop = n[p_idx] * (pair_a + pair_b * n[m_idx]) if rates else np.array([])
        raise_ = (
            pair_b * pair_tilt * n[m_idx] * (g[p_idx] + n[p_idx])
            if rates
            else np.array([])
        )
        birth = reservoir_rate * boltz * (g + n)
        death = reservoir_rate * n.astype(float)
        total = float(drop.sum() + raise_.sum() + birth.sum() + death.sum())
        if total <= 0.0:
            log.warning(
                "zero total event rate at t=%.6g; state absorbed until horizon", t
            )
            credit(t, horizon)
            terminated_early = True
            t = horizon
            break
        wait = rng.exponential(1.0 / total)
        stop = min(t + wait, horizon)
        credit(t, stop)
        if t + wait >= horizon:
            t = horizon
            break
        t += wait
        events += 1
        u = rng.random() * total
        acc = 0.0
        chosen = None
        for name, arr in (("drop", drop), ("raise", raise_), ("birth", birth), ("death", death)):
            s = float(arr.sum())
            if u < acc + s:
                offset = u - acc
                k = int(np.searchsorted(np.cumsum(arr), offset, side="right"))
                chosen = (name, min(k, len(arr) - 1))
                break
            acc += s
        if chosen is None:  # rounding at the top edge: take the last death
            chosen = ("death", n_levels - 1)
        kind, k = chosen
        if kind == "drop":
            n[p_idx[k]] -= 1
            n[m_idx[k]] += 1
        elif kind == "raise":
            n[m_idx[k]] -= 1
            n[p_idx[k]] += 1
        elif kind == "birth":
            n[k] += 1
        else:
            n[k] -= 1

    batch_means = batch_sums / batch_len
    means = batch_means.mean(axis=0)
    stderrs = batch_means.std(axis=0, ddof=1) / math.sqrt(batches)
    analytic = equilibrium_density(levels, society.beta)
    return SimulationResult(
        means=tuple(float(v) for v in means),
        stderrs=tuple(float(v) for v in stderrs),
        analytic=tuple(float(v) for v in analytic),
        horizon=horizon,
        burn_in=burn_in,
        seed=seed,
        events=events,
        final_occupations=tuple(int(v) for v in n),
        terminated_early=terminated_early,
    )


def simulate_ensemble(
    society: Society,
    rates: Sequence[RatePair],
    horizon: float,
    seeds: Sequence[int],
    burn_in: Optional[float] = None,
    reservoir_rate: float = 1.0,
    batches: int = 32,
) -> SimulationResult:
    """Independent seeded runs executed concurrently, merged by averaging.

    Each seed produces its own trajectory; the merged means are the
    plain average across runs and the standard errors combine in
    quadrature divided by the run count.  Scheduling cannot affect
    the outcome because every run owns its generator, so the merged
    result depends only on the seed list.
    """
    seeds = list(seeds)
    if not seeds:
        raise DomainError("need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise DomainError("ensemble seeds must be distinct")
    from concurrent.futures import ThreadPoolExecutor

    def run(seed: int) -> SimulationResult:
        return simulate(
            society,
            rates,
            horizon,
            seed,
            burn_in=burn_in,
            reservoir_rate=reservoir_rate,
            batches=batches,
        )

    with ThreadPoolExecutor(max_workers=min(len(seeds), 8)) as pool:
        results = list(pool.map(run, seeds))
    k = len(results)
    means = np.mean([res.means for res in results], axis=0)
    stderrs = np.sqrt(np.sum(np.square([res.stderrs for res in results]), axis=0)) / k
    first = results[0]
    return SimulationResult(
        means=tuple(float(v) for v in means),
        stderrs=tuple(float(v) for v in stderrs),
        analytic=first.analytic,
        horizon=horizon,
        burn_in=first.burn_in,
        seed=seeds[0],
        events=sum(res.events for res in results),
        final_occupations=results[-1].final_occupations,
        terminated_early=any(res.terminated_early for res in results),
    )


def simulation_report(society: Society, result: SimulationResult) -> dict:
    """The serializable simulation record."""
    return {
        "levels": [{"r": lv.r, "g": lv.g} for lv in society.levels],
        "beta": society.beta,
        "seed": result.seed,
        "horizon": result.horizon,
        "burn_in": result.burn_in,
        "rng": result.rng,
        "events": result.events,
        "occupations": [
            {"mean": m, "stderr": s} for m, s in zip(result.means, result.stderrs)
        ],
        "analytic": list(result.analytic),
    }
