"""Census-style income bracket tables: parsing, validation, normalization.

The on-disk format is a small CSV dialect:

    # year: 2013
    lower,upper,households
    0,5000,4367
    5000,10000,4205
    ...
    200000,,1532

One row per bracket, `upper` left empty on the open-ended top bracket,
`#` introduces comments, and an optional `# year: YYYY` comment carries
the survey year.  A `_YYYY.csv` filename suffix also carries the year
and wins over the comment when both are present.

Normalization divides counts by the grand total so the bounded-bracket
densities integrate to one minus whatever share sits in the open
bracket.
"""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional

log = logging.getLogger(__name__)

_HEADER = ("lower", "upper", "households")
_YEAR_COMMENT = re.compile(r"^#\s*year:\s*(\d{4})\s*$")
_YEAR_SUFFIX = re.compile(r"_(\d{4})\.csv$")


class ParseError(ValueError):
    """Malformed input text; the message carries a line number."""


class ValidationError(ValueError):
    """Structurally parsable input violating a histogram invariant."""


class TopBinPolicy(enum.Enum):
    """What to do with the open-ended top bracket when normalizing."""

    DROP = "drop"


@dataclass(frozen=True)
class IncomeBin:
    """One bracket: [lower, upper) with a household count.

    ``upper`` is None for the open-ended top bracket.  Counts are
    reals: census tables often report thousands of households.
    """

    lower: float
    upper: Optional[float]
    count: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and self.lower >= 0.0):
            raise ValidationError(f"bracket lower edge must be >= 0, got {self.lower!r}")
        if self.upper is not None and not self.upper > self.lower:
            raise ValidationError(
                f"bracket upper edge {self.upper!r} not above lower edge {self.lower!r}"
            )
        if not (math.isfinite(self.count) and self.count >= 0.0):
            raise ValidationError(f"negative count {self.count!r}")

    @property
    def is_open(self) -> bool:
        return self.upper is None

    @property
    def width(self) -> float:
        if self.upper is None:
            raise ValidationError("open bracket has no width")
        return self.upper - self.lower


@dataclass(frozen=True)
class IncomeHistogram:
    """A validated, contiguous bracket table for one survey year."""

    year: Optional[int]
    bins: tuple[IncomeBin, ...]
    total_households: float

    @classmethod
    def build(cls, year: Optional[int], bins: Iterable[IncomeBin]) -> "IncomeHistogram":
        bins = tuple(bins)
        if not bins:
            raise ValidationError("histogram has no brackets")
        lowers = [b.lower for b in bins]
        if any(a >= b for a, b in zip(lowers, lowers[1:])):
            raise ValidationError("bins not sorted")
        for i, (a, b) in enumerate(zip(bins, bins[1:])):
            if a.is_open:
                raise ValidationError(
                    f"open bracket at position {i + 1} of {len(bins)}; "
                    "only the last bracket may be open"
                )
            if a.upper < b.lower:
                raise ValidationError(
                    f"gap between brackets: [{a.lower!r}, {a.upper!r}) "
                    f"then [{b.lower!r}, ...)"
                )
            if a.upper > b.lower:
                raise ValidationError(
                    f"overlap between brackets: [{a.lower!r}, {a.upper!r}) "
                    f"then [{b.lower!r}, ...)"
                )
        total = math.fsum(b.count for b in bins)
        if not total > 0.0:
            raise ValidationError("total household count must be positive")
        return cls(year=year, bins=bins, total_households=total)

    @property
    def bounded_bins(self) -> tuple[IncomeBin, ...]:
        return tuple(b for b in self.bins if not b.is_open)


@dataclass(frozen=True)
class DensityPoint:
    """A fit-ready sample: bracket representative r, normalized density."""

    r: float
    rho: float
    weight: float
    bin_lo: float
    bin_hi: float


@dataclass(frozen=True)
class DensitySample:
    """Output of normalize: the points plus what was set aside."""

    year: Optional[int]
    points: tuple[DensityPoint, ...]
    dropped_share: float


def _parse_number(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: {what} {text!r} is not a number") from None


def parse_table(text: str, format: str = "csv") -> IncomeHistogram:
    """Parse the CSV bracket schema into a validated histogram.

    Raises ParseError (with line number) on malformed text and
    ValidationError on invariant violations such as unsorted rows,
    gaps, overlaps, or negative counts.
    """
    if format != "csv":
        raise ParseError(f"unsupported table format {format!r}")
    year: Optional[int] = None
    header_seen = False
    bins: list[IncomeBin] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _YEAR_COMMENT.match(line)
            if m:
                year = int(m.group(1))
            continue
        fields = [f.strip() for f in line.split(",")]
        if not header_seen:
            if tuple(fields) != _HEADER:
                raise ParseError(
                    f"line {lineno}: expected header 'lower,upper,households', got {line!r}"
                )
            header_seen = True
            continue
        if len(fields) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        lower = _parse_number(fields[0], lineno, "lower edge")
        upper = None if fields[1] == "" else _parse_number(fields[1], lineno, "upper edge")
        count = _parse_number(fields[2], lineno, "household count")
        try:
            bins.append(IncomeBin(lower=lower, upper=upper, count=count))
        except ValidationError as err:
            raise ValidationError(f"line {lineno}: {err}") from None
    if not header_seen:
        raise ParseError("line 1: missing header 'lower,upper,households'")
    return IncomeHistogram.build(year, bins)


def _format_edge(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(x)


def serialize(h: IncomeHistogram) -> str:
    """Inverse of parse_table: parse_table(serialize(h)) == h."""
    lines = []
    if h.year is not None:
        lines.append(f"# year: {h.year}")
    lines.append(",".join(_HEADER))
    for b in h.bins:
        upper = "" if b.upper is None else _format_edge(b.upper)
        lines.append(f"{_format_edge(b.lower)},{upper},{_format_edge(b.count)}")
    return "\n".join(lines) + "\n"


def parse_file(path) -> IncomeHistogram:
    """Parse a file, taking the year from a `*_YYYY.csv` name if present.

    The filename wins over a `# year:` comment on conflict.
    """
    from pathlib import Path

    path = Path(path)
    hist = parse_table(path.read_text(encoding="utf-8"))
    m = _YEAR_SUFFIX.search(path.name)
    if m:
        hist = IncomeHistogram(
            year=int(m.group(1)),
            bins=hist.bins,
            total_households=hist.total_households,
        )
    return hist


def representative(bin: IncomeBin, mode: str = "midpoint") -> float:
    """The income coordinate standing in for a bounded bracket.

    "midpoint" returns (lower+upper)/2.  "mass-integrated" also
    returns the midpoint as the plotting coordinate; in that mode the
    midpoint carries no modeling weight, because the fitter compares
    bin_mass/width against rho instead of evaluating the density at
    any single point.
    """
    if bin.is_open:
        raise ValidationError("open bracket has no representative income")
    if mode not in ("midpoint", "mass-integrated"):
        raise ValidationError(f"unknown representative mode {mode!r}")
    return 0.5 * (bin.lower + bin.upper)


def normalize(
    h: IncomeHistogram,
    policy: TopBinPolicy = TopBinPolicy.DROP,
    weighting: str = "uniform",
) -> DensitySample:
    """Turn bracket counts into density points with unit total mass.

    Each bounded bracket becomes one point with
    rho = (count/total)/width, so the point masses rho*width together
    with the dropped open-bracket share sum to exactly 1.

    ``weighting`` is "uniform" (all weights 1) or "poisson"
    (inverse-variance weights treating each count as Poisson).
    """
    if not isinstance(policy, TopBinPolicy):
        raise ValidationError(f"unknown top-bin policy {policy!r}")
    if weighting not in ("uniform", "poisson"):
        raise ValidationError(f"unknown weighting {weighting!r}")
    total = h.total_households
    points = []
    dropped = 0.0
    for b in h.bins:
        if b.is_open:
            dropped += b.count / total
            if b.count > 0.0:
                log.warning(
                    "dropping open top bracket [%s, inf): share %.6f of households",
                    b.lower,
                    b.count / total,
                )
            continue
        share = b.count / total
        width = b.width
        if weighting == "poisson":
            var = max(b.count, 1.0) / (total * width) ** 2
            weight = 1.0 / var
        else:
            weight = 1.0
        points.append(
            DensityPoint(
                r=representative(b),
                rho=share / width,
                weight=weight,
                bin_lo=b.lower,
                bin_hi=b.upper,
            )
        )
    return DensitySample(year=h.year, points=tuple(points), dropped_share=dropped)
