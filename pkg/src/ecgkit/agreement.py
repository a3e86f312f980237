"""Method-comparison statistics: normality-gated correlation, Bland-Altman,
summaries, and stratified correlation tables.

Pearson is used when both sides pass the Jarque-Bera normality test at
alpha = 0.05, Spearman otherwise; Spearman p-values use the same Student-t
transform as Pearson (adequate for n >= 8). Sample statistics use the n-1
denominator throughout. Significance stars: p <= 0.0001 '****',
<= 0.001 '***', <= 0.01 '**', <= 0.05 '*', else 'ns'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np
from scipy.special import stdtr

from .errors import AllTied, DataError, DegenerateVariance, TooFewPairs, TooFewValues
from .records import PairedMeasurements, Parameter

MIN_NORMALITY_N = 8
DEFAULT_LOA_Z = 1.96


class CorrMethod(Enum):
    PEARSON = "pearson"
    SPEARMAN = "spearman"


def significance_stars(p_value: float) -> str:
    for threshold, stars in ((0.0001, "****"), (0.001, "***"), (0.01, "**"), (0.05, "*")):
        if p_value <= threshold:
            return stars
    return "ns"


@dataclass(frozen=True)
class CorrelationResult:
    method: CorrMethod
    r: float
    p_value: float
    n: int

    def __post_init__(self):
        if not -1.0 <= self.r <= 1.0 or not 0.0 <= self.p_value <= 1.0:
            raise DataError(f"correlation out of range: r={self.r}, p={self.p_value}")
        if self.n < 3:
            raise DataError(f"correlation defined for n >= 3, got {self.n}")

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


@dataclass(frozen=True)
class NormalityResult:
    is_normal: bool
    statistic: float
    p: float


@dataclass(frozen=True)
class BlandAltman:
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    z: float
    pct_within: float
    n: int

    def __post_init__(self):
        if not self.loa_low <= self.mean_diff <= self.loa_high:
            raise DataError("limits of agreement must bracket the mean difference")
        if not 0.0 <= self.pct_within <= 100.0:
            raise DataError(f"pct_within out of [0, 100]: {self.pct_within}")


class SummaryKind(Enum):
    MEAN_SD = "mean_sd"
    MEDIAN_IQR = "median_iqr"


@dataclass(frozen=True)
class SummaryStats:
    kind: SummaryKind
    center: float
    spread_low: float | None = None
    spread_high: float | None = None
    sd: float | None = None

    def __post_init__(self):
        if self.kind is SummaryKind.MEDIAN_IQR:
            if not self.spread_low <= self.center <= self.spread_high:
                raise DataError(
                    f"IQR [{self.spread_low}, {self.spread_high}] must bracket "
                    f"the median {self.center}"
                )


@dataclass(frozen=True)
class StratifiedRow:
    group: str
    parameter: Parameter
    result: CorrelationResult | None
    reason: str | None = None

    @property
    def stars(self) -> str:
        return self.result.stars if self.result is not None else "ns"


@dataclass(frozen=True)
class AgreementReport:
    """Correlation plus Bland-Altman for one parameter across two sources."""

    parameter: Parameter
    source_a: str
    source_b: str
    correlation: CorrelationResult
    bland_altman: BlandAltman
    summary_a: SummaryStats
    summary_b: SummaryStats


def _correlation_p_value(r: float, n: int) -> float:
    """Two-sided p from the Student-t transform t = r sqrt((n-2)/(1-r^2))."""
    df = n - 2
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return float(2.0 * stdtr(df, -abs(t)))


def _pearson_r(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    # sqrt(va*vb) keeps r exactly +-1.0 for affinely dependent sides
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise DegenerateVariance("zero variance on one side")
    return float(np.clip((da @ db) / denom, -1.0, 1.0))


def pearson(pairs: PairedMeasurements) -> CorrelationResult:
    """Pearson correlation with two-sided t-transform p-value."""
    if pairs.n < 3:
        raise TooFewPairs(f"pearson needs n >= 3, got {pairs.n}")
    r = _pearson_r(pairs.a_values(), pairs.b_values())
    return CorrelationResult(
        method=CorrMethod.PEARSON, r=r, p_value=_correlation_p_value(r, pairs.n), n=pairs.n
    )


def average_ranks(values) -> np.ndarray:
    """1-based ranks; ties receive the mean of the ranks they span."""
    v = np.asarray(values, dtype=np.float64)
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return (starts + (counts + 1) / 2.0)[inverse]


def spearman(pairs: PairedMeasurements) -> CorrelationResult:
    """Spearman correlation: Pearson on average-ranked data."""
    if pairs.n < 3:
        raise TooFewPairs(f"spearman needs n >= 3, got {pairs.n}")
    a, b = pairs.a_values(), pairs.b_values()
    if np.unique(a).size == 1 or np.unique(b).size == 1:
        raise AllTied("every value identical on one side")
    rho = _pearson_r(average_ranks(a), average_ranks(b))
    return CorrelationResult(
        method=CorrMethod.SPEARMAN, r=rho, p_value=_correlation_p_value(rho, pairs.n), n=pairs.n
    )


def normality_test(values) -> NormalityResult:
    """Jarque-Bera test: JB = n/6 (skew^2 + kurt^2/4) against chi-square(2)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < MIN_NORMALITY_N:
        raise TooFewValues(f"normality test needs n >= {MIN_NORMALITY_N}, got {v.size}")
    centered = v - v.mean()
    m2 = float(np.mean(centered**2))
    if m2 <= 0.0:
        raise DegenerateVariance("constant sample has no distribution shape")
    skew = float(np.mean(centered**3)) / m2**1.5
    kurt = float(np.mean(centered**4)) / m2**2 - 3.0
    jb = v.size / 6.0 * (skew**2 + kurt**2 / 4.0)
    p = math.exp(-jb / 2.0)  # chi-square(2) survival function
    return NormalityResult(is_normal=p > 0.05, statistic=jb, p=p)


def auto_correlation(pairs: PairedMeasurements) -> CorrelationResult:
    """Pearson iff both sides test normal, Spearman otherwise."""
    if pairs.n < MIN_NORMALITY_N:
        raise TooFewValues(f"auto_correlation needs n >= {MIN_NORMALITY_N}, got {pairs.n}")
    both_normal = (
        normality_test(pairs.a_values()).is_normal and normality_test(pairs.b_values()).is_normal
    )
    return pearson(pairs) if both_normal else spearman(pairs)


def bland_altman(pairs: PairedMeasurements, z: float = DEFAULT_LOA_Z) -> BlandAltman:
    """Mean difference, sample SD, mean +- z*SD limits, and coverage."""
    if pairs.n < 2:
        raise TooFewPairs(f"bland_altman needs n >= 2, got {pairs.n}")
    diffs = pairs.a_values() - pairs.b_values()
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    low, high = mean - z * sd, mean + z * sd
    within = int(np.sum((diffs >= low) & (diffs <= high)))
    return BlandAltman(
        mean_diff=mean,
        sd_diff=sd,
        loa_low=low,
        loa_high=high,
        z=z,
        pct_within=100.0 * within / pairs.n,
        n=pairs.n,
    )


def summarize(values) -> SummaryStats:
    """mean (SD) when the sample tests normal, median (IQR) otherwise.

    IQR bounds are the 25th/75th percentiles with linear interpolation
    between order statistics.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < MIN_NORMALITY_N:
        raise TooFewValues(f"summarize needs n >= {MIN_NORMALITY_N}, got {v.size}")
    try:
        is_normal = normality_test(v).is_normal
    except DegenerateVariance:
        is_normal = False
    if is_normal:
        return SummaryStats(kind=SummaryKind.MEAN_SD, center=float(v.mean()), sd=float(v.std(ddof=1)))
    q25, q50, q75 = (float(np.percentile(v, q, method="linear")) for q in (25, 50, 75))
    return SummaryStats(kind=SummaryKind.MEDIAN_IQR, center=q50, spread_low=q25, spread_high=q75)


def stratified_correlation(pairs_by_group: Mapping[str, PairedMeasurements]) -> list[StratifiedRow]:
    """Per-group auto_correlation; groups failing preconditions become
    ns rows with a reason code instead of raising."""
    rows = []
    for group in sorted(pairs_by_group):
        pairs = pairs_by_group[group]
        try:
            result = auto_correlation(pairs)
            rows.append(StratifiedRow(group=group, parameter=pairs.parameter, result=result))
        except (TooFewValues, TooFewPairs, DegenerateVariance, AllTied) as exc:
            rows.append(
                StratifiedRow(
                    group=group,
                    parameter=pairs.parameter,
                    result=None,
                    reason=type(exc).__name__,
                )
            )
    return rows
