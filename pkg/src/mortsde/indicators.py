"""Validation indicators comparing ensembles against observed tables.

Three families: mean quadratic differences (absolute and relative),
counts of observed values escaping the empirical confidence intervals,
and centrality ratios normalized by the per-age ensemble spread.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadLevel, DegenerateStd, DivisionGuard, InputError
from .simulate import EnsembleForecast


def ensemble_stats(ensemble: EnsembleForecast, year: int):
    """Per-age sample mean and standard deviation at a forecast year.

    ``year`` is a calendar year (launch_year + offset). Standard deviation
    uses the n-1 divisor and needs at least two trajectories.
    """
    offset = int(year) - ensemble.launch_year
    values = ensemble.values_at_offset(offset)
    n = values.shape[0]
    if n < 2:
        raise DegenerateStd(
            "standard deviation needs at least 2 trajectories, got 1"
        )
    return values.mean(axis=0), values.std(axis=0, ddof=1)


def empirical_ci(ensemble: EnsembleForecast, year: int, level: float):
    """Per-age empirical interval at confidence ``level`` = 1 - alpha.

    Quantiles use linear interpolation between order statistics at
    position p*(n-1)+1, so the interval endpoints are reproducible across
    runs and platforms.
    """
    if not 0.0 < level < 1.0:
        raise BadLevel(f"confidence level must lie in (0, 1), got {level}")
    alpha = 1.0 - level
    offset = int(year) - ensemble.launch_year
    values = ensemble.values_at_offset(offset)
    n = values.shape[0]
    if n * alpha < 2.0:
        warnings.warn(
            f"{n} trajectories resolve the {level:.3g} level poorly "
            f"(need about {int(np.ceil(2.0 / alpha))})",
            RuntimeWarning,
            stacklevel=2,
        )
    lo, hi = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0], axis=0, method="linear")
    return lo, hi


def error_indicators(observed: np.ndarray, mean: np.ndarray):
    """Mean quadratic difference and its mean-relative form.

    Both average over ages: sum (obs - mean)^2 / n_ages, and the relative
    form divides each squared error by the ensemble mean first.
    """
    observed = np.asarray(observed, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if observed.shape != mean.shape:
        raise InputError(
            f"shape mismatch: observed {observed.shape} vs mean {mean.shape}"
        )
    n = observed.size
    sq = (observed - mean) ** 2
    i_mqd = float(sq.sum()) / n
    if np.any(mean <= 0.0):
        ages = np.nonzero(mean <= 0.0)[0].tolist()
        raise DivisionGuard("nonpositive ensemble mean", ages=ages)
    i_mrqd = float((sq / mean).sum()) / n
    return i_mqd, i_mrqd


def count_indicator(observed: np.ndarray, cis) -> int:
    """Number of ages whose observed value falls strictly outside [lo, hi]."""
    lo, hi = cis
    observed = np.asarray(observed, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if observed.shape != lo.shape or observed.shape != hi.shape:
        raise InputError("observed and interval endpoints must share a shape")
    return int(np.count_nonzero((observed < lo) | (observed > hi)))


def central_indicator(
    observed: np.ndarray, mean: np.ndarray, std: np.ndarray, power: int
) -> float:
    """Sum over ages of (obs - mean)^2 / std^power, power 1 or 2."""
    if power not in (1, 2):
        raise InputError(f"power must be 1 or 2, got {power}")
    observed = np.asarray(observed, dtype=float)
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if observed.shape != mean.shape or observed.shape != std.shape:
        raise InputError("observed, mean, and std must share a shape")
    if np.any(std <= 0.0):
        ages = np.nonzero(std <= 0.0)[0].tolist()
        raise DivisionGuard("zero ensemble spread", ages=ages)
    return float((((observed - mean) ** 2) / std**power).sum())


@dataclass
class IndicatorReport:
    """Indicator grid over validation years, levels, and powers.

    ``central`` values are None where the ensemble spread vanishes at
    some age (deterministic ensembles).
    """

    years: list
    ci_levels: tuple
    powers: tuple
    mqd: dict = field(default_factory=dict)
    mrqd: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    central: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    cis: dict = field(default_factory=dict)


def build_report(
    ensemble: EnsembleForecast,
    observed_by_year: dict,
    ci_levels=(0.98, 0.90, 0.80),
    powers=(1, 2),
) -> IndicatorReport:
    """Evaluate every indicator for each (year -> observed profile) pair."""
    years = sorted(observed_by_year)
    report = IndicatorReport(years=years, ci_levels=tuple(ci_levels), powers=tuple(powers))
    for year in years:
        observed = np.asarray(observed_by_year[year], dtype=float)
        mean, std = ensemble_stats(ensemble, year)
        report.stats[year] = (mean, std)
        report.mqd[year], report.mrqd[year] = error_indicators(observed, mean)
        for level in report.ci_levels:
            ci = empirical_ci(ensemble, year, level)
            report.cis[(year, level)] = ci
            report.counts[(year, level)] = count_indicator(observed, ci)
        for power in report.powers:
            try:
                report.central[(year, power)] = central_indicator(
                    observed, mean, std, power
                )
            except DivisionGuard:
                report.central[(year, power)] = None
    return report
