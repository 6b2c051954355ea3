"""Delay-weight estimation from the fit period.

Builds everything the delayed drift needs: the triangular table of
improvement rates between year pairs, spheric-weighted global rates per
delay, the trend slope beta defining alpha(-d) = 1 + beta*d, and the
discretized exponential delay density f*. The composite lives in
:class:`DelayProfile`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, InputError, InsufficientHistory
from .lifetable import LifeTable


@dataclass(frozen=True)
class SphericConfig:
    """Parameters of the modified spheric weighting function.

    ``range_a`` and ``range_b`` play the classical variogram roles (the
    plateau ends at range_b - range_a, support ends at range_b); ``sill_T``
    is the plateau height.
    """

    range_a: float = 20.0
    range_b: float = 30.0
    sill_T: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.range_a <= self.range_b:
            raise InputError(
                f"need 0 < range_a <= range_b, got a={self.range_a}, b={self.range_b}"
            )
        if not self.sill_T > 0.0:
            raise InputError(f"sill_T must be > 0, got {self.sill_T}")


@dataclass(frozen=True)
class ImprovementRateTable:
    """Triangular map (base_year, delay) -> improvement rate.

    Cells exist exactly for base_year >= first_fit_year, delay >= 1, and
    base_year + delay <= last_fit_year.
    """

    rates: dict[tuple[int, int], float]
    first_fit_year: int
    last_fit_year: int

    @property
    def n_years(self) -> int:
        return self.last_fit_year - self.first_fit_year + 1

    @property
    def max_delay(self) -> int:
        return self.n_years - 1

    def at_delay(self, d: int) -> np.ndarray:
        """Rates at a fixed delay, ordered by base year."""
        if d < 1 or d > self.max_delay:
            raise InsufficientHistory(
                f"no improvement rates at delay {d} (have 1..{self.max_delay})"
            )
        return np.array(
            [
                self.rates[(t0, d)]
                for t0 in range(self.first_fit_year, self.last_fit_year - d + 1)
            ]
        )


def global_improvement_rate(q_base: np.ndarray, q_target: np.ndarray) -> float:
    """Through-origin least-squares coefficient of target against base.

    This is the single-number mortality change between two year columns:
    sum(q_base * q_target) / sum(q_base**2).
    """
    q_base = np.asarray(q_base, dtype=float)
    q_target = np.asarray(q_target, dtype=float)
    if q_base.shape != q_target.shape:
        raise InputError(
            f"shape mismatch: base {q_base.shape} vs target {q_target.shape}"
        )
    denom = float(np.dot(q_base, q_base))
    if denom <= 0.0:
        raise DegenerateFit("base profile is identically zero")
    return float(np.dot(q_base, q_target)) / denom


def build_rate_table(fit: LifeTable) -> ImprovementRateTable:
    """Improvement rates for every admissible (base year, delay) pair."""
    years = fit.years
    n = int(years.size)
    if n < 2:
        raise InsufficientHistory("improvement rates need at least two fit years")
    rates: dict[tuple[int, int], float] = {}
    for d in range(1, n):
        for j in range(0, n - d):
            t0 = int(years[j])
            rates[(t0, d)] = global_improvement_rate(fit.q[:, j], fit.q[:, j + d])
    return ImprovementRateTable(
        rates=rates, first_fit_year=int(years[0]), last_fit_year=int(years[-1])
    )


def spheric_weight(s: float, cfg: SphericConfig) -> float:
    """Modified spheric function: plateau sill_T, taper, then zero.

    Equals sill_T for s < range_b - range_a, tapers along the classical
    spheric curve evaluated at range_b - s over the next range_a units,
    and vanishes for s > range_b.
    """
    a, b, T = cfg.range_a, cfg.range_b, cfg.sill_T
    s = float(s)
    if s < b - a:
        return T
    if s > b:
        return 0.0
    r = (b - s) / a
    # classical spheric branch gamma(b - s); b - s lies in [0, a] here
    return 0.5 * T * (3.0 * r - r**3)


def global_rate_by_delay(
    table: ImprovementRateTable, d: int, cfg: SphericConfig
) -> float:
    """Spheric-weighted average of the delay-d improvement rates.

    Weights v_i = spheric_weight(i) for i = 1..n-d are normalized to sum 1
    and applied to the rate with base year (first fit year - 1) + i, so the
    plateau weight falls on the earliest base years.
    """
    n = table.n_years
    if d < 1 or d > table.max_delay:
        raise InsufficientHistory(
            f"no improvement rates at delay {d} (have 1..{table.max_delay})"
        )
    t_origin = table.first_fit_year - 1
    raw = np.array([spheric_weight(i, cfg) for i in range(1, n - d + 1)])
    total = float(raw.sum())
    if total <= 0.0:
        raise DegenerateFit(f"spheric weights vanish for delay {d}")
    rates = np.array([table.rates[(t_origin + i, d)] for i in range(1, n - d + 1)])
    return float(np.dot(raw / total, rates))


def fit_beta(rates: np.ndarray) -> float:
    """Slope of the per-delay global rates against the delay d = 1..h.

    Ordinary least squares with an intercept; only the slope is kept since
    the alpha function is pinned to 1 at delay 0.
    """
    rates = np.asarray(rates, dtype=float)
    h = rates.size
    if h < 2:
        raise InsufficientHistory(f"beta regression needs h >= 2 delays, got {h}")
    d = np.arange(1, h + 1, dtype=float)
    slope, _intercept = np.polyfit(d, rates, 1)
    return float(slope)


def discretized_exponential(lam: float, dmax: int) -> np.ndarray:
    """Probability vector proportional to exp(-lam*d) over d = 0..dmax."""
    if not lam > 0.0:
        raise InputError(f"lambda must be > 0, got {lam}")
    if dmax < 0:
        raise InputError(f"dmax must be >= 0, got {dmax}")
    weights = np.exp(-lam * np.arange(dmax + 1, dtype=float))
    return weights / weights.sum()


@dataclass(frozen=True)
class DelayProfile:
    """All delay-related ingredients of the drift, fitted or synthetic.

    ``alpha_values[d]`` is alpha(-d) for d = 0..max_delay_h, ``fstar`` the
    delay density over the same grid, ``alpha_bar`` their inner product.
    ``global_rates`` and ``weighted_rates`` (index d-1 for delay d) are
    reporting outputs; the simulator consumes only alpha_values and fstar.
    """

    max_delay_h: int
    global_rates: np.ndarray
    beta: float
    alpha_values: np.ndarray
    exp_lambda: float
    fstar: np.ndarray
    alpha_bar: float
    weighted_rates: np.ndarray = field(default=None)

    def __post_init__(self):
        h = int(self.max_delay_h)
        if h < 1:
            raise InputError(f"max_delay_h must be >= 1, got {self.max_delay_h}")
        object.__setattr__(self, "max_delay_h", h)
        alpha = np.asarray(self.alpha_values, dtype=float)
        fstar = np.asarray(self.fstar, dtype=float)
        rates = np.asarray(self.global_rates, dtype=float)
        weighted = (
            rates * fstar[1:]
            if self.weighted_rates is None
            else np.asarray(self.weighted_rates, dtype=float)
        )
        object.__setattr__(self, "alpha_values", alpha)
        object.__setattr__(self, "fstar", fstar)
        object.__setattr__(self, "global_rates", rates)
        object.__setattr__(self, "weighted_rates", weighted)
        if alpha.shape != (h + 1,) or fstar.shape != (h + 1,):
            raise InputError(
                f"alpha_values/fstar must have length h+1={h + 1}, got "
                f"{alpha.shape} and {fstar.shape}"
            )
        if rates.shape != (h,) or weighted.shape != (h,):
            raise InputError(f"global/weighted rates must have length h={h}")
        if not self.exp_lambda > 0.0:
            raise InputError(f"exp_lambda must be > 0, got {self.exp_lambda}")
        if np.any(fstar < 0.0) or abs(float(fstar.sum()) - 1.0) > 1e-12:
            raise InputError("fstar must be a probability vector (sum 1, >= 0)")
        if np.any(alpha < 0.0):
            raise InputError("alpha_values must be nonnegative")
        if abs(float(np.dot(alpha, fstar)) - self.alpha_bar) > 1e-12:
            raise InputError("alpha_bar inconsistent with alpha_values and fstar")

    @property
    def mean_delay(self) -> float:
        """Expected delay under f*."""
        return float(np.dot(np.arange(self.max_delay_h + 1), self.fstar))

    @property
    def drift_weights(self) -> np.ndarray:
        """Per-delay drift coefficients alpha(-d) * f*(d), d = 0..h."""
        return self.alpha_values * self.fstar

    @classmethod
    def from_parameters(
        cls,
        h: int,
        beta: float,
        lam: float,
        global_rates: np.ndarray | None = None,
        fstar: np.ndarray | None = None,
    ) -> "DelayProfile":
        """Profile from bare parameters, for analysis without fit data.

        ``global_rates`` defaults to the trend line 1 + beta*d the slope
        would reproduce; ``fstar`` defaults to the discretized exponential.
        """
        d_grid = np.arange(h + 1, dtype=float)
        alpha = _alpha_from_beta(beta, d_grid)
        f = discretized_exponential(lam, h) if fstar is None else np.asarray(fstar, float)
        rates = (
            1.0 + beta * np.arange(1, h + 1, dtype=float)
            if global_rates is None
            else np.asarray(global_rates, dtype=float)
        )
        return cls(
            max_delay_h=h,
            global_rates=rates,
            beta=float(beta),
            alpha_values=alpha,
            exp_lambda=float(lam),
            fstar=f,
            alpha_bar=float(np.dot(alpha, f)),
        )


def _alpha_from_beta(beta: float, d_grid: np.ndarray) -> np.ndarray:
    alpha = 1.0 + beta * d_grid
    if np.any(alpha < 0.0):
        warnings.warn(
            f"alpha(-d) = 1 + beta*d goes negative (beta={beta}); clamping at 0",
            RuntimeWarning,
            stacklevel=3,
        )
        alpha = np.maximum(alpha, 0.0)
    return alpha


def build_profile(
    fit: LifeTable, h: int, lam: float, cfg: SphericConfig
) -> DelayProfile:
    """Fit the full delay profile from the fit-period table.

    Composes the rate table, per-delay global rates for d = 1..h, the beta
    regression, the alpha values (clamped at 0 if the trend would turn
    negative), and the exponential delay density.
    """
    if h < 1:
        raise InputError(f"max delay h must be >= 1, got {h}")
    table = build_rate_table(fit)
    if h > table.max_delay:
        raise InsufficientHistory(
            f"h={h} exceeds the largest delay {table.max_delay} the fit "
            f"period {table.first_fit_year}..{table.last_fit_year} supports"
        )
    rates = np.array([global_rate_by_delay(table, d, cfg) for d in range(1, h + 1)])
    beta = fit_beta(rates)
    alpha = _alpha_from_beta(beta, np.arange(h + 1, dtype=float))
    fstar = discretized_exponential(lam, h)
    return DelayProfile(
        max_delay_h=h,
        global_rates=rates,
        beta=beta,
        alpha_values=alpha,
        exp_lambda=float(lam),
        fstar=fstar,
        alpha_bar=float(np.dot(alpha, fstar)),
    )
