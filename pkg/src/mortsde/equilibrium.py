"""Equilibrium and mean-square stability analysis.

The autonomous deterministic system has a fixed point solving
(I - M1*J_D) u = b with J_D the interior kernel block, M1 the total drift
mass, and b the exterior contribution. Stability of the stochastic system
around that point is certified by three checks (positive delta, a delay
bound on h, and a feasible decay rate lambda) which together yield the
asymptotic mean-square bound 2*b^2*||u||^2 / (lambda* - L(h, lambda*)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delay import DelayProfile
from .errors import (
    BoundUnavailable,
    HypothesisViolated,
    NotDiagonallyDominant,
    ShortHorizon,
    SingularSystem,
)
from .kernel import KernelWeights
from .simulate import EnsembleForecast

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class EquilibriumReport:
    """Everything the stability analysis produces.

    Fields that require unmet conditions (lambda_star, the bound, the
    empirical average) are None when unavailable.
    """

    u_bar: np.ndarray | None
    M1: float
    residual_norm: float | None
    cond_fixed_ok: np.ndarray
    delta_h: float
    cond_m1_ok: bool
    cond_h_ok: bool
    lambda_star: float | None = None
    L_at_lambda_star: float | None = None
    theoretical_bound: float | None = None
    empirical_time_average: float | None = None


def compute_M1(profile: DelayProfile) -> float:
    """Total drift mass: sum over delays of alpha(-d) * f*(d)."""
    return float(np.dot(profile.alpha_values, profile.fstar))


def interior_row_masses(kernel: KernelWeights) -> np.ndarray:
    """Per-age total kernel weight landing on interior source ages."""
    return kernel.interior_block().sum(axis=1)


def solve_fixed_point(kernel: KernelWeights, M1: float, exterior_rates):
    """Solve (I - M1*J_D) u = b for the deterministic equilibrium.

    ``exterior_rates`` is the time-constant exterior profile g: a scalar
    or a vector over the exterior source ages in ascending age order.
    Returns (u_bar, residual_norm) where the residual is the max-norm
    defect of the solved system.
    """
    J = kernel.interior_block()
    n = kernel.n_interior
    row_mass = M1 * J.sum(axis=1)
    if np.any(row_mass >= 1.0):
        worst = float(row_mass.max())
        raise NotDiagonallyDominant(
            f"M1 * interior row mass reaches {worst:.6g} >= 1; "
            "the fixed-point system is not solvable by this route"
        )
    lo = int(kernel.interior_ages[0] - kernel.source_ages[0])
    ext_cols = np.concatenate([kernel.weights[:, :lo], kernel.weights[:, lo + n :]], axis=1)
    g = np.asarray(exterior_rates, dtype=float)
    if g.ndim == 0:
        g = np.full(ext_cols.shape[1], float(g))
    if g.shape != (ext_cols.shape[1],):
        raise HypothesisViolated(
            f"exterior rates have shape {g.shape}, expected {(ext_cols.shape[1],)}"
        )
    b_vec = M1 * (ext_cols @ g)
    A = np.eye(n) - M1 * J
    try:
        u = np.linalg.solve(A, b_vec)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    residual = float(np.max(np.abs(A @ u - b_vec))) if n else 0.0
    return u, residual


def compute_delta(kernel: KernelWeights, M1: float, b: float) -> float:
    """Worst-age stability margin 1 - b^2 - M1 * interior row mass."""
    return float(np.min(1.0 - b * b - M1 * interior_row_masses(kernel)))


def _condh_rhs(delta: float, b: float) -> float:
    """Right side of the delay-length condition; +inf when unconstrained."""
    one_mb2 = 1.0 - b * b
    tail = one_mb2 - delta
    if tail <= 0.0:
        return math.inf
    ratio = one_mb2 / tail
    if ratio <= 0.0:
        return -math.inf
    return math.log(ratio) / (2.0 * one_mb2)


def check_conditions(
    kernel: KernelWeights, profile: DelayProfile, b: float, h: float
) -> tuple[bool, bool]:
    """Evaluate the noise-margin and delay-length conditions.

    Returns (cond_m1_ok, cond_h_ok): the first requires every age's drift
    mass to stay below 1 - b^2, the second bounds the delay h by the
    logarithmic expression in delta and b.
    """
    if not b < 1.0:
        raise HypothesisViolated(f"noise intensity b must be < 1, got {b}")
    M1 = compute_M1(profile)
    delta = compute_delta(kernel, M1, b)
    cond_m1 = delta > 0.0
    cond_h = h < _condh_rhs(delta, b)
    return cond_m1, cond_h


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_lambda_star(delta_h: float, b: float, h: float) -> tuple[float, float]:
    """Best feasible decay rate and L there.

    Maximizes phi(lambda) = lambda - L(h, lambda) with
    L = 2*(1 - delta - b^2)*exp(lambda*h) over (0, 2*(1-b^2)); phi is
    concave, so golden-section search finds the maximizer. When the
    maximum sits at the right endpoint (including the h=0 degenerate
    case) the endpoint itself is returned as the supremum. Raises
    BoundUnavailable when no lambda in the interval has phi > 0.
    """
    if not b < 1.0:
        raise HypothesisViolated(f"noise intensity b must be < 1, got {b}")
    hi = 2.0 * (1.0 - b * b)
    c = 2.0 * (1.0 - delta_h - b * b)
    if c < 0.0:
        raise HypothesisViolated(
            f"delta {delta_h} exceeds 1 - b^2; inconsistent inputs"
        )

    def L(lam: float) -> float:
        return c * math.exp(lam * h)

    def phi(lam: float) -> float:
        return lam - L(lam)

    tol = 1e-12 * hi
    lam = _golden_max(phi, 0.0, hi, tol)
    if hi - lam < 10.0 * tol:
        lam = hi
    if phi(lam) <= 0.0:
        raise BoundUnavailable(
            f"no decay rate in (0, {hi:.6g}) clears L(h, lambda); "
            f"best phi = {phi(lam):.3g} at lambda = {lam:.6g}"
        )
    return lam, L(lam)


def theoretical_bound(
    u_bar: np.ndarray, b: float, lambda_star: float | None, L_value: float | None
) -> float:
    """Asymptotic mean-square bound 2*b^2*||u_bar||^2 / (lambda* - L)."""
    if lambda_star is None or L_value is None:
        raise BoundUnavailable("no feasible lambda_star; bound undefined")
    denom = lambda_star - L_value
    if denom <= 0.0:
        raise BoundUnavailable(f"lambda_star - L = {denom:.3g} is not positive")
    norm_sq = float(np.dot(u_bar, u_bar))
    return 2.0 * b * b * norm_sq / denom


def empirical_time_average(
    ensemble: EnsembleForecast, u_bar: np.ndarray, h: int, T_end: float
) -> float:
    """Monte Carlo estimate of the time-averaged worst-delay deviation.

    At each step-grid time s the ensemble mean of ||u(s - d) - u_bar||^2
    is evaluated for every stored delay d = 0..h (reading history rows
    before launch), the worst delay is kept, and the result is averaged
    over [0, T_end] by the trapezoid rule.
    """
    cfg = ensemble.config
    if cfg.horizon_years < T_end + h:
        raise ShortHorizon(
            f"horizon {cfg.horizon_years} years cannot support T_end={T_end} "
            f"with delay depth h={h} (needs >= {T_end + h})"
        )
    u_bar = np.asarray(u_bar, dtype=float)
    spy = cfg.steps_per_year
    tau = float(cfg.time_step_tau)
    K = int(round(T_end * spy))
    values = np.stack([t.values for t in ensemble.trajectories])
    dev = values - u_bar[None, None, :]
    mean_sq = (dev * dev).sum(axis=2).mean(axis=0)
    hist_dev = ensemble.history - u_bar[None, :]
    hist_sq = (hist_dev * hist_dev).sum(axis=1)

    integrand = np.empty(K + 1)
    n_hist = ensemble.history.shape[0]
    for k in range(K + 1):
        worst = mean_sq[k]
        mark = k // spy
        for d in range(1, h + 1):
            year = mark - d
            if year >= 0:
                val = mean_sq[year * spy]
            else:
                val = hist_sq[n_hist - 1 + year]
            if val > worst:
                worst = val
        integrand[k] = worst
    return float(np.trapezoid(integrand, dx=tau) / T_end)


def analyze(
    kernel: KernelWeights,
    profile: DelayProfile,
    b: float,
    exterior_rates,
    h: float | None = None,
    ensemble: EnsembleForecast | None = None,
    T_end: float | None = None,
) -> EquilibriumReport:
    """Run the full chain: fixed point, conditions, lambda*, both bounds.

    Unavailable quantities are left as None rather than raised, so the
    report always reflects how far the hypotheses carried.
    """
    if not b < 1.0:
        raise HypothesisViolated(f"noise intensity b must be < 1, got {b}")
    M1 = compute_M1(profile)
    if h is None:
        h = float(profile.max_delay_h)
    cond_fixed = M1 * interior_row_masses(kernel) < 1.0
    u_bar = None
    residual = None
    if bool(cond_fixed.all()):
        u_bar, residual = solve_fixed_point(kernel, M1, exterior_rates)
    delta = compute_delta(kernel, M1, b)
    cond_m1 = delta > 0.0
    cond_h = h < _condh_rhs(delta, b)
    report = EquilibriumReport(
        u_bar=u_bar,
        M1=M1,
        residual_norm=residual,
        cond_fixed_ok=cond_fixed,
        delta_h=delta,
        cond_m1_ok=cond_m1,
        cond_h_ok=cond_h,
    )
    if cond_m1 and cond_h:
        try:
            lam, L_val = find_lambda_star(delta, b, h)
        except BoundUnavailable:
            lam, L_val = None, None
        report.lambda_star = lam
        report.L_at_lambda_star = L_val
        if lam is not None and u_bar is not None:
            report.theoretical_bound = theoretical_bound(u_bar, b, lam, L_val)
    if ensemble is not None and u_bar is not None:
        h_int = profile.max_delay_h
        if T_end is None:
            T_end = ensemble.config.horizon_years - h_int
        if T_end >= 1:
            report.empirical_time_average = empirical_time_average(
                ensemble, u_bar, h_int, T_end
            )
    return report
