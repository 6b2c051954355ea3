"""Euler-Maruyama integration of the delayed nonlocal mortality system.

The state is the vector of death probabilities over modeled ages. One step
of size tau applies

    next = q/(1+tau) + tau/(1+tau) * delayed drift + diffusion * dW

where the delayed drift averages kernel convolutions of the age profiles
at integer delays d = 0..h with weights alpha(-d)*f*(d), and the diffusion
coefficient is b*q (linear), b*q*(1-q) (logistic), or 0.

Trajectories are advanced in batches of independent members. Every array
operation in the batch engine is elementwise over the member axis with
fixed accumulation order over delays and source ages, so a member's path
is bit-identical no matter how the batch is split across workers. Each
member owns a private generator seeded from (base_seed, index).
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .delay import DelayProfile
from .errors import InputError, NumericalBlowup, ShortHistory
from .kernel import KernelWeights, convolve
from .lifetable import BoundaryRule

_TWO_PI = 2.0 * math.pi

_NOISE_KINDS = ("none", "linear", "logistic")


@dataclass(frozen=True)
class NoiseSpec:
    """Diffusion shape and intensity."""

    kind: str = "logistic"
    intensity_b: float = 0.1

    def __post_init__(self):
        if self.kind not in _NOISE_KINDS:
            raise InputError(
                f"noise kind must be one of {_NOISE_KINDS}, got {self.kind!r}"
            )
        if not self.intensity_b >= 0.0:
            raise InputError(f"intensity_b must be >= 0, got {self.intensity_b}")

    @property
    def effective_b(self) -> float:
        """Intensity actually applied; kind=none forces zero diffusion."""
        return 0.0 if self.kind == "none" else float(self.intensity_b)


@dataclass(frozen=True)
class SimConfig:
    """Step size, horizon, ensemble size, seeding, and clamping."""

    time_step_tau: float = 1.0
    horizon_years: int = 15
    n_trajectories: int = 500
    base_seed: int = 12345
    clamp_epsilon: float = 1e-10

    def __post_init__(self):
        tau = float(self.time_step_tau)
        if not tau > 0.0:
            raise InputError(f"time_step_tau must be > 0, got {tau}")
        spy = round(1.0 / tau)
        if spy < 1 or abs(spy * tau - 1.0) > 1e-9:
            raise InputError(
                f"time_step_tau must divide one year evenly, got {tau}"
            )
        if self.horizon_years < 1:
            raise InputError(f"horizon_years must be >= 1, got {self.horizon_years}")
        if self.n_trajectories < 1:
            raise InputError(
                f"n_trajectories must be >= 1, got {self.n_trajectories}"
            )
        if not 0.0 < self.clamp_epsilon < 0.5:
            raise InputError(
                f"clamp_epsilon must lie in (0, 0.5), got {self.clamp_epsilon}"
            )

    @property
    def steps_per_year(self) -> int:
        return round(1.0 / float(self.time_step_tau))

    @property
    def n_steps(self) -> int:
        return self.horizon_years * self.steps_per_year


@dataclass
class Trajectory:
    """One simulated path on the step grid.

    ``values[k]`` is the age profile at time k*tau after launch; row 0 is
    the launch-year profile itself. Counters record post-hoc clamping and
    the raw (pre-clamp) range violations.
    """

    values: np.ndarray
    seed: int
    clamp_events: int
    nonpositive_events: int = 0
    overunit_events: int = 0


@dataclass(frozen=True)
class EnsembleForecast:
    """A batch of trajectories sharing history, kernel, and config."""

    trajectories: list
    noise: NoiseSpec
    config: SimConfig
    history: np.ndarray
    launch_year: int = 0

    @property
    def n_ages(self) -> int:
        return int(self.history.shape[1])

    @property
    def max_delay_h(self) -> int:
        return int(self.history.shape[0] - 1)

    def values_at_step(self, k: int) -> np.ndarray:
        """(trajectory x age) matrix of states at step k."""
        return np.stack([t.values[k] for t in self.trajectories])

    def values_at_offset(self, years: int) -> np.ndarray:
        """(trajectory x age) matrix at an integer number of years."""
        if not 0 <= years <= self.config.horizon_years:
            raise InputError(
                f"offset {years} outside horizon 0..{self.config.horizon_years}"
            )
        return self.values_at_step(years * self.config.steps_per_year)

    def total_clamp_events(self) -> int:
        return sum(t.clamp_events for t in self.trajectories)


def derive_seed(base_seed: int, index: int) -> int:
    """Stable 64-bit per-trajectory seed from the base seed and index."""
    digest = hashlib.blake2b(
        f"{int(base_seed)}:{int(index)}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def box_muller_pair(u1: float, u2: float, tau: float) -> tuple[float, float]:
    """Two independent N(0, tau) draws from two uniforms, u1 in (0, 1]."""
    if not 0.0 < u1 <= 1.0:
        raise InputError(f"u1 must lie in (0, 1], got {u1}")
    r = math.sqrt(-2.0 * tau * math.log(u1))
    return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)


def gaussian_increments(gen: np.random.Generator, tau: float) -> tuple[float, float]:
    """Draw one Box-Muller pair with variance tau, advancing the stream.

    The first uniform is reflected to (0, 1] so the log never sees zero.
    """
    if not tau > 0.0:
        raise InputError(f"tau must be > 0, got {tau}")
    u = gen.random(2)
    return box_muller_pair(1.0 - u[0], u[1], tau)


def _increment_vector(gen: np.random.Generator, n: int, tau: float) -> np.ndarray:
    """n increments for one member and step, pairs filling adjacent ages.

    Consumes uniforms in the same order as repeated two-at-a-time draws;
    the second member of the final pair is discarded when n is odd.
    """
    pairs = (n + 1) // 2
    u = gen.random((pairs, 2))
    r = np.sqrt(-2.0 * tau * np.log(1.0 - u[:, 0]))
    angle = _TWO_PI * u[:, 1]
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(angle)
    out[1::2] = r * np.sin(angle)
    return out[:n]


class _Geometry:
    """Precomputed kernel/boundary arrays shared by all batch runs."""

    def __init__(self, kernel: KernelWeights, boundary: BoundaryRule, n_ages: int):
        if kernel.n_interior != n_ages:
            raise InputError(
                f"kernel covers {kernel.n_interior} interior ages, history has {n_ages}"
            )
        lo = int(kernel.interior_ages[0] - kernel.source_ages[0])
        w = kernel.weights
        self.n_ages = n_ages
        self.has_below = lo > 0
        self.has_above = (w.shape[1] - lo - n_ages) > 0
        if self.has_below and n_ages < 2:
            raise InputError("below-zero boundary rule needs at least ages 0 and 1")
        self.interior_cols = [
            np.ascontiguousarray(w[:, lo + z]) for z in range(n_ages)
        ]
        self.below_mass = np.ascontiguousarray(w[:, :lo].sum(axis=1))
        self.above_mass = np.ascontiguousarray(w[:, lo + n_ages :].sum(axis=1))
        self.below_w = boundary.below_zero_weights
        self.g_above = boundary.above_infinity_rate


def _drift_batch(
    cur: np.ndarray, ring: np.ndarray, wd: np.ndarray, sum_wd: float, geo: _Geometry
) -> np.ndarray:
    """Delay-averaged kernel drift for a batch of members.

    Delay averaging runs d ascending, the source-age sum z ascending; both
    are elementwise over the member axis.
    """
    avg = wd[0] * cur
    for d in range(1, wd.size):
        avg = avg + wd[d] * ring[:, d, :]
    drift = np.zeros_like(cur)
    for z in range(geo.n_ages):
        drift = drift + geo.interior_cols[z][None, :] * avg[:, z][:, None]
    if geo.has_below:
        below = geo.below_w[0] * avg[:, 0] + geo.below_w[1] * avg[:, 1]
        drift = drift + geo.below_mass[None, :] * below[:, None]
    if geo.has_above:
        drift = drift + (sum_wd * geo.g_above) * geo.above_mass[None, :]
    return drift


def _run_batch(
    history: np.ndarray,
    profile: DelayProfile,
    kernel: KernelWeights,
    boundary: BoundaryRule,
    noise: NoiseSpec,
    cfg: SimConfig,
    seeds: list,
):
    """Advance a batch of members; returns per-member paths and counters."""
    h = profile.max_delay_h
    if history.ndim != 2 or history.shape[0] != h + 1:
        raise ShortHistory(
            f"history must hold h+1={h + 1} year rows, got shape {history.shape}"
        )
    n_ages = history.shape[1]
    geo = _Geometry(kernel, boundary, n_ages)
    B = len(seeds)
    wd = profile.drift_weights
    sum_wd = float(np.sum(wd))
    tau = float(cfg.time_step_tau)
    inv1 = 1.0 / (1.0 + tau)
    ctau = tau / (1.0 + tau)
    b = noise.effective_b
    eps = float(cfg.clamp_epsilon)
    spy = cfg.steps_per_year
    n_steps = cfg.n_steps

    gens = [np.random.Generator(np.random.PCG64(s)) for s in seeds]
    # ring[:, d] holds the profile at the year mark d years back; ring[:, 0]
    # is the frozen copy of the state at the most recent mark.
    ring = np.empty((B, h + 1, n_ages))
    for d in range(h + 1):
        ring[:, d, :] = history[h - d]
    cur = np.repeat(history[-1][None, :], B, axis=0)

    values = np.empty((B, n_steps + 1, n_ages))
    values[:, 0, :] = cur
    clamp = np.zeros(B, dtype=np.int64)
    nonpos = np.zeros(B, dtype=np.int64)
    overunit = np.zeros(B, dtype=np.int64)
    dW = np.empty((B, n_ages))

    for k in range(1, n_steps + 1):
        drift = _drift_batch(cur, ring, wd, sum_wd, geo)
        if b > 0.0:
            for i in range(B):
                dW[i] = _increment_vector(gens[i], n_ages, tau)
            if noise.kind == "linear":
                coef = b * cur
            else:
                coef = b * cur * (1.0 - cur)
            raw = inv1 * cur + ctau * drift + coef * dW
        else:
            raw = inv1 * cur + ctau * drift
        if not np.isfinite(raw).all():
            bad = int(np.count_nonzero(~np.isfinite(raw)))
            raise NumericalBlowup(
                f"{bad} non-finite values at step {k} (t={k * tau:.6g} years)"
            )
        nonpos += np.count_nonzero(raw <= 0.0, axis=1)
        overunit += np.count_nonzero(raw >= 1.0, axis=1)
        if noise.kind == "linear":
            clamp += np.count_nonzero(raw < eps, axis=1)
            cur = np.maximum(raw, eps)
        else:
            clamp += np.count_nonzero((raw < eps) | (raw > 1.0 - eps), axis=1)
            cur = np.clip(raw, eps, 1.0 - eps)
        values[:, k, :] = cur
        if k % spy == 0:
            ring = np.roll(ring, 1, axis=1)
            ring[:, 0, :] = cur
    return values, clamp, nonpos, overunit


def drift(
    x: int,
    history_window: np.ndarray,
    profile: DelayProfile,
    kernel: KernelWeights,
    exterior,
    current_q: np.ndarray | None = None,
) -> float:
    """Delay-weighted kernel drift at one age.

    ``history_window`` rows are the age profiles at delays 0..h (row 0 is
    the current state; ``current_q`` overrides it when given). ``exterior``
    maps (source age, delay) to the exterior rate for that delay's slice.
    """
    window = np.asarray(history_window, dtype=float)
    h = profile.max_delay_h
    if window.ndim != 2 or window.shape[0] < h + 1:
        raise ShortHistory(
            f"history window must hold h+1={h + 1} delay rows, got {window.shape}"
        )
    wd = profile.drift_weights
    total = 0.0
    for d in range(h + 1):
        row = window[d] if not (d == 0 and current_q is not None) else current_q
        total += wd[d] * convolve(kernel, row, lambda z, _d=d: exterior(z, _d), x=x)
    return total


def em_step(
    window: np.ndarray,
    profile: DelayProfile,
    kernel: KernelWeights,
    exterior,
    noise: NoiseSpec,
    tau: float,
    increments: np.ndarray,
    clamp_epsilon: float = 1e-10,
) -> np.ndarray:
    """One semi-implicit Euler-Maruyama update of the full age vector.

    ``window[0]`` is the current state q(t); ``increments`` are N(0, tau)
    draws per age. Returns the clamped next state.
    """
    window = np.asarray(window, dtype=float)
    h = profile.max_delay_h
    if window.ndim != 2 or window.shape[0] < h + 1:
        raise ShortHistory(
            f"history window must hold h+1={h + 1} delay rows, got {window.shape}"
        )
    cur = window[0]
    wd = profile.drift_weights
    drift_vec = np.zeros_like(cur)
    for d in range(h + 1):
        drift_vec = drift_vec + wd[d] * convolve(
            kernel, window[d], lambda z, _d=d: exterior(z, _d)
        )
    inv1 = 1.0 / (1.0 + tau)
    ctau = tau / (1.0 + tau)
    b = noise.effective_b
    increments = np.asarray(increments, dtype=float)
    if b > 0.0:
        if noise.kind == "linear":
            coef = b * cur
        else:
            coef = b * cur * (1.0 - cur)
        raw = inv1 * cur + ctau * drift_vec + coef * increments
    else:
        raw = inv1 * cur + ctau * drift_vec
    if not np.isfinite(raw).all():
        bad = int(np.count_nonzero(~np.isfinite(raw)))
        raise NumericalBlowup(f"{bad} non-finite values in em_step")
    eps = float(clamp_epsilon)
    if noise.kind == "linear":
        return np.maximum(raw, eps)
    return np.clip(raw, eps, 1.0 - eps)


def simulate_trajectory(
    history: np.ndarray,
    profile: DelayProfile,
    kernel: KernelWeights,
    boundary: BoundaryRule,
    noise: NoiseSpec,
    cfg: SimConfig,
    seed: int,
) -> Trajectory:
    """Roll one member forward horizon_years/tau steps.

    ``history`` holds the observed profiles for the h+1 most recent years
    in chronological order (last row = launch year). The below-zero
    boundary is fed by each delay slice's own ages 0 and 1, so it follows
    the member once simulated values age into the window. Deterministic
    given (seed, cfg).
    """
    history = np.asarray(history, dtype=float)
    values, clamp, nonpos, overunit = _run_batch(
        history, profile, kernel, boundary, noise, cfg, [int(seed)]
    )
    return Trajectory(
        values=values[0],
        seed=int(seed),
        clamp_events=int(clamp[0]),
        nonpositive_events=int(nonpos[0]),
        overunit_events=int(overunit[0]),
    )


def simulate_ensemble(
    history: np.ndarray,
    profile: DelayProfile,
    kernel: KernelWeights,
    boundary: BoundaryRule,
    noise: NoiseSpec,
    cfg: SimConfig,
    launch_year: int = 0,
    workers: int = 1,
) -> EnsembleForecast:
    """Simulate n_trajectories members with per-member derived seeds.

    Member k is seeded by derive_seed(base_seed, k); results are identical
    for any worker count because members never share state.
    """
    history = np.asarray(history, dtype=float)
    n = cfg.n_trajectories
    seeds = [derive_seed(cfg.base_seed, k) for k in range(n)]
    workers = max(1, min(int(workers), n))
    if workers == 1:
        chunks = [(0, seeds)]
    else:
        size = (n + workers - 1) // workers
        chunks = [(i, seeds[i : i + size]) for i in range(0, n, size)]

    def run(chunk):
        start, chunk_seeds = chunk
        return start, _run_batch(
            history, profile, kernel, boundary, noise, cfg, chunk_seeds
        )

    results = []
    if len(chunks) == 1:
        results.append(run(chunks[0]))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results.extend(pool.map(run, chunks))

    trajectories: list = [None] * n
    for start, (values, clamp, nonpos, overunit) in results:
        for j in range(values.shape[0]):
            k = start + j
            trajectories[k] = Trajectory(
                values=values[j],
                seed=seeds[k],
                clamp_events=int(clamp[j]),
                nonpositive_events=int(nonpos[j]),
                overunit_events=int(overunit[j]),
            )
    return EnsembleForecast(
        trajectories=trajectories,
        noise=noise,
        config=cfg,
        history=history.copy(),
        launch_year=int(launch_year),
    )
