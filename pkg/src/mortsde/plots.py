"""Static figure rendering for the report command.

All figures are written to files through the Agg backend; nothing here
feeds back into any computation.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simulate import EnsembleForecast

_FIGSIZE = (8.0, 5.0)


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_mean_vs_observed(ages, mean, observed, year, path) -> Path:
    """Ensemble mean curve against the observed profile, log-scale q."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(ages, observed, color="black", lw=1.2, label=f"observed {year}")
    ax.semilogy(ages, mean, color="tab:red", lw=1.2, ls="--", label="ensemble mean")
    ax.set_xlabel("age")
    ax.set_ylabel("death probability")
    ax.set_title(f"Mean forecast vs observed, {year}")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def plot_ci_band(ages, lo, hi, mean, observed, year, level, path) -> Path:
    """Confidence band around the ensemble mean, optional observed overlay."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.fill_between(ages, lo, hi, color="tab:blue", alpha=0.25, label=f"{level:.0%} band")
    ax.semilogy(ages, mean, color="tab:blue", lw=1.0, label="ensemble mean")
    if observed is not None:
        ax.semilogy(ages, observed, color="black", lw=1.0, label=f"observed {year}")
    ax.set_xlabel("age")
    ax.set_ylabel("death probability")
    ax.set_title(f"Forecast band, {year}")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def plot_ensemble_fan(ensemble: EnsembleForecast, age: int, path, max_lines=100) -> Path:
    """Trajectory fan at a single age over the forecast years."""
    spy = ensemble.config.steps_per_year
    horizon = ensemble.config.horizon_years
    years = ensemble.launch_year + np.arange(horizon + 1)
    rows = [offset * spy for offset in range(horizon + 1)]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    shown = ensemble.trajectories[:max_lines]
    for traj in shown:
        ax.plot(years, traj.values[rows, age], color="tab:gray", alpha=0.25, lw=0.6)
    all_vals = np.stack([t.values[rows, age] for t in ensemble.trajectories])
    ax.plot(years, all_vals.mean(axis=0), color="tab:red", lw=1.6, label="ensemble mean")
    ax.set_xlabel("year")
    ax.set_ylabel(f"death probability at age {age}")
    ax.set_title(f"Trajectories at age {age} ({len(shown)} of {len(ensemble.trajectories)} shown)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def _silverman_bandwidth(samples: np.ndarray) -> float:
    n = samples.size
    std = samples.std(ddof=1) if n > 1 else 0.0
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = q75 - q25
    scale = min(std, iqr / 1.34) if iqr > 0.0 else std
    if scale <= 0.0:
        scale = max(abs(float(samples.mean())), 1e-12)
    return 0.9 * scale * n ** (-0.2)


def _kde(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    bw = _silverman_bandwidth(samples)
    z = (grid[:, None] - samples[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1) / (samples.size * bw * np.sqrt(2.0 * np.pi))


def plot_age_densities(ensemble: EnsembleForecast, year: int, ages, path) -> Path:
    """Smoothed densities of the trajectory values at chosen ages."""
    offset = int(year) - ensemble.launch_year
    values = ensemble.values_at_offset(offset)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for age in ages:
        samples = values[:, age]
        span = samples.max() - samples.min()
        pad = 0.15 * span if span > 0 else max(abs(samples.mean()) * 0.1, 1e-6)
        grid = np.linspace(samples.min() - pad, samples.max() + pad, 300)
        ax.plot(grid, _kde(samples, grid), lw=1.2, label=f"age {age}")
    ax.set_xlabel("death probability")
    ax.set_ylabel("density")
    ax.set_title(f"Forecast densities, {year}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)
