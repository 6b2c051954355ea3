"""Nonlocal graduation kernel: truncated discrete Gaussian row weights.

Each interior age x gets a weight over integer source ages z in
``[-lower_extension, upper_extension]``:

    j[x, z] = phi(|x - z| / bandwidth) / sum_z' phi(|x - z'| / bandwidth)

with phi the standard normal density. The per-row normalization makes every
row sum to exactly 1 (up to floating-point rounding), which is what keeps
the constant vector invariant under graduation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadAge, BadBandwidth, GridError


@dataclass(frozen=True)
class KernelConfig:
    """Geometry and smoothness of the graduation kernel.

    ``lower_extension`` ages below 0 and ages up to ``upper_extension``
    participate as sources; interior (modeled) ages are 0..max_age of the
    table the kernel is built for, and must sit inside the source range.
    """

    bandwidth: float = 0.25
    lower_extension: int = 50
    upper_extension: int = 150

    def __post_init__(self):
        if not self.bandwidth > 0.0 or not math.isfinite(self.bandwidth):
            raise BadBandwidth(f"bandwidth must be finite and > 0, got {self.bandwidth}")
        if self.lower_extension < 0:
            raise GridError(f"lower_extension must be >= 0, got {self.lower_extension}")
        if self.upper_extension < 0:
            raise GridError(f"upper_extension must be >= 0, got {self.upper_extension}")

    @property
    def source_ages(self) -> np.ndarray:
        """All source ages z, from -lower_extension to upper_extension."""
        return np.arange(-self.lower_extension, self.upper_extension + 1)


@dataclass(frozen=True)
class KernelWeights:
    """Normalized kernel rows for a fixed set of interior ages.

    ``weights[i, k]`` is the influence of source age ``source_ages[k]`` on
    interior age ``interior_ages[i]``. Rows sum to 1.
    """

    interior_ages: np.ndarray
    source_ages: np.ndarray
    weights: np.ndarray
    config: KernelConfig

    @property
    def n_interior(self) -> int:
        return int(self.interior_ages.size)

    def interior_block(self) -> np.ndarray:
        """Square sub-matrix of weights from interior ages onto themselves."""
        lo = int(self.interior_ages[0] - self.source_ages[0])
        hi = lo + self.n_interior
        return self.weights[:, lo:hi]

    def exterior_mass(self) -> np.ndarray:
        """Per-row total weight falling on exterior source ages."""
        return 1.0 - self.interior_block().sum(axis=1)

    def row(self, age: int) -> np.ndarray:
        idx = np.nonzero(self.interior_ages == age)[0]
        if idx.size == 0:
            raise BadAge(f"age {age} is not an interior age of this kernel")
        return self.weights[int(idx[0])]


def gaussian_density(u: np.ndarray | float, bandwidth: float) -> np.ndarray | float:
    """Scaled standard normal density (1/b) * phi(u / b)."""
    if not bandwidth > 0.0:
        raise BadBandwidth(f"bandwidth must be > 0, got {bandwidth}")
    u = np.asarray(u, dtype=float)
    out = np.exp(-0.5 * (u / bandwidth) ** 2) / (bandwidth * math.sqrt(2.0 * math.pi))
    return out if out.ndim else float(out)


def build_kernel(max_age: int, config: KernelConfig) -> KernelWeights:
    """Build normalized rows for interior ages 0..max_age.

    Raises :class:`BadAge` if the interior range is not contained in the
    source range, and :class:`BadBandwidth` if any row underflows to zero
    (a bandwidth so small that no source age receives positive weight).
    """
    if max_age < 0:
        raise BadAge(f"max_age must be >= 0, got {max_age}")
    if max_age > config.upper_extension:
        raise BadAge(
            f"interior ages 0..{max_age} exceed upper_extension "
            f"{config.upper_extension}"
        )
    interior = np.arange(0, max_age + 1)
    sources = config.source_ages
    dist = np.abs(interior[:, None] - sources[None, :]).astype(float)
    raw = gaussian_density(dist, config.bandwidth)
    row_sums = raw.sum(axis=1)
    if np.any(row_sums <= 0.0) or not np.all(np.isfinite(row_sums)):
        raise BadBandwidth(
            f"bandwidth {config.bandwidth} underflows kernel rows to zero"
        )
    weights = raw / row_sums[:, None]
    return KernelWeights(
        interior_ages=interior, source_ages=sources, weights=weights, config=config
    )


def exterior_source_ages(kernel: KernelWeights) -> np.ndarray:
    """Source ages outside the interior range, ascending."""
    interior = set(int(a) for a in kernel.interior_ages)
    return np.array([z for z in kernel.source_ages if int(z) not in interior])


def _exterior_values(kernel: KernelWeights, exterior) -> np.ndarray:
    ext_ages = exterior_source_ages(kernel)
    if callable(exterior):
        return np.array([float(exterior(int(z))) for z in ext_ages])
    values = np.asarray(exterior, dtype=float)
    if values.shape != ext_ages.shape:
        raise GridError(
            f"exterior has shape {values.shape}, expected {ext_ages.shape}"
        )
    return values


def convolve(kernel: KernelWeights, interior, exterior, x: int | None = None):
    """Weighted average of a source profile under the kernel rows.

    ``interior`` holds values at the kernel's interior ages. ``exterior``
    is either a callable ``age -> value`` or a vector over the exterior
    source ages in ascending age order. With ``x`` given, returns the
    scalar row result at that interior age; otherwise the full vector.
    Rows sum to 1, so a constant profile is returned unchanged.
    """
    interior = np.asarray(interior, dtype=float)
    n_int = kernel.n_interior
    if interior.shape != (n_int,):
        raise GridError(f"interior has shape {interior.shape}, expected {(n_int,)}")
    ext_values = _exterior_values(kernel, exterior)
    lo = int(kernel.interior_ages[0] - kernel.source_ages[0])
    profile = np.concatenate([ext_values[:lo], interior, ext_values[lo:]])
    if x is None:
        return kernel.weights @ profile
    idx = np.nonzero(kernel.interior_ages == x)[0]
    if idx.size == 0:
        raise BadAge(f"age {x} is not an interior age of this kernel")
    return float(kernel.weights[int(idx[0])] @ profile)
