"""Shared builders: toy tables, desk-scale systems, synthetic data."""

import os

import numpy as np
import pytest

from mortsde import (
    BoundaryRule,
    DelayProfile,
    KernelConfig,
    LifeTable,
    build_kernel,
)


def make_table(n_ages=5, first_year=2000, n_years=4, fill=None, rng=None):
    """Small synthetic life table; ``fill`` may be a constant or a matrix."""
    ages = np.arange(n_ages)
    years = np.arange(first_year, first_year + n_years)
    if fill is None:
        rng = rng or np.random.default_rng(0)
        q = rng.uniform(0.01, 0.2, size=(n_ages, n_years))
    elif np.isscalar(fill):
        q = np.full((n_ages, n_years), float(fill))
    else:
        q = np.asarray(fill, dtype=float)
    return LifeTable(ages=ages, years=years, q=q, source_id="test")


def write_long_csv(path, table):
    lines = ["age,year,qx"]
    for i, age in enumerate(table.ages):
        for j, year in enumerate(table.years):
            lines.append(f"{age},{year},{float(table.q[i, j])!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def desk_kernel():
    """5 interior ages dominated by the exterior: tiny interior mass."""
    cfg = KernelConfig(bandwidth=1000.0, lower_extension=0, upper_extension=500)
    return build_kernel(4, cfg)


@pytest.fixture
def desk_profile():
    return DelayProfile.from_parameters(h=2, beta=-0.002, lam=11.0 / 12.0)


@pytest.fixture
def boundary():
    return BoundaryRule()


def random_desk_kernel(rng, n_ages=None, lower=None):
    """Random small kernel; bandwidth spans localized to nearly flat."""
    n_ages = n_ages or int(rng.integers(2, 8))
    lower = lower if lower is not None else int(rng.integers(0, 4))
    upper = n_ages - 1 + int(rng.integers(1, 30))
    bandwidth = float(rng.uniform(0.5, 50.0))
    cfg = KernelConfig(bandwidth=bandwidth, lower_extension=lower, upper_extension=upper)
    return build_kernel(n_ages - 1, cfg)


def random_profile(rng, h=None):
    h = h or int(rng.integers(1, 6))
    beta = float(rng.uniform(-0.01, 0.0))
    lam = float(rng.uniform(0.3, 2.0))
    return DelayProfile.from_parameters(h=h, beta=beta, lam=lam)


def spain_shaped_q(rng, n_ages=101, n_years=116):
    """Plausible mortality surface: infant spike, young-adult bump, old-age rise."""
    ages = np.arange(n_ages)
    base = 0.0006 + 0.00009 * np.exp(0.082 * ages)
    base = base + 0.004 * np.exp(-0.5 * (ages / 1.2) ** 2)
    base = base + 0.0004 * np.exp(-0.5 * ((ages - 22) / 4.0) ** 2)
    impr = 0.995 ** np.arange(n_years)
    noise = 1.0 + 0.01 * rng.standard_normal((n_ages, n_years))
    return np.clip(base[:, None] * impr[None, :] * noise, 1e-6, 0.9)


@pytest.fixture(scope="session")
def spain_shaped_table():
    """Synthetic table with the real dataset's exact dimensions."""
    rng = np.random.default_rng(2024)
    return LifeTable(
        ages=np.arange(101),
        years=np.arange(1908, 2024),
        q=spain_shaped_q(rng),
        source_id="synthetic-spain-shape",
    )


SPAIN_ENV = "SPAIN_QX_CSV"


def spain_table_or_none():
    """Real dataset if the environment points at one, else None."""
    path = os.environ.get(SPAIN_ENV)
    if not path or not os.path.exists(path):
        return None
    from mortsde import load_life_table

    return load_life_table(path, source_id="spain-observed")
