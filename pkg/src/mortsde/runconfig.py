"""Run configuration: flat key-value files with dotted section names.

A minimal file names only the data path and the last fit year; every other
key has the standard default. Example:

    data_path = qx.csv
    last_fit_year = 2018
    noise.kind = logistic
    noise.b = 0.1
    sim.n_trajectories = 500

Fractions like ``lambda = 11/12`` are accepted wherever a real is.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .delay import SphericConfig
from .errors import ConfigError
from .kernel import KernelConfig
from .lifetable import BoundaryRule
from .simulate import NoiseSpec, SimConfig


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a batch run, validated on construction."""

    data_path: str
    last_fit_year: int
    h: int = 90
    exp_lambda: float = 11.0 / 12.0
    spheric: SphericConfig = SphericConfig()
    kernel: KernelConfig = KernelConfig()
    boundary: BoundaryRule = BoundaryRule()
    noise: NoiseSpec = NoiseSpec()
    sim: SimConfig = SimConfig()
    ci_levels: tuple = (0.98, 0.90, 0.80)
    ct_powers: tuple = (1, 2)
    output_dir: str = "out"
    workers: int = 1
    t_end: float | None = None
    clip_epsilon: float | None = None
    plot_age: int | None = None

    def __post_init__(self):
        if self.h < 1:
            raise ConfigError(f"h must be >= 1, got {self.h}")
        if not self.exp_lambda > 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.exp_lambda}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        for level in self.ci_levels:
            if not 0.0 < level < 1.0:
                raise ConfigError(f"ci level {level} outside (0, 1)")
        for power in self.ct_powers:
            if power not in (1, 2):
                raise ConfigError(f"ct power must be 1 or 2, got {power}")


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            return float(num) / float(den)
        except (ValueError, ZeroDivisionError):
            pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_scalar(part) for part in text.split(",") if part.strip())
    return _parse_scalar(text)


def read_key_values(path) -> dict:
    """Parse `key = value` lines; `#` starts a comment."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    pairs: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = _parse_value(value)
    return pairs


_KNOWN_KEYS = {
    "data_path",
    "last_fit_year",
    "h",
    "lambda",
    "output_dir",
    "workers",
    "t_end",
    "clip_epsilon",
    "ci_levels",
    "ct_powers",
    "plot_age",
    "spheric.a",
    "spheric.b",
    "spheric.T",
    "kernel.bandwidth",
    "kernel.m",
    "kernel.M",
    "boundary.above_rate",
    "boundary.below_weights",
    "noise.kind",
    "noise.b",
    "sim.tau",
    "sim.horizon",
    "sim.n_trajectories",
    "sim.base_seed",
    "sim.clamp_epsilon",
}


def config_from_mapping(pairs: dict) -> RunConfig:
    """Assemble a RunConfig from parsed key-value pairs."""
    unknown = set(pairs) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for required in ("data_path", "last_fit_year"):
        if required not in pairs:
            raise ConfigError(f"missing required config key {required!r}")

    def take(key, default):
        return pairs.get(key, default)

    def as_tuple(key, default):
        value = pairs.get(key, default)
        return value if isinstance(value, tuple) else (value,)

    spheric = SphericConfig(
        range_a=float(take("spheric.a", 20.0)),
        range_b=float(take("spheric.b", 30.0)),
        sill_T=float(take("spheric.T", 1.0)),
    )
    kernel = KernelConfig(
        bandwidth=float(take("kernel.bandwidth", 0.25)),
        lower_extension=int(take("kernel.m", 50)),
        upper_extension=int(take("kernel.M", 150)),
    )
    below = as_tuple("boundary.below_weights", (0.75, 0.25))
    boundary = BoundaryRule(
        above_infinity_rate=float(take("boundary.above_rate", 0.385)),
        below_zero_weights=tuple(float(w) for w in below),
    )
    noise = NoiseSpec(
        kind=str(take("noise.kind", "logistic")),
        intensity_b=float(take("noise.b", 0.1)),
    )
    sim = SimConfig(
        time_step_tau=float(take("sim.tau", 1.0)),
        horizon_years=int(take("sim.horizon", 15)),
        n_trajectories=int(take("sim.n_trajectories", 500)),
        base_seed=int(take("sim.base_seed", 12345)),
        clamp_epsilon=float(take("sim.clamp_epsilon", 1e-10)),
    )
    t_end = pairs.get("t_end")
    clip = pairs.get("clip_epsilon")
    plot_age = pairs.get("plot_age")
    return RunConfig(
        data_path=str(pairs["data_path"]),
        last_fit_year=int(pairs["last_fit_year"]),
        h=int(take("h", 90)),
        exp_lambda=float(take("lambda", 11.0 / 12.0)),
        spheric=spheric,
        kernel=kernel,
        boundary=boundary,
        noise=noise,
        sim=sim,
        ci_levels=tuple(float(x) for x in as_tuple("ci_levels", (0.98, 0.90, 0.80))),
        ct_powers=tuple(int(x) for x in as_tuple("ct_powers", (1, 2))),
        output_dir=str(take("output_dir", "out")),
        workers=int(take("workers", 1)),
        t_end=None if t_end is None else float(t_end),
        clip_epsilon=None if clip is None else float(clip),
        plot_age=None if plot_age is None else int(plot_age),
    )


def load_run_config(path) -> RunConfig:
    """Read and validate a config file."""
    return config_from_mapping(read_key_values(path))


def config_echo(config: RunConfig) -> dict:
    """Flat mapping echoing every effective setting, for metadata files."""
    return {
        "data_path": config.data_path,
        "last_fit_year": config.last_fit_year,
        "h": config.h,
        "lambda": repr(config.exp_lambda),
        "spheric.a": repr(config.spheric.range_a),
        "spheric.b": repr(config.spheric.range_b),
        "spheric.T": repr(config.spheric.sill_T),
        "kernel.bandwidth": repr(config.kernel.bandwidth),
        "kernel.m": config.kernel.lower_extension,
        "kernel.M": config.kernel.upper_extension,
        "boundary.above_rate": repr(config.boundary.above_infinity_rate),
        "boundary.below_weights": ",".join(
            repr(w) for w in config.boundary.below_zero_weights
        ),
        "noise.kind": config.noise.kind,
        "noise.b": repr(config.noise.intensity_b),
        "sim.tau": repr(config.sim.time_step_tau),
        "sim.horizon": config.sim.horizon_years,
        "sim.n_trajectories": config.sim.n_trajectories,
        "sim.base_seed": config.sim.base_seed,
        "sim.clamp_epsilon": repr(config.sim.clamp_epsilon),
        "ci_levels": ",".join(repr(x) for x in config.ci_levels),
        "ct_powers": ",".join(str(x) for x in config.ct_powers),
        "output_dir": config.output_dir,
        "workers": config.workers,
        "t_end": "" if config.t_end is None else repr(config.t_end),
        "clip_epsilon": "" if config.clip_epsilon is None else repr(config.clip_epsilon),
        "plot_age": "" if config.plot_age is None else config.plot_age,
    }
