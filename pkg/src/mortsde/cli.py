"""Batch command-line front end.

Commands: profile, forecast, validate, equilibrium, report. Each reads a
key-value config file, validates it fully before writing anything, and
drops delimited artifacts (plus figures for report) into the output
directory. Exit codes: 0 ok, 1 computation error, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .delay import build_profile, build_rate_table
from .equilibrium import analyze
from .errors import ComputationError, EmptyValidation, InputError
from .indicators import build_report, empirical_ci, ensemble_stats
from .kernel import build_kernel, exterior_source_ages
from .lifetable import LifeTable, load_life_table
from .runconfig import RunConfig, config_echo, load_run_config
from .simulate import simulate_ensemble


def _fit_slice(table: LifeTable, last_fit_year: int) -> LifeTable:
    first, last = int(table.years[0]), int(table.years[-1])
    if not first <= last_fit_year <= last:
        raise InputError(
            f"last_fit_year {last_fit_year} outside table years {first}..{last}"
        )
    j = table.year_index(last_fit_year)
    return LifeTable(
        ages=table.ages.copy(),
        years=table.years[: j + 1].copy(),
        q=table.q[:, : j + 1].copy(),
        source_id=table.source_id,
    )


class _Pipeline:
    """Shared data assembly: table, fit slice, kernel, profile, history."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.table = load_life_table(
            config.data_path, clip_epsilon=config.clip_epsilon
        )
        self.fit = _fit_slice(self.table, config.last_fit_year)
        self.validation_years = [
            int(y) for y in self.table.years if y > config.last_fit_year
        ]
        self.kernel = build_kernel(self.table.max_age, config.kernel)
        self.profile = build_profile(
            self.fit, config.h, config.exp_lambda, config.spheric
        )
        self.history = self.fit.history_segment(config.last_fit_year, config.h)

    def ensemble(self, workers: int):
        return simulate_ensemble(
            self.history,
            self.profile,
            self.kernel,
            self.config.boundary,
            self.config.noise,
            self.config.sim,
            launch_year=self.config.last_fit_year,
            workers=workers,
        )

    def forecast_years(self):
        launch = self.config.last_fit_year
        return [launch + k for k in range(1, self.config.sim.horizon_years + 1)]

    def observed_in_horizon(self):
        horizon_years = set(self.forecast_years())
        return {
            y: self.table.column(y)
            for y in self.validation_years
            if y in horizon_years
        }

    def constant_exterior(self) -> np.ndarray:
        """Time-constant exterior profile g for the equilibrium analysis.

        Above the top age the boundary constant applies; below age zero
        the rule is evaluated on the launch-year observed rates.
        """
        launch_col = self.fit.column(self.config.last_fit_year)
        below = self.config.boundary.below_zero_rate(
            float(launch_col[0]), float(launch_col[1])
        )
        ext_ages = exterior_source_ages(self.kernel)
        return np.where(
            ext_ages < 0, below, self.config.boundary.above_infinity_rate
        ).astype(float)


def _out_dir(config: RunConfig, args) -> Path:
    out = Path(args.output_dir) if args.output_dir else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers(config: RunConfig, args) -> int:
    return int(args.workers) if args.workers else config.workers


def _write_profile_artifacts(pipe: _Pipeline, out: Path) -> None:
    rate_table = build_rate_table(pipe.fit)
    artifacts.write_rate_table(rate_table, out / "rate_table.csv")
    artifacts.write_profile(pipe.profile, out / "profile.csv")
    artifacts.write_metadata(
        out / "profile_summary.txt",
        {
            "h": pipe.profile.max_delay_h,
            "beta": repr(pipe.profile.beta),
            "lambda": repr(pipe.profile.exp_lambda),
            "alpha_bar": repr(pipe.profile.alpha_bar),
            "mean_delay": repr(pipe.profile.mean_delay),
            "fit_years": f"{pipe.fit.years[0]}..{pipe.fit.years[-1]}",
            "n_fit_years": pipe.fit.years.size,
        },
    )


def cmd_profile(args) -> int:
    config = load_run_config(args.config)
    pipe = _Pipeline(config)
    out = _out_dir(config, args)
    _write_profile_artifacts(pipe, out)
    artifacts.write_metadata(out / "run_config.txt", config_echo(config))
    print(f"beta = {pipe.profile.beta!r}")
    print(f"alpha_bar = {pipe.profile.alpha_bar!r}")
    print(f"wrote profile artifacts to {out}")
    return 0


def _forecast_outputs(pipe: _Pipeline, ensemble, out: Path) -> None:
    stats = {y: ensemble_stats(ensemble, y) for y in pipe.forecast_years()}
    cis = {
        (y, level): empirical_ci(ensemble, y, level)
        for y in pipe.forecast_years()
        for level in pipe.config.ci_levels
    }
    observed = pipe.observed_in_horizon()
    artifacts.write_ensemble(ensemble, out / "ensemble.csv")
    artifacts.write_stats(stats, out / "stats.csv")
    artifacts.write_ci(cis, out / "ci.csv", observed_by_year=observed)
    artifacts.write_seed_ledger(ensemble, out / "seed_ledger.csv")
    meta = dict(config_echo(pipe.config))
    meta["total_clamp_events"] = ensemble.total_clamp_events()
    meta["total_nonpositive_events"] = sum(
        t.nonpositive_events for t in ensemble.trajectories
    )
    meta["total_overunit_events"] = sum(
        t.overunit_events for t in ensemble.trajectories
    )
    artifacts.write_metadata(out / "forecast_metadata.txt", meta)


def cmd_forecast(args) -> int:
    config = load_run_config(args.config)
    pipe = _Pipeline(config)
    ensemble = pipe.ensemble(_workers(config, args))
    out = _out_dir(config, args)
    _forecast_outputs(pipe, ensemble, out)
    print(
        f"simulated {config.sim.n_trajectories} trajectories over "
        f"{config.sim.horizon_years} years; clamp events: "
        f"{ensemble.total_clamp_events()}"
    )
    print(f"wrote forecast artifacts to {out}")
    return 0


def _validation_report(pipe: _Pipeline, ensemble):
    observed = pipe.observed_in_horizon()
    if not observed:
        raise EmptyValidation(
            f"no observed years after {pipe.config.last_fit_year} fall inside "
            f"the {pipe.config.sim.horizon_years}-year forecast horizon"
        )
    return build_report(
        ensemble, observed, ci_levels=pipe.config.ci_levels, powers=pipe.config.ct_powers
    ), observed


def cmd_validate(args) -> int:
    config = load_run_config(args.config)
    pipe = _Pipeline(config)
    ensemble = pipe.ensemble(_workers(config, args))
    report, observed = _validation_report(pipe, ensemble)
    out = _out_dir(config, args)
    artifacts.write_indicators(report, out / "indicators.csv")
    artifacts.write_ci(report.cis, out / "ci_validation.csv", observed_by_year=observed)
    artifacts.write_stats(report.stats, out / "stats_validation.csv")
    for year in report.years:
        counts = " ".join(
            f"I_c[{level:g}]={report.counts[(year, level)]}"
            for level in report.ci_levels
        )
        print(f"{year}: I_MqD={report.mqd[year]:.6e} I_MRqD={report.mrqd[year]:.6e} {counts}")
    print(f"wrote validation artifacts to {out}")
    return 0


def _equilibrium_report(pipe: _Pipeline, workers: int):
    config = pipe.config
    b = config.noise.effective_b
    ens = None
    t_end = config.t_end
    if t_end is None:
        derived = config.sim.horizon_years - config.h
        t_end = float(derived) if derived >= 1 else None
    if t_end is not None:
        ens = pipe.ensemble(workers)
    return analyze(
        pipe.kernel,
        pipe.profile,
        b,
        pipe.constant_exterior(),
        h=float(config.h),
        ensemble=ens,
        T_end=t_end,
    )


def cmd_equilibrium(args) -> int:
    config = load_run_config(args.config)
    pipe = _Pipeline(config)
    report = _equilibrium_report(pipe, _workers(config, args))
    out = _out_dir(config, args)
    artifacts.write_equilibrium(report, out / "equilibrium.txt", out / "u_bar.csv")
    print(
        f"cond_fixed={bool(report.cond_fixed_ok.all())} "
        f"cond_m1={report.cond_m1_ok} cond_h={report.cond_h_ok}"
    )
    if report.theoretical_bound is not None:
        print(f"theoretical bound = {report.theoretical_bound!r}")
    if report.empirical_time_average is not None:
        print(f"empirical time average = {report.empirical_time_average!r}")
    print(f"wrote equilibrium artifacts to {out}")
    return 0


def _report_figures(pipe: _Pipeline, ensemble, report, observed, out: Path) -> list:
    from . import plots

    figdir = out / "figures"
    figdir.mkdir(parents=True, exist_ok=True)
    ages = pipe.table.ages
    written = []
    top_level = max(pipe.config.ci_levels)
    for year in (report.years if report is not None else []):
        mean, _std = report.stats[year]
        written.append(
            plots.plot_mean_vs_observed(
                ages, mean, observed[year], year, figdir / f"mean_vs_observed_{year}.png"
            )
        )
        lo, hi = report.cis[(year, top_level)]
        written.append(
            plots.plot_ci_band(
                ages, lo, hi, mean, observed[year], year, top_level,
                figdir / f"ci_band_{year}.png",
            )
        )
    fan_age = pipe.config.plot_age
    if fan_age is None:
        fan_age = min(40, pipe.table.max_age)
    written.append(plots.plot_ensemble_fan(ensemble, fan_age, figdir / f"fan_age_{fan_age}.png"))
    last_year = pipe.config.last_fit_year + pipe.config.sim.horizon_years
    density_ages = [a for a in (0, 40, 65, 90) if a <= pipe.table.max_age]
    if not density_ages:
        density_ages = [int(pipe.table.max_age)]
    written.append(
        plots.plot_age_densities(
            ensemble, last_year, density_ages, figdir / f"density_{last_year}.png"
        )
    )
    return written


def cmd_report(args) -> int:
    config = load_run_config(args.config)
    pipe = _Pipeline(config)
    workers = _workers(config, args)
    ensemble = pipe.ensemble(workers)
    observed = pipe.observed_in_horizon()
    report = None
    if observed:
        report, observed = _validation_report(pipe, ensemble)
    eq_report = _equilibrium_report(pipe, workers)

    out = _out_dir(config, args)
    _write_profile_artifacts(pipe, out)
    _forecast_outputs(pipe, ensemble, out)
    if report is not None:
        artifacts.write_indicators(report, out / "indicators.csv")
        artifacts.write_ci(report.cis, out / "ci_validation.csv", observed_by_year=observed)
    artifacts.write_equilibrium(eq_report, out / "equilibrium.txt", out / "u_bar.csv")
    artifacts.write_metadata(out / "run_config.txt", config_echo(config))
    figures = _report_figures(pipe, ensemble, report, observed, out)
    print(f"wrote report bundle to {out} ({len(figures)} figures)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mortsde",
        description=(
            "Stochastic delayed nonlocal-diffusion forecasting of "
            "age-specific death probabilities"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "profile": (cmd_profile, "estimate delay weights and improvement rates"),
        "forecast": (cmd_forecast, "simulate the seeded ensemble and write it out"),
        "validate": (cmd_validate, "score the ensemble against observed years"),
        "equilibrium": (cmd_equilibrium, "fixed point, stability checks, bounds"),
        "report": (cmd_report, "bundle everything plus figures"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="key-value config file")
        p.add_argument("--output-dir", default=None, help="override output_dir")
        p.add_argument(
            "--workers", type=int, default=None, help="override worker count"
        )
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
