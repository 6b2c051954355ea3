"""Delimited output writers for every pipeline stage.

All floats are written with repr (shortest round-trip form) so reruns with
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .delay import DelayProfile, ImprovementRateTable
from .equilibrium import EquilibriumReport
from .indicators import IndicatorReport
from .simulate import EnsembleForecast


def _fmt(x) -> str:
    return repr(float(x))


def write_rate_table(table: ImprovementRateTable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["base_year", "delay", "rate"])
        for (t0, d) in sorted(table.rates):
            writer.writerow([t0, d, _fmt(table.rates[(t0, d)])])
    return path


def write_profile(profile: DelayProfile, path) -> Path:
    """Per-delay CSV: global rate, density, alpha, and weighted rate.

    Delay 0 carries no improvement rate, so those columns stay empty.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay", "global_rate", "fstar", "alpha", "weighted_rate"])
        for d in range(profile.max_delay_h + 1):
            rate = _fmt(profile.global_rates[d - 1]) if d >= 1 else ""
            weighted = _fmt(profile.weighted_rates[d - 1]) if d >= 1 else ""
            writer.writerow(
                [d, rate, _fmt(profile.fstar[d]), _fmt(profile.alpha_values[d]), weighted]
            )
    return path


def write_kernel_rows(kernel, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "z", "weight"])
        for i, age in enumerate(kernel.interior_ages):
            for j, z in enumerate(kernel.source_ages):
                writer.writerow([int(age), int(z), _fmt(kernel.weights[i, j])])
    return path


def write_ensemble(ensemble: EnsembleForecast, path) -> Path:
    """Long CSV of yearly states: trajectory, calendar year, age, q."""
    path = Path(path)
    spy = ensemble.config.steps_per_year
    horizon = ensemble.config.horizon_years
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trajectory", "year", "age", "q"])
        for idx, traj in enumerate(ensemble.trajectories):
            for offset in range(1, horizon + 1):
                row = traj.values[offset * spy]
                year = ensemble.launch_year + offset
                for age in range(row.size):
                    writer.writerow([idx, year, age, _fmt(row[age])])
    return path


def write_seed_ledger(ensemble: EnsembleForecast, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trajectory", "seed", "clamp_events", "nonpositive_events", "overunit_events"]
        )
        for idx, traj in enumerate(ensemble.trajectories):
            writer.writerow(
                [idx, traj.seed, traj.clamp_events, traj.nonpositive_events, traj.overunit_events]
            )
    return path


def write_stats(stats: dict, path) -> Path:
    """Per-year per-age ensemble mean and standard deviation."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "age", "mean", "std"])
        for year in sorted(stats):
            mean, std = stats[year]
            for age in range(mean.size):
                writer.writerow([year, age, _fmt(mean[age]), _fmt(std[age])])
    return path


def write_ci(cis: dict, path, observed_by_year: dict | None = None) -> Path:
    """Interval endpoints per (year, level, age), with observed flags when known."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "age", "level", "lo", "hi", "observed", "inside"])
        for (year, level) in sorted(cis):
            lo, hi = cis[(year, level)]
            observed = None
            if observed_by_year is not None and year in observed_by_year:
                observed = np.asarray(observed_by_year[year], dtype=float)
            for age in range(lo.size):
                if observed is None:
                    obs_s, inside = "", ""
                else:
                    obs = observed[age]
                    obs_s = _fmt(obs)
                    inside = int(lo[age] <= obs <= hi[age])
                writer.writerow(
                    [year, age, repr(float(level)), _fmt(lo[age]), _fmt(hi[age]), obs_s, inside]
                )
    return path


def write_indicators(report: IndicatorReport, path) -> Path:
    """Flat indicator grid: year, indicator name, level or power, value."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "indicator", "level_or_power", "value"])
        for year in report.years:
            writer.writerow([year, "I_MqD", "", _fmt(report.mqd[year])])
            writer.writerow([year, "I_MRqD", "", _fmt(report.mrqd[year])])
            for level in report.ci_levels:
                writer.writerow(
                    [year, "I_c", repr(float(level)), report.counts[(year, level)]]
                )
            for power in report.powers:
                value = report.central[(year, power)]
                writer.writerow(
                    [year, "I_CT", power, "" if value is None else _fmt(value)]
                )
    return path


def write_equilibrium(report: EquilibriumReport, txt_path, ubar_path) -> Path:
    """Key-value summary plus the fixed-point vector as its own CSV."""
    txt_path = Path(txt_path)
    lines = {
        "M1": _fmt(report.M1),
        "delta_h": _fmt(report.delta_h),
        "cond_fixed_ok": str(bool(report.cond_fixed_ok.all())),
        "cond_m1_ok": str(report.cond_m1_ok),
        "cond_h_ok": str(report.cond_h_ok),
        "residual_norm": "" if report.residual_norm is None else _fmt(report.residual_norm),
        "lambda_star": "" if report.lambda_star is None else _fmt(report.lambda_star),
        "L_at_lambda_star": ""
        if report.L_at_lambda_star is None
        else _fmt(report.L_at_lambda_star),
        "theoretical_bound": ""
        if report.theoretical_bound is None
        else _fmt(report.theoretical_bound),
        "empirical_time_average": ""
        if report.empirical_time_average is None
        else _fmt(report.empirical_time_average),
    }
    write_metadata(txt_path, lines)
    ubar_path = Path(ubar_path)
    with ubar_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "u_bar"])
        if report.u_bar is not None:
            for age, value in enumerate(report.u_bar):
                writer.writerow([age, _fmt(value)])
    return txt_path


def write_metadata(path, mapping: dict) -> Path:
    """Plain `key = value` text, one pair per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")
    return path
