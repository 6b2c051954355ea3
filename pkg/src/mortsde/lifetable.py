"""Life-table loading, validation, slicing, and exterior boundary rates.

A life table is a rectangular grid of observed death probabilities
``q[age, year]`` with ages contiguous from 0 up to the modeled maximum age
(the actuarial infinity, 100 for real data) and calendar years contiguous.
Ages outside the grid are served by a :class:`BoundaryRule`: a constant
rate above the maximum age and a fixed linear combination of the age-0 and
age-1 rates below age 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyValidation,
    GridError,
    InputError,
    MissingData,
    NotExterior,
    OutOfRange,
)


@dataclass(frozen=True)
class LifeTable:
    """Observed death probabilities on an (age x year) grid.

    ``q`` has shape ``(len(ages), len(years))``; every entry lies in the
    open interval (0, 1). The table is immutable after construction and
    safe to share across threads.
    """

    ages: np.ndarray
    years: np.ndarray
    q: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=int)
        years = np.asarray(self.years, dtype=int)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "q", q)
        if ages.ndim != 1 or years.ndim != 1:
            raise GridError("ages and years must be one-dimensional")
        if ages.size == 0 or years.size == 0:
            raise GridError("empty age or year axis")
        if ages[0] != 0 or np.any(np.diff(ages) != 1):
            raise GridError("ages must be contiguous integers starting at 0")
        if np.any(np.diff(years) != 1):
            raise GridError("years must be contiguous integers")
        if q.shape != (ages.size, years.size):
            raise GridError(
                f"q has shape {q.shape}, expected {(ages.size, years.size)}"
            )
        if not np.all(np.isfinite(q)):
            raise OutOfRange("q contains non-finite values")
        if np.any(q <= 0.0) or np.any(q >= 1.0):
            bad = np.argwhere((q <= 0.0) | (q >= 1.0))[0]
            raise OutOfRange(
                f"q={q[bad[0], bad[1]]!r} at age={ages[bad[0]]}, "
                f"year={years[bad[1]]} is outside (0, 1)"
            )

    @property
    def max_age(self) -> int:
        """Top modeled age (actuarial infinity of this table)."""
        return int(self.ages[-1])

    @property
    def n_ages(self) -> int:
        return int(self.ages.size)

    def year_index(self, year: int) -> int:
        if not self.years[0] <= year <= self.years[-1]:
            raise InputError(
                f"year {year} outside table range "
                f"{self.years[0]}..{self.years[-1]}"
            )
        return int(year - self.years[0])

    def column(self, year: int) -> np.ndarray:
        """Age profile q[:, year] for one calendar year."""
        return self.q[:, self.year_index(year)]

    def value(self, age: int, year: int) -> float:
        if not 0 <= age <= self.max_age:
            raise InputError(f"age {age} outside table range 0..{self.max_age}")
        return float(self.q[age, self.year_index(year)])

    def history_segment(self, last_year: int, depth: int) -> np.ndarray:
        """The ``depth + 1`` most recent year columns ending at ``last_year``.

        Returns shape ``(depth + 1, n_ages)`` in chronological order, so the
        final row is the ``last_year`` profile. This is the initial segment
        the simulator consumes.
        """
        first = last_year - depth
        if first < self.years[0]:
            raise InputError(
                f"history of depth {depth} ending {last_year} starts before "
                f"first table year {self.years[0]}"
            )
        i0 = self.year_index(first)
        i1 = self.year_index(last_year)
        return self.q[:, i0 : i1 + 1].T.copy()


@dataclass(frozen=True)
class BoundaryRule:
    """Exterior death rates for ages outside the modeled range.

    ``above_infinity_rate`` is the constant rate used for every age above
    the table maximum. ``below_zero_weights`` are the coefficients applied
    to the age-0 and age-1 rates of the relevant year for ages below 0.
    """

    above_infinity_rate: float = 0.385
    below_zero_weights: tuple[float, float] = (0.75, 0.25)

    def __post_init__(self):
        r = float(self.above_infinity_rate)
        if not 0.0 < r < 1.0:
            raise InputError(f"above_infinity_rate {r} outside (0, 1)")
        w = tuple(float(x) for x in self.below_zero_weights)
        if len(w) != 2:
            raise InputError("below_zero_weights must be a pair")
        if abs(w[0] + w[1] - 1.0) > 1e-12:
            raise InputError(f"below_zero_weights {w} do not sum to 1")
        object.__setattr__(self, "above_infinity_rate", r)
        object.__setattr__(self, "below_zero_weights", w)

    def below_zero_rate(self, q0: float, q1: float) -> float:
        w0, w1 = self.below_zero_weights
        return w0 * q0 + w1 * q1


@dataclass(frozen=True)
class PeriodSplit:
    """Disjoint adjacent fit/validation year intervals, both inclusive."""

    fit_years: tuple[int, int]
    validation_years: tuple[int, int]

    @property
    def fit_first(self) -> int:
        return self.fit_years[0]

    @property
    def fit_last(self) -> int:
        return self.fit_years[1]

    @property
    def n_fit_years(self) -> int:
        return self.fit_years[1] - self.fit_years[0] + 1


def load_life_table(
    path,
    format: str = "long_csv",
    clip_epsilon: float | None = None,
    source_id: str | None = None,
) -> LifeTable:
    """Read a life table from a long CSV with header ``age,year,qx``.

    One row per grid cell; every (age, year) combination over the full
    rectangle must be present exactly once. Values are validated against
    the open interval (0, 1); with ``clip_epsilon`` set, values are first
    clipped into ``[eps, 1 - eps]`` (for dirty data, off by default).
    """
    if format != "long_csv":
        raise InputError(f"unknown life table format {format!r}")
    path = Path(path)
    if not path.exists():
        raise InputError(f"life table file not found: {path}")

    cells: dict[tuple[int, int], float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:3]] != ["age", "year", "qx"]:
            raise InputError(f"{path}: expected header 'age,year,qx'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                age = int(row[0])
                year = int(row[1])
                value = float(row[2])
            except (ValueError, IndexError) as exc:
                raise InputError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if (age, year) in cells:
                raise GridError(f"{path}:{lineno}: duplicate cell age={age}, year={year}")
            cells[(age, year)] = value

    if not cells:
        raise InputError(f"{path}: no data rows")

    ages = sorted({a for a, _ in cells})
    years = sorted({y for _, y in cells})
    if ages[0] != 0 or ages != list(range(ages[0], ages[-1] + 1)):
        raise GridError(f"{path}: ages {ages[0]}..{ages[-1]} not contiguous from 0")
    if years != list(range(years[0], years[-1] + 1)):
        raise GridError(f"{path}: years not contiguous")

    q = np.empty((len(ages), len(years)))
    for i, age in enumerate(ages):
        for j, year in enumerate(years):
            try:
                value = cells[(age, year)]
            except KeyError:
                raise MissingData(age, year) from None
            q[i, j] = value

    if clip_epsilon is not None:
        eps = float(clip_epsilon)
        if not 0.0 < eps < 0.5:
            raise InputError(f"clip_epsilon {eps} outside (0, 0.5)")
        q = np.clip(q, eps, 1.0 - eps)

    return LifeTable(
        ages=np.array(ages),
        years=np.array(years),
        q=q,
        source_id=source_id if source_id is not None else path.name,
    )


def write_life_table(table: LifeTable, path) -> None:
    """Write the long-CSV form; floats use shortest round-trip formatting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "year", "qx"])
        for i, age in enumerate(table.ages):
            for j, year in enumerate(table.years):
                writer.writerow([int(age), int(year), repr(float(table.q[i, j]))])


def exterior_rate(table: LifeTable, rule: BoundaryRule, age: int, year: int) -> float:
    """Exterior death rate g for an age outside the table's 0..max range.

    Above the maximum age the rate is the rule's constant; below age 0 it
    is the weighted combination of the year's age-0 and age-1 observed
    rates. The year must lie inside the table; beyond the data horizon the
    simulator applies the same rule to its own current values instead.
    """
    if 0 <= age <= table.max_age:
        raise NotExterior(f"age {age} is inside the modeled range 0..{table.max_age}")
    if age > table.max_age:
        return rule.above_infinity_rate
    col = table.column(year)
    if table.n_ages < 2:
        raise InputError("below-zero rule needs ages 0 and 1 in the table")
    return rule.below_zero_rate(float(col[0]), float(col[1]))


def split_periods(table: LifeTable, last_fit_year: int) -> PeriodSplit:
    """Split the year axis into fit = [first, last_fit] and the remainder."""
    first, last = int(table.years[0]), int(table.years[-1])
    if last_fit_year >= last:
        raise EmptyValidation(
            f"last_fit_year {last_fit_year} leaves no validation years "
            f"(table ends {last})"
        )
    if last_fit_year < first:
        raise InputError(f"last_fit_year {last_fit_year} before first table year {first}")
    return PeriodSplit(
        fit_years=(first, int(last_fit_year)),
        validation_years=(int(last_fit_year) + 1, last),
    )


def fit_table(table: LifeTable, split: PeriodSplit) -> LifeTable:
    """Restrict a table to the fit years of a split."""
    i0 = table.year_index(split.fit_years[0])
    i1 = table.year_index(split.fit_years[1])
    return LifeTable(
        ages=table.ages.copy(),
        years=table.years[i0 : i1 + 1].copy(),
        q=table.q[:, i0 : i1 + 1].copy(),
        source_id=table.source_id,
    )
