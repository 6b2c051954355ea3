import numpy as np
import pytest

from mortsde import (
    BoundaryRule,
    LifeTable,
    exterior_rate,
    load_life_table,
    split_periods,
    write_life_table,
)
from mortsde.errors import (
    EmptyValidation,
    GridError,
    InputError,
    MissingData,
    NotExterior,
    OutOfRange,
)

from conftest import make_table, write_long_csv


def test_minimal_single_age_grid(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(
        "age,year,qx\n0,2000,0.01\n0,2001,0.01\n0,2002,0.01\n", encoding="utf-8"
    )
    table = load_life_table(path)
    assert table.q.shape == (1, 3)
    assert table.max_age == 0
    assert list(table.years) == [2000, 2001, 2002]


def test_rejects_out_of_range_value(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["age,year,qx"]
    for age in range(2):
        for year in (2000, 2001):
            rows.append(f"{age},{year},0.1")
    rows[2] = "0,2001,1.2"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    with pytest.raises(OutOfRange):
        load_life_table(path)


def test_missing_cell(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text(
        "age,year,qx\n0,2000,0.1\n0,2001,0.1\n1,2000,0.1\n", encoding="utf-8"
    )
    with pytest.raises(MissingData) as err:
        load_life_table(path)
    assert err.value.age == 1
    assert err.value.year == 2001


def test_non_contiguous_years(tmp_path):
    path = tmp_path / "holes.csv"
    path.write_text(
        "age,year,qx\n0,2000,0.1\n0,2002,0.1\n", encoding="utf-8"
    )
    with pytest.raises(GridError):
        load_life_table(path)


def test_ages_must_start_at_zero():
    with pytest.raises(GridError):
        LifeTable(
            ages=np.array([1, 2]),
            years=np.array([2000]),
            q=np.full((2, 1), 0.1),
        )


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    table = make_table(n_ages=6, n_years=5, rng=rng)
    path = tmp_path / "rt.csv"
    write_life_table(table, path)
    back = load_life_table(path)
    assert np.array_equal(back.q, table.q)
    assert np.array_equal(back.ages, table.ages)
    assert np.array_equal(back.years, table.years)


def test_clip_epsilon_repairs_dirty_values(tmp_path):
    path = tmp_path / "dirty.csv"
    path.write_text(
        "age,year,qx\n0,2000,0.5\n0,2001,0.99999999999\n", encoding="utf-8"
    )
    table = load_life_table(path, clip_epsilon=1e-3)
    assert table.q.max() <= 1.0 - 1e-3


def test_exterior_above_is_constant_in_year():
    table = make_table(n_ages=3, n_years=3)
    rule = BoundaryRule()
    values = {exterior_rate(table, rule, 105, int(y)) for y in table.years}
    assert values == {0.385}
    assert exterior_rate(table, rule, 101, 2000) == 0.385


def test_exterior_below_hand_value():
    q = np.tile(np.array([[0.004], [0.0004]]), (1, 2))
    table = LifeTable(ages=np.arange(2), years=np.array([2000, 2001]), q=q)
    rule = BoundaryRule()
    got = exterior_rate(table, rule, -3, 2000)
    assert got == pytest.approx(0.0031, abs=1e-15)


def test_exterior_below_is_linear_in_q0_q1():
    rng = np.random.default_rng(11)
    rule = BoundaryRule(below_zero_weights=(0.6, 0.4))
    for _ in range(10):
        q0, q1 = rng.uniform(0.001, 0.5, size=2)
        q = np.array([[q0], [q1], [0.1]])
        table = LifeTable(ages=np.arange(3), years=np.array([1990]), q=q)
        assert exterior_rate(table, rule, -1, 1990) == pytest.approx(
            0.6 * q0 + 0.4 * q1, rel=1e-14
        )


def test_interior_age_rejected():
    table = make_table(n_ages=5)
    with pytest.raises(NotExterior):
        exterior_rate(table, BoundaryRule(), 2, 2000)


def test_boundary_rule_validation():
    with pytest.raises(InputError):
        BoundaryRule(above_infinity_rate=1.5)
    with pytest.raises(InputError):
        BoundaryRule(below_zero_weights=(0.5, 0.3))


def test_split_paper_layout():
    table = make_table(n_ages=2, first_year=1908, n_years=116, fill=0.1)
    split = split_periods(table, 2018)
    assert split.fit_years == (1908, 2018)
    assert split.validation_years == (2019, 2023)
    assert split.n_fit_years == 111


def test_split_toy_and_empty():
    table = make_table(n_ages=2, first_year=2000, n_years=3, fill=0.1)
    split = split_periods(table, 2001)
    assert split.fit_years == (2000, 2001)
    assert split.validation_years == (2002, 2002)
    with pytest.raises(EmptyValidation):
        split_periods(table, 2002)


def test_split_partitions_year_axis():
    table = make_table(n_ages=2, first_year=1990, n_years=10, fill=0.05)
    for last_fit in range(1990, 1999):
        split = split_periods(table, last_fit)
        fit = set(range(split.fit_years[0], split.fit_years[1] + 1))
        val = set(range(split.validation_years[0], split.validation_years[1] + 1))
        assert fit | val == set(int(y) for y in table.years)
        assert not fit & val


def test_history_segment_order():
    rng = np.random.default_rng(3)
    table = make_table(n_ages=3, first_year=2000, n_years=5, rng=rng)
    seg = table.history_segment(2004, 2)
    assert seg.shape == (3, 3)
    assert np.array_equal(seg[-1], table.column(2004))
    assert np.array_equal(seg[0], table.column(2002))
    with pytest.raises(InputError):
        table.history_segment(2004, 10)
