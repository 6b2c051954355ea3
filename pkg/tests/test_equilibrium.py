"""Fixed point, stability conditions, decay rate, and both bounds."""

import math

import numpy as np
import pytest

from mortsde import (
    DelayProfile,
    EnsembleForecast,
    KernelConfig,
    KernelWeights,
    NoiseSpec,
    SimConfig,
    Trajectory,
    analyze,
    build_kernel,
    check_conditions,
    compute_M1,
    compute_delta,
    empirical_time_average,
    find_lambda_star,
    solve_fixed_point,
    theoretical_bound,
)
from mortsde.equilibrium import interior_row_masses
from mortsde.errors import (
    BoundUnavailable,
    HypothesisViolated,
    NotDiagonallyDominant,
    ShortHorizon,
)

from conftest import random_desk_kernel


def uniform_kernel(n_ages, interior_w, n_below=1, n_above=1):
    """Rows with a flat interior weight; remainder split over exterior cols."""
    n_ext = n_below + n_above
    ext_w = (1.0 - n_ages * interior_w) / n_ext
    sources = np.arange(-n_below, n_ages + n_above)
    weights = np.full((n_ages, sources.size), ext_w)
    weights[:, n_below : n_below + n_ages] = interior_w
    cfg = KernelConfig(
        bandwidth=1.0, lower_extension=n_below, upper_extension=n_ages - 1 + n_above
    )
    return KernelWeights(
        interior_ages=np.arange(n_ages),
        source_ages=sources,
        weights=weights,
        config=cfg,
    )


def flat_profile(h=2):
    return DelayProfile.from_parameters(h=h, beta=0.0, lam=1.0)


def manual_ensemble(values_list, history, tau=1.0, horizon=None):
    horizon = horizon or values_list[0].shape[0] - 1
    cfg = SimConfig(
        time_step_tau=tau, horizon_years=horizon, n_trajectories=len(values_list)
    )
    trajs = [Trajectory(values=v, seed=i, clamp_events=0) for i, v in enumerate(values_list)]
    return EnsembleForecast(
        trajectories=trajs, noise=NoiseSpec(kind="none"), config=cfg, history=history
    )


# --- drift mass and margins ---


def test_m1_is_one_for_flat_alpha():
    assert compute_M1(flat_profile(4)) == pytest.approx(1.0, abs=1e-12)


def test_m1_atom_delay_scales_alpha():
    profile = DelayProfile.from_parameters(
        h=5, beta=-0.002, lam=1.0, fstar=(0, 0, 0, 0, 0, 1.0)
    )
    assert compute_M1(profile) == pytest.approx(0.99, abs=1e-15)


def test_row_masses_complement_exterior(desk_kernel):
    rng = np.random.default_rng(21)
    for kernel in [desk_kernel] + [random_desk_kernel(rng) for _ in range(5)]:
        total = interior_row_masses(kernel) + kernel.exterior_mass()
        np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_delta_hand_value():
    kernel = uniform_kernel(5, 0.18)
    assert compute_delta(kernel, 1.0, 0.1) == pytest.approx(0.09, abs=1e-15)


def test_delta_decreases_with_noise(desk_kernel):
    assert compute_delta(desk_kernel, 1.0, 0.2) < compute_delta(desk_kernel, 1.0, 0.1)


# --- fixed point ---


def test_fixed_point_zero_mass_is_zero(desk_kernel):
    u, residual = solve_fixed_point(desk_kernel, 0.0, 0.4)
    np.testing.assert_array_equal(u, np.zeros(5))
    assert residual == 0.0


def test_fixed_point_scalar_hand_value():
    # two equally weighted sources, one interior: u = M1*(u + g)/2
    kernel = build_kernel(0, KernelConfig(bandwidth=1e9, lower_extension=0, upper_extension=1))
    u, residual = solve_fixed_point(kernel, 1.0, 0.4)
    assert u[0] == pytest.approx(0.4, abs=1e-9)
    assert residual < 1e-15


def test_fixed_point_linearity_and_monotonicity(desk_kernel):
    u1, _ = solve_fixed_point(desk_kernel, 0.99, 0.4)
    u2, _ = solve_fixed_point(desk_kernel, 0.99, 0.8)
    np.testing.assert_allclose(u2, 2.0 * u1, rtol=1e-12)
    assert np.all(u2 > u1)


def test_fixed_point_vector_exterior_matches_scalar(desk_kernel):
    n_ext = desk_kernel.source_ages.size - desk_kernel.n_interior
    u_s, _ = solve_fixed_point(desk_kernel, 0.99, 0.385)
    u_v, _ = solve_fixed_point(desk_kernel, 0.99, np.full(n_ext, 0.385))
    np.testing.assert_array_equal(u_s, u_v)
    with pytest.raises(HypothesisViolated):
        solve_fixed_point(desk_kernel, 0.99, np.full(n_ext + 1, 0.385))


def test_fixed_point_rejects_saturated_rows():
    kernel = build_kernel(0, KernelConfig(bandwidth=1.0, lower_extension=0, upper_extension=0))
    with pytest.raises(NotDiagonallyDominant):
        solve_fixed_point(kernel, 1.0, 0.4)


def test_fixed_point_random_systems_solve_cleanly():
    rng = np.random.default_rng(44)
    for _ in range(10):
        kernel = random_desk_kernel(rng)
        M1 = float(rng.uniform(0.9, 1.0))
        g = float(rng.uniform(0.05, 0.6))
        u, residual = solve_fixed_point(kernel, M1, g)
        assert residual < 1e-10
        assert np.all(u >= 0.0)


# --- conditions ---


def test_conditions_hand_threshold():
    kernel = uniform_kernel(5, 0.0195)
    profile = flat_profile()
    # delta = 1 - 0.0025 - 0.0975 = 0.9; rhs = log(0.9975/0.0975)/1.995
    rhs = math.log(0.9975 / 0.0975) / (2.0 * 0.9975)
    assert rhs == pytest.approx(1.16559, abs=5e-5)
    assert check_conditions(kernel, profile, 0.05, 0.5) == (True, True)
    assert check_conditions(kernel, profile, 0.05, 1.2) == (True, False)


def test_conditions_fail_when_margin_negative():
    kernel = uniform_kernel(5, 0.24)  # interior mass 1.2
    cond_m1, cond_h = check_conditions(kernel, flat_profile(), 0.1, 1.0)
    assert cond_m1 is False
    assert cond_h is False


def test_conditions_reject_unit_noise(desk_kernel):
    with pytest.raises(HypothesisViolated):
        check_conditions(desk_kernel, flat_profile(), 1.0, 1.0)


# --- decay rate ---


def test_lambda_star_h_zero_closed_form():
    # L is constant in lambda, so the supremum sits at the right endpoint
    lam, L = find_lambda_star(0.9, 0.05, 0.0)
    assert lam == pytest.approx(2.0 * (1.0 - 0.0025), abs=1e-12)
    assert L == pytest.approx(2.0 * (1.0 - 0.9 - 0.0025), abs=1e-12)


def test_lambda_star_interior_max_closed_form():
    # phi' = 1 - c*h*exp(lambda*h) = 0 at lambda = -log(c*h)/h
    delta, b, h = 0.9, 0.1, 2.0
    c = 2.0 * (1.0 - delta - b * b)
    lam, L = find_lambda_star(delta, b, h)
    want = -math.log(c * h) / h
    # the objective is flat at the max, so lambda localizes only to ~sqrt(eps)
    assert lam == pytest.approx(want, abs=1e-7)
    assert L == pytest.approx(c * math.exp(lam * h), rel=1e-12)
    assert lam - L > 0.0


def test_lambda_star_beats_grid_scan():
    delta, b, h = 0.9, 0.1, 2.0
    c = 2.0 * (1.0 - delta - b * b)
    lam, L = find_lambda_star(delta, b, h)
    grid = np.linspace(0.0, 2.0 * (1.0 - b * b), 100_001)
    phi = grid - c * np.exp(grid * h)
    assert lam - L >= phi.max() - 1e-9


def test_lambda_star_infeasible_raises():
    with pytest.raises(BoundUnavailable):
        find_lambda_star(0.05, 0.1, 2.0)


def test_lambda_star_rejects_bad_inputs():
    with pytest.raises(HypothesisViolated):
        find_lambda_star(0.5, 1.0, 1.0)
    with pytest.raises(HypothesisViolated):
        find_lambda_star(1.5, 0.1, 1.0)


# --- theoretical bound ---


def test_bound_hand_value():
    got = theoretical_bound(np.array([0.2]), 0.1, 0.6, 0.1)
    assert got == pytest.approx(2.0 * 0.01 * 0.04 / 0.5, rel=1e-15)


def test_bound_zero_noise_is_zero():
    assert theoretical_bound(np.array([0.3, 0.4]), 0.0, 1.0, 0.2) == 0.0


def test_bound_requires_positive_margin():
    with pytest.raises(BoundUnavailable):
        theoretical_bound(np.array([0.2]), 0.1, None, None)
    with pytest.raises(BoundUnavailable):
        theoretical_bound(np.array([0.2]), 0.1, 0.5, 0.5)


def test_bound_scales_with_noise_squared():
    u = np.array([0.1, 0.2])
    b1 = theoretical_bound(u, 0.05, 0.8, 0.3)
    b2 = theoretical_bound(u, 0.10, 0.8, 0.3)
    assert b2 == pytest.approx(4.0 * b1, rel=1e-14)


# --- empirical time average ---


def test_empirical_zero_at_equilibrium():
    u_bar = np.array([0.1, 0.2])
    values = np.tile(u_bar, (6, 1))
    history = np.tile(u_bar, (2, 1))
    ens = manual_ensemble([values, values.copy()], history)
    assert empirical_time_average(ens, u_bar, 1, 3.0) == 0.0


def test_empirical_constant_offset_exact():
    u_bar = np.array([0.1, 0.2])
    offset = 0.05
    values = np.tile(u_bar + offset, (6, 1))
    history = np.tile(u_bar + offset, (2, 1))
    ens = manual_ensemble([values], history)
    got = empirical_time_average(ens, u_bar, 1, 3.0)
    assert got == pytest.approx(2.0 * offset * offset, rel=1e-14)


def test_empirical_reads_prelaunch_history():
    u_bar = np.zeros(1)
    values = np.zeros((6, 1))
    history = np.array([[1.0], [0.0]])  # one year before launch deviates
    ens = manual_ensemble([values], history)
    # integrand: [1, 0, 0] on marks 0..2 -> trapezoid 0.5 over T_end = 2
    assert empirical_time_average(ens, u_bar, 1, 2.0) == 0.25


def test_empirical_requires_room_for_delays():
    u_bar = np.zeros(1)
    values = np.zeros((6, 1))
    history = np.zeros((3, 1))
    ens = manual_ensemble([values], history)
    with pytest.raises(ShortHorizon):
        empirical_time_average(ens, u_bar, 2, 4.0)


# --- full chain ---


def test_analyze_desk_system(desk_kernel, desk_profile):
    report = analyze(desk_kernel, desk_profile, 0.05, 0.385)
    assert bool(report.cond_fixed_ok.all())
    assert report.cond_m1_ok and report.cond_h_ok
    assert report.residual_norm < 1e-10
    assert report.delta_h > 0.9
    assert 0.0 < report.lambda_star <= 2.0 * (1.0 - 0.0025)
    want = theoretical_bound(
        report.u_bar, 0.05, report.lambda_star, report.L_at_lambda_star
    )
    assert report.theoretical_bound == want
    assert report.empirical_time_average is None


def test_analyze_saturated_system_reports_nones():
    kernel = uniform_kernel(5, 0.24)
    report = analyze(kernel, flat_profile(), 0.1, 0.4)
    assert not report.cond_fixed_ok.any()
    assert report.u_bar is None
    assert report.residual_norm is None
    assert report.delta_h < 0.0
    assert report.lambda_star is None
    assert report.theoretical_bound is None


def test_analyze_rejects_unit_noise(desk_kernel, desk_profile):
    with pytest.raises(HypothesisViolated):
        analyze(desk_kernel, desk_profile, 1.5, 0.4)


def test_analyze_attaches_empirical_average(desk_kernel, desk_profile, boundary):
    from mortsde import simulate_ensemble

    rng = np.random.default_rng(31)
    history = rng.uniform(0.2, 0.5, size=(3, 5))
    cfg = SimConfig(time_step_tau=0.5, horizon_years=6, n_trajectories=8)
    noise = NoiseSpec(kind="logistic", intensity_b=0.05)
    ens = simulate_ensemble(history, desk_profile, desk_kernel, boundary, noise, cfg)
    report = analyze(desk_kernel, desk_profile, 0.05, 0.385, ensemble=ens)
    assert report.empirical_time_average is not None
    assert report.empirical_time_average >= 0.0
    explicit = analyze(desk_kernel, desk_profile, 0.05, 0.385, ensemble=ens, T_end=2.0)
    assert explicit.empirical_time_average == empirical_time_average(
        ens, report.u_bar, 2, 2.0
    )
