import math

import numpy as np
import pytest

import kirchhoff4 as k4
from kirchhoff4.energy import FiberMap
from kirchhoff4.model import KirchhoffSpec
from kirchhoff4.nehari import ProjectionError, _Functional

from conftest import unit_profile


# ---------------------------------------------------------------------------
# scalar projection oracles
# ---------------------------------------------------------------------------


def test_projection_quartic_oracle():
    # synthetic moments: affine(1,1) Kirchhoff, unit norm, unit 6th moment;
    # the scale solves t^4 - t^2 - 1 = 0, the square root of the golden ratio
    fiber = FiberMap(KirchhoffSpec.affine(1.0, 1.0), 1.0, ((6.0, 1.0),))
    root = k4.project_scale(fiber)
    assert abs(root - math.sqrt((1.0 + math.sqrt(5.0)) / 2.0)) < 1e-9
    assert abs(root - 1.2720196) < 1e-7


def test_projection_pure_power_closed_form():
    for g0, s, moment, p in ((2.0, 3.0, 5.0, 6.0), (1.0, 1.0, 2.0, 5.0), (0.7, 10.0, 0.3, 4.5)):
        fiber = FiberMap(KirchhoffSpec.affine(g0, 0.0), s, ((p, moment),))
        assert abs(k4.project_scale(fiber) - (g0 * s / moment) ** (1.0 / (p - 2.0))) < 1e-10


def test_projection_scaling_law(spectral64, params_cp2):
    u = k4.random_clamped_profile(spectral64, np.random.default_rng(101))
    base = k4.project(u, params_cp2)
    for lam in (0.5, 2.0, 10.0):
        pt = k4.project(u.scaled(lam), params_cp2)
        assert abs(pt.t_u * lam - base.t_u) < 1e-9 * (1 + base.t_u)
        assert np.abs(pt.projected.values - base.projected.values).max() < 1e-9


def test_projection_rejects_zero(spectral64, params_cp2):
    with pytest.raises(ProjectionError):
        k4.project(k4.RadialFunction(spectral64, np.zeros(64)), params_cp2)


def test_projection_overflow_diagnostic(spectral64, params_cp2):
    # nodal values so large that even the weighted norm overflows
    u = k4.random_clamped_profile(spectral64, np.random.default_rng(5))
    huge = u.scaled(1e160 / np.abs(u.values).max())
    with pytest.raises(ProjectionError):
        k4.project(huge, params_cp2)


def test_projection_point_invariants(spectral64, params_cp2):
    for k in range(25):
        u = unit_profile(spectral64, 0.5, [61, k])
        pt = k4.project(u, params_cp2)
        s = k4.w_norm(pt.projected, 0.5) ** 2
        fiber = FiberMap.full(u, params_cp2)
        granularity = 4 * np.finfo(float).eps * pt.t_u * (
            abs(pt.t_u * fiber.deriv2(pt.t_u) + fiber.deriv(pt.t_u)) + 1.0
        )
        assert abs(pt.residual) <= max(1e-10 * (1 + s), granularity), k
        coer = (0.25 - 1.0 / params_cp2.q) * params_cp2.kirchhoff.g0
        assert pt.energy >= coer * s - 1e-9


def test_projection_residual_scale_of_minimizer(ground_default):
    # at the solver's own minimizer the stated tolerance holds as printed
    gs = ground_default
    assert abs(gs.residual) <= 1e-10 * (1 + gs.minimizer_norm**2)


def test_reprojection_of_nehari_point(spectral64, params_cp2):
    u = unit_profile(spectral64, 0.5, 17)
    pt = k4.project(u, params_cp2)
    again = k4.project(pt.projected, params_cp2)
    assert abs(again.t_u - 1.0) < 1e-9


def test_t_leq_one(spectral64, params_cp2):
    u = unit_profile(spectral64, 0.5, 18)
    pt = k4.project(u, params_cp2)
    doubled = pt.projected.scaled(2.0)
    assert k4.nehari_residual(doubled, params_cp2) < 0.0
    assert k4.t_leq_one_check(doubled, params_cp2)
    t2 = k4.project(doubled, params_cp2).t_u
    assert abs(t2 - 0.5) < 1e-9


def test_t_leq_one_precondition(spectral64, params_cp2):
    u = unit_profile(spectral64, 0.5, 19)
    pt = k4.project(u, params_cp2)
    shrunk = pt.projected.scaled(0.5)  # residual > 0 here
    with pytest.raises(ValueError):
        k4.t_leq_one_check(shrunk, params_cp2)


def test_t_leq_one_randomized(spectral64, params_cp2):
    guard = params_cp2.nonlinearity.guard_scale()
    for k in range(100):
        u = unit_profile(spectral64, 0.5, [71, k])
        pt = k4.project(u, params_cp2)
        factor = min(1.0 + 3.0 * (k % 5 + 1) / 5.0, 0.9 * guard / np.abs(pt.projected.values).max())
        beyond = pt.projected.scaled(factor)
        if k4.nehari_residual(beyond, params_cp2) <= 0.0:
            assert k4.t_leq_one_check(beyond, params_cp2), k


# ---------------------------------------------------------------------------
# ground states
# ---------------------------------------------------------------------------


def test_ground_state_default_quality(ground_default):
    gs = ground_default
    assert gs.converged
    assert gs.m > 0.0
    assert gs.gradient_norm <= 1e-6 * (1 + gs.minimizer_norm)
    assert abs(gs.residual) <= 1e-10 * (1 + gs.minimizer_norm**2)
    assert gs.m <= min(gs.per_start_energies) + 1e-12 * (1 + abs(gs.m))


def test_ground_state_energy_traces_monotone(spectral32, params_cp2):
    cfg = k4.SearchConfig(starts=3, max_iter=120, tol=1e-6, seed=3)
    gs = k4.ground_state(spectral32, params_cp2, cfg)
    for rec in gs.per_start:
        trace = np.array(rec.trace)
        slack = 1e-13 * (1.0 + np.abs(trace[:-1]))
        assert np.all(np.diff(trace) <= slack), rec.index


def test_ground_state_coercivity(ground_default, resolved_default):
    params, _, _ = resolved_default
    gs = ground_default
    assert gs.coercivity_margin >= -1e-9
    level = (0.25 - 1.0 / params.q) * params.kirchhoff.g0 * gs.min_nehari_norm**2
    assert gs.m >= level - 1e-9 * (1 + abs(gs.m))
    assert gs.min_nehari_norm > 0.0


def test_ground_state_deterministic(spectral32, params_cp2):
    cfg = k4.SearchConfig(starts=2, max_iter=60, tol=1e-6, seed=9)
    a = k4.ground_state(spectral32, params_cp2, cfg)
    b = k4.ground_state(spectral32, params_cp2, cfg)
    assert a.m == b.m
    assert np.array_equal(a.minimizer.values, b.minimizer.values)


def test_ground_state_concrete_cp_converges(spectral64, params_cp2, search_default):
    gs = k4.ground_state(spectral64, params_cp2, search_default)
    assert gs.converged
    assert gs.gradient_norm <= 1e-6 * (1 + gs.minimizer_norm)
    assert gs.m > 0


# ---------------------------------------------------------------------------
# auxiliary problem
# ---------------------------------------------------------------------------


def test_aux_rejects_small_p(spectral32, search_default):
    params = k4.ModelParams.create(0.5, 5.0, 6.0, 2.0, 1.0, 0.1, KirchhoffSpec.affine(1, 1))
    bad = k4.ModelParams(
        beta=0.5, q=3.0, p=4.0, delta=0.1,
        kirchhoff=params.kirchhoff,
        nonlinearity=params.nonlinearity,
    )
    with pytest.raises(ValueError):
        k4.aux_ground_state(spectral32, bad, search_default)


def test_aux_result_invariants(resolved_default, params_cp2):
    _, aux, _ = resolved_default
    p, q = params_cp2.p, params_cp2.q
    assert aux.m_p > 0.0
    assert aux.p_norm_p <= p * q / (p - q) * aux.m_p + 1e-8
    assert aux.m_p >= (0.25 - 1.0 / p) * aux.p_norm_p - 1e-8
    assert aux.converged


def test_aux_projected_energy_closed_form(spectral64, search_default):
    # constant Kirchhoff: for each direction the projected level is
    # (1/2 - 1/p) g0^(p/(p-2)) |u|_p^(-2p/(p-2)) at unit weighted norm
    params = k4.ModelParams.create(0.5, 5.0, 6.0, 2.0, 1.0, 0.1, KirchhoffSpec.affine(2.0, 0.0))
    func = _Functional(spectral64, params, pure_power=True)
    p = params.p
    for k in range(10):
        u = unit_profile(spectral64, 0.5, [81, k])
        t = k4.project_scale(func.fiber(u))
        level = func.value(t * u.values)
        pnorm = k4.lebesgue_norm(u, p)
        expect = (0.5 - 1.0 / p) * 2.0 ** (p / (p - 2.0)) * pnorm ** (-2.0 * p / (p - 2.0))
        assert abs(level - expect) <= 1e-9 * (1 + abs(expect)), k


def test_aux_grid_agreement(params_cp2, search_default, resolved_default, fd400):
    _, aux64, _ = resolved_default
    aux_fd = k4.aux_ground_state(fd400, params_cp2, search_default)
    assert abs(aux_fd.m_p - aux64.m_p) <= 2e-4 * aux64.m_p


# ---------------------------------------------------------------------------
# level bounds
# ---------------------------------------------------------------------------


def test_power_envelope_max_oracle():
    assert abs(k4.power_envelope_max(1.0, 2.0, 6.0) - 2.0 / 3.0) < 1e-15
    # generic case against a dense scan
    a, c, p = 0.7, 3.1, 5.0
    xs = np.linspace(1e-4, 5.0, 400001)
    scan = np.max(a * xs**2 - c * xs**p / p)
    assert abs(k4.power_envelope_max(a, c, p) - scan) < 1e-8


def test_closed_form_cap_value(resolved_default):
    params, aux, _ = resolved_default
    rep = k4.level_bounds(1.0, aux, params)
    expect = (1.0 / 20.0) * (k4.adams_constant(0.5) / 2.2) ** 0.5
    assert abs(rep.level_cap_closed_form - expect) < 1e-12 * expect
    assert abs(expect - 2.6617) < 1e-3


def test_bounds_chain(resolved_default, ground_default):
    params, aux, _ = resolved_default
    rep = k4.level_bounds(ground_default.m, aux, params)
    assert rep.aux_pnorm_ok
    assert rep.cp_above_threshold
    assert rep.level_below_aux_cap
    assert rep.level_below_closed_form
    assert rep.all_passed
    # chain consistency: the p-norm cap implies the auxiliary-level cap
    assert rep.level_cap_from_pnorm <= rep.level_cap_from_aux + 1e-8 * (1 + rep.level_cap_from_aux)
    # both variants of the cap coefficient are reported, derived > stated
    assert rep.tau_cap > rep.tau_threshold


def test_min_admissible_cp_limits(resolved_default):
    params, aux, _ = resolved_default
    import dataclasses

    tiny = dataclasses.replace(aux, m_p=1e-300, p_norm_p=1e-300)
    assert k4.min_admissible_cp(tiny, params) == 1.0
    base = k4.min_admissible_cp(aux, params)
    doubled = dataclasses.replace(aux, m_p=2 * aux.m_p)
    assert k4.min_admissible_cp(doubled, params) >= base


def test_resolved_cp_exceeds_threshold(resolved_default):
    params, aux, threshold = resolved_default
    assert params.cp > threshold
    assert params.cp > k4.min_admissible_cp(aux, params)


def test_solver_log_type_kirchhoff(spectral32):
    params = k4.ModelParams.create(0.5, 5.0, 6.0, 2.0, 1.0, 0.1, KirchhoffSpec.log_type())
    cfg = k4.SearchConfig(starts=2, max_iter=150, tol=1e-6, seed=2)
    gs = k4.ground_state(spectral32, params, cfg)
    assert gs.m > 0
    assert gs.converged
    assert abs(gs.residual) <= 1e-10 * (1 + gs.minimizer_norm**2)


def test_solver_other_beta(spectral32):
    # beta = 0.3: growth exponent 2/(1-beta) is not an integer
    params = k4.ModelParams.create(0.3, 4.6, 6.2, 2.0, 0.8, 0.2, KirchhoffSpec.affine(1.5, 0.5))
    assert params.validate() == []
    assert abs(params.gamma - 2.0 / 0.7) < 1e-15
    cfg = k4.SearchConfig(starts=2, max_iter=150, tol=1e-6, seed=4)
    gs = k4.ground_state(spectral32, params, cfg)
    assert gs.m > 0
    assert gs.converged
    u = unit_profile(spectral32, params.beta, 22)
    pt = k4.project(u, params)
    assert pt.t_u > 0
    assert k4.fibering(u, pt.t_u, params) >= k4.fibering(u, 0.9 * pt.t_u, params)


def test_projection_unique_sign_change(spectral64, resolved_default):
    params, _, _ = resolved_default
    for k in range(25):
        u = unit_profile(spectral64, 0.5, [91, k])
        fiber = FiberMap.full(u, params)
        t_u = k4.project_scale(fiber)
        ts = np.geomspace(1e-6 * t_u, 1e3 * t_u, 500)
        signs = np.sign([fiber.deriv(t, saturate=True) for t in ts])
        signs = signs[signs != 0]
        assert int(np.sum(signs[1:] != signs[:-1])) == 1, k
