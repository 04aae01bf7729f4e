import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, strategies as st

import matchentropy as me
from matchentropy.errors import CflError, ConvergenceError, ValidationError
from matchentropy.grid import second_difference_interior

FLOOR = me.CONTROL_FLOOR


def brute_force_hamiltonian(q, cap_d, n_pts=1_000_000):
    """Independent minimisation of -a*q - log a - 1 on a dense uniform a-grid."""
    a = np.linspace(FLOOR, cap_d, n_pts)
    vals = -a * q - np.log(a) - 1.0
    i = int(np.argmin(vals))
    return float(vals[i]), float(a[i])


def test_hamiltonian_reference_points():
    v, a = me.hamiltonian_capped(-1.0, 10.0)
    assert v == pytest.approx(0.0, abs=1e-15)
    assert a == pytest.approx(1.0, abs=1e-15)

    v, a = me.hamiltonian_capped(-math.e, 10.0)
    assert a == pytest.approx(FLOOR, abs=1e-15)
    assert v == pytest.approx(1.0, abs=1e-12)  # clamp activates exactly at the floor

    v, a = me.hamiltonian_capped(0.5, 10.0)
    assert a == 10.0
    assert v == pytest.approx(-5.0 - math.log(10.0) - 1.0, abs=1e-12)
    bv, ba = brute_force_hamiltonian(0.5, 10.0)
    assert v == pytest.approx(bv, abs=1e-9) and ba == pytest.approx(10.0, abs=1e-4)


def test_hamiltonian_unconstrained_branch_equals_log():
    for q in (-0.5, -1.0, -2.0, -2.5):
        v, a = me.hamiltonian_capped(q, 10.0)
        assert a == pytest.approx(-1.0 / q, rel=1e-15)
        assert v == pytest.approx(math.log(-q), abs=1e-14)


def test_hamiltonian_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        me.hamiltonian_capped(float("nan"), 10.0)
    with pytest.raises(ValidationError):
        me.hamiltonian_capped(float("inf"), 10.0)
    with pytest.raises(ValidationError):
        me.hamiltonian_capped(-1.0, 0.3)  # below 1/e


def test_hamiltonian_against_brute_force_grid():
    cap = 10.0
    n_pts = 1_000_000
    da = (cap - FLOOR) / (n_pts - 1)
    rng = np.random.default_rng(42)
    qs = rng.uniform(-100.0, 1.0, size=1000)
    a_grid = np.linspace(FLOOR, cap, n_pts)
    log_a = np.log(a_grid)
    for q in qs:
        vals = -a_grid * q - log_a - 1.0
        i = int(np.argmin(vals))
        v, a = me.hamiltonian_capped(float(q), cap)
        assert abs(a - a_grid[i]) <= da * 1.0001
        # the grid minimum can only exceed the true minimum, by at most the
        # curvature (<= e^2) times the squared grid spacing
        assert -1e-12 <= vals[i] - v <= 0.5 * math.e ** 2 * da * da + 1e-12


@given(q=st.floats(-50.0, 5.0, allow_nan=False), cap=st.floats(0.5, 100.0))
def test_hamiltonian_minimiser_satisfies_first_order_conditions(q, cap):
    v, a = me.hamiltonian_capped(q, cap)
    assert FLOOR - 1e-15 <= a <= cap + 1e-15
    grad = -q - 1.0 / a  # derivative of the objective in a
    if FLOOR + 1e-9 < a < cap - 1e-9:
        assert abs(grad) <= 1e-9 * max(1.0, abs(q))
    elif a <= FLOOR + 1e-9:
        assert grad >= -1e-9
    else:
        assert grad <= 1e-9 * max(1.0, abs(q))


@given(q=st.floats(-50.0, 5.0, allow_nan=False),
       cap_lo=st.floats(0.5, 20.0), cap_hi=st.floats(0.5, 20.0))
def test_hamiltonian_value_monotone_in_cap(q, cap_lo, cap_hi):
    lo, hi = sorted((cap_lo, cap_hi))
    v_lo, _ = me.hamiltonian_capped(q, lo)
    v_hi, _ = me.hamiltonian_capped(q, hi)
    assert v_hi <= v_lo + 1e-12  # minimising over a larger set can only help


def test_transition_probability_arithmetic():
    assert me.transition_probability(0.05, 0.001, 0.01) == pytest.approx(0.25, abs=1e-15)


def test_explicit_step_zero_row_cap_e():
    g = me.make_grid(10, 300, 1.0)
    cfg = me.SchemeConfig(cap_d=math.e, scheme="explicit")
    out = me.explicit_step(np.zeros(11), g, cfg)
    assert out[0] == 0.0 and out[-1] == 0.0
    # with zero diffusion term the maximiser is the cap, giving k(log a + 1)/2 = k
    assert np.allclose(out[1:-1], g.k, rtol=1e-13)


def test_explicit_step_cfl_violation_names_the_numbers():
    g = me.make_grid(100, 100, 1.0)
    cfg = me.SchemeConfig(cap_d=1e6, scheme="explicit")
    with pytest.raises(CflError) as err:
        me.explicit_step(np.zeros(101), g, cfg)
    msg = str(err.value)
    assert "0.01" in msg and "1e+06" in msg and "exceeds 1" in msg


def test_explicit_step_preserves_stationary_bound():
    g = me.make_grid(16, 600, 1.0)
    cfg = me.SchemeConfig(cap_d=2.0, scheme="explicit")
    e_inf = me.stationary_entropy(g.x_nodes())
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = e_inf * rng.uniform(0.0, 1.0, size=e_inf.shape)
        v[0] = v[-1] = 0.0
        out = me.explicit_step(v, g, cfg)
        assert np.all(out <= e_inf + 1e-12)


def test_policy_update_reference_rows():
    g = me.make_grid(10, 10, 1.0)
    cfg = me.SchemeConfig(cap_d=10.0)
    controls = me.policy_update(me.stationary_entropy(g.x_nodes()), g, cfg)
    assert np.allclose(controls[1:-1], 1.0, atol=1e-10)
    controls = me.policy_update(np.zeros(11), g, cfg)
    assert np.all(controls[1:-1] == 10.0)


def test_policy_update_floor_via_brute_force():
    # one node with second difference exactly -4; brute-force the step objective
    g = me.make_grid(2, 2, 1.0)  # h = 1/2 so the middle node sees (0 - 2u + 0)/h^2
    cfg = me.SchemeConfig(cap_d=10.0)
    u = np.array([0.0, 0.5, 0.0])  # (A u)_1 = -2*0.5/0.25 = -4
    controls = me.policy_update(u, g, cfg)
    a_grid = np.linspace(FLOOR, 10.0, 2_000_000)
    objective = a_grid * (-4.0) + np.log(a_grid) + 1.0  # maximised by the scheme
    best = a_grid[int(np.argmax(objective))]
    assert controls[1] == pytest.approx(best, abs=1e-5)
    assert controls[1] == pytest.approx(FLOOR, abs=1e-15)


def test_policy_update_shape_check():
    g = me.make_grid(10, 10, 1.0)
    with pytest.raises(ValidationError):
        me.policy_update(np.zeros(5), g, me.SchemeConfig())


def test_implicit_step_matches_dense_root_find():
    g = me.make_grid(4, 2, 1.0)
    cfg = me.SchemeConfig(cap_d=10.0, policy_tol=1e-13)
    u, iters = me.implicit_step(np.zeros(5), g, cfg)
    assert iters >= 1

    def residual(u_int):
        full = np.concatenate([[0.0], u_int, [0.0]])
        q = second_difference_interior(full, g.h)
        hvals = np.array([me.hamiltonian_capped(float(qq), 10.0)[0] for qq in q])
        return u_int + 0.5 * g.k * hvals

    oracle = scipy.optimize.root(residual, x0=np.full(3, 0.05), method="hybr", tol=1e-14)
    assert oracle.success
    assert np.max(np.abs(u[1:-1] - oracle.x)) <= 1e-10
    assert oracle.x == pytest.approx([0.06912911, 0.09085689, 0.06912911], abs=1e-7)


def test_implicit_step_respects_stationary_bounds():
    g = me.make_grid(32, 32, 1.0)
    cfg = me.SchemeConfig(cap_d=100.0)
    e_inf = me.stationary_entropy(g.x_nodes())
    u, _ = me.implicit_step(e_inf, g, cfg)
    assert np.all(u >= -1e-12)
    assert np.all(u <= e_inf + 1e-12)


def test_implicit_step_non_convergence_raises():
    g = me.make_grid(64, 64, 1.0)
    cfg = me.SchemeConfig(cap_d=1e6, max_policy_iters=1)
    with pytest.raises(ConvergenceError):
        me.implicit_step(me.stationary_entropy(g.x_nodes()) * 0.3, g, cfg)


def test_solve_hjb_boundaries_bounds_symmetry():
    g = me.make_grid(60, 60, 1.0)
    surf = me.solve_hjb(g, me.SchemeConfig(cap_d=1e4))
    v = surf.values
    e_inf = me.stationary_entropy(g.x_nodes())
    assert np.all(v[:, 0] == 0.0) and np.all(v[:, -1] == 0.0)
    assert np.all(v <= e_inf + 1e-10) and np.all(v >= -1e-10)
    assert np.max(np.abs(v - v[:, ::-1])) <= 1e-9
    assert np.max(v) <= 0.125 + 1e-10


def test_solve_hjb_monotone_in_cap():
    g = me.make_grid(50, 50, 1.0)
    v_small = me.solve_hjb(g, me.SchemeConfig(cap_d=5.0)).values
    v_large = me.solve_hjb(g, me.SchemeConfig(cap_d=50.0)).values
    assert np.all(v_large >= v_small - 1e-12)


def test_solve_hjb_regularised_terminal_row():
    g = me.make_grid(20, 10, 1.0)
    surf = me.solve_hjb(g, me.SchemeConfig(cap_d=10.0, terminal_regularisation_n=4))
    assert np.allclose(surf.values[-1], me.stationary_entropy(g.x_nodes()) / 4.0, atol=0.0)


def test_explicit_and_implicit_agree_and_tighten():
    # halving k and h^2 together shrinks the scheme gap by about 2x
    cap = 2.0

    def gap(N, k_scale):
        h2 = (1.0 / N) ** 2
        M = int(round(1.0 / (h2 / cap * k_scale)))
        g = me.make_grid(N, M, 1.0)
        v_e = me.solve_hjb(g, me.SchemeConfig(cap_d=cap, scheme="explicit")).values
        v_i = me.solve_hjb(g, me.SchemeConfig(cap_d=cap, scheme="implicit")).values
        return float(np.max(np.abs(v_e - v_i)))

    coarse = gap(16, 1.0)
    fine = gap(23, 0.98)  # h^2 halves at N=23; k tied to h^2 through the cfl bound
    assert coarse / fine >= 1.8


def test_solve_hjb_explicit_cfl_precheck():
    g = me.make_grid(1000, 1000, 1.0)
    with pytest.raises(CflError):
        me.solve_hjb(g, me.SchemeConfig(cap_d=1e6, scheme="explicit"))


def test_optimal_control_field_values():
    g = me.make_grid(40, 20, 1.0)
    cfg = me.SchemeConfig(cap_d=1e5)
    surf = me.solve_hjb(g, cfg)
    ctrl = me.optimal_control_field(surf, cfg)
    assert np.all(ctrl.a_star[:, 0] == 1.0) and np.all(ctrl.a_star[:, -1] == 1.0)
    assert np.all(ctrl.a_star[-1, 1:-1] == 1e5)  # zero terminal data: cap everywhere
    assert np.allclose(ctrl.sigma_star ** 2, ctrl.a_star, rtol=1e-12)
    assert np.all(ctrl.a_star >= FLOOR - 1e-15)

    stationary = me.ValueSurface(
        grid=g, values=np.tile(me.stationary_entropy(g.x_nodes()), (g.M + 1, 1)))
    flat = me.optimal_control_field(stationary, cfg)
    assert np.allclose(flat.a_star[:, 1:-1], 1.0, atol=1e-9)
    assert np.allclose(flat.sigma_star[:, 1:-1], 1.0, atol=1e-9)


def test_scheme_config_validation():
    with pytest.raises(ValidationError):
        me.SchemeConfig(cap_d=0.2)
    with pytest.raises(ValidationError):
        me.SchemeConfig(scheme="magic")
    with pytest.raises(ValidationError):
        me.SchemeConfig(policy_tol=0.0)
    with pytest.raises(ValidationError):
        me.SchemeConfig(max_policy_iters=0)
    with pytest.raises(ValidationError):
        me.SchemeConfig(terminal_regularisation_n=0)


def test_implicit_iterations_stay_small_with_warm_start():
    g = me.make_grid(200, 200, 1.0)
    _, iters = me.solve_hjb_with_iterations(g, me.SchemeConfig(cap_d=1e6))
    assert np.median(iters) <= 5


def test_minimal_grids_solve():
    # single interior node, single time step
    g = me.make_grid(2, 1, 1.0)
    s = me.solve_hjb(g, me.SchemeConfig(cap_d=10.0))
    assert s.values.shape == (2, 3)
    assert 0.0 < s.values[0, 1] <= 0.125 + 1e-10
    ge = me.make_grid(2, 50, 1.0)
    se = me.solve_hjb(ge, me.SchemeConfig(cap_d=5.0, scheme="explicit"))
    assert 0.0 < se.values[0, 1] <= 0.125 + 1e-10
