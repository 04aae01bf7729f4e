import numpy as np
import pytest

import matchentropy as me
from matchentropy.errors import ConvergenceError, NumericalError, ValidationError
from matchentropy.logdiff import entropy_surface_from_p_values


def test_initial_row_is_constant_one_over_n():
    g = me.make_grid(20, 10, 1.0)
    p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=8))
    assert np.all(p.values[0] == 0.125)


def test_stationary_field_is_exact_fixed_point():
    g = me.make_grid(30, 30, 1.0)
    p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=1))
    assert np.max(np.abs(p.values - 1.0)) <= 1e-12


def test_p_stays_in_unit_band():
    g = me.make_grid(50, 50, 1.0)
    for n in (2, 16):
        p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=n))
        assert np.all(p.values > 0.0)
        assert np.all(p.values <= 1.0 + 1e-10)
        assert np.all(p.values[1:, 0] == 1.0) and np.all(p.values[1:, -1] == 1.0)


def test_p_symmetric_for_even_n_nodes():
    g = me.make_grid(64, 40, 1.0)
    p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=4))
    assert np.max(np.abs(p.values - p.values[:, ::-1])) <= 1e-9


def test_entropy_from_constant_one_is_stationary_profile():
    g = me.make_grid(128, 16, 1.0)
    p = me.PField(grid=g, values=np.ones((17, 129)), regularisation_n=1)
    e = me.entropy_from_p(p)
    expected = me.stationary_entropy(g.x_nodes())
    assert np.max(np.abs(e.values - expected)) <= 1e-14


def test_entropy_from_zero_rows_is_zero():
    g = me.make_grid(16, 4, 1.0)
    e_vals = entropy_surface_from_p_values(np.zeros((5, 17)), g)
    assert np.all(e_vals == 0.0)


def test_entropy_boundaries_exactly_zero_for_any_p():
    g = me.make_grid(33, 7, 1.0)
    rng = np.random.default_rng(1)
    pvals = rng.uniform(0.1, 1.0, size=(8, 34))
    e_vals = entropy_surface_from_p_values(pvals, g)
    assert np.all(e_vals[:, 0] == 0.0) and np.all(e_vals[:, -1] == 0.0)


def test_curvature_identity_links_entropy_back_to_p():
    g = me.make_grid(50, 50, 1.0)
    p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=4))
    e = me.entropy_from_p(p)
    h2 = g.h * g.h
    for m in (0, 10, 25, 50):
        row_p = p.values[g.M - m]
        curvature = (e.values[m, 2:] - 2.0 * e.values[m, 1:-1] + e.values[m, :-2]) / h2
        # the nested trapezoid makes the curvature an exact local average of p
        smoothed = -(row_p[2:] + 2.0 * row_p[1:-1] + row_p[:-2]) / 4.0
        assert np.max(np.abs(curvature - smoothed)) <= 1e-10
        # and that average sits within quadrature accuracy of p itself
        wiggle = np.abs(row_p[2:] - 2.0 * row_p[1:-1] + row_p[:-2]) / 4.0
        assert np.all(np.abs(curvature + row_p[1:-1]) <= wiggle + 1e-10)


def test_time_derivative_matches_log_p_away_from_startup():
    errs = {}
    for NM in (50, 100, 200):
        g = me.make_grid(NM, NM, 1.0)
        p = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=4))
        e = me.entropy_from_p(p)
        dt = 2.0 * (e.values[1:] - e.values[:-1]) / g.k
        logp = np.log(p.values[::-1])
        mid = 0.5 * (logp[1:] + logp[:-1])
        cut = int(0.9 * NM)  # the first forward rows carry the incompatible-corner layer
        errs[NM] = float(np.max(np.abs(dt[:cut, 1:-1] - mid[:cut, 1:-1])))
    assert errs[50] / errs[100] >= 1.5
    assert errs[100] / errs[200] >= 1.5


def test_ladder_monotone_non_increasing():
    g = me.make_grid(40, 40, 1.0)
    members = {}
    for n in (1, 2, 4):
        members[n] = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=n))
    assert np.all(members[2].values <= members[1].values + 1e-9)
    assert np.all(members[4].values <= members[2].values + 1e-9)
    e2 = me.entropy_from_p(members[2]).values
    e4 = me.entropy_from_p(members[4]).values
    assert np.all(e4 <= e2 + 1e-9)


def test_ladder_limit_returns_last_member():
    g = me.make_grid(30, 30, 1.0)
    limit = me.ladder_limit(g, (1, 2, 4), tol=1e-9)
    direct = me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=4))
    assert np.array_equal(limit.values, direct.values)
    assert limit.regularisation_n == 4


def test_ladder_limit_validates_sequence():
    g = me.make_grid(10, 10, 1.0)
    with pytest.raises(ValidationError):
        me.ladder_limit(g, (4,))
    with pytest.raises(ValidationError):
        me.ladder_limit(g, (4, 2))
    with pytest.raises(ValidationError):
        me.ladder_limit(g, (2, 2))


def test_ladder_limit_flags_monotonicity_violation():
    g = me.make_grid(10, 10, 1.0)
    with pytest.raises(NumericalError, match="monotone"):
        me.ladder_limit(g, (1, 2), tol=-1.0)  # impossible tolerance must trip the guard


def test_newton_non_convergence_raises():
    g = me.make_grid(200, 200, 1.0)
    with pytest.raises(ConvergenceError):
        me.solve_log_diffusion(g, me.LadderConfig(regularisation_n=16, max_newton_iters=1))


def test_ladder_config_validation():
    with pytest.raises(ValidationError):
        me.LadderConfig(regularisation_n=0)
    with pytest.raises(ValidationError):
        me.LadderConfig(newton_tol=0.0)
    with pytest.raises(ValidationError):
        me.LadderConfig(max_newton_iters=0)
