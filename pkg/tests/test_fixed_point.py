import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from bipartite_spectra.fixed_point import (BALL_RADIUS, ConvergenceError, EnsembleParams,
                                           GridSpec, SolverConfig, SolverError, SolverState,
                                           apply_Fz, apply_L, closed_form_p0,
                                           contraction_threshold, evaluate_solution, grid_for,
                                           lipschitz_ratio, make_grid, norm_H,
                                           solve_fixed_point, transfer)
from bipartite_spectra.measure import make_measure, point_mass, rademacher

DELTA1 = point_mass()


def ones(grid):
    return np.ones(grid.n + 1, dtype=complex)


def random_ball_pair(rng, grid, radius=BALL_RADIUS):
    # random complex functions with sup |f| / sqrt(1+u) <= radius
    def one():
        mod = rng.uniform(0, radius, grid.n + 1)
        phase = rng.uniform(0, 2 * np.pi, grid.n + 1)
        f = mod * np.exp(1j * phase) * grid.scale
        f[0] = 1.0
        return f
    return one(), one()


def test_params_validation():
    with pytest.raises(ValueError):
        EnsembleParams(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        EnsembleParams(1.0, 0.5, -1.0 + 1j)
    with pytest.raises(ValueError):
        EnsembleParams(-1.0, 0.5, 1.0)
    assert EnsembleParams(2.0, 0.3, 1.0).weights == pytest.approx((1.4, 0.6))


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(np.array([0.5, 0.4]), np.array([1.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        GridSpec(np.array([0.5, 0.8]), np.array([1.0, -1.0]), 1.0)
    g = make_grid(16, 2.0)
    assert g.u[0] == 0.0 and len(g.u) == 17


def test_short_grid_refused():
    params = EnsembleParams(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        solve_fixed_point(params, DELTA1, make_grid(64, 3.0))


def test_norm_examples():
    g = make_grid(32, 4.0)
    assert norm_H(ones(g), g) == 1.0
    assert norm_H(np.sqrt(1 + g.u), g) == pytest.approx(1.0, abs=1e-15)
    g5 = GridSpec(np.array([1.0, 3.0, 5.0]), np.ones(3), 5.0)
    assert norm_H(g5.u, g5) == pytest.approx(25 / math.sqrt(26))
    with pytest.raises(ValueError):
        norm_H(np.full(g.n + 1, np.nan), g)
    with pytest.raises(ValueError):
        norm_H(np.ones(3), g)


def test_apply_L_examples():
    z = 1.0
    g = grid_for(z, DELTA1)
    rng = np.random.default_rng(0)
    f = rng.normal(size=g.n + 1) + 1j * rng.normal(size=g.n + 1)
    assert apply_L(f, DELTA1, 0.7, z, 0.0, g) == 1.0
    assert abs(apply_L(f, DELTA1, 0.0, z, 1.0, g) - math.exp(-1)) < 1e-12
    assert abs(apply_L(f, rademacher(), 0.0, z, 2.0, g) - math.exp(-2)) < 1e-12


def test_apply_L_errors():
    g = grid_for(1.0, DELTA1)
    with pytest.raises(ValueError):
        apply_L(np.ones(5), DELTA1, 1.0, 1.0, 1.0, g)
    with pytest.raises(ValueError):
        apply_L(ones(g), DELTA1, 1.0, -1.0, 1.0, g)


def test_apply_L_overflow_is_reported():
    g = make_grid(64, 1.0)
    f = np.full(g.n + 1, 1e3 + 0j)
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(SolverError):
        apply_L(f, DELTA1, 1e3, 1.0, 1.0, g)


def test_Fz_p0_is_closed_form_in_one_step():
    m = make_measure([(0.5, 0.3), (2.0, 0.7)])
    params = EnsembleParams(0.0, 0.4, 1.5 - 0.5j)
    g = grid_for(params.z, m)
    rng = np.random.default_rng(1)
    f1, f2 = random_ball_pair(rng, g)
    out = apply_Fz(SolverState(g, f1, f2, params.z), m, params)
    ref = closed_form_p0(m, params.z, g.u)
    assert np.max(np.abs(out.f1 - ref)) < 1e-12
    assert np.max(np.abs(out.f2 - ref)) < 1e-12


def test_Fz_pins_u0():
    params = EnsembleParams(2.0, 0.3, 2.0)
    g = grid_for(params.z, DELTA1)
    out = apply_Fz(SolverState(g, ones(g), ones(g), params.z), DELTA1, params)
    assert out.f1[0] == 1.0 and out.f2[0] == 1.0


def test_p0_solve():
    params = EnsembleParams(0.0, 0.5, 1.0)
    s = solve_fixed_point(params, DELTA1)
    assert s.iterations <= 2 and s.converged
    assert np.max(np.abs(s.f1 - np.exp(-s.grid.u))) < 1e-14


def test_real_z_picard_converges_and_refines():
    params = EnsembleParams(2.0, 0.5, 3.0)
    cfg = SolverConfig(accel="picard", damping=1.0)
    s = solve_fixed_point(params, DELTA1, config=cfg)
    assert s.residual < 1e-10
    # Nystrom extension onto a grid with twice the nodes and range
    fine = solve_fixed_point(params, DELTA1, config=SolverConfig(refine=2))
    ext1, ext2 = evaluate_solution(s, DELTA1, params, fine.grid.u)
    assert norm_H(ext1 - fine.f1, fine.grid) < 1e-8
    assert norm_H(ext2 - fine.f2, fine.grid) < 1e-8


def test_picard_residuals_contract():
    params = EnsembleParams(2.0, 0.5, 3.0)
    g = grid_for(params.z, DELTA1)
    s = SolverState(g, ones(g), ones(g), params.z)
    res = []
    for _ in range(12):
        s = apply_Fz(s, DELTA1, params)
        res.append(s.residual)
    ratios = np.array(res[2:]) / np.array(res[1:-1])
    assert np.all(ratios < 1)


def test_alpha_half_symmetric():
    s = solve_fixed_point(EnsembleParams(2.0, 0.5, 0.3 - 1.2j), DELTA1)
    assert np.max(np.abs(s.f1 - s.f2)) <= 1e-12


def test_alpha_swap():
    cfg = SolverConfig(tol=1e-13)
    z = 0.5 - 0.8j
    a = solve_fixed_point(EnsembleParams(1.5, 0.3, z), DELTA1, config=cfg)
    b = solve_fixed_point(EnsembleParams(1.5, 0.7, z), DELTA1, config=cfg)
    assert np.max(np.abs(a.f1 - b.f2)) <= 1e-12
    assert np.max(np.abs(a.f2 - b.f1)) <= 1e-12


def test_ball_preserved_above_threshold():
    m = make_measure([(1.0, 0.5), (2.0, 0.5)])
    p = 1.5
    params = EnsembleParams(p, 0.3, contraction_threshold(p, m) - 2.0j)
    g = grid_for(params.z, m)
    s = SolverState(g, ones(g), ones(g), params.z)
    for _ in range(15):
        s = apply_Fz(s, m, params)
        assert max(s.norms) <= BALL_RADIUS
        assert s.f1[0] == 1.0 and s.f2[0] == 1.0


def test_convergence_error_carries_state():
    params = EnsembleParams(4.0, 0.3, 0.05 - 1.0j)
    with pytest.raises(ConvergenceError) as info:
        solve_fixed_point(params, DELTA1, config=SolverConfig(max_iter=3))
    assert info.value.state is not None
    assert not info.value.state.converged


def test_warm_start_transfer():
    params = EnsembleParams(2.0, 0.3, 0.2 - 1.0j)
    s = solve_fixed_point(params, DELTA1)
    other = grid_for(params.z, DELTA1, SolverConfig(nodes=1024))
    f1, f2 = transfer(s, other)
    assert f1.shape == (other.n + 1,)
    warm = solve_fixed_point(params, DELTA1, other, initial=(f1, f2))
    cold = solve_fixed_point(params, DELTA1, other)
    assert warm.iterations < cold.iterations
    assert norm_H(warm.f1 - cold.f1, other) < 1e-10


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    with pytest.raises(ValueError):
        SolverConfig(accel="newton")
    with pytest.raises(ValueError):
        SolverConfig(decay=10.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


measures = st.lists(st.tuples(st.floats(0.1, 3.0), st.floats(0.1, 1.0)), min_size=1, max_size=3)


@given(measures, st.floats(0.1, 4.0), st.floats(0.05, 0.95), st.floats(-5.0, 5.0),
       st.integers(0, 2**32 - 1))
def test_lipschitz_below_one_in_contraction_region(atoms, p, alpha, im, seed):
    m = make_measure(atoms)
    params = EnsembleParams(p, alpha, complex(contraction_threshold(p, m), im))
    g = grid_for(params.z, m, SolverConfig(nodes=256))
    rng = np.random.default_rng(seed)
    phi = random_ball_pair(rng, g)
    psi = random_ball_pair(rng, g)
    assert lipschitz_ratio(phi, psi, m, params, g) < 1


@given(st.floats(0.1, 3.0), st.floats(0.05, 0.95), st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_solution_is_fixed_point(p, alpha, re, im):
    params = EnsembleParams(p, alpha, complex(re, im))
    s = solve_fixed_point(params, DELTA1)
    again = apply_Fz(s, DELTA1, params)
    assert again.residual <= 1e-10
    assert s.f1[0] == 1.0 and s.f2[0] == 1.0
    assert max(s.norms) <= BALL_RADIUS
