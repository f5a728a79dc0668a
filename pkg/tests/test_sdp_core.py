import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from relax_subsample.instances import brute_force_opt, gen_complete, gen_cycle, gen_gnp, normalize
from relax_subsample.relaxations import gw_problem
from relax_subsample.sdp_core import (DEFAULT_TOL, MAX_DIM, LinearCut, LpInfeasible,
                                      LpUnbounded, SdpNonConvergence, SdpProblem, min_eigenvalue,
                                      residuals, solve_lp, solve_sdp)


def quarter_laplacian_problem(g):
    L = g.laplacian()
    return SdpProblem(g.n, 0.25 * L, "max", diag_constraints=[(i, 1.0) for i in range(g.n)])


# ------------------------------------------------------------- examples


def test_single_edge_exact():
    sol = solve_sdp(quarter_laplacian_problem(normalize(2, [(0, 1)])))
    assert sol.value == pytest.approx(1.0, abs=DEFAULT_TOL)
    assert np.allclose(sol.X, [[1, -1], [-1, 1]], atol=1e-6)
    assert sol.certified


def test_triangle_three_quarters():
    g = gen_cycle(3)
    sol = solve_sdp(quarter_laplacian_problem(g))
    # oracle 1: eigenvalue bound (n/4) lambda_max(L) is an upper bound
    upper = g.n / 4 * np.linalg.eigvalsh(g.laplacian()).max()
    # oracle 2: unit vectors at 120 degrees are feasible
    ang = 2 * np.pi * np.arange(3) / 3
    V = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    lower = float(np.sum(0.25 * g.laplacian() * (V @ V.T)))
    assert upper == pytest.approx(0.75) and lower == pytest.approx(0.75)
    assert sol.value == pytest.approx(0.75, abs=DEFAULT_TOL)
    assert sol.dual_bound >= sol.value - 1e-12


def test_zero_objective():
    prob = SdpProblem(4, np.zeros((4, 4)), "max", diag_constraints=[(i, 1.0) for i in range(4)])
    sol = solve_sdp(prob)
    assert abs(sol.value) <= DEFAULT_TOL
    assert np.allclose(np.diag(sol.X), 1.0, atol=1e-6)


def test_minimization_with_cuts():
    # min X_01 subject to X_01 >= -0.3: the cut is active
    C = np.array([[0, 0.5], [0.5, 0]])
    prob = SdpProblem(2, C, "min", diag_constraints=[(0, 1.0), (1, 1.0)],
                      linear_cuts=[LinearCut([(0, 1, 1.0)], ">=", -0.3)])
    sol = solve_sdp(prob)
    assert sol.value == pytest.approx(-0.3, abs=1e-6)
    assert sol.dual_bound <= sol.value + 1e-12


def test_block_constraints():
    # two labels per vertex, block trace one; maximize the mass on label 0
    C = np.diag([1.0, 0.0, 1.0, 0.0])
    prob = SdpProblem(4, C, "max", block_structure=[(0, 2), (2, 2)])
    sol = solve_sdp(prob)
    assert sol.value == pytest.approx(2.0, abs=1e-6)


def test_dimension_cap_and_tol():
    big = SdpProblem(MAX_DIM + 1, sparse.csr_matrix((MAX_DIM + 1, MAX_DIM + 1)), "max",
                     diag_constraints=[(i, 1.0) for i in range(MAX_DIM + 1)])
    with pytest.raises(ValueError, match="cap"):
        solve_sdp(big)
    with pytest.raises(ValueError):
        solve_sdp(quarter_laplacian_problem(gen_cycle(3)), tol=0.0)


def test_non_convergence_carries_best_iterate():
    prob = gw_problem(gen_gnp(12, 0.5, 3))
    with pytest.raises(SdpNonConvergence) as info:
        solve_sdp(prob, tol=1e-12, max_iter=3, restarts=1)
    assert info.value.best is not None
    assert info.value.best.X.shape == (12, 12)


def test_bad_inputs():
    with pytest.raises(ValueError):
        LinearCut([(0, 1, 1.0)], "<", 1.0)
    with pytest.raises(ValueError):
        SdpProblem(2, np.zeros((2, 2)), "maximize")
    prob = SdpProblem(3, np.zeros((3, 3)), diag_constraints=[(0, 1.0)])
    with pytest.raises(ValueError, match="every row"):
        prob.groups()


# ------------------------------------------------------------ properties


GRAPHS = [gen_cycle(5), gen_complete(4), gen_gnp(8, 0.5, 1), gen_gnp(10, 0.4, 2)]


@pytest.mark.parametrize("g", GRAPHS, ids=["c5", "k4", "gnp8", "gnp10"])
def test_reported_quantities_recomputable(g):
    prob = gw_problem(g)
    sol = solve_sdp(prob)
    prim, cut, psd = residuals(prob, sol.X, sol.scalars)
    assert abs(prim - sol.primal_residual) <= 1e-12
    assert abs(cut - sol.cut_violation) <= 1e-12
    assert abs(psd - sol.psd_violation) <= 1e-12
    assert sol.psd_violation >= 0
    assert abs(prob.objective_value(sol.X, sol.scalars) - sol.value) <= 1e-12
    assert sol.value <= sol.dual_bound + 1e-12
    assert sol.gap <= DEFAULT_TOL
    assert sol.primal_residual <= DEFAULT_TOL and sol.psd_violation <= DEFAULT_TOL


@pytest.mark.parametrize("g", GRAPHS, ids=["c5", "k4", "gnp8", "gnp10"])
def test_restart_from_solution_is_fixed_point(g):
    prob = gw_problem(g)
    sol = solve_sdp(prob)
    again = solve_sdp(prob, warm_start=sol)
    assert again.iterations <= 5
    assert again.value == pytest.approx(sol.value, abs=DEFAULT_TOL)


@pytest.mark.parametrize("alpha", [0.5, 3.0, 10.0])
def test_objective_scaling(alpha):
    g = gen_cycle(5)
    base = solve_sdp(gw_problem(g))
    prob = gw_problem(g)
    prob.objective = prob.objective * alpha
    scaled = solve_sdp(prob)
    assert scaled.value == pytest.approx(alpha * base.value, abs=alpha * 2 * DEFAULT_TOL)
    # the optimum of the 5-cycle is unique: the regular pentagram embedding
    assert np.abs(scaled.X - base.X).max() <= 1e-5


weighted_graphs = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.floats(0.1, 5.0)),
                           min_size=2, max_size=12)


@settings(max_examples=15, deadline=None)
@given(weighted_graphs)
def test_gw_bounds_sandwich(edges):
    dedup = {(min(a, b), max(a, b)): w for a, b, w in edges if a != b}
    if not dedup:
        return
    g = normalize(6, [(a, b, w) for (a, b), w in dedup.items()])
    sol = solve_sdp(gw_problem(g))
    opt, _ = brute_force_opt(g)
    assert sol.value >= opt - 2 * DEFAULT_TOL
    assert sol.value <= sol.dual_bound + 1e-12
    assert sol.dual_bound - sol.value <= DEFAULT_TOL
    assert sol.value <= 1 + 1e-9


# ----------------------------------------------------------------- LP


def test_lp_simple():
    res = solve_lp([1.0], A_ub=[[1.0]], b_ub=[1.0], bounds=[(None, None)])
    assert res.value == pytest.approx(1.0, abs=1e-7)
    # optimality certificate: the dual objective equals the primal value
    assert float(res.duals_ub @ [1.0]) == pytest.approx(1.0, abs=1e-7)


def test_lp_triangle_metric_polytope():
    # variables x01, x12, x02 (separation indicators); maximize their mean
    A = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
    b = [2, 0, 0, 0]
    res = solve_lp(np.ones(3) / 3, A_ub=A, b_ub=b, bounds=(0, 1))
    assert res.value == pytest.approx(2 / 3, abs=1e-7)
    assert float(res.duals_ub @ b) == pytest.approx(2 / 3, abs=1e-7)


def test_lp_equality_system_unique_point():
    A = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
    res = solve_lp(np.zeros(3), A_eq=A, b_eq=[3, 5, 4], bounds=[(None, None)] * 3)
    assert np.allclose(res.x, [1, 2, 3], atol=1e-9)


def test_lp_errors():
    with pytest.raises(LpInfeasible):
        solve_lp([1.0], A_ub=[[1.0]], b_ub=[-1.0], bounds=(0, None))
    with pytest.raises(LpUnbounded):
        solve_lp([1.0], bounds=[(0, None)])


# ---------------------------------------------------------- eigenvalues


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(5)) == pytest.approx(1.0, abs=1e-12)
    val, vec = min_eigenvalue(np.diag([1.0, -2.0]), return_vector=True)
    assert val == pytest.approx(-2.0, abs=1e-12)
    assert abs(vec[1]) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_min_eigenvalue_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((20, 20))
    A = (A + A.T) / 2
    val, vec = min_eigenvalue(A, return_vector=True)
    assert val == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-9)
    assert np.allclose(A @ vec, val * vec, atol=1e-9)
    assert min_eigenvalue(sparse.csr_matrix(A)) == pytest.approx(val, abs=1e-12)
    assert math.isclose(np.linalg.norm(vec), 1.0, rel_tol=1e-12)
