import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import maxcut_by_enumeration, small_graph_corpus
from relax_subsample.instances import (CspInstance, GeometricSpec, InstanceError, UniqueGame,
                                       csp_from_graph, gen_complete_bipartite, gen_cycle,
                                       gen_geometric, gen_gnp, gen_path, maxcut_as_unique_game,
                                       normalize)
from relax_subsample.relaxations import (RelaxationId, basic_lp_csp, basic_sdp_csp,
                                         cut_value_from_violation, cutnorm_sdp, dimension_reduce,
                                         gw_sdp, gw_triangle_violations, infty_to_one_norm,
                                         parse_relaxation, sdp3, sherali_adams, solve_relaxation,
                                         ug_sdp)
from relax_subsample.sdp_core import DEFAULT_TOL, SolverError

TOL = DEFAULT_TOL
CORPUS = small_graph_corpus()


@pytest.fixture(scope="module")
def solved():
    """GW and sdp3 values on the shared small-graph corpus, computed once."""
    return {name: (gw_sdp(g), sdp3(g)) for name, g in CORPUS.items()}


# ------------------------------------------------------------- Max-Cut


def test_single_edge():
    assert gw_sdp(gen_path(2)).value == pytest.approx(1.0, abs=TOL)


def test_c5_closed_form():
    # unit vectors at angles 4*pi*i/5 (pentagram) give the optimum
    expected = (1 + math.cos(math.pi / 5)) / 2
    res = gw_sdp(gen_cycle(5))
    assert res.value == pytest.approx(expected, abs=2 * TOL)
    assert res.solution.dual_bound >= expected - 1e-9


def test_geometric_identity_embedding_is_feasible():
    spec = GeometricSpec(n=30, d=3, gamma=0.2, seed=5)
    g = gen_geometric(spec)
    V = g.vectors
    embedded = float(np.sum(0.25 * g.laplacian() * (V @ V.T)))
    assert embedded >= 1 - spec.gamma
    assert gw_sdp(g).value >= embedded - TOL


@pytest.mark.parametrize("name", list(CORPUS))
def test_chain(name, solved):
    g = CORPUS[name]
    gw, s3 = solved[name]
    opt = maxcut_by_enumeration(g)
    assert opt - 2 * TOL <= s3.value <= gw.value + 2 * TOL <= 1 + 4 * TOL
    if s3.solution is not None:
        assert _worst_triangle(s3.solution.X) <= TOL


def _worst_triangle(X):
    # plain loop over all triples and sign patterns with an even number of minus signs
    worst = -math.inf
    for i, j, k in itertools.combinations(range(X.shape[0]), 3):
        for s in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
            worst = max(worst, -1 - (s[0] * X[i, j] + s[1] * X[j, k] + s[2] * X[i, k]))
    return worst


def test_triangle_violation_columns():
    X = np.array([[1, 1, -1], [1, 1, 1], [-1, 1, 1.0]])
    tri = (np.array([0]), np.array([1]), np.array([2]))
    assert gw_triangle_violations(X, tri).max() == pytest.approx(_worst_triangle(X))


@pytest.mark.parametrize("k", [3, 5, 7, 9])
def test_odd_cycles_sdp3(k):
    assert sdp3(gen_cycle(k)).value == pytest.approx(1 - 1 / k, abs=2 * TOL)


@pytest.mark.parametrize("g", [gen_cycle(6), gen_complete_bipartite(3, 4), gen_path(5)])
def test_bipartite_is_one(g):
    assert sdp3(g).value == pytest.approx(1.0, abs=2 * TOL)
    assert gw_sdp(g).value == pytest.approx(1.0, abs=2 * TOL)


# -------------------------------------------------------- unique games


def test_tree_game_satisfiable():
    rng = np.random.default_rng(0)
    R = 3
    u, v = [0, 0, 1, 3], [1, 2, 3, 4]
    perms = [rng.permutation(R) for _ in u]
    game = UniqueGame(5, R, u, v, np.full(4, 0.25), perms)
    assert ug_sdp(game).value == pytest.approx(0.0, abs=2 * TOL)


@pytest.mark.parametrize("name", ["triangle", "c5", "k4", "weighted", "gnp7_0", "gnp7_1"])
def test_duality_with_maxcut_game(name, solved):
    g = CORPUS[name]
    gw, s3 = solved[name]
    game = maxcut_as_unique_game(g)
    assert gw.value + ug_sdp(game).value == pytest.approx(1.0, abs=2 * TOL)
    assert s3.value + ug_sdp(game, triangle_cuts=True).value == pytest.approx(1.0, abs=2 * TOL)


def test_triangle_game_with_cuts():
    game = maxcut_as_unique_game(gen_cycle(3))
    plain = ug_sdp(game).value
    tight = ug_sdp(game, triangle_cuts=True).value
    assert tight == pytest.approx(1 / 3, abs=TOL)
    assert plain <= tight + TOL
    assert cut_value_from_violation(tight) == pytest.approx(2 / 3, abs=TOL)


# ------------------------------------------------------- Sherali-Adams


@pytest.mark.parametrize("g, r, expected", [
    (gen_cycle(3), 3, 2 / 3),
    (gen_cycle(5), 3, 4 / 5),
    (gen_cycle(6), 2, 1.0),
    (gen_complete_bipartite(2, 3), 4, 1.0),
])
def test_sherali_adams_values(g, r, expected):
    assert sherali_adams(g, r).value == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize("name", ["k4", "k5", "c5", "gnp7_0", "gnp7_2", "weighted"])
def test_sherali_adams_monotone_and_valid(name):
    g = CORPUS[name]
    vals = [sherali_adams(g, r).value for r in (2, 3, 4)]
    assert vals[0] >= vals[1] - 1e-7 >= vals[2] - 2e-7
    assert vals[2] >= maxcut_by_enumeration(g) - 1e-7


def test_sherali_adams_point_is_metric():
    res = sherali_adams(gen_gnp(6, 0.6, 1), 3)
    x = res.point
    d = lambda i, j: x.get((min(i, j), max(i, j)), 0.0)
    for i, j, k in itertools.permutations(range(6), 3):
        if (min(i, j), max(i, j)) in x and (min(j, k), max(j, k)) in x \
                and (min(i, k), max(i, k)) in x:
            assert d(i, j) + d(j, k) >= d(i, k) - 1e-7


def test_sherali_adams_level_error():
    with pytest.raises(InstanceError):
        sherali_adams(gen_cycle(3), 1)


# --------------------------------------------------------- BasicSDP/LP


def _satisfiable_csp():
    # every payoff one: any assignment satisfies all constraints
    return CspInstance.from_constraints(4, 2, [((0, 1), np.ones(4)), ((1, 2), np.ones(4)),
                                               ((2, 3), np.ones(4))])


def test_basic_relaxations_satisfiable():
    csp = _satisfiable_csp()
    sdp = basic_sdp_csp(csp, 0.1)
    assert sdp.value == pytest.approx(1.0, abs=1e-4)
    assert sdp.info["penalty"] == pytest.approx(0.0, abs=1e-4)
    assert basic_lp_csp(csp, 0.1).value == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_basic_sdp_matches_gw_and_lp_dominates(seed):
    g = gen_gnp(7, 0.5, seed)
    csp = csp_from_graph(g)
    sdp = basic_sdp_csp(csp, 0.01)
    assert sdp.value == pytest.approx(gw_sdp(g).value, abs=0.01)
    assert basic_lp_csp(csp, 0.01).value >= sdp.value - 1e-4


def test_basic_sdp_penalty_monotone():
    csp = csp_from_graph(gen_gnp(6, 0.6, 4))
    off = basic_sdp_csp(csp, math.inf).value
    weak = basic_sdp_csp(csp, 1.0).value
    strong = basic_sdp_csp(csp, 0.01).value
    assert off >= weak - 1e-4 >= strong - 2e-4


def test_basic_lp_triangle():
    assert basic_lp_csp(csp_from_graph(gen_cycle(3)), 0.5).value >= 2 / 3 - 1e-9


# ------------------------------------------------------------ cut norm


def test_infty_to_one_examples():
    assert infty_to_one_norm(np.array([[1.0]])) == 1.0
    assert infty_to_one_norm(np.array([[1.0, -1.0], [-1.0, 1.0]])) == 4.0


def _norm_by_columns(A):
    # second enumeration: loop over column signs, best rows in closed form
    best = -math.inf
    for ys in itertools.product((-1.0, 1.0), repeat=A.shape[1]):
        best = max(best, float(np.abs(A @ np.array(ys)).sum()))
    return best


@pytest.mark.parametrize("seed", range(20))
def test_grothendieck_sandwich(seed):
    A = np.random.default_rng(seed).standard_normal((8, 8))
    exact = infty_to_one_norm(A)
    assert exact == pytest.approx(_norm_by_columns(A), rel=1e-12)
    val = cutnorm_sdp(A).value
    assert exact - 2 * TOL <= val <= 1.8 * exact


def test_cutnorm_trivial():
    assert cutnorm_sdp(np.zeros((3, 3))).value == pytest.approx(0.0, abs=TOL)
    assert cutnorm_sdp(np.ones((4, 4))).value == pytest.approx(16.0, abs=1e-5)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000), st.floats(-4, 4).filter(lambda a: abs(a) > 0.1))
def test_cutnorm_homogeneous_and_transpose(seed, alpha):
    A = np.random.default_rng(seed).standard_normal((4, 5))
    base = cutnorm_sdp(A).value
    assert cutnorm_sdp(alpha * A).value == pytest.approx(abs(alpha) * base, abs=1e-4 * abs(alpha))
    assert cutnorm_sdp(A.T).value == pytest.approx(base, abs=1e-4)


# ------------------------------------------------- dimension reduction


def test_dimension_reduce_c5():
    sol = gw_sdp(gen_cycle(5)).solution
    red = dimension_reduce(sol, 0.05, seed=1, target_dim=40)
    assert abs(red.value - sol.value) <= 0.05
    assert red.factor.shape[1] == 40
    assert np.allclose(np.diag(red.X), 1.0, atol=1e-9)


def test_dimension_reduce_integral_cut_unchanged():
    sol = gw_sdp(gen_cycle(6)).solution
    red = dimension_reduce(sol, 0.01, seed=0, target_dim=2)
    assert red.value == pytest.approx(sol.value, abs=1e-9)


def test_dimension_reduce_failure():
    sol = gw_sdp(gen_gnp(10, 0.5, 1)).solution
    with pytest.raises(SolverError):
        dimension_reduce(sol, 1e-9, seed=0, target_dim=1, attempts=2)


# ------------------------------------------------------------ registry


@pytest.mark.parametrize("text, kind, param", [
    ("gw", "gw", None), ("sdp3", "sdp3", None), ("ug3", "ug3", None), ("sa:3", "sa", 3),
    ("basicsdp:0.5", "basicsdp", 0.5), ("basiclp:1", "basiclp", 1.0), ("cutnorm", "cutnorm", None),
])
def test_parse_relaxation(text, kind, param):
    rid = parse_relaxation(text)
    assert rid == RelaxationId(kind, param)
    assert parse_relaxation(str(rid)) == rid


@pytest.mark.parametrize("text", ["sa:5", "sa:x", "basicsdp:0", "basiclp:2", "gw:1", "lasserre"])
def test_parse_relaxation_errors(text):
    with pytest.raises(ValueError):
        parse_relaxation(text)


def test_solve_relaxation_dispatch():
    g = gen_cycle(5)
    assert solve_relaxation("ug", g).value == pytest.approx(1 - gw_sdp(g).value, abs=2 * TOL)
    assert solve_relaxation("brute", g).value == pytest.approx(0.8)
    with pytest.raises(TypeError):
        solve_relaxation("cutnorm", g)
    with pytest.raises(TypeError):
        solve_relaxation("gw", csp_from_graph(g))
