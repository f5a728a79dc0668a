"""Convex relaxations of Max-Cut, unique games, Max-k-CSPs and the cut norm.

SDP relaxations are assembled as :class:`~relax_subsample.sdp_core.SdpProblem`
instances; triangle inequalities are added lazily by a cutting-plane loop
that warm-starts the solver after each separation round.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .instances import (BRUTE_FORCE_CAP, CspInstance, InstanceError, NormalizedGraph,
                        SearchSpaceTooLarge, UniqueGame, _digits, brute_force_opt,
                        csp_from_graph, maxcut_as_unique_game, normalize)
from .rng import derive_seed, make_rng
from .sdp_core import (DEFAULT_TOL, GramSolution, LinearCut, SdpProblem, SolverError,
                       _Compiled, solve_lp, solve_sdp)

MAX_CUT_ROUNDS = 60
LOOSE_TOL = 1e-3


@dataclass
class Relaxed:
    """A relaxation value with its solver artefacts."""

    value: float
    solution: GramSolution | None = None
    point: dict | None = None
    info: dict = field(default_factory=dict)


# ----------------------------------------------------------- Max-Cut SDPs


def gw_problem(g: NormalizedGraph) -> SdpProblem:
    """Max ``L(G) . X / 4`` over unit-diagonal PSD ``X``."""
    return SdpProblem(g.n, 0.25 * sparse.csr_matrix(g.laplacian()), "max",
                      diag_constraints=[(i, 1.0) for i in range(g.n)])


def _edge_components(g: NormalizedGraph) -> list[np.ndarray]:
    """Vertex sets of the connected components that carry edges."""
    _, lab = connected_components(g.sparse_adjacency(weighted=False), directed=False)
    used = np.unique(lab[g.u])
    return [np.flatnonzero(lab == c) for c in used]


def _peel_leaves(g: NormalizedGraph):
    """Repeatedly strip degree-one vertices.

    Returns the surviving edge mask and the stripped ``(leaf, neighbour)``
    pairs in removal order.
    """
    alive = np.ones(g.m, dtype=bool)
    deg = np.bincount(np.concatenate([g.u, g.v]), minlength=g.n)
    inc = [[] for _ in range(g.n)]
    for e, (a, b) in enumerate(zip(g.u.tolist(), g.v.tolist())):
        inc[a].append(e)
        inc[b].append(e)
    stack = [i for i in range(g.n) if deg[i] == 1]
    peeled = []
    while stack:
        leaf = stack.pop()
        if deg[leaf] != 1:
            continue
        e = next(e for e in inc[leaf] if alive[e])
        nbr = int(g.v[e] if g.u[e] == leaf else g.u[e])
        alive[e] = False
        deg[leaf] -= 1
        deg[nbr] -= 1
        peeled.append((leaf, nbr))
        if deg[nbr] == 1:
            stack.append(nbr)
    return alive, peeled


def _by_components(g: NormalizedGraph, solve_one, seed: int) -> Relaxed | None:
    """Solve a Max-Cut relaxation on the reduced graph and lift the result.

    Pendant vertices are peeled first: a leaf whose vector is the negated
    neighbour vector cuts its edge fully and keeps every triangle
    inequality (they are invariant under sign flips).  The rest is solved
    per connected component.  The block-diagonal union of component
    solutions stays feasible, because every triangle inequality holds when
    inner products across blocks are zero.  Returns ``None`` when there is
    nothing to reduce.
    """
    alive, peeled = _peel_leaves(g)
    core = NormalizedGraph(g.n, g.u[alive], g.v[alive], g.w[alive], check=False)
    comps = _edge_components(core) if alive.any() else []
    if not peeled and len(comps) == 1 and len(comps[0]) == g.n:
        return None
    leaf_mass = float(g.w[~alive].sum())
    value = bound = leaf_mass
    prim = dual = psd = cutv = 0.0
    iters, certified = 0, True
    info = {"components": len(comps), "peeled": len(peeled), "rounds": 0, "cuts": 0}
    factors = []
    for c, verts in enumerate(comps):
        inside = np.isin(core.u, verts)
        mass = float(core.w[inside].sum())
        sub = normalize(len(verts), [(a, b, w) for a, b, w in
                                     zip(np.searchsorted(verts, core.u[inside]),
                                         np.searchsorted(verts, core.v[inside]),
                                         core.w[inside])])
        part = solve_one(sub, derive_seed(seed, c))
        sol = part.solution
        value += mass * part.value
        bound += mass * sol.dual_bound
        prim, dual = max(prim, sol.primal_residual), max(dual, sol.dual_residual)
        psd, cutv = max(psd, sol.psd_violation), max(cutv, sol.cut_violation)
        iters += sol.iterations
        certified &= bool(sol.certified)
        factors.append((verts, sol.factor))
        info["rounds"] = max(info["rounds"], part.info.get("rounds", 0))
        info["cuts"] += part.info.get("cuts", 0)
    width = sum(f.shape[1] for _, f in factors) + g.n
    Y = np.zeros((g.n, width))
    col = 0
    done = np.zeros(g.n, dtype=bool)
    for verts, f in factors:
        Y[np.ix_(verts, np.arange(col, col + f.shape[1]))] = f
        col += f.shape[1]
        done[verts] = True
    leaves = {leaf for leaf, _ in peeled}
    for i in np.flatnonzero(~done):
        if i not in leaves:
            Y[i, col] = 1.0
            col += 1
            done[i] = True
    for leaf, nbr in reversed(peeled):
        Y[leaf] = -Y[nbr]
    Y = Y[:, :col]
    X = Y @ Y.T
    sol = GramSolution(X, value, bound, prim, dual, psd, cutv, iters, Y, np.zeros(0),
                       np.zeros(0), certified, gw_problem(g))
    return Relaxed(value, sol, info=info)


def gw_sdp(g: NormalizedGraph, tol: float = DEFAULT_TOL, seed: int = 0) -> Relaxed:
    """Goemans-Williamson vector relaxation of Max-Cut.

    Pendant vertices are peeled and components solved separately.
    """
    if g.m == 0:
        return Relaxed(0.0, info={"empty": True})
    split = _by_components(g, lambda h, s: gw_sdp(h, tol=tol, seed=s), seed)
    if split is not None:
        return split
    sol = solve_sdp(gw_problem(g), tol=tol, seed=seed)
    return Relaxed(sol.value, sol)


def _triples(n):
    if n < 3:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    t = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    return t[:, 0], t[:, 1], t[:, 2]


def gw_triangle_violations(X: np.ndarray, tri) -> np.ndarray:
    """Violations of the four triangle inequalities on every triple.

    Columns correspond to ``x_ij + x_jk - x_ik <= 1``,
    ``x_ij + x_ik - x_jk <= 1``, ``x_jk + x_ik - x_ij <= 1`` and
    ``-x_ij - x_jk - x_ik <= 1``.
    """
    i, j, k = tri
    a, b, c = X[i, j], X[j, k], X[i, k]
    return np.stack([a + b - c, a + c - b, b + c - a, -a - b - c], axis=1) - 1.0


def _gw_cut(i, j, k, form):
    sign = {0: (1, 1, -1), 1: (1, -1, 1), 2: (-1, 1, 1), 3: (-1, -1, -1)}[form]
    return LinearCut([(i, j, sign[0]), (j, k, sign[1]), (i, k, sign[2])], "<=", 1.0)


def _cutting_planes(problem, separate, make_cut, tol, seed, per_round, max_rounds,
                    repair=None):
    """Generic lazy-constraint loop shared by the triangle relaxations.

    Early rounds are solved to a loose tolerance, since they only need to
    expose the next batch of violated inequalities; once no inequality is
    violated beyond that tolerance it tightens tenfold until reaching
    ``tol``.  Dual certification starts only when that last round finds
    nothing new, and separation continues until the certified solution
    satisfies every inequality.

    ``repair(sol, worst)`` may map a certified solution whose remaining
    violations are at most ``worst`` to a fully feasible one.  The loop
    stops as soon as the repaired value is within ``tol`` of the dual
    bound, which stays valid because it was computed with fewer cuts.
    """
    ladder = [t for t in LOOSE_TOL * 10.0 ** -np.arange(8) if t > tol] + [tol]
    cur = ladder.pop(0)
    # certification is only paid for once the cut set has settled
    certify = False

    def solve(warm, k):
        if not certify:
            return solve_sdp(problem, tol=cur, seed=seed + k, warm_start=warm,
                             restarts=1, strict=False, certify=False)
        return solve_sdp(problem, tol=tol, seed=seed + k, warm_start=warm)

    sol = solve(None, 0)
    seen = set()
    rounds = 0
    while True:
        keys, viol = separate(sol.X)
        worst = float(viol.max(initial=0.0))
        added = 0
        if rounds < max_rounds:
            for idx in np.argsort(-viol):
                if viol[idx] <= cur or added >= per_round:
                    break
                key = keys(idx)
                if key in seen:
                    continue
                seen.add(key)
                problem.linear_cuts.append(make_cut(key))
                added += 1
        if certify and worst > tol and repair is not None and sol.certified:
            fixed = repair(sol, worst)
            if abs(fixed.dual_bound - fixed.value) <= tol:
                sol, worst = fixed, 0.0
                break
        if added:
            rounds += 1
        elif ladder:
            cur = ladder.pop(0)
        elif not certify:
            certify = True
        else:
            break
        sol = solve(sol, rounds)
    info = {"rounds": rounds, "cuts": len(seen), "max_violation": worst}
    return sol, info


def sdp3(g: NormalizedGraph, tol: float = DEFAULT_TOL, seed: int = 0,
         per_round: int | None = None, max_rounds: int = MAX_CUT_ROUNDS) -> Relaxed:
    """Goemans-Williamson relaxation strengthened by all triangle inequalities.

    Cuts are separated exhaustively over all triples and the most violated
    ones are added each round until no inequality is violated by more than
    ``tol``.  Pendant vertices are peeled and components solved separately.
    """
    if g.m == 0:
        return Relaxed(0.0, info={"empty": True})
    split = _by_components(g, lambda h, s: sdp3(h, tol=tol, seed=s, per_round=per_round,
                                                 max_rounds=max_rounds), seed)
    if split is not None:
        return split
    tri = _triples(g.n)
    per_round = per_round or max(100, 2 * g.n)

    def separate(X):
        v = gw_triangle_violations(X, tri).ravel()
        return (lambda idx: (idx // 4, idx % 4)), v

    def make_cut(key):
        t, form = key
        return _gw_cut(int(tri[0][t]), int(tri[1][t]), int(tri[2][t]), form)

    sol, info = _cutting_planes(gw_problem(g), separate, make_cut, tol, seed,
                                per_round, max_rounds, repair=_blend_with_identity)
    return Relaxed(sol.value, sol, info=info)


def _blend_with_identity(sol: GramSolution, worst: float) -> GramSolution:
    """Mix ``X`` with the identity to satisfy every triangle inequality.

    The identity meets each inequality ``+-X_ij +- X_jk +- X_ik >= -1`` with
    slack one, so weight ``t = worst / (1 + worst)`` absorbs violations of
    size ``worst`` while the diagonal stays one.
    """
    t = worst / (1.0 + worst)
    n = sol.X.shape[0]
    X = (1.0 - t) * sol.X + t * np.eye(n)
    C = sol.problem.objective
    value = float((C.multiply(X)).sum() if sparse.issparse(C) else np.sum(C * X))
    Y = np.hstack([math.sqrt(1.0 - t) * sol.factor, math.sqrt(t) * np.eye(n)])
    return GramSolution(X, value, sol.dual_bound, 0.0, sol.dual_residual, 0.0, 0.0,
                        sol.iterations, Y, sol.scalars, sol.duals, sol.certified, sol.problem)


# --------------------------------------------------------- unique games


def ug_problem(game: UniqueGame, common_vector: bool = False) -> SdpProblem:
    """Vector relaxation of a unique game (minimize the violation).

    Vertex ``u`` owns the vectors ``u_0 .. u_{R-1}`` (rows ``u*R + a``):
    their squared norms sum to one and they are mutually orthogonal.  The
    objective averages ``|u_a - v_{pi(a)}|^2`` over constraints and labels.
    With ``common_vector`` all sums ``sum_a u_a`` are forced to coincide.
    """
    n, R = game.n, game.R
    dim = n * R
    rows, cols, vals = [], [], []
    for e in range(game.m):
        u, v, w, p = int(game.u[e]), int(game.v[e]), float(game.w[e]), game.perms[e]
        c = w / R
        for a in range(R):
            x, y = u * R + a, v * R + int(p[a])
            rows += [x, y, x, y]
            cols += [x, y, y, x]
            vals += [c, c, -c, -c]
    C = sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    cuts = [LinearCut([(u * R + a, u * R + b, 1.0)], "==", 0.0)
            for u in range(n) for a in range(R) for b in range(a + 1, R)]
    if common_vector:
        for u in range(1, n):
            ent = [(u * R + a, b, 1.0) for a in range(R) for b in range(R)]
            cuts.append(LinearCut(ent, "==", 1.0))
    return SdpProblem(dim, C, "min", block_structure=[(u * R, R) for u in range(n)],
                      linear_cuts=cuts)


def ug_triangle_violations(X: np.ndarray, tri) -> np.ndarray:
    """Violations of ``|x-y|^2 + |y-z|^2 >= |x-z|^2`` with ``y`` as middle.

    Equivalent to ``X_xy + X_yz - X_xz - X_yy <= 0``; columns put the middle
    at the first, second and third element of each triple.
    """
    i, j, k = tri
    a, b, c = X[i, j], X[j, k], X[i, k]
    d = np.diag(X)
    return np.stack([a + c - b - d[i], a + b - c - d[j], b + c - a - d[k]], axis=1)


def _ug_cut(x, y, z, mid):
    # rotate so that the middle vector comes second
    order = {0: (y, x, z), 1: (x, y, z), 2: (x, z, y)}[mid]
    p, q, r = order
    return LinearCut([(p, q, 1.0), (q, r, 1.0), (p, r, -1.0), (q, q, -1.0)], "<=", 0.0)


def ug_sdp(game: UniqueGame, triangle_cuts: bool = False, tol: float = DEFAULT_TOL,
           seed: int = 0, per_round: int | None = None,
           max_rounds: int = MAX_CUT_ROUNDS) -> Relaxed:
    """Minimum violation of the unique-games vector relaxation.

    With ``triangle_cuts`` the relaxation also imposes a common sum vector
    and the squared-distance triangle inequalities on all label vectors.
    """
    if game.m == 0:
        return Relaxed(0.0, info={"empty": True})
    prob = ug_problem(game, common_vector=triangle_cuts)
    if not triangle_cuts:
        sol = solve_sdp(prob, tol=tol, seed=seed)
        return Relaxed(sol.value, sol)
    dim = prob.dim
    tri = _triples(dim)
    per_round = per_round or max(100, 2 * dim)

    def separate(X):
        v = ug_triangle_violations(X, tri).ravel()
        return (lambda idx: (idx // 3, idx % 3)), v

    def make_cut(key):
        t, mid = key
        return _ug_cut(int(tri[0][t]), int(tri[1][t]), int(tri[2][t]), mid)

    sol, info = _cutting_planes(prob, separate, make_cut, tol, seed, per_round, max_rounds)
    return Relaxed(sol.value, sol, info=info)


# ------------------------------------------------------- Sherali-Adams


def sherali_adams(g: NormalizedGraph, r: int) -> Relaxed:
    """Level-``r`` Sherali-Adams relaxation of Max-Cut with metric base.

    Variables are distributions on ``{0,1}^S`` for all vertex sets ``S`` of
    size at most ``r``; each is the marginal of every superset's
    distribution.  The pair marginals ``x_ij = Pr[i, j separated]`` also
    satisfy the triangle (metric) inequalities.  The objective is
    ``sum_e w_e x_e``.  Returns the value and the pair point ``{(i, j): x_ij}``.
    """
    if r < 2:
        raise InstanceError("Sherali-Adams level must be at least 2")
    n = g.n
    if g.m == 0:
        return Relaxed(0.0, point={})
    top = min(r, n)
    offset, nvar = {}, 0
    for s in range(1, top + 1):
        for S in itertools.combinations(range(n), s):
            offset[S] = nvar
            nvar += 1 << s
    er, ec, ev, rhs = [], [], [], []

    def add_row(cols, vals, b):
        row = len(rhs)
        er.extend([row] * len(cols))
        ec.extend(cols)
        ev.extend(vals)
        rhs.append(b)

    for i in range(n):
        o = offset[(i,)]
        add_row([o, o + 1], [1.0, 1.0], 1.0)
    for S, o in offset.items():
        s = len(S)
        if s < 2:
            continue
        for t in range(s):
            sub = S[:t] + S[t + 1:]
            os_ = offset[sub]
            bit = s - 1 - t  # bit position of S[t] (first element is most significant)
            for beta in range(1 << (s - 1)):
                low = beta & ((1 << bit) - 1)
                high = (beta >> bit) << (bit + 1)
                a0 = high | low
                a1 = a0 | (1 << bit)
                add_row([o + a0, o + a1, os_ + beta], [1.0, 1.0, -1.0], 0.0)
    A_eq = sparse.csr_matrix((ev, (er, ec)), shape=(len(rhs), nvar))
    b_eq = np.array(rhs)

    def cut_cols(i, j):
        o = offset[(i, j) if i < j else (j, i)]
        return [o + 1, o + 2]

    c = np.zeros(nvar)
    for a, b, w in g.edges:
        for col in cut_cols(a, b):
            c[col] += w
    ir, ic, iv, ib = [], [], [], []
    row = 0
    if n >= 3:
        for i, j, k in itertools.combinations(range(n), 3):
            xij, xjk, xik = cut_cols(i, j), cut_cols(j, k), cut_cols(i, k)
            for plus1, plus2, minus in ((xij, xjk, xik), (xij, xik, xjk), (xjk, xik, xij)):
                # x_minus <= x_plus1 + x_plus2
                for col in minus:
                    ir.append(row); ic.append(col); iv.append(1.0)
                for col in plus1 + plus2:
                    ir.append(row); ic.append(col); iv.append(-1.0)
                ib.append(0.0)
                row += 1
            for col in xij + xjk + xik:
                ir.append(row); ic.append(col); iv.append(1.0)
            ib.append(2.0)
            row += 1
    A_ub = sparse.csr_matrix((iv, (ir, ic)), shape=(row, nvar)) if row else None
    res = solve_lp(c, A_ub=A_ub, b_ub=np.array(ib) if row else None, A_eq=A_eq, b_eq=b_eq,
                   bounds=(0, 1), sense="max")
    point = {}
    for i, j in itertools.combinations(range(n), 2):
        point[(i, j)] = float(sum(res.x[col] for col in cut_cols(i, j)))
    return Relaxed(float(res.value), point=point, info={"variables": nvar})


# ------------------------------------------------------- BasicSDP / LP


def _marginal_index(csp: CspInstance):
    """Assignment digits of every table entry, shape (q**k, k)."""
    return _digits(0, csp.q ** csp.k, csp.q, csp.k)


def basic_sdp_csp(csp: CspInstance, eps: float, tol: float = 1e-5, seed: int = 0) -> Relaxed:
    """Penalized BasicSDP of a CSP.

    Jointly optimizes label vectors ``v_{i,a}`` (orthogonal within each
    variable, squared norms summing to one) and a local distribution
    ``mu_t`` per constraint.  Maximizes the normalized expected payoff minus
    ``violate(t) / eps`` averaged over constraints, where ``violate(t)``
    sums ``|Pr_mu_t[x_i=a, x_j=b] - <v_ia, v_jb>|`` over ordered pairs of
    scope variables (including ``i == j``) and labels.
    """
    n, q, k, m = csp.n, csp.q, csp.k, csp.m
    Q = q ** k
    dig = _marginal_index(csp)
    weight = 0.0 if math.isinf(eps) else 1.0 / (m * eps)
    cuts = [LinearCut([(i * q + a, i * q + b, 1.0)], "==", 0.0)
            for i in range(n) for a in range(q) for b in range(a + 1, q)]
    cs = []
    ub = []
    n_mu = m * Q
    cs.extend((csp.tables / csp.denominator).ravel())
    ub.extend([1.0] * n_mu)
    for t in range(m):
        cuts.append(LinearCut([], "==", 1.0, [(t * Q + x, 1.0) for x in range(Q)]))
    ns = n_mu
    if weight > 0:
        for t in range(m):
            scope = csp.scopes[t]
            for r1 in range(k):
                for r2 in range(r1, k):
                    mult = 1.0 if r1 == r2 else 2.0
                    labels = [(a, a) for a in range(q)] if r1 == r2 else \
                        [(a, b) for a in range(q) for b in range(q)]
                    for a, b in labels:
                        sel = np.flatnonzero((dig[:, r1] == a) & (dig[:, r2] == b))
                        terms = [(t * Q + int(x), 1.0) for x in sel]
                        ent = [(int(scope[r1]) * q + a, int(scope[r2]) * q + b, 1.0)]
                        sl = ns
                        ns += 1
                        cs.append(-weight * mult)
                        ub.append(2.0)
                        neg = [(i, j, -c) for i, j, c in ent]
                        cuts.append(LinearCut(neg, "<=", 0.0, terms + [(sl, -1.0)]))
                        cuts.append(LinearCut(ent, "<=", 0.0,
                                              [(x, -c) for x, c in terms] + [(sl, -1.0)]))
    prob = SdpProblem(n * q, sparse.csr_matrix((n * q, n * q)), "max",
                      block_structure=[(i * q, q) for i in range(n)], linear_cuts=cuts,
                      n_scalars=ns, scalar_objective=np.array(cs), scalar_upper=np.array(ub))
    sol = solve_sdp(prob, tol=tol, seed=seed)
    payoff = float(prob.scalar_objective[:n_mu] @ sol.scalars[:n_mu])
    return Relaxed(sol.value, sol, info={"payoff": payoff, "penalty": payoff - sol.value})


def basic_lp_csp(csp: CspInstance, eps: float) -> Relaxed:
    """Penalized BasicLP of a CSP.

    Local distributions ``mu_t`` per constraint and ``mu_i`` per variable;
    maximizes the normalized expected payoff minus the averaged
    ``sum |mu_t(x_i = a) - mu_i(a)| / eps`` consistency penalty.
    """
    n, q, k, m = csp.n, csp.q, csp.k, csp.m
    Q = q ** k
    dig = _marginal_index(csp)
    weight = 0.0 if math.isinf(eps) else 1.0 / (m * eps)
    n_mu = m * Q
    var_off = n_mu
    slack_off = var_off + n * q
    n_sl = m * k * q if weight > 0 else 0
    nvar = slack_off + n_sl
    c = np.zeros(nvar)
    c[:n_mu] = (csp.tables / csp.denominator).ravel()
    c[slack_off:] = -weight
    er, ec, ev, be = [], [], [], []
    row = 0
    for t in range(m):
        er += [row] * Q; ec += list(range(t * Q, t * Q + Q)); ev += [1.0] * Q
        be.append(1.0); row += 1
    for i in range(n):
        er += [row] * q; ec += list(range(var_off + i * q, var_off + i * q + q)); ev += [1.0] * q
        be.append(1.0); row += 1
    A_eq = sparse.csr_matrix((ev, (er, ec)), shape=(row, nvar))
    ir, ic, iv, bu = [], [], [], []
    row = 0
    if n_sl:
        for t in range(m):
            for r in range(k):
                i = int(csp.scopes[t][r])
                for a in range(q):
                    sel = t * Q + np.flatnonzero(dig[:, r] == a)
                    sl = slack_off + (t * k + r) * q + a
                    for sgn in (1.0, -1.0):
                        ir += [row] * (len(sel) + 2)
                        ic += sel.tolist() + [var_off + i * q + a, sl]
                        iv += [sgn] * len(sel) + [-sgn, -1.0]
                        bu.append(0.0)
                        row += 1
    A_ub = sparse.csr_matrix((iv, (ir, ic)), shape=(row, nvar)) if row else None
    res = solve_lp(c, A_ub=A_ub, b_ub=np.array(bu) if row else None, A_eq=A_eq,
                   b_eq=np.array(be), bounds=(0, None), sense="max")
    payoff = float(c[:n_mu] @ res.x[:n_mu])
    point = {"constraint_marginals": res.x[:n_mu].reshape(m, Q),
             "variable_marginals": res.x[var_off:slack_off].reshape(n, q)}
    return Relaxed(float(res.value), point=point,
                   info={"payoff": payoff, "penalty": payoff - float(res.value)})


# ------------------------------------------------------------ cut norm


def cutnorm_problem(A: np.ndarray) -> SdpProblem:
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    C = np.zeros((m + n, m + n))
    C[:m, m:] = A / 2
    C[m:, :m] = A.T / 2
    return SdpProblem(m + n, C, "max", diag_constraints=[(i, 1.0) for i in range(m + n)])


def cutnorm_sdp(A: np.ndarray, tol: float = DEFAULT_TOL, seed: int = 0) -> Relaxed:
    """Grothendieck relaxation: max ``sum a_ij <u_i, v_j>`` over unit vectors."""
    sol = solve_sdp(cutnorm_problem(A), tol=tol, seed=seed)
    return Relaxed(sol.value, sol)


def infty_to_one_norm(A: np.ndarray, cap: int = BRUTE_FORCE_CAP) -> float:
    """Exact ``max_{x, y in {-1,1}} x^T A y`` by enumerating row signs.

    For fixed ``x`` the best ``y`` gives ``|A^T x|_1``; ``x`` and ``-x``
    agree, so the first sign is fixed.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m == 0:
        return 0.0
    total = 1 << (m - 1)
    if total > cap:
        raise SearchSpaceTooLarge(f"2^{m - 1} sign vectors exceed the cap")
    best = -math.inf
    for start in range(0, total, 1 << 15):
        stop = min(total, start + (1 << 15))
        x = np.ones((stop - start, m))
        x[:, 1:] = 1.0 - 2.0 * _digits(start, stop, 2, m - 1)
        best = max(best, float(np.abs(x @ A).sum(axis=1).max()))
    return best


# ------------------------------------------------- dimension reduction


def dimension_reduce(solution: GramSolution, target_eps: float, seed: int,
                     target_dim: int | None = None, attempts: int = 10) -> GramSolution:
    """Random projection of a vector solution followed by net snapping.

    Vectors are projected onto ``D = ceil(log(dim) / eps^2)`` Gaussian
    directions (or ``target_dim``), rescaled back onto their norm
    constraints, snapped to a coordinate grid fine enough to be an
    ``eps/4``-net of the unit ball, and rescaled again.  Snapping changes
    any inner product by at most ``eps/2``.  Projections are redrawn until
    the objective moves by at most ``target_eps``.

    Raises
    ------
    SolverError
        When no attempt keeps the objective within ``target_eps``.
    """
    prob = solution.problem
    if prob is None:
        raise ValueError("solution must carry its problem")
    comp = _Compiled(prob)
    Y = np.asarray(solution.factor)
    dim = Y.shape[0]
    D = target_dim or int(math.ceil(math.log(max(dim, 2)) / target_eps ** 2))
    h = target_eps / (4.0 * math.sqrt(D))
    best = None
    for t in range(attempts):
        rng = make_rng(derive_seed(seed, t))
        G = rng.standard_normal((Y.shape[1], D)) / math.sqrt(D)
        P, _ = comp.factor(Y @ G)
        P = h * np.round(P / h)
        P, _ = comp.factor(P)
        X = P @ P.T
        val = prob.objective_value(X, solution.scalars)
        g = comp.cut_values(P, solution.scalars)
        cut = comp.residual(g)
        out = GramSolution(X=X, value=val, dual_bound=solution.dual_bound,
                           primal_residual=cut, dual_residual=math.nan,
                           psd_violation=0.0, cut_violation=cut,
                           iterations=0, factor=P, scalars=solution.scalars.copy(),
                           duals=solution.duals.copy(), certified=False, problem=prob)
        if best is None or abs(val - solution.value) < abs(best.value - solution.value):
            best = out
        if abs(val - solution.value) <= target_eps:
            return out
    raise SolverError(f"objective moved by {abs(best.value - solution.value):.3g} "
                      f"> {target_eps:g} after {attempts} projections")


# ------------------------------------------------------------- registry


@dataclass(frozen=True)
class RelaxationId:
    """Name of a relaxation plus its numeric parameter (``r`` or ``eps``)."""

    kind: str
    param: float | None = None

    def __str__(self):
        if self.param is None:
            return self.kind
        p = int(self.param) if self.kind == "sa" else self.param
        return f"{self.kind}:{p:g}" if isinstance(p, float) else f"{self.kind}:{p}"


_PLAIN = ("gw", "sdp3", "ug", "ug3", "cutnorm", "brute")


def parse_relaxation(text: str) -> RelaxationId:
    """Parse ``gw``, ``sdp3``, ``ug``, ``ug3``, ``sa:<r>``, ``basicsdp:<eps>``,
    ``basiclp:<eps>``, ``cutnorm`` or ``brute`` (exact optimum)."""
    kind, _, arg = text.strip().partition(":")
    if kind in _PLAIN:
        if arg:
            raise ValueError(f"relaxation {kind!r} takes no parameter")
        return RelaxationId(kind)
    if kind == "sa":
        try:
            r = int(arg)
        except ValueError:
            raise ValueError(f"bad Sherali-Adams level {arg!r}") from None
        if r not in (2, 3, 4):
            raise ValueError("Sherali-Adams level must be 2, 3 or 4")
        return RelaxationId("sa", r)
    if kind in ("basicsdp", "basiclp"):
        try:
            eps = float(arg)
        except ValueError:
            raise ValueError(f"bad penalty parameter {arg!r}") from None
        if not 0 < eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        return RelaxationId(kind, eps)
    raise ValueError(f"unknown relaxation {text!r}")


def cut_value_from_violation(violation: float) -> float:
    """Max-Cut value matching a unique-game violation (and vice versa)."""
    return 1.0 - violation


def solve_relaxation(rid: RelaxationId | str, instance, tol: float = DEFAULT_TOL,
                     seed: int = 0) -> Relaxed:
    """Evaluate a relaxation on a compatible instance.

    Graphs are accepted by every relaxation: the unique-games relaxations
    see the Max-Cut game and the CSP relaxations the Max-Cut 2-CSP.  Values
    are reported in the relaxation's own sense (violation for ``ug``/``ug3``).
    """
    if isinstance(rid, str):
        rid = parse_relaxation(rid)
    k = rid.kind
    if k == "brute":
        val, x = brute_force_opt(instance)
        return Relaxed(val, point={"assignment": x})
    if k == "cutnorm":
        if not isinstance(instance, np.ndarray):
            raise TypeError("cutnorm expects a matrix")
        return cutnorm_sdp(instance, tol=tol, seed=seed)
    if k in ("gw", "sdp3", "sa"):
        if not isinstance(instance, NormalizedGraph):
            raise TypeError(f"{rid} expects a graph")
        if k == "gw":
            return gw_sdp(instance, tol=tol, seed=seed)
        if k == "sdp3":
            return sdp3(instance, tol=tol, seed=seed)
        return sherali_adams(instance, int(rid.param))
    if k in ("ug", "ug3"):
        game = maxcut_as_unique_game(instance) if isinstance(instance, NormalizedGraph) else instance
        if not isinstance(game, UniqueGame):
            raise TypeError(f"{rid} expects a unique game or a graph")
        return ug_sdp(game, triangle_cuts=(k == "ug3"), tol=tol, seed=seed)
    csp = csp_from_graph(instance) if isinstance(instance, NormalizedGraph) else instance
    if not isinstance(csp, CspInstance):
        raise TypeError(f"{rid} expects a CSP or a graph")
    if k == "basicsdp":
        return basic_sdp_csp(csp, rid.param, seed=seed)
    return basic_lp_csp(csp, rid.param)
