"""Third-power proxy games, subsample proxies and the decoding operator.

A length-3 walk ``(u, i, j, v)`` of a unique game is drawn by picking a
constraint ``(i, j)`` (either orientation) by weight and then one neighbour
of each middle vertex.  The walk carries the composed permutation
``pi_{v<-j} o pi_{j<-i} o pi_{i<-u}``.  The third power collects all walks
as weighted constraints.

Unique-game solutions are Gram matrices indexed by ``vertex * R + label``.
Their objective is the mean over constraints and labels of
``|u_a - v_pi(a)|^2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .instances import InstanceError, UniqueGame
from .relaxations import ug_sdp
from .rng import derive_seed, make_rng
from .sdp_core import DEFAULT_TOL
from .subsampling import vertex_subsample_game


# ------------------------------------------------------------ helpers


def _arcs(game: UniqueGame):
    """Both orientations of every constraint, grouped by tail.

    Returns ``(tail, head, weight, perm, offsets)`` where ``perm[t]`` maps a
    label of the tail to the label it forces on the head.
    """
    if game.multigame or np.any(game.u == game.v):
        raise InstanceError("walks are defined on simple games only")
    tail = np.concatenate([game.u, game.v])
    head = np.concatenate([game.v, game.u])
    w = np.concatenate([game.w, game.w])
    perm = np.concatenate([game.perms, np.argsort(game.perms, axis=1)])
    order = np.argsort(tail, kind="stable")
    tail, head, w, perm = tail[order], head[order], w[order], perm[order]
    offsets = np.searchsorted(tail, np.arange(game.n + 1))
    return tail, head, w, perm, offsets


@dataclass
class _Candidates:
    """For each vertex ``i``: the vertices ``F(i)`` may map to, their
    probabilities, and ``pi_{u<-i}`` for each candidate ``u``."""

    verts: list
    probs: list
    perms: list          # pi_{u<-i}, shape (len, R)
    fallback: np.ndarray  # bool per vertex

    def inverse_perms(self, i):
        return np.argsort(self.perms[i], axis=1)


def _neighbour_candidates(game: UniqueGame, weighted: bool = True) -> _Candidates:
    tail, head, w, perm, off = _arcs(game)
    verts, probs, perms = [], [], []
    for i in range(game.n):
        s = slice(off[i], off[i + 1])
        wi = w[s] if weighted else np.ones(off[i + 1] - off[i])
        verts.append(head[s])
        probs.append(wi / wi.sum() if len(wi) else wi)
        perms.append(perm[s])
    return _Candidates(verts, probs, perms, np.zeros(game.n, dtype=bool))


def _subset_candidates(game: UniqueGame, W) -> _Candidates:
    """Uniform neighbours inside ``W``; all of ``W`` (identity maps) if none."""
    W = np.asarray(W, dtype=np.int64)
    inside = np.zeros(game.n, dtype=bool)
    inside[W] = True
    tail, head, w, perm, off = _arcs(game)
    R = game.R
    verts, probs, perms = [], [], []
    fb = np.zeros(game.n, dtype=bool)
    for i in range(game.n):
        s = slice(off[i], off[i + 1])
        keep = inside[head[s]]
        if keep.any():
            verts.append(head[s][keep])
            perms.append(perm[s][keep])
        else:
            fb[i] = True
            verts.append(W.copy())
            perms.append(np.tile(np.arange(R), (len(W), 1)))
        probs.append(np.full(len(verts[-1]), 1.0 / len(verts[-1])))
    return _Candidates(verts, probs, perms, fb)


@dataclass
class Walks:
    """Weighted length-3 walks ``(u, i, j, v)`` with composed permutations."""

    u: np.ndarray
    i: np.ndarray
    j: np.ndarray
    v: np.ndarray
    weight: np.ndarray
    perm: np.ndarray

    def __len__(self):
        return len(self.u)

    def path_edges(self):
        for t in range(len(self)):
            yield PathEdge((int(self.u[t]), int(self.v[t])),
                           (int(self.u[t]), int(self.i[t]), int(self.j[t]), int(self.v[t])),
                           self.perm[t].copy(), float(self.weight[t]))


@dataclass
class PathEdge:
    """One walk: its endpoints, the witness path and the composed permutation."""

    endpoints: tuple
    path: tuple
    perm: np.ndarray
    weight: float


def _compose(game: UniqueGame, cand: _Candidates) -> Walks:
    """Enumerate ``(u, i, j, v)`` with ``u ~ cand(i)``, ``v ~ cand(j)``."""
    tail, head, w, perm, _ = _arcs(game)
    R = game.R
    out = {k: [] for k in ("u", "i", "j", "v", "w", "p")}
    for t in range(len(tail)):
        i, j = int(tail[t]), int(head[t])
        cu, cv = cand.verts[i], cand.verts[j]
        if len(cu) == 0 or len(cv) == 0:
            continue
        to_i = cand.inverse_perms(i)           # pi_{i<-u}
        from_j = cand.perms[j]                 # pi_{v<-j}
        mid = perm[t][to_i]                    # pi_{j<-i} o pi_{i<-u}, (|cu|, R)
        comp = from_j[np.arange(len(cv))[None, :, None], mid[:, None, :]]
        pw = 0.5 * w[t] * np.outer(cand.probs[i], cand.probs[j])
        out["u"].append(np.repeat(cu, len(cv)))
        out["v"].append(np.tile(cv, len(cu)))
        out["i"].append(np.full(len(cu) * len(cv), i))
        out["j"].append(np.full(len(cu) * len(cv), j))
        out["w"].append(pw.ravel())
        out["p"].append(comp.reshape(-1, R))
    if not out["u"]:
        raise InstanceError("game has no length-3 walks")
    cat = {k: np.concatenate(v) for k, v in out.items()}
    return Walks(cat["u"], cat["i"], cat["j"], cat["v"], cat["w"], cat["p"])


def length3_walks(game: UniqueGame) -> Walks:
    """All length-3 walks; neighbours are picked proportionally to weight."""
    return _compose(game, _neighbour_candidates(game))


def _aggregate(n, R, u, v, w, perms, keep_closed: bool) -> UniqueGame:
    """Merge walks with equal endpoints and permutation into one constraint."""
    u, v, perms = u.copy(), v.copy(), perms.copy()
    flip = u > v
    perms[flip] = np.argsort(perms[flip], axis=1)
    u[flip], v[flip] = v[flip], u[flip].copy()
    loop = u == v
    if not keep_closed:
        u, v, w, perms, loop = u[~loop], v[~loop], w[~loop], perms[~loop], loop[~loop]
    elif loop.any():
        # a loop's objective is the same for a permutation and its inverse
        inv = np.argsort(perms[loop], axis=1)
        p = perms[loop]
        first = np.argmax(inv != p, axis=1)
        rows = np.arange(len(p))
        smaller = inv[rows, first] < p[rows, first]
        p[smaller] = inv[smaller]
        perms[loop] = p
    if len(u) == 0:
        raise InstanceError("game has no length-3 walks between distinct vertices")
    key = np.column_stack([u, v, perms])
    uniq, inv_idx = np.unique(key, axis=0, return_inverse=True)
    wts = np.bincount(inv_idx.ravel(), weights=w, minlength=len(uniq))
    pair = uniq[:, 0] * n + uniq[:, 1]
    multi = bool(loop.any()) or len(np.unique(pair)) < len(pair)
    return UniqueGame(n, R, uniq[:, 0], uniq[:, 1], wts / wts.sum(), uniq[:, 2:],
                      multigame=multi)


def third_power(game: UniqueGame, keep_closed: bool = False) -> UniqueGame:
    """Unique game with one constraint per length-3 walk.

    Walks between the same pair with equal composed permutations add up.
    Pairs joined by walks with different permutations yield a multigame.
    Closed walks (``u == v``) are dropped unless ``keep_closed``.  With
    ``keep_closed`` the weights are exactly the walk probabilities.
    """
    walks = length3_walks(game)
    return _aggregate(game.n, game.R, walks.u, walks.v, walks.weight, walks.perm, keep_closed)


# ------------------------------------------------------ distributions


@dataclass
class EdgeDistribution:
    """Probabilities on unordered pairs ``(a, b)`` with ``a <= b``."""

    pairs: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if len(self.probs) and abs(self.probs.sum() - 1) > 1e-12 * max(1, len(self.probs)):
            raise ValueError("probabilities must sum to one")

    @classmethod
    def from_matrix(cls, T: np.ndarray, labels=None) -> "EdgeDistribution":
        """Pair distribution from an ordered-endpoint mass matrix."""
        S = np.triu(T + T.T, 1) + np.diag(np.diag(T))
        a, b = np.nonzero(S > 0)
        p = S[a, b]
        if labels is not None:
            a, b = np.asarray(labels)[a], np.asarray(labels)[b]
        return cls(np.column_stack([a, b]), p / p.sum())

    @classmethod
    def from_game(cls, game: UniqueGame) -> "EdgeDistribution":
        key = game.u * game.n + game.v
        uniq, inv = np.unique(key, return_inverse=True)
        p = np.bincount(inv, weights=game.w)
        return cls(np.column_stack([uniq // game.n, uniq % game.n]), p / p.sum())

    def as_dict(self) -> dict:
        return {(int(a), int(b)): float(p) for (a, b), p in zip(self.pairs, self.probs)}


def tv_distance(p: EdgeDistribution, q: EdgeDistribution) -> float:
    """Total variation distance over the union of the supports."""
    keys = np.concatenate([p.pairs, q.pairs])
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    k = inv.max() + 1 if len(inv) else 0
    a = np.bincount(inv[:len(p.probs)], weights=p.probs, minlength=k)
    b = np.bincount(inv[len(p.probs):], weights=q.probs, minlength=k)
    return 0.5 * float(np.abs(a - b).sum())


def _weighted_adjacency(game: UniqueGame) -> np.ndarray:
    A = np.zeros((game.n, game.n))
    np.add.at(A, (game.u, game.v), game.w)
    np.add.at(A, (game.v, game.u), game.w)
    return A


def walk_endpoint_matrix(game: UniqueGame) -> np.ndarray:
    """``T[u, v]``: probability that a length-3 walk runs from ``u`` to ``v``."""
    A = _weighted_adjacency(game)
    d = A.sum(axis=1)
    P = np.divide(A, d[:, None], out=np.zeros_like(A), where=d[:, None] > 0)
    return 0.5 * P.T @ A @ P


def induced_walk_distribution(game: UniqueGame, W) -> EdgeDistribution:
    """Walk endpoints conditioned on both lying in ``W`` (closed walks kept)."""
    W = np.unique(np.asarray(W, dtype=np.int64))
    T = walk_endpoint_matrix(game)[np.ix_(W, W)]
    if T.sum() <= 0:
        raise InstanceError("no length-3 walk has both endpoints in the sample")
    return EdgeDistribution.from_matrix(T, labels=W)


def proxy_distribution(game: UniqueGame, W) -> EdgeDistribution:
    """Endpoints of the subsample proxy: a constraint, then uniform neighbours in ``W``."""
    W = np.unique(np.asarray(W, dtype=np.int64))
    if len(W) == 0:
        raise InstanceError("sample must be nonempty")
    A = _weighted_adjacency(game)
    inside = np.zeros(game.n, dtype=bool)
    inside[W] = True
    B = (A > 0) & inside[None, :]
    cnt = B.sum(axis=1)
    B = B.astype(float)
    B[cnt == 0] = inside
    B /= B.sum(axis=1, keepdims=True)
    T = 0.5 * B.T @ A @ B
    return EdgeDistribution.from_matrix(T[np.ix_(W, W)], labels=W)


@dataclass
class ProxyGame:
    """Subsample proxy game on ``vertices`` (positions ``0..|W|-1``)."""

    game: UniqueGame
    vertices: np.ndarray
    fallback_vertices: float
    fallback_mass: float

    def distribution(self) -> EdgeDistribution:
        d = EdgeDistribution.from_game(self.game)
        return EdgeDistribution(self.vertices[d.pairs], d.probs)


def tilde_game(game: UniqueGame, W, keep_closed: bool = True) -> ProxyGame:
    """Exact proxy game of a vertex sample ``W``.

    For each constraint ``(i, j)`` of weight ``w`` every pair
    ``(u, v)`` in ``N_W(i) x N_W(j)`` receives ``w / (|N_W(i)| |N_W(j)|)``
    with the composed permutation.  A vertex without neighbours in ``W``
    maps uniformly onto ``W`` through the identity.  Reports the fraction of
    such vertices and the constraint mass touching them.
    """
    W = np.unique(np.asarray(W, dtype=np.int64))
    if len(W) == 0:
        raise InstanceError("sample must be nonempty")
    cand = _subset_candidates(game, W)
    walks = _compose(game, cand)
    pos = -np.ones(game.n, dtype=np.int64)
    pos[W] = np.arange(len(W))
    g = _aggregate(len(W), game.R, pos[walks.u], pos[walks.v], walks.weight, walks.perm,
                   keep_closed)
    fb = cand.fallback
    mass = float(game.w[fb[game.u] | fb[game.v]].sum())
    return ProxyGame(g, W, float(fb.mean()), mass)


# ---------------------------------------------------------- objectives


def ug_objective(game: UniqueGame, X: np.ndarray) -> float:
    """``E_e E_a |u_a - v_pi(a)|^2`` evaluated on a Gram matrix."""
    R = game.R
    a = np.arange(R)
    x = game.u[:, None] * R + a[None, :]
    y = game.v[:, None] * R + game.perms
    d = np.diag(X)
    terms = d[x] + d[y] - 2.0 * X[x, y]
    return float(game.w @ terms.mean(axis=1))


def ug_objective_vectors(game: UniqueGame, V: np.ndarray) -> float:
    """Same objective from the vectors themselves (rows ``vertex * R + label``)."""
    R = game.R
    x = game.u[:, None] * R + np.arange(R)[None, :]
    y = game.v[:, None] * R + game.perms
    diff = V[x] - V[y]
    return float(game.w @ np.einsum("eak,eak->ea", diff, diff).mean(axis=1))


def random_m1(n: int, R: int, rng: np.random.Generator, dim: int | None = None,
              orthogonal: bool = False) -> np.ndarray:
    """Random vector bundles with ``sum_a |u_a|^2 = 1`` per vertex.

    Gaussian rows, normalized per block.  With ``orthogonal`` each block is
    first orthogonalized and then given random squared norms summing to one.
    """
    dim = dim or n * R
    V = rng.standard_normal((n, R, dim))
    if orthogonal:
        if dim < R:
            raise ValueError("orthogonal bundles need dim >= R")
        Q, _ = np.linalg.qr(np.transpose(V, (0, 2, 1)))
        V = np.transpose(Q, (0, 2, 1))
        V *= np.sqrt(rng.dirichlet(np.ones(R), size=n))[:, :, None]
    else:
        V /= np.sqrt((V ** 2).sum(axis=(1, 2)))[:, None, None]
    return V.reshape(n * R, dim)


def assignment_vectors(x, R: int) -> np.ndarray:
    """Integral bundle: the vector of the chosen label is ``e_1``."""
    x = np.asarray(x, dtype=np.int64)
    V = np.zeros((len(x) * R, 1))
    V[np.arange(len(x)) * R + x, 0] = 1.0
    return V


def is_regular(game: UniqueGame, rtol: float = 1e-9) -> bool:
    d = _weighted_adjacency(game).sum(axis=1)
    return bool(np.all(np.abs(d - d.mean()) <= rtol * max(d.mean(), 1e-300)))


# ------------------------------------------------------------ decoding


def _positions(W, n):
    W = np.unique(np.asarray(W, dtype=np.int64))
    pos = -np.ones(n, dtype=np.int64)
    pos[W] = np.arange(len(W))
    return W, pos


def decode_solution(X_tilde: np.ndarray, F, game: UniqueGame, W) -> np.ndarray:
    """Pull a sample solution back to all vertices through ``F: V -> W``.

    Vertex ``i`` with label ``a`` receives the vector of ``F(i)`` with label
    ``pi_{F(i)<-i}(a)`` (identity when ``F(i)`` is not adjacent to ``i``).
    Every output entry is a copy of an input entry.
    """
    W, pos = _positions(W, game.n)
    F = np.asarray(F, dtype=np.int64)
    R = game.R
    if F.shape != (game.n,):
        raise InstanceError("F must map every vertex")
    if np.any((F < 0) | (F >= game.n)) or np.any(pos[F] < 0):
        bad = int(F[(F < 0) | (F >= game.n) | (pos[np.clip(F, 0, game.n - 1)] < 0)][0])
        raise InstanceError(f"F maps onto {bad}, which is not in the sample")
    X_tilde = np.asarray(X_tilde, dtype=float)
    if X_tilde.shape != (len(W) * R, len(W) * R):
        raise InstanceError("sample solution has the wrong size")
    pm = game.perm_map
    rows = np.empty(game.n * R, dtype=np.int64)
    ident = np.arange(R)
    for i in range(game.n):
        p = pm.get((i, int(F[i])), ident)
        rows[i * R:(i + 1) * R] = pos[F[i]] * R + p
    return X_tilde[np.ix_(rows, rows)]


def expected_decoding(X_tilde: np.ndarray, game: UniqueGame, W) -> np.ndarray:
    """``E_F`` of the decoded solution, with ``F(i)`` independent per vertex.

    Off-diagonal blocks average over ``(F(i), F(j))`` independently;
    diagonal blocks average over ``F(i)`` alone.
    """
    W, pos = _positions(W, game.n)
    cand = _subset_candidates(game, W)
    R, n = game.R, game.n
    M = np.zeros((n * R, len(W) * R))
    diag_blocks = []
    for i in range(n):
        blk = np.zeros((R, R))
        for u, p, sig in zip(cand.verts[i], cand.probs[i], cand.perms[i]):
            cols = pos[u] * R + sig
            M[i * R + np.arange(R), cols] += p
            blk += p * X_tilde[np.ix_(cols, cols)]
        diag_blocks.append(blk)
    X = M @ X_tilde @ M.T
    for i, blk in enumerate(diag_blocks):
        X[i * R:(i + 1) * R, i * R:(i + 1) * R] = blk
    return X


@dataclass
class DecodeCheck:
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return abs(self.lhs - self.rhs)


def decode_expectation_check(X_tilde: np.ndarray, game: UniqueGame, W) -> DecodeCheck:
    """Objective of the averaged decoded solution on the game (``lhs``)
    against the proxy game's objective on the sample solution (``rhs``)."""
    lhs = ug_objective(game, expected_decoding(X_tilde, game, W))
    rhs = ug_objective(tilde_game(game, W, keep_closed=True).game, X_tilde)
    return DecodeCheck(lhs, rhs)


# ---------------------------------------------------------- domination


@dataclass
class DominationReport:
    """Outcome of ``9 sdp(G)[X] >= sdp(G^3)[X]`` over random ``X``."""

    trials: int
    max_ratio: float
    min_margin: float
    lhs: float
    rhs: float
    violations: list = field(default_factory=list)
    regular: bool = True

    def to_dict(self) -> dict:
        return {"type": "domination_report", "trials": self.trials, "lhs": self.lhs,
                "rhs": self.rhs, "margin": self.min_margin, "max_ratio": self.max_ratio,
                "regular": self.regular,
                "violations": [{"trial": t, "lhs": a, "rhs": b} for t, a, b, _ in
                               self.violations]}


def proxy_domination_check(game: UniqueGame, trials: int, seed: int, orthogonal: bool = False,
                           dim: int | None = None, atol: float = 1e-9) -> DominationReport:
    """Sample ``X`` from random bundles and compare ``9 sdp(G)[X]`` with
    ``sdp(G^3)[X]``, where the cube uses every length-3 walk.

    ``max_ratio`` is the largest ``sdp(G^3)[X] / sdp(G)[X]`` seen; a
    violation keeps its witness vectors.
    """
    regular = is_regular(game)
    if not regular:
        warnings.warn("domination is only guaranteed on regular games", stacklevel=2)
    cube = third_power(game, keep_closed=True)
    rng = make_rng(seed)
    worst, best_ratio, at = np.inf, 0.0, (0.0, 0.0)
    bad = []
    for t in range(trials):
        V = random_m1(game.n, game.R, rng, dim=dim, orthogonal=orthogonal)
        lhs = 9.0 * ug_objective_vectors(game, V)
        rhs = ug_objective_vectors(cube, V)
        margin = lhs - rhs
        if margin < worst:
            worst, at = margin, (lhs, rhs)
        if lhs > 0:
            best_ratio = max(best_ratio, 9.0 * rhs / lhs)
        if margin < -atol:
            bad.append((t, lhs, rhs, V))
    return DominationReport(trials, best_ratio, float(worst), at[0], at[1], bad, regular)


def power_violation(game: UniqueGame, x) -> tuple[float, float]:
    """Violated mass of an assignment in the game and in its full walk cube."""
    x = np.asarray(x, dtype=np.int64)
    base = float(game.w @ (game.perms[np.arange(game.m), x[game.u]] != x[game.v]))
    walks = length3_walks(game)
    hit = walks.perm[np.arange(len(walks)), x[walks.u]] != x[walks.v]
    return base, float(walks.weight @ hit)


# ----------------------------------------------------------- sandwich


@dataclass
class SandwichReport:
    full_value: float
    values: list
    mean: float
    delta: float
    triangle: bool
    seed: int

    @property
    def lower_margin(self) -> float:
        """``mean - full / 9``; the sandwich needs this ``>= -eps``."""
        return self.mean - self.full_value / 9.0

    @property
    def upper_margin(self) -> float:
        """``full - mean``; the sandwich needs this ``>= -eps``."""
        return self.full_value - self.mean

    def holds(self, eps: float) -> bool:
        return self.lower_margin >= -eps and self.upper_margin >= -eps

    def to_dict(self) -> dict:
        return {"type": "sandwich_report", "full_value": self.full_value, "mean": self.mean,
                "values": self.values, "delta": self.delta, "triangle": self.triangle,
                "lower_margin": self.lower_margin, "upper_margin": self.upper_margin,
                "seed": self.seed}


def ug_subsample_sandwich(game: UniqueGame, triangle: bool, delta: float, trials: int,
                          seed: int, tol: float = DEFAULT_TOL,
                          full_value: float | None = None) -> SandwichReport:
    """Relaxation value of the game against its vertex subsamples."""
    if full_value is None:
        full_value = ug_sdp(game, triangle_cuts=triangle, tol=tol, seed=seed).value
    vals = []
    for t in range(trials):
        s = derive_seed(seed, t)
        sub = vertex_subsample_game(game, delta, s)
        vals.append(float(ug_sdp(sub, triangle_cuts=triangle, tol=tol, seed=s).value))
    return SandwichReport(float(full_value), vals, float(np.mean(vals)), float(delta),
                          bool(triangle), int(seed))
