"""Problem instances: weighted graphs, constraint satisfaction problems and
unique games, together with their generators, evaluators and exhaustive
solvers.

All graph weights are normalized to sum to one, so the value of a cut is
the fraction of edge weight it separates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .rng import derive_seed, make_rng

BRUTE_FORCE_CAP = 1 << 24
_CHUNK = 1 << 15


class InstanceError(ValueError):
    """Raised when an instance violates its structural invariants."""


class EmptyGeometricGraph(InstanceError):
    """A geometric graph came out without edges; ``spec`` holds the inputs."""

    def __init__(self, spec):
        super().__init__(f"empty geometric graph for {spec}")
        self.spec = spec


class SearchSpaceTooLarge(InstanceError):
    """Raised when exhaustive enumeration would exceed the search cap."""


# ---------------------------------------------------------------- graphs


class NormalizedGraph:
    """Simple undirected graph with nonnegative weights summing to one.

    Edges are stored in canonical order: ``u < v`` and sorted by ``(u, v)``.
    Optional metadata are the embedding ``vectors`` of geometric graphs and
    ``labels``, the original vertex ids of an induced subgraph.
    """

    __slots__ = ("n", "u", "v", "w", "vectors", "labels")

    def __init__(self, n, u, v, w, vectors=None, labels=None, check=True):
        self.n = int(n)
        self.u = np.asarray(u, dtype=np.int64).reshape(-1)
        self.v = np.asarray(v, dtype=np.int64).reshape(-1)
        self.w = np.asarray(w, dtype=float).reshape(-1)
        self.vectors = None if vectors is None else np.asarray(vectors, dtype=float)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)
        if check:
            self._check()
        for arr in (self.u, self.v, self.w, self.vectors, self.labels):
            if arr is not None:
                arr.flags.writeable = False

    def _check(self):
        n, u, v, w = self.n, self.u, self.v, self.w
        if n < 0:
            raise InstanceError("vertex count must be nonnegative")
        if not (len(u) == len(v) == len(w)):
            raise InstanceError("edge arrays have different lengths")
        if len(u):
            if u.min() < 0 or v.max() >= n:
                raise InstanceError("edge endpoint out of range")
            if np.any(u >= v):
                raise InstanceError("edges must satisfy u < v (no self-loops)")
            key = u * n + v
            if np.any(np.diff(key) <= 0):
                raise InstanceError("edges must be sorted and free of duplicates")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InstanceError("edge weights must be finite and nonnegative")
            if abs(math.fsum(w) - 1.0) > 1e-12:
                raise InstanceError("edge weights must sum to one")
        if self.vectors is not None and self.vectors.shape[0] != n:
            raise InstanceError("one embedding vector per vertex is required")
        if self.labels is not None and self.labels.shape != (n,):
            raise InstanceError("one label per vertex is required")

    # basic views
    @property
    def m(self) -> int:
        return len(self.u)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.u, self.v, self.w)]

    def adjacency(self, weighted: bool = True) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        vals = self.w if weighted else 1.0
        A[self.u, self.v] = vals
        A[self.v, self.u] = vals
        return A

    def sparse_adjacency(self, weighted: bool = True):
        from scipy import sparse

        vals = self.w if weighted else np.ones(self.m)
        A = sparse.coo_matrix(
            (np.concatenate([vals, vals]),
             (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]))),
            shape=(self.n, self.n),
        )
        return A.tocsr()

    def laplacian(self) -> np.ndarray:
        A = self.adjacency()
        return np.diag(A.sum(axis=1)) - A

    def degrees(self) -> np.ndarray:
        """Unweighted degree of every vertex."""
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n)

    def neighbors(self) -> list[np.ndarray]:
        order = [[] for _ in range(self.n)]
        for a, b in zip(self.u.tolist(), self.v.tolist()):
            order[a].append(b)
            order[b].append(a)
        return [np.array(sorted(x), dtype=np.int64) for x in order]

    def is_regular(self) -> bool:
        deg = self.degrees()
        return bool(self.n == 0 or deg.min() == deg.max())

    def __eq__(self, other):
        if not isinstance(other, NormalizedGraph):
            return NotImplemented
        same = (self.n == other.n and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v) and np.array_equal(self.w, other.w))
        return bool(same)

    def __hash__(self):
        return hash((self.n, self.u.tobytes(), self.v.tobytes(), self.w.tobytes()))

    def __repr__(self):
        return f"NormalizedGraph(n={self.n}, m={self.m})"


def normalize(n, edges=None, vectors=None, labels=None,
              allow_empty: bool = False) -> NormalizedGraph:
    """Build a :class:`NormalizedGraph` from a raw weighted edge list.

    Parameters
    ----------
    n : int or NormalizedGraph
        Number of vertices, or an existing graph to re-normalize.
    edges : iterable of (u, v) or (u, v, w)
        Edge list; missing weights default to 1.  Orientation is ignored.

    allow_empty : bool
        Return an edgeless graph instead of raising when no weight is given.

    Notes
    -----
    All weights are divided by their total.  The operation is idempotent:
    an input whose weights already sum to one (up to a few ulps) is kept
    bit-for-bit.
    """
    if isinstance(n, NormalizedGraph):
        g = n
        n, edges = g.n, g.edges
        vectors = g.vectors if vectors is None else vectors
        labels = g.labels if labels is None else labels
    n = int(n)
    rows = []
    for e in edges if edges is not None else []:
        a, b = int(e[0]), int(e[1])
        wt = float(e[2]) if len(e) > 2 else 1.0
        if a == b:
            raise InstanceError(f"self-loop at vertex {a}")
        if wt < 0 or not math.isfinite(wt):
            raise InstanceError("edge weights must be finite and nonnegative")
        rows.append((min(a, b), max(a, b), wt))
    rows.sort(key=lambda r: (r[0], r[1]))
    for r0, r1 in zip(rows, rows[1:]):
        if r0[:2] == r1[:2]:
            raise InstanceError(f"duplicate edge {r0[:2]}")
    total = math.fsum(r[2] for r in rows)
    if not rows or total <= 0:
        if allow_empty:
            return NormalizedGraph(n, [], [], [], vectors, labels)
        raise InstanceError("cannot normalize weightless graph")
    u, v, w = (np.array(c) for c in zip(*rows))
    w = w.astype(float)
    if abs(total - 1.0) > 4e-16 * len(w):
        w = w / total
    return NormalizedGraph(n, u, v, w, vectors, labels)


def induced_subgraph(g: NormalizedGraph, vertices: Sequence[int]) -> NormalizedGraph:
    """Subgraph induced on ``vertices`` (relabeled in sorted order), re-normalized."""
    keep = np.unique(np.asarray(vertices, dtype=np.int64))
    pos = -np.ones(g.n, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    mask = (pos[g.u] >= 0) & (pos[g.v] >= 0)
    edges = zip(pos[g.u[mask]], pos[g.v[mask]], g.w[mask])
    vectors = None if g.vectors is None else g.vectors[keep]
    base = keep if g.labels is None else g.labels[keep]
    return normalize(len(keep), list(edges), vectors=vectors, labels=base, allow_empty=True)


@dataclass(frozen=True)
class GeometricSpec:
    """Parameters of a random geometric graph on the unit sphere."""

    n: int
    d: int
    gamma: float
    seed: int

    def __post_init__(self):
        if self.n < 1 or self.d < 2:
            raise InstanceError("need n >= 1 and d >= 2")
        if not 0 < self.gamma < 1:
            raise InstanceError("gamma must lie in (0, 1)")


def sphere_points(n: int, d: int, seed: int) -> np.ndarray:
    """``n`` independent uniform points on the unit sphere in ``R^d``."""
    rng = make_rng(seed)
    pts = rng.standard_normal((n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def gen_geometric(spec: GeometricSpec) -> NormalizedGraph:
    """Geometric graph joining nearly antipodal sphere points.

    Vertices are uniform points ``x_i`` of the unit sphere; ``i ~ j`` when
    ``|x_i - x_j|^2 / 4 >= 1 - gamma``.  All edges get equal weight and the
    points are kept as ``vectors`` metadata.
    """
    pts = sphere_points(spec.n, spec.d, spec.seed)
    thresh = 1.0 - spec.gamma
    edges = []
    for i in range(spec.n - 1):
        diff = pts[i + 1:] - pts[i]
        far = 0.25 * np.einsum("ij,ij->i", diff, diff) >= thresh
        edges.extend((i, i + 1 + j) for j in np.flatnonzero(far))
    if not edges:
        raise EmptyGeometricGraph(spec)
    return normalize(spec.n, edges, vectors=pts)


def cap_measure(gamma: float, d: int) -> float:
    """Probability that two uniform points of ``S^{d-1}`` are joined.

    This is ``Pr[<x, y> <= 2 gamma - 1]``, the measure of the spherical cap
    around ``-x`` seen from a fixed ``x``, computed by integrating the
    density of the angle, which is proportional to ``sin^(d-2)``.
    """
    if d < 2:
        raise InstanceError("dimension must be at least 2")
    if not 0 < gamma < 1:
        raise InstanceError(f"gamma must lie in (0, 1), got {gamma!r}")
    theta0 = math.acos(2.0 * gamma - 1.0)
    e = d - 2
    num, _ = integrate.quad(lambda t: math.sin(t) ** e, theta0, math.pi,
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    log_den = 0.5 * math.log(math.pi) + special.gammaln((d - 1) / 2) - special.gammaln(d / 2)
    return min(1.0, num / math.exp(log_den))


def gen_gnp(n: int, p: float, seed: int) -> NormalizedGraph:
    """Erdos-Renyi graph ``G(n, p)`` with unit (then normalized) weights."""
    if not 0 <= p <= 1:
        raise InstanceError("p must lie in [0, 1]")
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return normalize(n, list(zip(iu[keep], ju[keep])))


def gen_cycle(k: int) -> NormalizedGraph:
    if k < 3:
        raise InstanceError("a cycle needs at least 3 vertices")
    return normalize(k, [(i, (i + 1) % k) for i in range(k)])


def gen_path(n: int) -> NormalizedGraph:
    return normalize(n, [(i, i + 1) for i in range(n - 1)])


def gen_complete(n: int) -> NormalizedGraph:
    return normalize(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def gen_star(leaves: int) -> NormalizedGraph:
    """Star with center 0 and ``leaves`` leaves."""
    return normalize(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def gen_complete_bipartite(a: int, b: int) -> NormalizedGraph:
    return normalize(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def gen_regular(n: int, degree: int, seed: int) -> NormalizedGraph:
    """Uniform random ``degree``-regular simple graph (pairing model)."""
    import networkx as nx

    G = nx.random_regular_graph(degree, n, seed=derive_seed(seed, 0) % (1 << 32))
    return normalize(n, list(G.edges()))


# ------------------------------------------------------------------ CSPs


class CspInstance:
    """Max-k-CSP with real-valued payoffs on ``n`` variables over ``[q]``.

    Constraint ``r`` acts on the ordered ``scopes[r]`` (distinct variables)
    and pays ``tables[r][x_s1 * q^(k-1) + ... + x_sk]``.  The value of an
    assignment is the sum of payoffs divided by ``denominator``.  For a base
    instance the denominator is the norm mass ``sum_r max |P_r|`` and every
    payoff is bounded by one; rescaled sub-instances keep the denominator of
    their parent.
    """

    __slots__ = ("n", "q", "k", "scopes", "tables", "denominator")

    def __init__(self, n, q, scopes, tables, denominator):
        self.n, self.q = int(n), int(q)
        self.scopes = np.asarray(scopes, dtype=np.int64)
        self.tables = np.asarray(tables, dtype=float)
        if self.scopes.ndim != 2:
            raise InstanceError("scopes must be a 2-d array")
        self.k = self.scopes.shape[1]
        if self.tables.shape != (len(self.scopes), self.q ** self.k):
            raise InstanceError("tables must have shape (m, q**k)")
        if not 1 <= self.k <= 4 or not 2 <= self.q <= 16:
            raise InstanceError("supported range is k <= 4 and 2 <= q <= 16")
        if len(self.scopes):
            if self.scopes.min() < 0 or self.scopes.max() >= self.n:
                raise InstanceError("scope variable out of range")
            srt = np.sort(self.scopes, axis=1)
            if np.any(np.diff(srt, axis=1) == 0):
                raise InstanceError("scope variables must be distinct")
        self.denominator = float(denominator)
        if not self.denominator > 0:
            raise InstanceError("denominator must be positive")
        self.scopes.flags.writeable = False
        self.tables.flags.writeable = False

    @classmethod
    def from_constraints(cls, n, q, constraints):
        """Base instance from ``(scope, table)`` pairs with ``|P| <= 1``."""
        scopes, tables = [], []
        for scope, table in constraints:
            t = np.asarray(table, dtype=float).reshape(-1)
            if t.size and np.abs(t).max() > 1 + 1e-12:
                raise InstanceError("payoffs of a base instance must satisfy |P| <= 1")
            scopes.append(list(scope))
            tables.append(t)
        if not scopes:
            raise InstanceError("an instance needs at least one constraint")
        tables = np.array(tables)
        mass = float(np.abs(tables).max(axis=1).sum())
        return cls(n, q, scopes, tables, mass if mass > 0 else 1.0)

    @property
    def m(self) -> int:
        return len(self.scopes)

    def norms(self) -> np.ndarray:
        """``|P|`` for every constraint."""
        if self.m == 0:
            return np.zeros(0)
        return np.abs(self.tables).max(axis=1)

    def table_index(self, values: np.ndarray) -> np.ndarray:
        """Flat table index for per-scope-slot values of shape (..., k)."""
        w = self.q ** np.arange(self.k - 1, -1, -1)
        return np.asarray(values) @ w

    def active_variables(self) -> np.ndarray:
        return np.unique(self.scopes)

    def __repr__(self):
        return f"CspInstance(n={self.n}, q={self.q}, k={self.k}, m={self.m})"


def csp_from_graph(g: NormalizedGraph) -> CspInstance:
    """Max-Cut of ``g`` as a 2-CSP with one constraint per edge orientation.

    Both orientations are present so the instance is symmetric in its
    scope positions; its value on ``x`` equals the cut weight of ``x``.
    """
    if g.m == 0:
        raise InstanceError("graph has no edges")
    scale = g.w / g.w.max()
    cut = np.array([0.0, 1.0, 1.0, 0.0])
    cons = [((a, b), s * cut) for a, b, s in zip(g.u, g.v, scale)]
    cons += [((b, a), s * cut) for a, b, s in zip(g.u, g.v, scale)]
    return CspInstance.from_constraints(g.n, 2, cons)


def gen_random_csp(n: int, q: int, k: int, m: int, seed: int,
                   planted: bool = False) -> CspInstance:
    """Random k-CSP with ``m`` constraints on uniformly random scopes.

    Payoff tables are uniform in ``[0, 1)``.  With ``planted=True`` a hidden
    assignment (drawn first) receives payoff exactly 1 in every constraint,
    so it attains the per-constraint maximum everywhere.
    """
    rng = make_rng(seed)
    hidden = rng.integers(0, q, n)
    scopes = np.array([rng.choice(n, size=k, replace=False) for _ in range(m)])
    tables = rng.random((m, q ** k))
    if planted:
        w = q ** np.arange(k - 1, -1, -1)
        tables[np.arange(m), hidden[scopes] @ w] = 1.0
    return CspInstance.from_constraints(n, q, list(zip(scopes, tables)))


def gen_dense_csp(n: int, q: int, degree: int, seed: int,
                  planted: bool = False) -> CspInstance:
    """Random 2-CSP whose constraint graph is a random ``degree``-regular graph.

    Each edge carries one constraint in each orientation with the same
    table (transposed), which makes the instance degree-regular in every
    scope position.
    """
    g = gen_regular(n, degree, seed)
    rng = make_rng(derive_seed(seed, 1))
    hidden = rng.integers(0, q, n)
    cons = []
    for a, b in zip(g.u.tolist(), g.v.tolist()):
        t = rng.random((q, q))
        if planted:
            t[hidden[a], hidden[b]] = 1.0
        cons.append(((a, b), t.reshape(-1)))
        cons.append(((b, a), t.T.reshape(-1)))
    return CspInstance.from_constraints(n, q, cons)


def density(csp: CspInstance) -> tuple[float, float]:
    """Minimum and maximum star mass of a CSP.

    For each scope position ``r`` and each fixing of the other ``k - 1``
    positions that occurs in the instance, sum ``|P|`` over the constraints
    matching the fixing.  Returns the extremes over all such stars.
    """
    norms = csp.norms()
    lo, hi = math.inf, -math.inf
    for r in range(csp.k):
        others = np.delete(csp.scopes, r, axis=1)
        if others.shape[1] == 0:
            mass = np.array([norms.sum()])
        else:
            _, inv = np.unique(others, axis=0, return_inverse=True)
            mass = np.bincount(inv.reshape(-1), weights=norms)
        lo, hi = min(lo, mass.min()), max(hi, mass.max())
    return float(lo), float(hi)


# ----------------------------------------------------------- unique games


class UniqueGame:
    """Unique game over labels ``[R]`` on a weighted constraint graph.

    Constraint ``e`` joins ``u[e] < v[e]`` and requires
    ``label(v) == perms[e][label(u)]``.  Weights sum to one.  A multigame may
    hold several constraints on the same pair; a simple game may not.
    """

    __slots__ = ("n", "R", "u", "v", "w", "perms", "multigame")

    def __init__(self, n, R, u, v, w, perms, multigame=False, check=True):
        self.n, self.R, self.multigame = int(n), int(R), bool(multigame)
        u = np.asarray(u, dtype=np.int64).reshape(-1)
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        perms = np.asarray(perms, dtype=np.int64).reshape(len(u), self.R)
        w = np.asarray(w, dtype=float).reshape(-1)
        # orient every constraint from the smaller endpoint
        flip = u > v
        if np.any(flip):
            inv = np.argsort(perms[flip], axis=1)
            perms = perms.copy()
            perms[flip] = inv
            u, v = np.where(flip, v, u), np.where(flip, u, v)
        order = np.lexsort((v, u))
        self.u, self.v, self.w, self.perms = u[order], v[order], w[order], perms[order]
        if check:
            self._check()
        total = math.fsum(self.w)
        if len(self.w) and abs(total - 1.0) > 4e-16 * len(self.w):
            self.w = self.w / total
        for arr in (self.u, self.v, self.w, self.perms):
            arr.flags.writeable = False

    def _check(self):
        if self.R < 1:
            raise InstanceError("need at least one label")
        if len(self.u):
            if self.u.min() < 0 or self.v.max() >= self.n:
                raise InstanceError("constraint endpoint out of range")
            if not self.multigame and np.any(self.u == self.v):
                raise InstanceError("self-loop constraint in a simple game")
            srt = np.sort(self.perms, axis=1)
            if not np.array_equal(srt, np.broadcast_to(np.arange(self.R), srt.shape)):
                raise InstanceError("every constraint must carry a permutation")
            if np.any(self.w < 0):
                raise InstanceError("weights must be nonnegative")
            if not self.multigame:
                key = self.u * self.n + self.v
                if np.any(np.diff(key) == 0):
                    raise InstanceError("duplicate pair in a simple game")

    @property
    def m(self) -> int:
        return len(self.u)

    @property
    def graph(self) -> NormalizedGraph:
        """Constraint graph with weights aggregated per pair (loops dropped)."""
        keep = self.u != self.v
        key = self.u[keep] * self.n + self.v[keep]
        uniq, inv = np.unique(key, return_inverse=True)
        wts = np.bincount(inv, weights=self.w[keep])
        return normalize(self.n, list(zip(uniq // self.n, uniq % self.n, wts)))

    def perm(self, a: int, b: int) -> np.ndarray:
        """``pi_{b<-a}``: label of ``b`` forced by each label of ``a``.

        Non-adjacent pairs (including ``a == b``) map through the identity.
        """
        lo, hi = min(a, b), max(a, b)
        idx = np.flatnonzero((self.u == lo) & (self.v == hi))
        if len(idx) == 0 or a == b:
            return np.arange(self.R)
        if len(idx) > 1:
            raise InstanceError("pair carries several constraints")
        p = self.perms[idx[0]]
        return p.copy() if a < b else np.argsort(p)

    @property
    def perm_map(self) -> dict:
        """Dictionary ``(a, b) -> pi_{b<-a}`` over both orientations."""
        out = {}
        for a, b, p in zip(self.u.tolist(), self.v.tolist(), self.perms):
            out[(a, b)] = p.copy()
            out[(b, a)] = np.argsort(p)
        return out

    def __repr__(self):
        kind = "multigame" if self.multigame else "game"
        return f"UniqueGame(n={self.n}, R={self.R}, m={self.m}, {kind})"


def maxcut_as_unique_game(g: NormalizedGraph) -> UniqueGame:
    """Two-label game whose every constraint demands different labels."""
    perms = np.tile([1, 0], (g.m, 1))
    return UniqueGame(g.n, 2, g.u, g.v, g.w, perms)


def induced_game(game: UniqueGame, vertices: Sequence[int]) -> UniqueGame:
    """Sub-game on ``vertices`` (relabeled in sorted order), re-normalized."""
    keep = np.unique(np.asarray(vertices, dtype=np.int64))
    pos = -np.ones(game.n, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    mask = (pos[game.u] >= 0) & (pos[game.v] >= 0)
    w = game.w[mask]
    if len(w) and w.sum() > 0:
        w = w / w.sum()
    return UniqueGame(len(keep), game.R, pos[game.u[mask]], pos[game.v[mask]], w,
                      game.perms[mask], multigame=game.multigame)


# ------------------------------------------------------------- evaluation


def evaluate(instance, assignment) -> float:
    """Objective value of an assignment.

    Graphs: weight of edges cut by a two-coloring (``0/1`` or ``+-1``).
    CSPs: normalized payoff.  Unique games: weight of satisfied constraints.
    """
    x = np.asarray(assignment).astype(np.int64)
    if isinstance(instance, NormalizedGraph):
        if x.shape != (instance.n,):
            raise InstanceError("assignment length mismatch")
        return float(np.dot(instance.w, x[instance.u] != x[instance.v]))
    if isinstance(instance, CspInstance):
        if x.shape != (instance.n,) or x.min(initial=0) < 0 or x.max(initial=0) >= instance.q:
            raise InstanceError("assignment must lie in [q]^n")
        if instance.m == 0:
            return 0.0
        idx = instance.table_index(x[instance.scopes])
        return float(instance.tables[np.arange(instance.m), idx].sum() / instance.denominator)
    if isinstance(instance, UniqueGame):
        if x.shape != (instance.n,):
            raise InstanceError("assignment length mismatch")
        ok = instance.perms[np.arange(instance.m), x[instance.u]] == x[instance.v]
        return float(np.dot(instance.w, ok))
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def _digits(start: int, stop: int, base: int, width: int) -> np.ndarray:
    """Base-``base`` digits (most significant first) of ``start..stop-1``."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), width), dtype=np.int64)
    for c in range(width - 1, -1, -1):
        out[:, c] = idx % base
        idx //= base
    return out


def _first_argmax(best_val, best_pos, vals, offset, atol=1e-12):
    top = vals.max()
    if top > best_val + atol:
        return float(top), offset + int(np.flatnonzero(vals >= top - atol)[0])
    return best_val, best_pos


def brute_force_opt(instance, cap: int = BRUTE_FORCE_CAP) -> tuple[float, np.ndarray]:
    """Exact optimum and the lexicographically smallest optimal assignment.

    Enumerates assignments in lexicographic order (variable 0 most
    significant).  Graphs are solved as Max-Cut with vertex 0 fixed to
    side 0.  For CSPs only variables that occur in some constraint are
    enumerated; the rest are set to 0.  Unique games maximize satisfied
    weight.

    Raises
    ------
    SearchSpaceTooLarge
        If the number of assignments to enumerate exceeds ``cap``.
    """
    if isinstance(instance, NormalizedGraph):
        return _maxcut_brute(instance, cap)
    if isinstance(instance, CspInstance):
        return _csp_brute(instance, cap)
    if isinstance(instance, UniqueGame):
        return _game_brute(instance, cap)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def _maxcut_brute(g, cap):
    n = g.n
    if n <= 1 or g.m == 0:
        return 0.0, np.zeros(n, dtype=np.int64)
    total = 1 << (n - 1)
    if total > cap:
        raise SearchSpaceTooLarge(f"2^{n - 1} cuts exceed the cap {cap}")
    A = g.adjacency()
    W = float(g.w.sum())
    best, pos = -math.inf, 0
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        bits = np.zeros((stop - start, n), dtype=np.int64)
        bits[:, 1:] = _digits(start, stop, 2, n - 1)
        s = 1.0 - 2.0 * bits
        vals = 0.5 * (W - 0.5 * np.einsum("ij,ij->i", s @ A, s))
        best, pos = _first_argmax(best, pos, vals, start)
    x = np.zeros(n, dtype=np.int64)
    x[1:] = _digits(pos, pos + 1, 2, n - 1)[0]
    return evaluate(g, x), x


def _csp_brute(csp, cap):
    act = csp.active_variables()
    a, q = len(act), csp.q
    if q ** a > cap:
        raise SearchSpaceTooLarge(f"{q}^{a} assignments exceed the cap {cap}")
    col = np.searchsorted(act, csp.scopes)
    rows = np.arange(csp.m)
    best, pos = -math.inf, 0
    total = q ** a
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        dig = _digits(start, stop, q, a)
        idx = csp.table_index(dig[:, col])
        vals = csp.tables[rows, idx].sum(axis=1)
        best, pos = _first_argmax(best, pos, vals, start)
    x = np.zeros(csp.n, dtype=np.int64)
    x[act] = _digits(pos, pos + 1, q, a)[0]
    return evaluate(csp, x), x


def _game_brute(game, cap):
    n, R = game.n, game.R
    if R ** n > cap:
        raise SearchSpaceTooLarge(f"{R}^{n} labelings exceed the cap {cap}")
    rows = np.arange(game.m)
    best, pos = -math.inf, 0
    total = R ** n
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        lab = _digits(start, stop, R, n)
        ok = game.perms[rows, lab[:, game.u]] == lab[:, game.v]
        best, pos = _first_argmax(best, pos, ok @ game.w, start)
    x = _digits(pos, pos + 1, R, n)[0]
    return evaluate(game, x), x


def certified_opt(csp: CspInstance, cap: int = BRUTE_FORCE_CAP) -> tuple[float, np.ndarray]:
    """Exact optimum of a CSP, using the per-constraint bound when it is tight.

    The value of any assignment is at most ``sum_r max_x P_r(x)`` divided by
    the denominator.  If some assignment attains the maximum of every
    constraint simultaneously it is optimal; this is detected by
    propagating the per-constraint argmax sets, which is cheap when each
    constraint has a unique maximizer.  Otherwise falls back to
    :func:`brute_force_opt`.
    """
    if csp.m == 0:
        return 0.0, np.zeros(csp.n, dtype=np.int64)
    top = csp.tables.max(axis=1)
    x = -np.ones(csp.n, dtype=np.int64)
    consistent = True
    for r in range(csp.m):
        hits = np.flatnonzero(csp.tables[r] >= top[r])
        if len(hits) != 1:
            consistent = False
            break
        vals = _digits(hits[0], hits[0] + 1, csp.q, csp.k)[0]
        sc = csp.scopes[r]
        prev = x[sc]
        if np.any((prev >= 0) & (prev != vals)):
            consistent = False
            break
        x[sc] = vals
    if consistent:
        x[x < 0] = 0
        val = evaluate(csp, x)
        if abs(val - top.sum() / csp.denominator) <= 1e-12:
            return val, x
    return brute_force_opt(csp, cap)
