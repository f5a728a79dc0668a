"""Geometric Max-Cut certification, odd-cycle covers of the sphere, greedy
seed extension for CSPs and a sampling tester for PSD-ness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .formats import instance_sha
from .instances import (CspInstance, GeometricSpec, InstanceError, NormalizedGraph, _digits,
                        evaluate, gen_geometric)
from .proxy import EdgeDistribution, tv_distance
from .relaxations import gw_sdp, sdp3
from .rng import derive_seed, make_rng
from .sdp_core import DEFAULT_TOL, min_eigenvalue

GREEDY_BLOCK_CAP = 1 << 20
PSD_SAMPLE_CONSTANT = 16
PSD_MAX_SAMPLE = 20
MAX_FAILURE_RATE = 0.5


# --------------------------------------------------------- odd cycles


def level(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``|a - b|^2 / 4`` row-wise; 1 for antipodal unit vectors."""
    diff = np.asarray(a) - np.asarray(b)
    return 0.25 * np.sum(diff * diff, axis=-1)


def cycle_length(l: float) -> int:
    """Smallest odd ``k`` whose longest great-circle stride reaches level ``l``.

    An odd ``k``-gon traversed with stride ``(k-1)/2`` has step angle
    ``pi - pi/k``; it must be at least ``arccos(1 - 2l)``.
    """
    theta = math.acos(1.0 - 2.0 * l)
    if theta >= math.pi:
        raise InstanceError(f"no odd cycle has every edge at level {l}")
    k = math.ceil(math.pi / (math.pi - theta) - 1e-12)
    k = max(k, 3)
    return k if k % 2 else k + 1


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed)."""
    Q, Rm = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(Rm))


def odd_cycle_at_level(d: int, gamma: float, l: float,
                       rotation: np.ndarray | None = None) -> np.ndarray:
    """Closed odd cycle of unit vectors whose every edge sits at level ``l``.

    Points are spaced evenly on a circle in the first two coordinates and
    joined with the longest odd stride.  They are then lifted along the
    third coordinate.  The lift ``h`` solves
    ``(1 - h^2)(1 - cos step) = 2 l`` in closed form.  Returns a
    ``(k, d)`` array in traversal order (the edge ``k-1 -> 0`` closes it),
    optionally multiplied by ``rotation``.
    """
    if d < 3:
        raise InstanceError("odd cycles at a prescribed level need d >= 3")
    if not (1.0 - gamma) - 1e-12 <= l <= 1.0 - gamma / 2 + 1e-12:
        raise InstanceError(f"level {l} outside [1 - gamma, 1 - gamma/2]")
    k = cycle_length(l)
    step = math.pi * (k - 1) / k
    cos_sq = 2.0 * l / (1.0 - math.cos(step))
    if cos_sq > 1.0 + 1e-12:
        raise InstanceError(f"no odd cycle geometry reaches level {l}")
    r = math.sqrt(min(1.0, cos_sq))
    h = math.sqrt(max(0.0, 1.0 - r * r))
    ang = step * np.arange(k)
    pts = np.zeros((k, d))
    pts[:, 0], pts[:, 1], pts[:, 2] = r * np.cos(ang), r * np.sin(ang), h
    if rotation is not None:
        pts = pts @ np.asarray(rotation).T
    return pts


def cycle_levels(pts: np.ndarray) -> np.ndarray:
    return level(pts, np.roll(pts, -1, axis=0))


def best_cycle_cut(k: int) -> int:
    """Most edges of ``C_k`` cut by a two-coloring (brute force, small ``k``)."""
    x = _digits(0, 2 ** k, 2, k)
    return int((x != np.roll(x, -1, axis=1)).sum(axis=1).max())


@dataclass
class CycleCover:
    """Rotated odd cycles snapped onto graph vertices."""

    cycles: list                 # continuous points, each (k, d)
    snapped: list                # vertex ids per cycle
    levels: list                 # target level per cycle
    failures: int
    attempts: int
    snap_radius: float
    marginal: EdgeDistribution
    tv_to_edges: float
    predicted_failure: float

    @property
    def lengths(self) -> list:
        return [len(c) for c in self.cycles]

    @property
    def failure_rate(self) -> float:
        return self.failures / self.attempts if self.attempts else 0.0

    def csv_rows(self):
        """``cycle, position, vertex, x0 .. x{d-1}`` rows for plotting."""
        rows = []
        for c, (pts, ids) in enumerate(zip(self.cycles, self.snapped)):
            for p, (x, v) in enumerate(zip(pts, ids)):
                rows.append((c, p, int(v), *map(float, x)))
        return rows


def sample_cycle_cover(spec: GeometricSpec, count: int, seed: int | None = None,
                       graph: NormalizedGraph | None = None) -> CycleCover:
    """Random odd cycles through the sphere graph's edge levels.

    Each attempt picks an edge by weight and reads its level ``l``.  When
    ``l <= 1 - gamma/2`` it builds a cycle at that level, rotates it by a
    Haar rotation and snaps every point to the nearest vertex; otherwise it
    counts a failure.  Raises when more than half of the attempts fail.
    """
    g = graph if graph is not None else gen_geometric(spec)
    if g.vectors is None:
        raise InstanceError("cycle covers need the stored sphere points")
    rng = make_rng(derive_seed(spec.seed if seed is None else seed, 0x0C7C1E))
    X = g.vectors
    edge_lv = level(X[g.u], X[g.v])
    cut = 1.0 - spec.gamma / 2
    cycles, snapped, lvls = [], [], []
    fails = 0
    radius = 0.0
    picks = rng.choice(g.m, size=count, p=g.w / g.w.sum())
    for e in picks:
        l = float(edge_lv[e])
        if l > cut:
            fails += 1
            continue
        pts = odd_cycle_at_level(spec.d, spec.gamma, max(l, 1.0 - spec.gamma),
                                 random_rotation(spec.d, rng))
        dist = ((pts[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        ids = dist.argmin(axis=1)
        radius = max(radius, float(np.sqrt(dist[np.arange(len(ids)), ids].max())))
        cycles.append(pts)
        snapped.append(ids)
        lvls.append(l)
    if count and fails > MAX_FAILURE_RATE * count:
        raise InstanceError(f"{fails} of {count} cycle attempts failed; "
                            "the dimension is likely too small")
    if snapped:
        a = np.concatenate([s for s in snapped])
        b = np.concatenate([np.roll(s, -1) for s in snapped])
        T = np.zeros((g.n, g.n))
        np.add.at(T, (a, b), 1.0)
        marginal = EdgeDistribution.from_matrix(T / T.sum())
    else:
        marginal = EdgeDistribution(np.zeros((0, 2)), np.zeros(0))
    edges = EdgeDistribution(np.column_stack([g.u, g.v]), g.w)
    predicted = float(g.w[edge_lv > cut].sum())
    return CycleCover(cycles, snapped, lvls, fails, count, radius, marginal,
                      tv_distance(marginal, edges), predicted)


# ------------------------------------------------------ certification


@dataclass
class HemisphereCut:
    first_coordinate: float
    best_random: float

    @property
    def best(self) -> float:
        return max(self.first_coordinate, self.best_random)


def hemisphere_cut(g: NormalizedGraph, seed: int = 0, hyperplanes: int = 100) -> HemisphereCut:
    """Cut by the sign of the first coordinate, and the best of random
    hyperplanes through the origin, on the stored sphere points."""
    if g.vectors is None:
        raise InstanceError("hemisphere cuts need the stored sphere points")
    X = g.vectors
    first = evaluate(g, X[:, 0] >= 0)
    rng = make_rng(seed)
    H = rng.standard_normal((X.shape[1], hyperplanes))
    side = (X @ H) >= 0
    vals = g.w @ (side[g.u] != side[g.v])
    return HemisphereCut(float(first), float(vals.max()) if hyperplanes else 0.0)


@dataclass
class Certificate:
    """Upper bound on the Max-Cut value of a generated sphere graph."""

    graph_sha: str
    method: str
    upper_bound: float
    gamma: float
    d: int
    n: int
    solver: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"type": "certificate", "graph_sha": self.graph_sha, "method": self.method,
                "upper_bound": self.upper_bound, "gamma": self.gamma, "d": self.d,
                "n": self.n, "solver": self.solver}


def certify_geometric_maxcut(spec: GeometricSpec, tol: float = DEFAULT_TOL,
                             seed: int | None = None,
                             graph: NormalizedGraph | None = None) -> Certificate:
    """Generate the sphere graph and bound its Max-Cut by the triangle SDP.

    The certificate also records the plain vector relaxation and the
    hemisphere cut, which bracket the bound from above and below.
    """
    g = graph if graph is not None else gen_geometric(spec)
    s = spec.seed if seed is None else seed
    tri = sdp3(g, tol=tol, seed=s)
    gw = gw_sdp(g, tol=tol, seed=s)
    hemi = hemisphere_cut(g, seed=s)
    sol = tri.solution
    solver = {"sdp3": tri.value, "gw_sdp": gw.value, "hemisphere": hemi.best,
              "tol": tol, "cuts": tri.info.get("cuts"), "rounds": tri.info.get("rounds")}
    if sol is not None:
        solver.update(dual_bound=sol.dual_bound, primal_residual=sol.primal_residual,
                      certified=bool(sol.certified))
    # the dual bound is a rigorous bound; the primal value matches it within tol
    upper = tri.value if sol is None else max(tri.value, sol.dual_bound)
    return Certificate(instance_sha(g), "sdp3", float(upper), spec.gamma, spec.d, spec.n,
                       solver)


# ------------------------------------------------------ greedy extension


@dataclass
class Block:
    """One part ``U_l`` of the partition and its seed set ``S_l``."""

    part: np.ndarray
    seeds: np.ndarray


def greedy_blocks(U, m: int, alpha: float, seed: int) -> list[Block]:
    """Split ``U`` into ``m`` near-equal parts with random seed sets.

    ``S_l`` is a uniform subset of ``U \\ U_l`` of size
    ``floor(alpha |U| / m)``.
    """
    U = np.unique(np.asarray(U, dtype=np.int64))
    if m < 1 or m > len(U):
        raise ValueError("need 1 <= m <= |U|")
    rng = make_rng(seed)
    size = int(math.floor(alpha * len(U) / m))
    blocks = []
    for part in np.array_split(U, m):
        rest = np.setdiff1d(U, part)
        pick = rng.choice(len(rest), size=min(size, len(rest)), replace=False)
        blocks.append(Block(part, np.sort(rest[pick])))
    return blocks


def default_block_count(eps: float) -> int:
    return min(8, math.ceil(eps ** -2))


def _inside(csp: CspInstance, vars_) -> np.ndarray:
    mask = np.zeros(csp.n, dtype=bool)
    mask[vars_] = True
    return mask[csp.scopes].all(axis=1) if csp.m else np.zeros(0, dtype=bool)


def greedy_extend(csp: CspInstance, U, blocks: list[Block], y) -> np.ndarray:
    """Extend a seed assignment on ``S`` to all of ``U``, block by block.

    ``y`` is a length-``n`` array whose entries on ``S = union S_l`` are
    read.  For block ``l`` the free variables ``U_l \\ S`` receive the
    lexicographically first maximizer of the payoff of constraints inside
    ``S_l`` plus those free variables, with every other variable fixed to
    its seed value.  Returns a length-``n`` assignment (zero outside ``U``).
    """
    U = np.unique(np.asarray(U, dtype=np.int64))
    S = np.unique(np.concatenate([b.seeds for b in blocks])) if blocks else U[:0]
    if not np.all(np.isin(S, U)):
        raise InstanceError("seed sets must lie inside U")
    y = np.asarray(y, dtype=np.int64)
    z = np.zeros(csp.n, dtype=np.int64)
    z[S] = y[S]
    for idx, b in enumerate(blocks):
        free = np.setdiff1d(b.part, S)
        if len(free) == 0:
            continue
        if csp.q ** len(free) > GREEDY_BLOCK_CAP:
            raise InstanceError(f"block {idx} has {len(free)} free variables; "
                                f"{csp.q}^{len(free)} exceeds the enumeration cap")
        keep = _inside(csp, np.concatenate([b.seeds, free]))
        scopes, tables = csp.scopes[keep], csp.tables[keep]
        base = np.zeros(csp.n, dtype=np.int64)
        base[S] = y[S]
        total = csp.q ** len(free)
        best, best_pos = -np.inf, 0
        chunk = 1 << 14
        for start in range(0, total, chunk):
            Y = _digits(start, min(total, start + chunk), csp.q, len(free))
            A = np.broadcast_to(base, (len(Y), csp.n)).copy()
            A[:, free] = Y
            if len(scopes):
                vals = tables[np.arange(len(scopes))[None, :],
                              csp.table_index(A[:, scopes])].sum(axis=1)
            else:
                vals = np.zeros(len(Y))
            top = vals.max()
            if top > best + 1e-12:
                best, best_pos = float(top), start + int(np.flatnonzero(vals >= top - 1e-12)[0])
        z[free] = _digits(best_pos, best_pos + 1, csp.q, len(free))[0]
    return z


def restrict(csp: CspInstance, vars_) -> CspInstance:
    """Base instance formed by the constraints inside ``vars_``."""
    keep = _inside(csp, np.asarray(vars_, dtype=np.int64))
    if not keep.any():
        raise InstanceError("no constraint lies inside the variable set")
    tables = csp.tables[keep]
    return CspInstance(csp.n, csp.q, csp.scopes[keep], tables,
                       float(np.abs(tables).max(axis=1).sum()))


@dataclass
class GreedyResult:
    value: float
    assignment: np.ndarray
    seed_assignment: np.ndarray


def best_greedy(csp: CspInstance, U, blocks: list[Block]) -> GreedyResult:
    """Best value of ``greedy_extend`` over every seed assignment on ``S``,
    measured on the constraints inside ``U``."""
    U = np.unique(np.asarray(U, dtype=np.int64))
    target = restrict(csp, U)
    S = np.unique(np.concatenate([b.seeds for b in blocks]))
    if csp.q ** len(S) > GREEDY_BLOCK_CAP:
        raise InstanceError("seed set too large to enumerate")
    best = None
    for row in _digits(0, csp.q ** len(S), csp.q, len(S)):
        y = np.zeros(csp.n, dtype=np.int64)
        y[S] = row
        z = greedy_extend(csp, U, blocks, y)
        val = evaluate(target, z)
        if best is None or val > best.value + 1e-12:
            best = GreedyResult(val, z, y)
    return best


# ---------------------------------------------------------- PSD tester


@dataclass
class TesterResult:
    accept: bool
    k: int
    box_min: float
    sample: np.ndarray
    reads: int


def box_minimum(B: np.ndarray, sweeps: int = 50, stop_below: float = -math.inf) -> float:
    """Minimum of ``x^T B x`` over ``[-1, 1]^k``.

    Every vertex of the cube is evaluated and then used as the start of an
    exact coordinate descent.  Descent handles interior optima along
    coordinates with a positive diagonal.  The form is even, so only
    vertices with ``x_0 = 1`` are started; the others mirror them.  Returns
    early with the first value at or below ``stop_below``.  Practical only
    for ``k <= 20``.
    """
    B = 0.5 * (np.asarray(B, dtype=float) + np.asarray(B, dtype=float).T)
    k = B.shape[0]
    if k == 0:
        return 0.0
    diag = np.diag(B)
    best = math.inf
    half = 1 << (k - 1)
    chunk = 1 << 15
    for start in range(0, half, chunk):
        X = np.ones((min(half, start + chunk) - start, k))
        if k > 1:
            X[:, 1:] = 1.0 - 2.0 * _digits(start, start + len(X), 2, k - 1)
        G = X @ B
        best = min(best, float(np.einsum("ij,ij->i", X, G).min()))
        if best <= stop_below:
            return best
        rows = np.arange(len(X))
        for _ in range(sweeps):
            moved = np.zeros(len(rows), dtype=bool)
            for i in range(k):
                xi = X[rows, i]
                g = G[rows, i] - diag[i] * xi          # sum_{j != i} B_ij x_j
                if diag[i] > 0:
                    new = np.clip(-g / diag[i], -1.0, 1.0)
                else:
                    # concave or linear in x_i: an endpoint is optimal
                    new = np.where(g > 0, -1.0, np.where(g < 0, 1.0, xi))
                step = new - xi
                nz = np.abs(step) > 1e-15
                if nz.any():
                    r = rows[nz]
                    X[r, i] = new[nz]
                    G[r] += step[nz, None] * B[i][None, :]
                    moved |= np.abs(step) > 1e-12
            rows = rows[moved]
            if len(rows) == 0:
                break
        best = min(best, float(np.einsum("ij,ij->i", X, X @ B).min()))
        if best <= stop_below:
            return best
    return best


def psd_tester(oracle, n: int, eps: float, D: float, seed: int,
               c: float = PSD_SAMPLE_CONSTANT) -> TesterResult:
    """Decide from a random principal submatrix whether ``B`` looks PSD.

    Samples ``k = ceil(c D^2 / eps^2)`` indices, rescales the submatrix by
    ``(n / k)^2`` and rejects when its box minimum is at most ``-eps / 2``.
    ``oracle`` is a matrix or a callable ``oracle(rows, cols)`` returning
    entries.  The tester is one-sided: PSD matrices are always accepted.
    ``box_min`` is exact for PSD samples, a lower bound ``k lambda_min``
    when that already clears the threshold, and otherwise the box search
    result (stopped at the first value below ``-eps/2``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    k = math.ceil(c * D * D / (eps * eps) - 1e-12)
    if k > PSD_MAX_SAMPLE:
        raise InstanceError("sample too large for exact box optimization; reduce D/eps ratio")
    k = min(k, n)
    idx = np.sort(make_rng(seed).choice(n, size=k, replace=False))
    I, J = np.meshgrid(idx, idx, indexing="ij")
    if callable(oracle):
        sub = np.asarray(oracle(I, J), dtype=float)
    else:
        sub = np.asarray(oracle, dtype=float)[I, J]
    Bk = sub * (n / k) ** 2
    Bk = 0.5 * (Bk + Bk.T)
    lam = min_eigenvalue(Bk)
    if lam >= 0:
        val = 0.0                       # attained at x = 0
    elif k * lam > -eps / 2:
        val = k * lam                   # a lower bound already clears the threshold
    else:
        val = box_minimum(Bk, stop_below=-eps / 2)
    return TesterResult(bool(val > -eps / 2), k, val, idx, k * k)


def box_minimum_lower_bound(B: np.ndarray) -> float:
    """``k * min(lambda_min, 0)``: no point of the cube goes below it."""
    return B.shape[0] * min(min_eigenvalue(0.5 * (B + B.T)), 0.0)
