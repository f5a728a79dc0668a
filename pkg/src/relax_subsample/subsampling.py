"""Random vertex and edge subsampling with influence and deviation diagnostics.

Vertex samples are fixed-size uniform subsets ``U`` with ``|U| = floor(delta n)``.
A sampled CSP keeps the constraints whose scope lies inside ``U``, multiplies
their payoffs by ``delta^-k`` (with ``delta`` the realized fraction ``|U|/n``)
and keeps the denominator of the full instance.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .instances import (CspInstance, InstanceError, NormalizedGraph, UniqueGame,
                        induced_game, induced_subgraph, normalize)
from .relaxations import RelaxationId, parse_relaxation, solve_relaxation
from .rng import derive_seed, make_rng
from .sdp_core import DEFAULT_TOL, SolverError


class SubsampleError(RuntimeError):
    """A trial of a subsampling experiment failed; ``trial`` names it."""

    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial} failed: {cause}")
        self.trial = trial
        self.cause = cause

    def __reduce__(self):
        # survives the trip back from a worker process
        return type(self), (self.trial, self.cause)


# ------------------------------------------------------------ sampling


def sample_subset(n: int, delta: float, rng: np.random.Generator,
                  with_replacement: bool = False) -> np.ndarray:
    """Sorted uniform subset of ``range(n)``.

    Draws ``floor(delta n)`` indices; with replacement the distinct draws
    are returned, so the subset may be smaller.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    size = int(math.floor(delta * n + 1e-9))
    if with_replacement:
        return np.unique(rng.integers(0, n, size))
    return np.sort(rng.choice(n, size=size, replace=False))


def inclusion_probability(n: int, size: int, k: int) -> float:
    """Probability that ``k`` fixed items all land in a uniform ``size``-subset."""
    if size < k:
        return 0.0
    p = 1.0
    for t in range(k):
        p *= (size - t) / (n - t)
    return p


@dataclass
class VertexSample:
    """A sampled sub-instance together with the subset that produced it."""

    instance: object
    subset: np.ndarray
    realized_delta: float


def vertex_sample(csp: CspInstance, delta: float, seed: int, with_replacement: bool = False,
                  scaling: str = "delta", self_normalized: bool = False) -> VertexSample:
    """Sub-instance on a random subset, with the subset and realized fraction.

    Parameters
    ----------
    scaling : {"delta", "inclusion"}
        ``"delta"`` multiplies kept payoffs by ``delta^-k``.  ``"inclusion"``
        divides by the exact probability that a scope survives fixed-size
        sampling, which makes ``E_U[P_U(x)] = P(x)`` hold exactly.
    self_normalized : bool
        Divide by the kept mass instead of the full instance's denominator.
    """
    rng = make_rng(seed)
    U = sample_subset(csp.n, delta, rng, with_replacement)
    if len(U) < csp.k:
        raise InstanceError(f"sample of {len(U)} variables is smaller than the arity {csp.k}")
    realized = len(U) / csp.n
    if scaling == "delta":
        factor = realized ** -csp.k
    elif scaling == "inclusion":
        if with_replacement:
            raise ValueError("inclusion scaling assumes fixed-size sampling")
        factor = 1.0 / inclusion_probability(csp.n, len(U), csp.k)
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    inside = np.zeros(csp.n, dtype=bool)
    inside[U] = True
    keep = inside[csp.scopes].all(axis=1)
    tables = csp.tables[keep] * factor
    scopes = csp.scopes[keep].reshape(-1, csp.k)
    denom = csp.denominator
    if self_normalized:
        mass = float(np.abs(tables).max(axis=1).sum()) if len(tables) else 0.0
        denom = mass if mass > 0 else 1.0
    sub = CspInstance(csp.n, csp.q, scopes, tables.reshape(-1, csp.q ** csp.k), denom)
    return VertexSample(sub, U, realized)


def vertex_subsample(csp: CspInstance, delta: float, seed: int, **kwargs) -> CspInstance:
    """Random sub-CSP ``P_U``; see :func:`vertex_sample` for the options."""
    return vertex_sample(csp, delta, seed, **kwargs).instance


def vertex_subsample_graph(g: NormalizedGraph, delta: float, seed: int,
                           with_replacement: bool = False) -> NormalizedGraph:
    """Induced subgraph on a random subset, relabeled and re-normalized."""
    U = sample_subset(g.n, delta, make_rng(seed), with_replacement)
    sub = induced_subgraph(g, U)
    if sub.m == 0:
        raise InstanceError(f"induced subgraph on {len(U)} vertices has no edges")
    return sub


def vertex_subsample_game(game: UniqueGame, delta: float, seed: int,
                          with_replacement: bool = False) -> UniqueGame:
    """Induced sub-game on a random subset, re-normalized."""
    U = sample_subset(game.n, delta, make_rng(seed), with_replacement)
    sub = induced_game(game, U)
    if sub.m == 0:
        raise InstanceError(f"induced game on {len(U)} vertices has no constraints")
    return sub


def edge_subsample(g: NormalizedGraph, delta: float, seed: int) -> NormalizedGraph:
    """Keep a uniform ``floor(delta |E|)``-subset of edges on the same vertices.

    Kept weights are multiplied by ``1/delta`` and then re-normalized.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    size = int(math.floor(delta * g.m + 1e-9))
    if size < 1:
        raise InstanceError("edge sample is empty")
    idx = np.sort(make_rng(seed).choice(g.m, size=size, replace=False))
    edges = zip(g.u[idx], g.v[idx], g.w[idx] / delta)
    return normalize(g.n, list(edges), vectors=g.vectors, labels=g.labels)


# ----------------------------------------------------- influence, pruning


@dataclass
class InfluenceProfile:
    """Per-variable influence, its mean and the default pruning threshold."""

    influence: np.ndarray
    mean: float
    prune_threshold: float


def influence_profile(csp: CspInstance, multiplier: float = 2.0) -> InfluenceProfile:
    """Influence ``sum_{P ni i} |P| / denominator`` of every variable.

    The threshold is ``multiplier`` times the mean influence over the
    variables that occur in some constraint, so variables dropped by a
    vertex sample do not dilute it.
    """
    inf = np.bincount(csp.scopes.ravel(), weights=np.repeat(csp.norms(), csp.k),
                      minlength=csp.n) / csp.denominator
    active = csp.active_variables()
    mean = float(inf[active].mean()) if len(active) else 0.0
    return InfluenceProfile(inf, mean, multiplier * mean)


@dataclass
class PruneResult:
    instance: CspInstance
    removed_mass: float
    removed: int
    empty: bool


def prune(csp: CspInstance, threshold: float) -> PruneResult:
    """Drop every constraint touching a variable of influence above ``threshold``.

    ``removed_mass`` is the dropped norm mass divided by the denominator.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    prof = influence_profile(csp)
    heavy = prof.influence > threshold
    drop = heavy[csp.scopes].any(axis=1)
    mass = float(csp.norms()[drop].sum() / csp.denominator)
    keep = ~drop
    sub = CspInstance(csp.n, csp.q, csp.scopes[keep].reshape(-1, csp.k),
                      csp.tables[keep].reshape(-1, csp.q ** csp.k), csp.denominator)
    return PruneResult(sub, mass, int(drop.sum()), bool(sub.m == 0))


# ------------------------------------------------------- concentration


def fourth_moment_bound(mu: float, t: float) -> float:
    """Markov bound on the fourth central moment of a count with mean ``mu``.

    For a sum of independent indicators ``E(Z - EZ)^4 <= mu + 3 mu^2``; the
    same holds for sampling without replacement (convex ordering), so
    ``Pr(|Z - EZ| > t) <= (mu + 3 mu^2) / t^4``.
    """
    return min(1.0, (mu + 3.0 * mu * mu) / t ** 4)


@dataclass
class DegreeReport:
    delta: float
    trials: int
    expected_degree: np.ndarray
    relative_deviation: float
    t_factors: tuple
    tail_empirical: list
    tail_bound: list


def degree_concentration(g: NormalizedGraph, delta: float, trials: int, seed: int,
                         t_factors=(1.5, 2.0)) -> DegreeReport:
    """Spread of the number of neighbours surviving a vertex sample.

    For every trial and vertex, ``Z`` counts neighbours inside ``V_delta``;
    ``EZ = deg * |V_delta| / n``.  Reports the mean of ``|Z - EZ| / EZ`` and,
    for each ``t = factor * EZ``, the empirical tail frequency next to the
    fourth-moment bound (averaged over vertices).
    """
    A = g.sparse_adjacency(weighted=False).tocsr()
    deg = np.asarray(A.sum(axis=1)).ravel()
    size = int(math.floor(delta * g.n + 1e-9))
    mu = deg * size / g.n
    ok = mu > 0
    dev = np.zeros((trials, g.n))
    for t in range(trials):
        U = sample_subset(g.n, delta, make_rng(derive_seed(seed, t)))
        ind = np.zeros(g.n)
        ind[U] = 1.0
        dev[t] = A @ ind - mu
    rel = float(np.mean(np.abs(dev[:, ok]) / mu[ok])) if ok.any() else 0.0
    emp, bnd = [], []
    for f in t_factors:
        emp.append(float(np.mean(np.abs(dev[:, ok]) > f * mu[ok])) if ok.any() else 0.0)
        bnd.append(float(np.mean([fourth_moment_bound(m, f * m) for m in mu[ok]]))
                   if ok.any() else 0.0)
    return DegreeReport(size / g.n, trials, mu, rel, tuple(t_factors), emp, bnd)


def mcdiarmid_bound(lipschitz, t: float) -> float:
    """Bounded-differences tail ``2 exp(-2 t^2 / sum c_i^2)``."""
    c = np.asarray(lipschitz, dtype=float)
    if np.any(c < 0):
        raise ValueError("Lipschitz constants must be nonnegative")
    if not t > 0:
        raise ValueError("t must be positive")
    s = float(np.sum(c * c))
    if s == 0:
        return 0.0
    return 2.0 * math.exp(-2.0 * t * t / s)


# ----------------------------------------------------------- experiment


@dataclass
class SubsampleReport:
    """Full-instance value against the values of random sub-instances."""

    trials: int
    full_value: float
    sample_values: list
    mean: float
    stddev: float
    abs_gap: float
    seed: int
    realized_deltas: list = field(default_factory=list)
    relaxation: str = ""
    mode: str = "vertices"
    delta: float = 1.0

    @classmethod
    def build(cls, full, values, seed, deltas, relaxation, mode, delta):
        vals = [float(v) for v in values]
        mean = float(np.mean(vals)) if vals else math.nan
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        return cls(len(vals), float(full), vals, mean, std, abs(mean - full), int(seed),
                   [float(d) for d in deltas], str(relaxation), mode, float(delta))

    def csv_rows(self):
        return [(t, d, v) for t, (d, v) in enumerate(zip(self.realized_deltas,
                                                          self.sample_values))]

    def summary(self) -> dict:
        return {"type": "subsample_report", "relaxation": self.relaxation, "mode": self.mode,
                "delta": self.delta, "trials": self.trials, "full_value": self.full_value,
                "mean": self.mean, "stddev": self.stddev, "abs_gap": self.abs_gap,
                "seed": self.seed}


CSV_HEADER = ("trial", "realized_delta", "value")


def _sub_instance(instance, delta, seed, mode):
    if mode == "edges":
        if not isinstance(instance, NormalizedGraph):
            raise TypeError("edge subsampling needs a graph")
        return edge_subsample(instance, delta, seed), 1.0
    if isinstance(instance, CspInstance):
        s = vertex_sample(instance, delta, seed)
        return s.instance, s.realized_delta
    if isinstance(instance, NormalizedGraph):
        sub = vertex_subsample_graph(instance, delta, seed)
        return sub, sub.n / instance.n
    if isinstance(instance, UniqueGame):
        sub = vertex_subsample_game(instance, delta, seed)
        return sub, sub.n / instance.n
    raise TypeError(f"cannot subsample {type(instance).__name__}")


def _run_trial(job):
    instance, rid, delta, seed, t, mode, tol = job
    s = derive_seed(seed, t)
    try:
        sub, dreal = _sub_instance(instance, delta, s, mode)
        value = solve_relaxation(rid, sub, tol=tol, seed=s).value
    except (SolverError, InstanceError) as exc:
        raise SubsampleError(t, exc) from exc
    return (dreal if mode == "vertices" else delta), value


def subsample_experiment(instance, relaxation_id, delta: float, trials: int, seed: int,
                         mode: str = "vertices", tol: float = DEFAULT_TOL,
                         full_value: float | None = None, jobs: int = 1) -> SubsampleReport:
    """Solve the instance once and ``trials`` random sub-instances.

    Trial ``t`` uses the seed ``derive_seed(seed, t)`` for both the sample
    and the solver.  ``full_value`` skips the full solve when known.  With
    ``jobs > 1`` trials run in worker processes; results keep trial order,
    so the report does not depend on ``jobs``.
    """
    rid = relaxation_id if isinstance(relaxation_id, RelaxationId) \
        else parse_relaxation(relaxation_id)
    if mode not in ("vertices", "edges"):
        raise ValueError("mode must be 'vertices' or 'edges'")
    if full_value is None:
        full_value = solve_relaxation(rid, instance, tol=tol, seed=seed).value
    work = [(instance, rid, delta, seed, t, mode, tol) for t in range(trials)]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_run_trial, work))
    else:
        out = [_run_trial(w) for w in work]
    deltas = [d for d, _ in out]
    values = [v for _, v in out]
    return SubsampleReport.build(full_value, values, seed, deltas, rid, mode, delta)
