r"""Semidefinite and linear programming back end.

The SDP solver optimizes over Gram matrices :math:`X = YY^\top` with a
low-rank factor ``Y`` (Burer-Monteiro).  Row-group norm constraints
(fixed diagonal entries, or a fixed trace over a block of rows) are kept
exactly by construction; the remaining linear constraints are handled by
an augmented Lagrangian whose inner problems are solved with L-BFGS-B.

Every returned solution carries a dual bound computed from the final
multipliers, the row-group multipliers that best satisfy stationarity,
and the smallest eigenvalue of the dual slack matrix.  This bound is
valid for any multipliers, so ``dual_bound - value`` certifies the
optimality gap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, optimize, sparse, special

from .rng import make_rng

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
MAX_ITERATIONS = 50_000
MAX_RESTARTS = 5
MAX_DIM = 600
SIGMA_MAX = 1e6
SIGMA_GAP_MAX = 1e3
_SENSES = ("<=", ">=", "==")


class SolverError(RuntimeError):
    """Base class for solver failures."""


class SdpNonConvergence(SolverError):
    """The SDP solver hit its iteration cap without certifying the gap.

    The best iterate is available as ``self.best``.
    """

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class LpInfeasible(SolverError):
    pass


class LpUnbounded(SolverError):
    pass


@dataclass
class LinearCut:
    """Linear constraint ``sum coef * X[i, j] + sum a * s  (sense)  bound``.

    ``X`` is symmetric, so ``(i, j)`` and ``(j, i)`` name the same entry.
    ``scalar_terms`` refers to the auxiliary nonnegative scalars of the
    problem.
    """

    entries: Sequence[tuple[int, int, float]]
    sense: str
    bound: float
    scalar_terms: Sequence[tuple[int, float]] = ()

    def __post_init__(self):
        if self.sense not in _SENSES:
            raise ValueError(f"sense must be one of {_SENSES}")


@dataclass
class SdpProblem:
    r"""Optimize :math:`C \bullet X + c_s^\top s` over ``X >= 0`` (PSD), ``s >= 0``.

    Parameters
    ----------
    dim : int
        Side of the Gram matrix.
    objective : array or sparse matrix
        Symmetric cost matrix ``C``.
    sense : {"max", "min"}
    diag_constraints : list of (row, value)
        ``X[row, row] == value`` with ``value > 0``.
    block_structure : list of (first_row, size)
        ``sum of X[i, i]`` over the block rows equals one.
    linear_cuts : list of LinearCut
    n_scalars, scalar_objective, scalar_upper
        Auxiliary scalars ``0 <= s <= scalar_upper`` with cost
        ``scalar_objective``.  Finite upper bounds keep the dual bound finite.

    Every row must belong to exactly one diagonal constraint or block, so
    the trace of every feasible ``X`` is fixed.
    """

    dim: int
    objective: object
    sense: str = "max"
    diag_constraints: list = field(default_factory=list)
    block_structure: list = field(default_factory=list)
    linear_cuts: list = field(default_factory=list)
    n_scalars: int = 0
    scalar_objective: np.ndarray | None = None
    scalar_upper: np.ndarray | None = None

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if self.scalar_objective is None:
            self.scalar_objective = np.zeros(self.n_scalars)
        if self.scalar_upper is None:
            self.scalar_upper = np.full(self.n_scalars, np.inf)
        self.scalar_objective = np.asarray(self.scalar_objective, dtype=float)
        self.scalar_upper = np.asarray(self.scalar_upper, dtype=float)

    def groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-to-group map and the fixed squared norm of each group."""
        gid = -np.ones(self.dim, dtype=np.int64)
        cap = []
        for row, val in self.diag_constraints:
            if gid[row] >= 0:
                raise ValueError(f"row {row} constrained twice")
            if not val > 0:
                raise ValueError("diagonal constraint values must be positive")
            gid[row] = len(cap)
            cap.append(float(val))
        for start, size in self.block_structure:
            rows = np.arange(start, start + size)
            if np.any(gid[rows] >= 0):
                raise ValueError(f"block at row {start} overlaps another group")
            gid[rows] = len(cap)
            cap.append(1.0)
        if np.any(gid < 0):
            raise ValueError("every row needs a diagonal or block constraint")
        return gid, np.array(cap)

    def objective_value(self, X: np.ndarray, s: np.ndarray | None = None) -> float:
        C = self.objective
        val = float(C.multiply(X).sum()) if sparse.issparse(C) else float(np.sum(C * X))
        if self.n_scalars:
            val += float(self.scalar_objective @ s)
        return val


@dataclass
class GramSolution:
    """Solver output.

    ``dual_bound`` bounds the optimum from above for maximization and from
    below for minimization.  ``primal_residual`` is the largest violation
    of any linear constraint (diagonal, block or cut), ``cut_violation``
    the largest over the cuts alone and ``psd_violation`` the clamped
    negative part of the smallest eigenvalue of ``X``.  ``dual_residual``
    is ``max(0, -lambda_min(S))`` for the dual slack ``S``.
    """

    X: np.ndarray
    value: float
    dual_bound: float
    primal_residual: float
    dual_residual: float
    psd_violation: float
    cut_violation: float
    iterations: int
    factor: np.ndarray
    scalars: np.ndarray
    duals: np.ndarray
    certified: bool
    problem: SdpProblem | None = None

    @property
    def gap(self) -> float:
        sgn = 1.0 if self.problem is None or self.problem.sense == "max" else -1.0
        return sgn * (self.dual_bound - self.value)


def residuals(problem: SdpProblem, X: np.ndarray, s: np.ndarray | None = None):
    """Recompute ``(primal_residual, cut_violation, psd_violation)`` from ``X``."""
    X = np.asarray(X, dtype=float)
    d = np.diag(X)
    gid, cap = problem.groups()
    norm_res = float(np.abs(np.bincount(gid, weights=d, minlength=len(cap)) - cap).max(initial=0.0))
    s = np.zeros(problem.n_scalars) if s is None else np.asarray(s, dtype=float)
    cut = 0.0
    for c in problem.linear_cuts:
        lhs = sum(a * X[i, j] for i, j, a in c.entries) + sum(a * s[j] for j, a in c.scalar_terms)
        if c.sense == "<=":
            cut = max(cut, lhs - c.bound)
        elif c.sense == ">=":
            cut = max(cut, c.bound - lhs)
        else:
            cut = max(cut, abs(lhs - c.bound))
    if problem.n_scalars:
        cut = max(cut, float(np.max(-s, initial=0.0)),
                  float(np.max(s - problem.scalar_upper, initial=0.0)))
    psd = max(0.0, -min_eigenvalue(X)) if X.size else 0.0
    return max(norm_res, cut), cut, psd


@dataclass
class LpResult:
    value: float
    x: np.ndarray
    duals_ub: np.ndarray
    duals_eq: np.ndarray


# ------------------------------------------------------------------ LP


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, None),
             sense: str = "max") -> LpResult:
    """Solve a linear program with the HiGHS dual simplex / IPM back end.

    Raises :class:`LpInfeasible` or :class:`LpUnbounded` with the solver
    message; marginals are reported for the sense given.
    """
    sgn = -1.0 if sense == "max" else 1.0
    res = optimize.linprog(sgn * np.asarray(c, dtype=float), A_ub=A_ub, b_ub=b_ub,
                           A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        raise LpInfeasible(res.message)
    if res.status == 3:
        raise LpUnbounded(res.message)
    if res.status != 0:
        raise SolverError(res.message)
    duals_ub = sgn * res.ineqlin.marginals if A_ub is not None else np.zeros(0)
    duals_eq = sgn * res.eqlin.marginals if A_eq is not None else np.zeros(0)
    return LpResult(sgn * res.fun, res.x, duals_ub, duals_eq)


def min_eigenvalue(M, return_vector: bool = False):
    """Smallest eigenvalue of a symmetric matrix (dense symmetric solver).

    With ``return_vector`` the pair ``(value, unit eigenvector)`` is returned.
    """
    M = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)
    if M.shape[0] == 0:
        return (0.0, np.zeros(0)) if return_vector else 0.0
    if not return_vector:
        return float(linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0])
    w, V = linalg.eigh(M, subset_by_index=[0, 0])
    return float(w[0]), V[:, 0]


# ----------------------------------------------------------------- SDP


class _Compiled:
    """Index structures shared by all evaluations of one problem."""

    def __init__(self, prob: SdpProblem):
        self.prob = prob
        self.dim = prob.dim
        self.sgn = 1.0 if prob.sense == "max" else -1.0
        self.gid, self.cap = prob.groups()
        self.trace = float(self.cap.sum())
        C = prob.objective
        self.C = C.tocsr() if sparse.issparse(C) else np.asarray(C, dtype=float)
        self.ns = prob.n_scalars
        self.cs = prob.scalar_objective
        self.ub = prob.scalar_upper

        rows, cols, vals, cut_of = [], [], [], []
        srow, sidx, sval = [], [], []
        b = np.empty(len(prob.linear_cuts))
        eq = np.zeros(len(prob.linear_cuts), dtype=bool)
        for k, cut in enumerate(prob.linear_cuts):
            flip = -1.0 if cut.sense == ">=" else 1.0
            eq[k] = cut.sense == "=="
            b[k] = flip * cut.bound
            for i, j, a in cut.entries:
                rows.append(min(i, j))
                cols.append(max(i, j))
                vals.append(flip * a)
                cut_of.append(k)
            for j, a in cut.scalar_terms:
                srow.append(k)
                sidx.append(j)
                sval.append(flip * a)
        m = len(b)
        self.m, self.b, self.eq = m, b, eq
        rows, cols = np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)
        key, inv = np.unique(rows * self.dim + cols, return_inverse=True)
        self.pi, self.pj = key // self.dim, key % self.dim
        self.M = sparse.csr_matrix((np.array(vals, dtype=float), (np.array(cut_of), inv.reshape(-1))),
                                   shape=(m, len(key)))
        self.MT = self.M.T.tocsr()
        npair = len(key)
        self.Ei = sparse.csr_matrix((np.ones(npair), (self.pi, np.arange(npair))),
                                    shape=(self.dim, npair))
        self.Ej = sparse.csr_matrix((np.ones(npair), (self.pj, np.arange(npair))),
                                    shape=(self.dim, npair))
        self.Ms = sparse.csr_matrix((np.array(sval, dtype=float), (srow, sidx)),
                                    shape=(m, self.ns))
        self.MsT = self.Ms.T.tocsr()
        n_con = m + len(self.cap)
        self.rank = int(min(self.dim, math.ceil(math.sqrt(2 * n_con)) + 2))

    # parametrization --------------------------------------------------
    def factor(self, Z):
        sq = np.bincount(self.gid, weights=np.einsum("ij,ij->i", Z, Z), minlength=len(self.cap))
        norm = np.sqrt(np.maximum(sq, 1e-300))
        scale = np.sqrt(self.cap) / norm
        return Z * scale[self.gid][:, None], scale

    def cut_values(self, Y, s):
        x = np.einsum("ij,ij->i", Y[self.pi], Y[self.pj])
        g = self.M @ x - self.b
        if self.ns:
            g = g + self.Ms @ s
        return g

    def objective(self, Y, s):
        CY = self.C @ Y
        val = float(np.sum(CY * Y))
        if self.ns:
            val += float(self.cs @ s)
        return val, CY

    def residual(self, g):
        if self.m == 0:
            return 0.0
        return float(max(np.abs(g[self.eq]).max(initial=0.0),
                         np.maximum(g[~self.eq], 0.0).max(initial=0.0)))

    def omega(self, g, y, sigma):
        return np.where(self.eq, y + sigma * g, np.maximum(0.0, y + sigma * g))

    def lagrangian(self, flat, r, y, sigma):
        nz = self.dim * r
        Z = flat[:nz].reshape(self.dim, r)
        s = flat[nz:]
        Y, scale = self.factor(Z)
        obj, CY = self.objective(Y, s)
        g = self.cut_values(Y, s)
        om = self.omega(g, y, sigma)
        pen_eq = y[self.eq] @ g[self.eq] + 0.5 * sigma * g[self.eq] @ g[self.eq]
        pen_in = (om[~self.eq] @ om[~self.eq] - y[~self.eq] @ y[~self.eq]) / (2 * sigma)
        val = -self.sgn * obj + pen_eq + pen_in
        # gradient with respect to Y
        G = -2.0 * self.sgn * CY
        if self.m:
            wx = (self.MT @ om)[:, None]
            G += self.Ei @ (wx * Y[self.pj]) + self.Ej @ (wx * Y[self.pi])
        t = np.bincount(self.gid, weights=np.einsum("ij,ij->i", Y, G), minlength=len(self.cap))
        GZ = scale[self.gid][:, None] * (G - Y * (t / self.cap)[self.gid][:, None])
        if self.ns:
            gs = -self.sgn * self.cs + self.MsT @ om
            return val, np.concatenate([GZ.ravel(), gs])
        return val, GZ.ravel()

    # certificate ------------------------------------------------------
    def dual_matrix(self, om):
        """``K = -sgn C + sum_k om_k A_k`` as a dense matrix."""
        K = -self.sgn * (self.C.toarray() if sparse.issparse(self.C) else self.C.copy())
        if self.m:
            wx = self.MT @ om
            np.add.at(K, (self.pi, self.pj), 0.5 * wx)
            np.add.at(K, (self.pj, self.pi), 0.5 * wx)
        return K

    def certificate(self, Y, om):
        """Dual bound (original sense), smallest eigenpair of the dual slack."""
        K = self.dual_matrix(om)
        KY = K @ Y
        mu = np.bincount(self.gid, weights=np.einsum("ij,ij->i", KY, Y),
                         minlength=len(self.cap)) / self.cap
        S = K - np.diag(mu[self.gid])
        lam, vec = linalg.eigh(S, subset_by_index=[0, 0])
        lb = -om @ self.b + mu @ self.cap + self.trace * lam[0]
        if self.ns:
            red = -self.sgn * self.cs + self.MsT @ om
            neg = red < 0
            if np.any(neg & ~np.isfinite(self.ub)):
                lb = -np.inf
            else:
                lb += float(np.sum(self.ub[neg] * red[neg]))
        return -self.sgn * lb, float(lam[0]), vec[:, 0]


def _refine_duals(comp: _Compiled, Y, s, om, g, act_tol=1e-5):
    """Least-squares multipliers of the active cuts from stationarity.

    Solves ``min |(-sgn C + sum om_k A_k - sum mu_g D_g) Y|`` (plus the
    reduced costs of interior scalars) with ``om >= 0`` on inequalities.
    The ALM multipliers can be noisy on degenerate problems; these are
    usually much sharper once the primal iterate is accurate.
    """
    from scipy.optimize import lsq_linear

    dim, r = Y.shape
    act = np.flatnonzero(comp.eq | (g >= -act_tol) | (om > 0))
    G = len(comp.cap)
    Ma = comp.M[act].tocoo()
    rows_i = (comp.pi[Ma.col][:, None] * r + np.arange(r)).ravel()
    rows_j = (comp.pj[Ma.col][:, None] * r + np.arange(r)).ravel()
    vals_i = (0.5 * Ma.data[:, None] * Y[comp.pj[Ma.col]]).ravel()
    vals_j = (0.5 * Ma.data[:, None] * Y[comp.pi[Ma.col]]).ravel()
    cols = np.repeat(Ma.row, r)
    grp_rows = (np.arange(dim)[:, None] * r + np.arange(r)).ravel()
    grp_cols = len(act) + np.repeat(comp.gid, r)
    grp_vals = -Y.ravel()
    R = [np.concatenate([rows_i, rows_j, grp_rows])]
    Cc = [np.concatenate([cols, cols, grp_cols])]
    V = [np.concatenate([vals_i, vals_j, grp_vals])]
    rhs = [comp.sgn * (comp.C @ Y).ravel()]
    nrow = dim * r
    if comp.ns:
        inner = np.flatnonzero((s > 1e-9) & (s < comp.ub - 1e-9))
        if len(inner):
            Ms = comp.Ms[act][:, inner].T.tocoo()
            R.append(nrow + Ms.row)
            Cc.append(Ms.col)
            V.append(Ms.data)
            rhs.append(comp.sgn * comp.cs[inner])
            nrow += len(inner)
    A = sparse.csr_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(Cc))),
                          shape=(nrow, len(act) + G))
    lo = np.concatenate([np.where(comp.eq[act], -np.inf, 0.0), np.full(G, -np.inf)])
    hi = np.full(len(act) + G, np.inf)
    x0 = A.toarray() if A.shape[0] * A.shape[1] <= 4_000_000 else A
    res = lsq_linear(x0, np.concatenate(rhs), bounds=(lo, hi),
                     method="bvls" if not sparse.issparse(x0) else "trf",
                     tol=1e-14, lsmr_tol="auto", max_iter=5000)
    out = np.zeros(comp.m)
    out[act] = res.x[:len(act)]
    return out


def _polish_dual(comp: _Compiled, Y, om, g, target, value=None, act_tol=1e-5, stages=6,
                 maxiter=1000):
    """Ascend a smoothed dual bound over the active multipliers.

    The smallest eigenvalue is replaced by a soft-min and each
    ``min(0, reduced cost)`` by a softplus; both under-estimate the exact
    terms, so every iterate still yields a valid bound when re-evaluated
    exactly.  Stops early once the gap to ``value`` is within ``target``.
    Returns ``(bound, lam, vec, om)`` for the best iterate, or
    ``None`` when the scalar block is unbounded.
    """
    if comp.ns and not np.all(np.isfinite(comp.ub)):
        return None
    act = np.flatnonzero(comp.eq | (g >= -act_tol) | (om > 0))
    na, G, T = len(act), len(comp.cap), comp.trace
    Ma = comp.M[act]
    Msa = comp.Ms[act] if comp.ns else None
    K0 = comp.dual_matrix(np.zeros(comp.m))
    KY = comp.dual_matrix(om) @ Y
    mu0 = np.bincount(comp.gid, weights=np.einsum("ij,ij->i", KY, Y),
                      minlength=G) / comp.cap
    bounds = [(None, None) if comp.eq[k] else (0.0, None) for k in act] + [(None, None)] * G

    def slack(z):
        wx = Ma.T @ z[:na]
        S = K0.copy()
        np.add.at(S, (comp.pi, comp.pj), 0.5 * wx)
        np.add.at(S, (comp.pj, comp.pi), 0.5 * wx)
        S[np.diag_indices(comp.dim)] -= z[na:][comp.gid]
        return S

    def exact(z):
        lam, vec = linalg.eigh(slack(z), subset_by_index=[0, 0])
        lb = -z[:na] @ comp.b[act] + z[na:] @ comp.cap + T * lam[0]
        if comp.ns:
            red = -comp.sgn * comp.cs + Msa.T @ z[:na]
            lb += float(np.sum(comp.ub * np.minimum(red, 0.0)))
        return lb, float(lam[0]), vec[:, 0]

    def neg_smooth(z, eps):
        lam, V = linalg.eigh(slack(z))
        w = np.exp(-(lam - lam[0]) / eps)
        sw = w.sum()
        p = w / sw
        f = -z[:na] @ comp.b[act] + z[na:] @ comp.cap + T * (lam[0] - eps * math.log(sw))
        P = (V * p) @ V.T
        gz = np.empty_like(z)
        gz[:na] = -comp.b[act] + T * (Ma @ P[comp.pi, comp.pj])
        gz[na:] = comp.cap - T * np.bincount(comp.gid, weights=np.diag(P), minlength=G)
        if comp.ns:
            red = -comp.sgn * comp.cs + Msa.T @ z[:na]
            f += float(np.sum(comp.ub * -eps * np.logaddexp(0.0, -red / eps)))
            gz[:na] += Msa @ (comp.ub * special.expit(-red / eps))
        return -f, -gz

    z = np.concatenate([om[act], mu0])
    best = exact(z)
    best_z = z
    eps = max(abs(best[1]), target / T) / max(math.log(comp.dim), 1.0)
    for _ in range(stages):
        res = optimize.minimize(neg_smooth, best_z, args=(eps,), jac=True, method="L-BFGS-B",
                                bounds=bounds, options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-12})
        cand = exact(res.x)
        if cand[0] > best[0]:
            best, best_z = cand, res.x
        if value is not None and -best[0] - comp.sgn * value <= target:
            break
        eps /= 10.0
    out = np.zeros(comp.m)
    out[act] = best_z[:na]
    return -comp.sgn * best[0], best[1], best[2], out


def _pad_factor(Z, r, rng, eps=1e-3):
    if Z.shape[1] >= r:
        return Z[:, :r].copy()
    extra = eps * rng.standard_normal((Z.shape[0], r - Z.shape[1]))
    return np.hstack([Z, extra])


def factor_from_gram(X: np.ndarray, r: int) -> np.ndarray:
    """Rank-``r`` factor ``Y`` with ``Y Y^T`` closest to ``X`` (PSD part)."""
    lam, vec = np.linalg.eigh((X + X.T) / 2)
    lam, vec = lam[::-1][:r], vec[:, ::-1][:, :r]
    return vec * np.sqrt(np.maximum(lam, 0.0))


def solve_sdp(problem: SdpProblem, tol: float = DEFAULT_TOL, seed: int = 0,
              max_iter: int = MAX_ITERATIONS, warm_start: GramSolution | None = None,
              rank: int | None = None, restarts: int = MAX_RESTARTS,
              strict: bool = True, certify: bool = True) -> GramSolution:
    """Solve an SDP to a certified optimality gap of ``tol``.

    Parameters
    ----------
    problem : SdpProblem
    tol : float
        Target for both the largest cut violation and the certified gap.
    seed : int
        Seed of the random initial factor; restarts use derived seeds.
    max_iter : int
        Cap on the total number of inner L-BFGS iterations per restart.
    warm_start : GramSolution, optional
        Previous solution (factor, scalars and multipliers).  Cuts appended
        after the warm start begin with zero multipliers.
    strict : bool
        Raise :class:`SdpNonConvergence` when no restart certifies the gap.
        Otherwise the best iterate is returned with ``certified=False``.
    certify : bool
        When false, stop as soon as the iterate is feasible to ``tol`` and
        skip the dual polishing; the reported bound is still valid.
    """
    if problem.dim > MAX_DIM:
        raise ValueError(f"dimension {problem.dim} exceeds the solver cap {MAX_DIM}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    comp = _Compiled(problem)
    r = rank or comp.rank
    if rank is None and warm_start is not None:
        # only constraints that can be active at the optimum enter the
        # rank bound; inactive cuts from earlier rounds carry zero duals
        old = min(len(warm_start.duals), comp.m)
        n_act = len(comp.cap) + int(comp.eq.sum()) + (comp.m - old) + \
            int(np.sum((warm_start.duals[:old] > 0) & ~comp.eq[:old]))
        r = int(min(comp.dim, max(math.ceil(math.sqrt(2 * n_act)) + 2,
                                  warm_start.factor.shape[1])))
    best = None
    for attempt in range(max(1, restarts)):
        ws = warm_start if attempt == 0 else None
        sol = _solve_once(comp, tol, seed + 7919 * attempt, max_iter, ws, r, refine=certify)
        if best is None or (sol.certified and not best.certified) or \
                (sol.certified == best.certified and sol.gap + sol.primal_residual
                 < best.gap + best.primal_residual):
            best = sol
        if sol.certified:
            break
        log.info("restart %d did not certify (gap %.3g, residual %.3g)",
                 attempt, sol.gap, sol.primal_residual)
    if not best.certified and strict:
        raise SdpNonConvergence(
            f"gap {best.gap:.3g} / residual {best.primal_residual:.3g} above tol {tol:g}", best)
    return best


def _solve_once(comp: _Compiled, tol, seed, max_iter, warm, r, refine=True):
    rng = make_rng(seed)
    dim, ns, m = comp.dim, comp.ns, comp.m
    if warm is not None:
        Z = _pad_factor(np.asarray(warm.factor, dtype=float), r, rng)
        s = np.zeros(ns)
        s[:len(warm.scalars)] = warm.scalars[:ns]
        y = np.zeros(m)
        y[:min(m, len(warm.duals))] = warm.duals[:m]
        # inherited multipliers are in the unnormalized sign convention
        sigma = 10.0
    else:
        Z = rng.standard_normal((dim, r))
        s = np.zeros(ns)
        y = np.zeros(m)
        sigma = 10.0
    bounds = None
    if ns:
        ub = [None if not np.isfinite(u) else float(u) for u in comp.ub]
        bounds = [(None, None)] * (dim * Z.shape[1]) + [(0.0, u) for u in ub]

    iters = 0
    prev_res = prev_gap = math.inf
    state = None
    best_dual = None
    inner_cap = 400
    stall = 0
    outer = 0
    while True:
        rr = Z.shape[1]
        if bounds is not None:
            bounds = [(None, None)] * (dim * rr) + bounds[-ns:]
        x0 = np.concatenate([Z.ravel(), s])
        res = optimize.minimize(comp.lagrangian, x0, args=(rr, y, sigma), jac=True,
                                method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": inner_cap, "gtol": min(1e-8, tol / (10.0 * comp.trace)),
                                         "ftol": 1e-15, "maxcor": 20})
        iters += int(res.nit) + 1
        Z = res.x[:dim * rr].reshape(dim, rr)
        s = res.x[dim * rr:]
        Y, _ = comp.factor(Z)
        g = comp.cut_values(Y, s)
        resid = comp.residual(g)
        y = comp.omega(g, y, sigma)
        bound, lam, vec = comp.certificate(Y, y)
        value = comp.objective(Y, s)[0]
        gap = comp.sgn * (bound - value)
        if resid <= tol and gap > tol and comp.m and refine and outer % 5 == 0:
            pol = _polish_dual(comp, Y, y, g, tol, value=value)
            if pol is not None and comp.sgn * (pol[0] - value) < gap:
                bound, lam, vec = pol[:3]
                gap = comp.sgn * (bound - value)
                if gap <= tol:
                    y = pol[3]
        if best_dual is None or comp.sgn * (bound - best_dual[0]) < 0:
            best_dual = (bound, lam, y.copy())
        elif resid <= tol and comp.sgn * (best_dual[0] - value) < gap:
            # an earlier multiplier vector still certifies a tighter bound
            bound, lam = best_dual[0], best_dual[1]
            gap = comp.sgn * (bound - value)
        state = (Y, s, y, value, bound, resid, lam)
        log.debug("outer %d nit %d value %.10f resid %.2e sigma %.1e gap %.2e lam %.2e r %d",
                  outer, res.nit, value, resid, sigma, gap, lam, rr)
        if resid <= tol and (gap <= tol or (not refine and outer > 0)):
            break
        if iters >= max_iter:
            break
        # raise the penalty when either feasibility or the gap stagnates
        if resid > tol and resid > 0.5 * prev_res:
            sigma = min(sigma * 2.0, SIGMA_MAX)
        elif resid <= tol and gap > tol and gap > 0.7 * prev_gap:
            sigma = min(sigma * 2.0, SIGMA_GAP_MAX)
        prev_res = resid
        prev_gap = gap
        outer += 1
        # escape a rank-deficient saddle along the most negative direction
        converged = res.nit < inner_cap
        if converged and resid <= tol and lam * comp.trace < -tol and rr < dim:
            Z = np.hstack([Z, 1e-2 * vec[:, None]])
            stall = 0
        elif resid <= tol:
            stall += 1
            inner_cap = min(inner_cap * 2, 5000)
    Y, s, y, value, bound, resid, lam = state
    gap = comp.sgn * (bound - value)
    X = Y @ Y.T
    X = (X + X.T) / 2
    d = np.diag(X)
    norm_res = float(np.abs(np.bincount(comp.gid, weights=d, minlength=len(comp.cap))
                            - comp.cap).max(initial=0.0))
    psd = max(0.0, -float(linalg.eigh(X, eigvals_only=True, subset_by_index=[0, 0])[0]))
    return GramSolution(X=X, value=float(value), dual_bound=float(bound),
                        primal_residual=max(float(resid), norm_res),
                        dual_residual=float(max(0.0, -lam)),
                        psd_violation=psd, cut_violation=float(resid),
                        iterations=iters, factor=Y, scalars=s.copy(), duals=y.copy(),
                        certified=bool(resid <= tol and gap <= tol), problem=comp.prob)
