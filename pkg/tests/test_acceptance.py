"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also collected into an "acceptance criteria" section at
the end of the pytest summary.  Tolerances and runtime limits are fixed
below and never relaxed after a failure.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from relax_subsample.certify import certify_geometric_maxcut, psd_tester
from relax_subsample.cli import negative_sa_experiment
from relax_subsample.instances import (GeometricSpec, UniqueGame, brute_force_opt, certified_opt,
                                       gen_complete, gen_complete_bipartite, gen_cycle,
                                       gen_dense_csp, gen_gnp, gen_path, gen_regular,
                                       maxcut_as_unique_game)
from relax_subsample.proxy import (decode_expectation_check, induced_walk_distribution,
                                   proxy_distribution, proxy_domination_check, random_m1,
                                   tv_distance, ug_subsample_sandwich)
from relax_subsample.relaxations import (cutnorm_sdp, gw_sdp, infty_to_one_norm, sdp3,
                                         sherali_adams, ug_sdp)
from relax_subsample.rng import derive_seed, make_rng
from relax_subsample.sdp_core import DEFAULT_TOL
from relax_subsample.subsampling import (edge_subsample, mcdiarmid_bound, sample_subset,
                                         subsample_experiment, vertex_sample)

from conftest import ACCEPTANCE_LINES, OUTCOMES

# solver tolerance for the two largest experiments (criteria 5 and 7)
LARGE_TOL = 1e-4

INVARIANT_SUITES = ["test_instances.py", "test_formats_rng.py", "test_sdp_core.py",
                    "test_relaxations.py", "test_subsampling.py", "test_proxy.py",
                    "test_certify.py", "test_cli.py"]


def record(cid, ok: bool, detail: str, informational: bool = False) -> None:
    tag = "INFO" if informational else ("PASS" if ok else "FAIL")
    line = f"C{cid:<3} {tag}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    if not informational:
        assert ok, line


def random_game(g, R, seed):
    rng = make_rng(seed)
    return UniqueGame(g.n, R, g.u, g.v, g.w, [rng.permutation(R) for _ in range(g.m)])


# ----------------------------------------------------------------- values


def test_c01_odd_cycles():
    t0 = time.perf_counter()
    errs = {k: abs(sdp3(gen_cycle(k)).value - (1 - 1 / k)) for k in (3, 5, 7, 9)}
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    record(1, worst <= 1e-3 and dt < 30,
           f"odd cycles: max |sdp3(C_k) - (1 - 1/k)| = {worst:.2e} (<= 1e-3), {dt:.1f} s (< 30)")


def test_c02_sherali_adams_points():
    t0 = time.perf_counter()
    tri = sherali_adams(gen_cycle(3), 3).value
    c5 = sherali_adams(gen_cycle(5), 3).value
    bip = [sherali_adams(g, 3).value for g in (gen_path(5), gen_cycle(6),
                                              gen_complete_bipartite(2, 3))]
    dt = time.perf_counter() - t0
    ok = (abs(tri - 2 / 3) <= 1e-6 and abs(c5 - 4 / 5) <= 1e-6
          and all(abs(b - 1) <= 1e-6 for b in bip) and dt < 5)
    record(2, ok, f"sa:3 triangle {tri:.8f} (2/3), C5 {c5:.8f} (4/5), "
                  f"bipartite min {min(bip):.8f} (1), {dt:.1f} s (< 5)")


def test_c03_grothendieck_sandwich():
    t0 = time.perf_counter()
    ratios, ok = [], True
    for s in range(20):
        A = make_rng(derive_seed(3, s)).standard_normal((8, 8))
        exact = infty_to_one_norm(A)
        val = cutnorm_sdp(A).value
        ok &= exact <= val + 2 * DEFAULT_TOL and val <= 1.8 * exact + 1e-6
        ratios.append(val / exact)
    dt = time.perf_counter() - t0
    record(3, ok and dt < 60, f"Grothendieck: sdp/exact in [{min(ratios):.4f}, {max(ratios):.4f}]"
                              f" (within [1, 1.8]), {dt:.1f} s (< 60)")


def test_c04_maxcut_ug_duality():
    tol = DEFAULT_TOL
    worst_gw = worst_tri = 0.0
    for s in range(10):
        g = gen_gnp(10 + 3 * s, 0.3, derive_seed(4, s))
        game = maxcut_as_unique_game(g)
        worst_gw = max(worst_gw, abs(gw_sdp(g, tol=tol).value + ug_sdp(game, tol=tol).value - 1))
        worst_tri = max(worst_tri, abs(sdp3(g, tol=tol).value
                                       + ug_sdp(game, triangle_cuts=True, tol=tol).value - 1))
    ok = worst_gw <= 2 * tol and worst_tri <= 2 * tol
    record(4, ok, f"duality on 10 graphs n=10..37: gw {worst_gw:.2e}, triangle {worst_tri:.2e}"
                  f" (<= {2 * tol:.0e})")


def test_c05_geometric_certification():
    gamma, d, n = 0.1, 6, 150
    t0 = time.perf_counter()
    certs = [certify_geometric_maxcut(GeometricSpec(n, d, gamma, s), tol=LARGE_TOL)
             for s in range(5)]
    dt = time.perf_counter() - t0
    gw = np.mean([c.solver["gw_sdp"] for c in certs])
    tri = np.mean([c.solver["sdp3"] for c in certs])
    hemi = np.mean([c.solver["hemisphere"] for c in certs])
    ceiling = 1 - 0.05 * np.sqrt(gamma)
    clauses = [gw >= 1 - gamma - 0.02, tri <= ceiling, tri >= hemi, dt < 600]
    record(5, all(clauses),
           f"geometric: mean gw {gw:.5f} (>= {1 - gamma - 0.02:.2f}) {clauses[0]}; "
           f"mean sdp3 {tri:.5f} (<= {ceiling:.5f}) {clauses[1]}; "
           f"hemisphere {hemi:.5f} (<= sdp3) {clauses[2]}; {dt:.0f} s (< 600)")


# ------------------------------------------------------------ subsampling


def test_c06_csp_subsampling():
    t0 = time.perf_counter()
    csp = gen_dense_csp(60, 2, 30, 6, planted=True)
    opt = certified_opt(csp)[0]
    vals = [certified_opt(vertex_sample(csp, 0.5, derive_seed(6, t)).instance)[0]
            for t in range(50)]
    gap = abs(np.mean(vals) - opt)
    # fully brute-forced companion at a size where enumeration is possible
    small = gen_dense_csp(20, 2, 10, 6)
    sopt = brute_force_opt(small)[0]
    svals = [brute_force_opt(vertex_sample(small, 0.5, derive_seed(6, t)).instance)[0]
             for t in range(50)]
    sgap = abs(np.mean(svals) - sopt)
    dt = time.perf_counter() - t0
    record(6, gap <= 0.1 and sgap <= 0.1 and dt < 300,
           f"2-CSP n=60 deg=30 delta=0.5: |mean opt(P_U) - opt(P)| = {gap:.4f} (<= 0.1); "
           f"n=20 brute force {sgap:.4f} (<= 0.1); {dt:.0f} s (< 300)")


def test_c07_ug_sandwich():
    t0 = time.perf_counter()
    game = maxcut_as_unique_game(gen_regular(60, 20, 7))
    rep = ug_subsample_sandwich(game, True, 0.5, 10, seed=7, tol=LARGE_TOL)
    dt = time.perf_counter() - t0
    lo, hi = rep.full_value / 9 - 0.05, rep.full_value + 0.05
    record(7, rep.holds(0.05) and dt < 900,
           f"UG sandwich: {lo:.4f} <= mean {rep.mean:.4f} <= {hi:.4f}; {dt:.0f} s (< 900)")


# ------------------------------------------------------------------ proxy


def test_c08_proxy_domination():
    worst = np.inf
    for s in range(5):
        game = random_game(gen_regular(12, 4, derive_seed(8, s)), 3, s)
        worst = min(worst, proxy_domination_check(game, 1000, seed=s).min_margin)
    record(8, worst >= -1e-9, f"domination: min 9 sdp(G)[X] - sdp(G^3)[X] = {worst:.3e}"
                              " over 5000 X (>= -1e-9)")


def test_c09_decoding_identity():
    worst = 0.0
    for s in range(20):
        game = random_game(gen_gnp(12, 0.4, derive_seed(9, s)), 3, s)
        W = sample_subset(12, 0.5, make_rng(derive_seed(9, 100 + s)))
        V = random_m1(len(W), 3, make_rng(s))
        worst = max(worst, decode_expectation_check(V @ V.T, game, W).margin)
    record(9, worst <= 1e-9, f"decoding: max |lhs - rhs| = {worst:.2e} on 20 games (<= 1e-9)")


def test_c10_tv_closeness():
    n, deg = 120, 30
    game = maxcut_as_unique_game(gen_regular(n, deg, 10))
    means = {}
    for dd in (5, 10, 15, 30):
        tv = []
        for s in range(20):
            W = sample_subset(n, dd / deg, make_rng(derive_seed(10 * dd, s)))
            tv.append(tv_distance(induced_walk_distribution(game, W),
                                  proxy_distribution(game, W)))
        means[dd] = float(np.mean(tv))
    seq = [means[k] for k in (5, 10, 15, 30)]
    decreasing = all(a > b for a, b in zip(seq, seq[1:]))
    record(10, means[15] <= 0.2 and decreasing,
           "TV(D1, D2) at delta*Delta 5/10/15/30: "
           + ", ".join(f"{v:.4f}" for v in seq) + " (<= 0.2 at 15, strictly decreasing)")


# ----------------------------------------------------------- PSD tester


def test_c11_psd_tester():
    n, eps, D = 400, 1.0, 1.1
    far = lambda I, J: np.full(I.shape, -D / n ** 2)  # noqa: E731
    psd = lambda I, J: np.where(I == J, D / n ** 2, 0.0)  # noqa: E731
    t0 = time.perf_counter()
    far_rej = sum(not psd_tester(far, n, eps, D, s).accept for s in range(100))
    psd_rej = sum(not psd_tester(psd, n, eps, D, s).accept for s in range(100))
    dt = time.perf_counter() - t0
    record(11, far_rej > 66 and psd_rej < 34 and dt < 60,
           f"PSD tester: far rejected {far_rej}/100 (> 66), PSD rejected {psd_rej}/100 (< 34),"
           f" {dt:.1f} s (< 60)")


# -------------------------------------------------------- edge sampling


def test_c12_edge_subsampling():
    g = gen_regular(60, 30, 12)
    rep = subsample_experiment(g, "gw", 0.5, 20, seed=12, mode="edges")
    norms, cut_norms = [], []
    for s in range(5):
        k = gen_complete(16)
        h = edge_subsample(k, 0.5, derive_seed(12, s))
        # h is renormalized, which is the 1/delta rescaling of the kept edges
        A = k.laplacian() - h.laplacian()
        norms.append(infty_to_one_norm(A))
        cut_norms.append(norms[-1] / 4)  # zero row sums: ||A||_inf->1 = 4 ||A||_cut
    worst = max(norms)
    record("12i", True, f"cut norm of the same differences: max {max(cut_norms):.4f}",
           informational=True)
    record(12, rep.abs_gap <= 0.05 and worst <= 0.3,
           f"edge sampling: |mean gw(G[E_d]) - gw(G)| = {rep.abs_gap:.4f} (<= 0.05); "
           f"max ||L(G) - L(G[E_d])/d||_inf->1 on K16 = {worst:.4f} (<= 0.3)")


# ------------------------------------------------------------- suites


def test_c13_invariants_and_mcdiarmid():
    here = Path(__file__).parent
    seen = {k: v for k, v in OUTCOMES.items()
            if Path(k.split("::")[0]).name in INVARIANT_SUITES}
    if seen:
        failed = sorted(k for k, v in seen.items() if v == "failed")
        suites_ok, summary = not failed, f"{len(seen)} invariant tests, {len(failed)} failed"
    else:
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                               *[str(here / f) for f in INVARIANT_SUITES]],
                              capture_output=True, text=True, cwd=here.parent)
        suites_ok = proc.returncode == 0
        summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else "no output"

    # cut value of a uniformly random assignment: flipping vertex i moves it by
    # at most the weighted degree of i, and its mean is exactly 1/2
    g = gen_gnp(30, 0.3, 13)
    c = np.bincount(np.concatenate([g.u, g.v]), weights=np.concatenate([g.w, g.w]),
                    minlength=g.n)
    X = make_rng(13).integers(0, 2, size=(100_000, g.n))
    f = (X[:, g.u] != X[:, g.v]).astype(float) @ g.w
    worst = -np.inf
    for t in (0.05, 0.1, 0.15, 0.2, 0.3):
        worst = max(worst, float(np.mean(np.abs(f - 0.5) >= t)) - mcdiarmid_bound(c, t))
    record(13, suites_ok and worst <= 0,
           f"invariant suites: {summary}; McDiarmid over 1e5 runs: max(freq - bound) = "
           f"{worst:.4f} (<= 0)")


def test_c14_negative_sherali_adams():
    rep = negative_sa_experiment(24, 0.5, seed=14)
    record(14, rep["gap"] >= 0.05,
           f"negative SA: sa:3(G_24,1/2) = {rep['full_value']:.4f}, sample ({rep['sample_size']}"
           f" vertices, girth {rep['sample_girth'] or 'inf'}) = {rep['sample_value']:.4f}, "
           f"gap {rep['gap']:.4f} (>= 0.05)")
