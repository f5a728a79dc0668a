"""Command-line harness: ``relax-subsample <command> ...``.

Commands
--------
gen          write a generated instance as JSON
solve        evaluate one relaxation on an instance file
subsample    vertex or edge subsampling sweep (CSV rows plus JSON summary)
certify      triangle-SDP upper bounds for random sphere graphs
negative-sa  Sherali-Adams level 3 on a dense graph and on a sparse sample

Every output is a pure function of the arguments and input files.  Exit
codes: 0 success, 1 solver or experiment failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from . import instances as inst
from .certify import certify_geometric_maxcut, sample_cycle_cover
from .formats import (FORMAT_VERSION, dumps, gram_to_dict, instance_sha, instance_to_dict,
                      read_instance, rows_to_csv)
from .instances import GeometricSpec, InstanceError, NormalizedGraph
from .relaxations import Relaxed, parse_relaxation, sherali_adams, solve_relaxation
from .rng import derive_seed, make_rng
from .sdp_core import DEFAULT_TOL, SolverError
from .subsampling import SubsampleError, sample_subset, subsample_experiment

log = logging.getLogger(__name__)

CACHE_ENV = "RELAX_SUBSAMPLE_CACHE"
SUBSAMPLE_HEADER = ("delta", "trial", "realized_delta", "value", "abs_diff")
CERTIFY_HEADER = ("seed", "graph_sha", "upper_bound", "sdp3", "gw_sdp", "hemisphere",
                  "certified")
NEGATIVE_SA_MAX_N = 30


class UsageError(ValueError):
    """Bad arguments or configuration (exit code 2)."""


# ------------------------------------------------------------- generators

# name -> (builder, required parameters, optional parameters with defaults)
GENERATORS = {
    "geometric": (lambda n, d, gamma, seed: inst.gen_geometric(GeometricSpec(n, d, gamma, seed)),
                  {"n": int, "d": int, "gamma": float, "seed": int}, {}),
    "gnp": (inst.gen_gnp, {"n": int, "p": float, "seed": int}, {}),
    "regular": (inst.gen_regular, {"n": int, "degree": int, "seed": int}, {}),
    "cycle": (inst.gen_cycle, {"k": int}, {}),
    "path": (inst.gen_path, {"n": int}, {}),
    "complete": (inst.gen_complete, {"n": int}, {}),
    "star": (inst.gen_star, {"leaves": int}, {}),
    "bipartite": (inst.gen_complete_bipartite, {"a": int, "b": int}, {}),
    "csp": (inst.gen_random_csp, {"n": int, "q": int, "k": int, "m": int, "seed": int},
            {"planted": False}),
    "dense-csp": (inst.gen_dense_csp, {"n": int, "q": int, "degree": int, "seed": int},
                  {"planted": False}),
    "maxcut-game": (lambda n, degree, seed: inst.maxcut_as_unique_game(
        inst.gen_regular(n, degree, seed)), {"n": int, "degree": int, "seed": int}, {}),
}


def generate(spec: dict):
    """Build an instance from ``{"generator": name, **parameters}``."""
    spec = dict(spec)
    name = spec.pop("generator", None)
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    fn, required, optional = GENERATORS[name]
    missing = [k for k in required if spec.get(k) is None]
    if missing:
        raise UsageError(f"generator {name!r} needs {', '.join(missing)}")
    extra = set(spec) - set(required) - set(optional)
    if extra:
        raise UsageError(f"generator {name!r} does not take {', '.join(sorted(extra))}")
    kwargs = {k: typ(spec[k]) for k, typ in required.items()}
    kwargs.update({k: spec.get(k, v) for k, v in optional.items()})
    try:
        return fn(**kwargs)
    except (InstanceError, ValueError) as exc:
        raise UsageError(f"bad {name} specification: {exc}") from exc


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    """Validated settings of one command, after flags and config are merged."""

    command: str
    instance: str | dict | None = None
    relaxation: str | None = None
    deltas: list = field(default_factory=list)
    trials: int = 0
    seed: int | None = None
    output: str | None = None

    def __post_init__(self):
        if isinstance(self.instance, str) and not Path(self.instance).is_file():
            raise UsageError(f"instance file {self.instance!r} does not exist")
        if isinstance(self.instance, dict):
            generate(self.instance)  # validates the generator specification
        if self.relaxation is not None:
            try:
                parse_relaxation(self.relaxation)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        for d in self.deltas:
            if not 0 < d <= 1:
                raise UsageError(f"delta values must lie in (0, 1], got {d:g}")
        if self.trials < 0:
            raise UsageError("trials must be nonnegative")

    def load_instance(self):
        if isinstance(self.instance, dict):
            return generate(self.instance)
        try:
            return read_instance(self.instance)
        except (InstanceError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {self.instance}: {exc}") from exc


def merge_config(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill flags that were not given from ``--config`` and then ``defaults``.

    Flags on the command line always win over the file.
    """
    cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file {args.config!r} does not exist")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - set(vars(args)) - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if cfg.get("command", args.command) != args.command:
            raise UsageError(f"config is for command {cfg['command']!r}")
    for key, value in vars(args).items():
        if value is None and key in cfg:
            setattr(args, key, cfg[key])
        if getattr(args, key) is None and key in defaults:
            setattr(args, key, defaults[key])
    return args


def _require_seed(args):
    if args.seed is None:
        raise UsageError(f"{args.command} needs an explicit --seed")
    try:
        args.seed = int(args.seed)
    except (TypeError, ValueError):
        raise UsageError(f"seed must be an integer, got {args.seed!r}") from None


# ----------------------------------------------------------------- cache


def _cache_path(key: str) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    Path(root).mkdir(parents=True, exist_ok=True)
    return Path(root) / f"{key}.json"


def cached_solve(rid, instance, tol: float, seed: int, matrix: bool = True) -> dict:
    """Solve result as a JSON-ready dict, memoized by content hash.

    The cache directory comes from ``RELAX_SUBSAMPLE_CACHE``; without it
    every call solves afresh.
    """
    rid = parse_relaxation(str(rid))
    sha = instance_sha(instance)
    key = hashlib.sha256(dumps([FORMAT_VERSION, sha, str(rid), tol, seed, matrix])
                         .encode()).hexdigest()
    path = _cache_path(key)
    if path is not None and path.is_file():
        log.info("cache hit %s", path.name)
        return json.loads(path.read_text())
    res = solve_relaxation(rid, instance, tol=tol, seed=seed)
    out = solve_result(res, rid, sha, tol, seed, matrix)
    if path is not None:
        # write-then-rename keeps concurrent readers from seeing half a file
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(dumps(out) + "\n")
        tmp.replace(path)
    return json.loads(dumps(out))


def _point_to_json(point):
    if point is None:
        return None
    out = {}
    for k, v in point.items():
        name = ",".join(map(str, k)) if isinstance(k, tuple) else str(k)
        out[name] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
    return out


def solve_result(res: Relaxed, rid, sha: str, tol: float, seed: int,
                 matrix: bool = True) -> dict:
    out = {"type": "solve_result", "version": FORMAT_VERSION, "relaxation": str(rid),
           "instance_sha": sha, "value": float(res.value), "tol": tol, "seed": seed,
           "info": {k: v for k, v in res.info.items()
                    if isinstance(v, (bool, int, float, str))}}
    if res.solution is not None:
        out["solution"] = gram_to_dict(res.solution, matrix=matrix)
    if res.point is not None:
        out["point"] = _point_to_json(res.point)
    return out


def _emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "generator", "out", "verbose", "func")}
    obj = generate({"generator": args.generator, **params})
    _emit(dumps(instance_to_dict(obj), indent=1) + "\n", args.out)
    return 0


def cmd_solve(args) -> int:
    args = merge_config(args, {"tol": DEFAULT_TOL, "seed": 0})
    if args.relax is None or args.instance is None:
        raise UsageError("solve needs --relax and an instance file")
    cfg = ExperimentConfig("solve", args.instance, args.relax, seed=int(args.seed),
                           output=args.out)
    instance = cfg.load_instance()
    out = cached_solve(args.relax, instance, float(args.tol), int(args.seed),
                       matrix=not args.no_matrix)
    if args.out:
        Path(args.out).write_text(dumps(out, indent=1) + "\n")
    print(f"{out['value']:.6f}")
    return 0


def _gap_trend(reports) -> bool:
    """True when the gap never grows as delta increases."""
    order = sorted(reports, key=lambda r: r.delta)
    return all(b.abs_gap <= a.abs_gap + 1e-12 for a, b in zip(order, order[1:]))


def cmd_subsample(args) -> int:
    args = merge_config(args, {"mode": "vertices", "tol": DEFAULT_TOL, "jobs": 1, "trials": 10})
    _require_seed(args)
    if args.relax is None or args.instance is None or not args.delta:
        raise UsageError("subsample needs an instance, --relax and --delta")
    if args.mode not in ("vertices", "edges"):
        raise UsageError("--mode must be 'vertices' or 'edges'")
    deltas = [float(d) for d in (args.delta if isinstance(args.delta, list) else [args.delta])]
    cfg = ExperimentConfig("subsample", args.instance, args.relax, deltas, int(args.trials),
                           args.seed, args.csv)
    instance = cfg.load_instance()
    tol, jobs = float(args.tol), int(args.jobs)
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    full = cached_solve(args.relax, instance, tol, args.seed, matrix=False)["value"]
    reports, rows = [], []
    for d in deltas:
        rep = subsample_experiment(instance, args.relax, d, cfg.trials, args.seed,
                                   mode=args.mode, tol=tol, full_value=full, jobs=jobs)
        reports.append(rep)
        rows += [(d, t, rd, v, abs(v - full)) for t, rd, v in rep.csv_rows()]
        log.info("delta %g: mean %.6f gap %.3g", d, rep.mean, rep.abs_gap)
    trend = _gap_trend(reports)
    log.info("gap %s as delta grows", "shrinks monotonically" if trend else "is not monotone")
    summary = {"type": "subsample_sweep", "version": FORMAT_VERSION,
               "instance_sha": instance_sha(instance), "relaxation": str(args.relax),
               "mode": args.mode, "seed": args.seed, "tol": tol, "full_value": full,
               "monotone_gap": trend, "reports": [r.summary() for r in reports]}
    _emit(rows_to_csv(SUBSAMPLE_HEADER, rows), args.csv)
    if args.json:
        Path(args.json).write_text(dumps(summary, indent=1) + "\n")
    return 0


def _certify_one(job):
    spec, tol, cover = job
    cert = certify_geometric_maxcut(spec, tol=tol)
    cov = sample_cycle_cover(spec, cover) if cover else None
    return cert, cov


def cmd_certify(args) -> int:
    args = merge_config(args, {"tol": DEFAULT_TOL, "jobs": 1, "graphs": 1, "cover": 0})
    _require_seed(args)
    for k in ("n", "d", "gamma"):
        if getattr(args, k) is None:
            raise UsageError(f"certify needs --{k}")
    graphs, jobs = int(args.graphs), int(args.jobs)
    if graphs < 1 or jobs < 1:
        raise UsageError("--graphs and --jobs must be at least 1")
    try:
        specs = [GeometricSpec(int(args.n), int(args.d), float(args.gamma), args.seed + i)
                 for i in range(graphs)]
    except InstanceError as exc:
        raise UsageError(str(exc)) from exc
    work = [(s, float(args.tol), int(args.cover)) for s in specs]
    if jobs > 1 and graphs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_certify_one, work))
    else:
        results = [_certify_one(w) for w in work]
    certs = [c.to_dict() for c, _ in results]
    rows = [(s.seed, c["graph_sha"], c["upper_bound"], c["solver"]["sdp3"],
             c["solver"]["gw_sdp"], c["solver"]["hemisphere"],
             int(bool(c["solver"].get("certified", False))))
            for s, c in zip(specs, certs)]
    if args.csv:
        Path(args.csv).write_text(rows_to_csv(CERTIFY_HEADER, rows))
    if args.cover_csv and args.cover:
        d = int(args.d)
        header = ("graph_seed", "cycle", "position", "vertex") + \
            tuple(f"x{i}" for i in range(d))
        crow = [(s.seed, *r) for s, (_, cov) in zip(specs, results) for r in cov.csv_rows()]
        Path(args.cover_csv).write_text(rows_to_csv(header, crow))
    doc = certs[0] if graphs == 1 else {"type": "certificate_batch", "certificates": certs,
                                        "mean_upper_bound": float(np.mean(
                                            [c["upper_bound"] for c in certs]))}
    _emit(dumps(doc, indent=1) + "\n", args.json)
    if any(not c["solver"].get("certified", False) for c in certs):
        log.warning("some triangle SDP solves did not certify their gap")
        return 1
    return 0


def girth(g: NormalizedGraph) -> float:
    """Length of the shortest cycle (``inf`` for forests)."""
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(zip(g.u.tolist(), g.v.tolist()))
    return float(nx.girth(h))


def _finite(x: float):
    return None if math.isinf(x) else x


def _bipartite_control(g: NormalizedGraph) -> NormalizedGraph:
    keep = (g.u % 2) != (g.v % 2)
    return inst.normalize(g.n, list(zip(g.u[keep].tolist(), g.v[keep].tolist(),
                                        g.w[keep].tolist())))


def negative_sa_experiment(n: int, p: float, seed: int, eps: float = 0.25,
                           max_attempts: int = 1000, control: bool = False,
                           level: int = 3) -> dict:
    """Sherali-Adams value of a dense random graph against a sparse sample.

    The sample keeps ``floor(delta n)`` vertices with ``delta = n**eps / D``
    (``D`` the average degree).  Samples are redrawn from derived seeds until
    the induced graph has an edge and no triangle.  ``control`` keeps only
    the edges between even and odd vertices, a bipartite graph on which both
    values are one.
    """
    if n > NEGATIVE_SA_MAX_N:
        raise UsageError(f"level-{level} Sherali-Adams needs n <= {NEGATIVE_SA_MAX_N}")
    if not 0 < p <= 1:
        raise UsageError("p must lie in (0, 1]")
    if eps <= 0:
        raise UsageError("eps must be positive")
    g = inst.gen_gnp(n, p, seed)
    if control:
        g = _bipartite_control(g)
    if g.m == 0:
        raise UsageError("the generated graph has no edges")
    avg_deg = 2.0 * g.m / g.n
    delta = min(1.0, n ** eps / avg_deg)
    if math.floor(delta * n + 1e-9) < 2:
        raise UsageError(f"delta = {delta:.3g} keeps fewer than two vertices")
    for attempt in range(max_attempts):
        U = sample_subset(n, delta, make_rng(derive_seed(seed, attempt)))
        keep = np.isin(g.u, U) & np.isin(g.v, U)
        if not keep.any():
            continue
        sub = inst.induced_subgraph(g, U)
        if girth(sub) > 3:
            break
    else:
        raise RuntimeError(f"no triangle-free sample with an edge in {max_attempts} draws")
    full = sherali_adams(g, level).value
    part = sherali_adams(sub, level).value
    return {"type": "negative_sa_report", "version": FORMAT_VERSION, "n": n, "p": p,
            "seed": seed, "eps": eps, "level": level, "control": control,
            "instance_sha": instance_sha(g), "average_degree": avg_deg, "delta": delta,
            "sample_size": int(sub.n), "sample_edges": int(sub.m), "attempts": attempt + 1,
            "full_girth": _finite(girth(g)), "sample_girth": _finite(girth(sub)),
            "full_value": full,
            "sample_value": part, "gap": part - full}


def cmd_negative_sa(args) -> int:
    args = merge_config(args, {"n": 24, "p": 0.5, "eps": 0.25, "max_attempts": 1000,
                               "control": False})
    _require_seed(args)
    rep = negative_sa_experiment(int(args.n), float(args.p), args.seed, float(args.eps),
                                 int(args.max_attempts), bool(args.control))
    if args.json:
        Path(args.json).write_text(dumps(rep, indent=1) + "\n")
    girth_txt = "inf" if rep["sample_girth"] is None else f"{rep['sample_girth']:g}"
    gap = f"{rep['gap']:.6f}".replace("-0.000000", "0.000000")
    print(f"full {rep['full_value']:.6f} sample {rep['sample_value']:.6f} "
          f"gap {gap} (sample size {rep['sample_size']}, girth {girth_txt})")
    return 0


# ---------------------------------------------------------------- parser

_SUBSAMPLE_EPILOG = f"""\
CSV columns ({", ".join(SUBSAMPLE_HEADER)}):
  delta           requested sampling fraction
  trial           trial index; its seed is derive_seed(seed, trial)
  realized_delta  |U|/n for vertex sampling, delta for edge sampling
  value           relaxation value of the sub-instance
  abs_diff        |value - value of the full instance|
The JSON summary holds one report per delta (mean, stddev, abs_gap).
"""

_CERTIFY_EPILOG = f"""\
CSV columns ({", ".join(CERTIFY_HEADER)}):
  seed         generator seed of the graph (seed, seed+1, ... for --graphs)
  graph_sha    SHA-256 of the canonical instance JSON
  upper_bound  certified upper bound on the Max-Cut value
  sdp3         triangle-SDP value
  gw_sdp       plain vector relaxation value
  hemisphere   best of the coordinate hemisphere and 100 random hyperplanes
  certified    1 when the dual certificate closed the gap to --tol
Cycle-cover CSV columns: graph_seed, cycle, position, vertex, x0 .. x(d-1).
"""


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relax-subsample",
                                 description="Relaxations of subsampled graphs and CSPs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gsub = gen.add_subparsers(dest="generator", required=True)
    for name, (_, required, optional) in GENERATORS.items():
        gp = gsub.add_parser(name, help=f"{name} instance")
        for key, typ in required.items():
            gp.add_argument(f"--{key}", type=typ, required=True)
        for key, default in optional.items():
            if isinstance(default, bool):
                gp.add_argument(f"--{key}", action="store_true")
            else:
                gp.add_argument(f"--{key}", type=type(default), default=default)
        gp.add_argument("--out", help="output path (default stdout)")
        gp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="evaluate a relaxation; prints the value")
    sp.add_argument("instance", nargs="?")
    sp.add_argument("--relax", help="gw, sdp3, ug, ug3, sa:<r>, basicsdp:<eps>, basiclp:<eps>, "
                                    "cutnorm or brute")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="write the solution JSON here")
    sp.add_argument("--no-matrix", action="store_const", const=True, help="omit the Gram matrix")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_solve)

    ss = sub.add_parser("subsample", help="subsampling sweep over delta",
                        epilog=_SUBSAMPLE_EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    ss.add_argument("instance", nargs="?")
    ss.add_argument("--relax")
    ss.add_argument("--delta", type=float, nargs="+")
    ss.add_argument("--trials", type=int)
    ss.add_argument("--seed", type=int)
    ss.add_argument("--mode", choices=("vertices", "edges"))
    ss.add_argument("--tol", type=float)
    ss.add_argument("--jobs", type=int)
    ss.add_argument("--csv", help="per-trial rows (default stdout)")
    ss.add_argument("--json", help="summary JSON path")
    ss.add_argument("--config", help="JSON file with the same keys as the flags")
    ss.set_defaults(func=cmd_subsample)

    cp = sub.add_parser("certify", help="certify Max-Cut upper bounds of sphere graphs",
                        epilog=_CERTIFY_EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    cp.add_argument("--n", type=int)
    cp.add_argument("--d", type=int)
    cp.add_argument("--gamma", type=float)
    cp.add_argument("--seed", type=int)
    cp.add_argument("--graphs", type=int, help="number of graphs (seeds seed, seed+1, ...)")
    cp.add_argument("--tol", type=float)
    cp.add_argument("--jobs", type=int)
    cp.add_argument("--cover", type=int, help="also sample this many odd cycles per graph")
    cp.add_argument("--json", help="certificate JSON path (default stdout)")
    cp.add_argument("--csv")
    cp.add_argument("--cover-csv")
    cp.add_argument("--config")
    cp.set_defaults(func=cmd_certify)

    ns = sub.add_parser("negative-sa", help="Sherali-Adams on a dense graph and a sparse sample")
    ns.add_argument("--n", type=int)
    ns.add_argument("--p", type=float)
    ns.add_argument("--eps", type=float, help="sample fraction is n**eps / average degree")
    ns.add_argument("--seed", type=int)
    ns.add_argument("--max-attempts", type=int)
    ns.add_argument("--control", action="store_const", const=True,
                    help="use the bipartite even/odd part of the graph")
    ns.add_argument("--json")
    ns.add_argument("--config")
    ns.set_defaults(func=cmd_negative_sa)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, SubsampleError, InstanceError, RuntimeError, ValueError,
            TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
