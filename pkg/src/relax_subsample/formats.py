"""JSON and CSV serialization of instances, solutions and reports.

Floats are written with 17 significant digits so every value round-trips
exactly; output is byte-deterministic for a given object.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .instances import CspInstance, InstanceError, NormalizedGraph, UniqueGame, normalize

FORMAT_VERSION = 1


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite float cannot be serialized")
    s = format(float(x), ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def dumps(obj, indent: int | None = None) -> str:
    """Deterministic JSON text; floats use 17 significant digits."""

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ", " if indent is None else ","
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(str(k)) + ": " + enc(v, level + 1) for k, v in o.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            # keep numeric rows on one line
            if all(not isinstance(x, (list, tuple, dict, np.ndarray)) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[" + sep.join(pad + enc(x, level + 1) for x in o) + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


# ------------------------------------------------------------ instances


def instance_to_dict(inst) -> dict:
    if isinstance(inst, NormalizedGraph):
        out = {"type": "graph", "version": FORMAT_VERSION, "n": inst.n,
               "edges": [[a, b, w] for a, b, w in inst.edges]}
        if inst.vectors is not None:
            out["vectors"] = inst.vectors.tolist()
        if inst.labels is not None:
            out["labels"] = inst.labels.tolist()
        return out
    if isinstance(inst, CspInstance):
        return {"type": "csp", "version": FORMAT_VERSION, "n": inst.n, "q": inst.q,
                "k": inst.k, "denominator": inst.denominator,
                "constraints": [{"scope": s.tolist(), "table": t.tolist()}
                                for s, t in zip(inst.scopes, inst.tables)]}
    if isinstance(inst, UniqueGame):
        out = {"type": "unique_game", "version": FORMAT_VERSION, "n": inst.n, "R": inst.R,
               "edges": [[int(a), int(b), float(w)] for a, b, w in zip(inst.u, inst.v, inst.w)]}
        if inst.multigame:
            out["multigame"] = True
            out["constraint_perms"] = inst.perms.tolist()
        else:
            out["perms"] = {f"{a},{b}": p.tolist()
                            for a, b, p in zip(inst.u.tolist(), inst.v.tolist(), inst.perms)}
        return out
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def instance_from_dict(d: dict):
    kind = d.get("type")
    if d.get("version") != FORMAT_VERSION:
        raise InstanceError(f"unsupported format version {d.get('version')!r}")
    if kind == "graph":
        return normalize(d["n"], d["edges"], vectors=d.get("vectors"), labels=d.get("labels"))
    if kind == "csp":
        cons = d["constraints"]
        return CspInstance(d["n"], d["q"], [c["scope"] for c in cons],
                           [c["table"] for c in cons], d["denominator"])
    if kind == "unique_game":
        e = np.array(d["edges"], dtype=float).reshape(-1, 3)
        u, v = e[:, 0].astype(np.int64), e[:, 1].astype(np.int64)
        if d.get("multigame"):
            perms = d["constraint_perms"]
        else:
            perms = []
            for a, b in zip(u.tolist(), v.tolist()):
                key = f"{a},{b}"
                if key in d["perms"]:
                    perms.append(d["perms"][key])
                else:
                    perms.append(np.argsort(d["perms"][f"{b},{a}"]).tolist())
        return UniqueGame(d["n"], d["R"], u, v, e[:, 2], perms,
                          multigame=bool(d.get("multigame", False)))
    raise InstanceError(f"unknown instance type {kind!r}")


def write_instance(inst, path) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst), indent=1) + "\n")


def read_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text()))


def instance_sha(inst) -> str:
    """SHA-256 of the compact canonical JSON of an instance."""
    return hashlib.sha256(dumps(instance_to_dict(inst)).encode()).hexdigest()


# ------------------------------------------------------------- outputs


def gram_to_dict(sol, matrix: bool = True) -> dict:
    out = {"type": "gram_solution", "version": FORMAT_VERSION, "dim": int(sol.X.shape[0]),
           "value": sol.value, "dual_bound": sol.dual_bound,
           "primal_residual": sol.primal_residual, "dual_residual": sol.dual_residual,
           "psd_violation": sol.psd_violation, "cut_violation": sol.cut_violation,
           "certified": bool(sol.certified), "iterations": sol.iterations}
    if matrix:
        out["X"] = sol.X.tolist()
    return out


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj, indent=1) + "\n")


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt_float(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()
