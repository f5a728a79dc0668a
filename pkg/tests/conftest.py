import itertools
from pathlib import Path

import numpy as np
import pytest

from relax_subsample.instances import (gen_complete, gen_complete_bipartite, gen_cycle,
                                       gen_gnp, gen_path, gen_star, normalize)

GOLDEN = Path(__file__).parent / "golden"


def maxcut_by_enumeration(g):
    """Independent Max-Cut oracle: plain loop over all 2^n sign vectors."""
    best = 0.0
    for bits in itertools.product((0, 1), repeat=g.n):
        x = np.array(bits)
        best = max(best, float(sum(w for a, b, w in g.edges if x[a] != x[b])))
    return best


def small_graph_corpus():
    """Named small graphs used by several modules' property tests."""
    out = {
        "edge": gen_path(2),
        "path4": gen_path(4),
        "triangle": gen_cycle(3),
        "c5": gen_cycle(5),
        "c6": gen_cycle(6),
        "k4": gen_complete(4),
        "k5": gen_complete(5),
        "star4": gen_star(4),
        "k23": gen_complete_bipartite(2, 3),
        "weighted": normalize(5, [(0, 1, 3.0), (1, 2, 1.0), (2, 0, 2.0), (2, 3, 1.0),
                                  (3, 4, 0.5), (4, 0, 1.5)]),
    }
    for s in range(3):
        out[f"gnp7_{s}"] = gen_gnp(7, 0.5, s)
    return out


@pytest.fixture(scope="session")
def corpus():
    return small_graph_corpus()


# ------------------------------------------------------- acceptance report

ACCEPTANCE_LINES: list[str] = []
OUTCOMES: dict[str, str] = {}


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so that it can reuse the invariant suites' outcomes
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        if OUTCOMES.get(report.nodeid) != "failed":
            OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
