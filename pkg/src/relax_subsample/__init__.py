"""Convex relaxations of Max-Cut, unique games and CSPs under random subsampling.

Modules
-------
instances      graphs, CSPs, unique games, generators and brute-force optima
subsampling    vertex and edge subsampling, influence pruning, deviation bounds
sdp_core       low-rank augmented-Lagrangian SDP solver with dual certificates
relaxations    vector, triangle, Sherali-Adams, basic CSP and cut-norm relaxations
proxy          length-three walks and the proxy game on a vertex subset
certify        sphere-graph certificates, odd-cycle covers, greedy extension, PSD tester
cli            command-line harness
"""
from .instances import (CspInstance, GeometricSpec, InstanceError, NormalizedGraph,
                        UniqueGame, brute_force_opt, evaluate, normalize)
from .relaxations import Relaxed, RelaxationId, parse_relaxation, solve_relaxation
from .rng import derive_seed, make_rng
from .sdp_core import GramSolution, SdpProblem, SolverError, solve_sdp

__version__ = "0.1.0"

__all__ = [
    "CspInstance", "GeometricSpec", "GramSolution", "InstanceError", "NormalizedGraph",
    "Relaxed", "RelaxationId", "SdpProblem", "SolverError", "UniqueGame", "brute_force_opt",
    "derive_seed", "evaluate", "make_rng", "normalize", "parse_relaxation", "solve_relaxation",
    "solve_sdp",
]
