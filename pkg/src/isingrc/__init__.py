"""Ising, random-cluster (q = 2) and even-subgraph models on small graphs.

Exact enumeration in rational arithmetic, the three Markov chains, exact
mixing analysis, and the canonical-path flows with their traffic bounds.
"""

from .analysis import MixingReport, TransitionMatrix, build_matrix, matrix_checks, mixing_time, spectral_gap, tv_distance
from .chains import ChainConfig, StepTrace, empirical_distribution, integrated_autocorrelation, run_chain
from .graph import (
    Graph,
    GraphError,
    GuardError,
    build_graph,
    cycle_inventory,
    even_decomposition,
    format_graph,
    parse_graph,
    read_graph,
)
from .measures import (
    Params,
    distortion_checks,
    even_count_check,
    even_partition,
    hat_pi,
    hole_checks,
    ising_partition,
    rc_measure,
    rc_partition,
    verify_equivalence,
    worm_measure,
    worm_partition,
)
from .paths import congestion, decode, encode, flow_validity, lifted_certificates, worm_certificates, worm_path, worm_traffic
from .reports import Check

__version__ = "0.1.0"

__all__ = [
    "Check",
    "ChainConfig",
    "Graph",
    "GraphError",
    "GuardError",
    "MixingReport",
    "Params",
    "StepTrace",
    "TransitionMatrix",
    "build_graph",
    "build_matrix",
    "congestion",
    "cycle_inventory",
    "decode",
    "distortion_checks",
    "empirical_distribution",
    "encode",
    "even_count_check",
    "even_decomposition",
    "even_partition",
    "flow_validity",
    "format_graph",
    "hat_pi",
    "hole_checks",
    "integrated_autocorrelation",
    "ising_partition",
    "lifted_certificates",
    "matrix_checks",
    "mixing_time",
    "parse_graph",
    "rc_measure",
    "rc_partition",
    "read_graph",
    "run_chain",
    "spectral_gap",
    "tv_distance",
    "verify_equivalence",
    "worm_certificates",
    "worm_measure",
    "worm_partition",
    "worm_path",
    "worm_traffic",
]
