"""Decentralized optimization under the Polyak-Lojasiewicz condition: hard instances,
gradient-tracking solvers with accelerated gossip, and oracle-metered benchmarks."""

from .gossip import CompiledGossip, acc_gossip, default_round_count
from .instances import (
    ChainSpec,
    dfo_hard_instance,
    experiment_instance,
    ifo_hard_instance,
    linear_span_instance,
)
from .numkit import EvaluationError, InputError, RandomStream
from .objectives import LocalObjectiveSet, OracleMeter
from .solvers import RunRecord, SolverParams, cgd, dgd_gt, drone, drone_default_params, gd
from .topology import Graph, MixingMatrix, laplacian_mixing, mixing_for_gap, parse_topology

__version__ = "0.1.0"

__all__ = [
    "ChainSpec", "CompiledGossip", "EvaluationError", "Graph", "InputError", "LocalObjectiveSet",
    "MixingMatrix", "OracleMeter", "RandomStream", "RunRecord", "SolverParams", "acc_gossip", "cgd",
    "default_round_count", "dfo_hard_instance", "dgd_gt", "drone", "drone_default_params",
    "experiment_instance", "gd", "ifo_hard_instance", "laplacian_mixing", "linear_span_instance",
    "mixing_for_gap", "parse_topology",
]
