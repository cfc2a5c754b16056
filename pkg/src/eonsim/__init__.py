"""eonsim: elastic optical network RMSA simulation and benchmarking."""

from .bounds import bound_sweep, defrag_bound_trial
from .heuristics import HeuristicKind, decide
from .presets import PRESETS, get_preset
from .service import ModulationTable
from .simulator import SimConfig, estimate_warmup, run_trial, sweep
from .topology import PathOrdering, Topology, k_shortest_paths, load_bundled, load_topology
from .traffic import TrafficConfig, generate_stream

__version__ = "0.1.0"

__all__ = [
    "HeuristicKind",
    "ModulationTable",
    "PATH_ORDERING_DEFAULT",
    "PRESETS",
    "PathOrdering",
    "SimConfig",
    "Topology",
    "TrafficConfig",
    "bound_sweep",
    "decide",
    "defrag_bound_trial",
    "estimate_warmup",
    "generate_stream",
    "get_preset",
    "k_shortest_paths",
    "load_bundled",
    "load_topology",
    "run_trial",
    "sweep",
    "__version__",
]

PATH_ORDERING_DEFAULT = PathOrdering.HOPS_THEN_KM
