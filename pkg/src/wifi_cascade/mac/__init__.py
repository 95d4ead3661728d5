from .engine import (NodeStats, TrafficStats, contention_window, run_simulation)
from .scenario import ScenarioError, ScenarioSpec
from .topology import Topology, build_topology

__all__ = ["NodeStats", "TrafficStats", "contention_window", "run_simulation",
           "ScenarioError", "ScenarioSpec", "Topology", "build_topology"]
