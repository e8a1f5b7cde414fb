"""Overlapping coalition formation for co-tier interference management in small cell networks."""
from .network import NetworkConfig, Topology, Network, generate_topology, build_network, make_network
from .game import CoalitionStructure, PartialCoalition, SbsUnit, Outcome, StructureError, evaluate
from .engine import run_ocf, run_cf_baseline, run_noncooperative, FormationEngine, EngineError
from .kernel import BACKEND

__version__ = "0.1.0"
