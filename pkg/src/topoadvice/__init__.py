"""Topology recognition with advice in anonymous port-labeled networks."""

from .graph import GraphError, PortGraph, build_graph, port_isomorphism
from .protocols import ProtocolParams, make_advice
from .simulator import Trace, simulate
from .views import LabeledMap

__version__ = "0.1.0"
