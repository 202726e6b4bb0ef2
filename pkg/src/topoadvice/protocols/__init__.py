"""Advice oracles and node automata for the four recognition protocols."""

from .nodes import NodeAutomaton, make_node_automaton
from .oracles import (
    PROTOCOLS,
    ProtocolParams,
    decode_tr3,
    decode_tr4,
    make_advice,
    tr1_oracle,
    tr2_advice_bound,
    tr2_oracle,
    tr3_advice_bound,
    tr3_oracle,
    tr4_code_bound,
    tr4_oracle,
)
