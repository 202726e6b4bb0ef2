"""Per-node automata for the four protocols.

An automaton sees only its degree, its advice, the protocol parameters and
the messages delivered on its ports. The simulator calls :meth:`start` for
the local computation of round 0, then for every round ``r >= 1``
:meth:`outbox` (messages to send, computed from the state after round
``r - 1``) followed by :meth:`receive`.

Views travel as :class:`~topoadvice.views.ViewStore` ids. The store is a
content-addressed cache shared by the run; an id carries exactly the
information of the tree it names.
"""

from __future__ import annotations

from typing import Any

from ..advice import AdviceError
from ..views import LabeledMap, ReconstructionError, ViewStore, path_to_str
from .oracles import ProtocolParams, decode_tr3, decode_tr4

Inbox = dict[int, tuple[int, Any]]  # receiving port -> (sending port, payload)


def _is_one(val: str) -> bool:
    return val == "1"


def _ends_with_one(val: str) -> bool:
    return val.endswith("1")


def _is_empty(val: str) -> bool:
    return val == ""


def _non_empty(val: str) -> bool:
    return val != ""


class ProtocolFault(RuntimeError):
    pass


class LazyLayer:
    """A view decorated by a value that becomes known at some round.

    Once the node's own value is known, its view depth after round ``r`` is
    one more than the smallest depth its neighbors sent in round ``r``
    (neighbors without a value count as depth -1), and never below 0.
    """

    __slots__ = ("store", "deg", "value", "top")

    def __init__(self, store: ViewStore, deg: int, value: str | None = None):
        self.store = store
        self.deg = deg
        self.value = value
        self.top: int | None = None
        if value is not None:
            self.top = store.node(value, deg)

    @property
    def depth(self) -> int:
        return -1 if self.top is None else self.store.depth[self.top]

    def set_value(self, value: str) -> None:
        self.value = value

    def advance(self, tops: list[tuple[int, int | None]]) -> None:
        """``tops[p] = (entry port, neighbor's top id or None)``."""
        if self.value is None:
            return
        store = self.store
        m = min((store.depth[c] if c is not None else -1 for _, c in tops), default=-1)
        new_depth = max(0, m + 1)
        if new_depth <= self.depth:
            return
        if new_depth == 0:
            self.top = store.node(self.value, self.deg)
        else:
            self.top = store.node(
                self.value,
                self.deg,
                tuple((q, store.truncate(c, new_depth - 1)) for q, c in tops),
            )


class NodeAutomaton:
    protocol = ""

    def __init__(self, params: ProtocolParams, advice: str, degree: int, store: ViewStore | None = None):
        self.params = params
        self.advice = advice
        self.deg = degree
        self.store = store if store is not None else ViewStore()
        self.output: LabeledMap | None = None
        self.output_round: int | None = None
        self.halt_round: int | None = None
        self.halted = False
        self.fault: str | None = None
        self.trace_info: dict[str, Any] = {}

    # -- engine interface --

    def start(self) -> None:
        self._guard(self._start)

    def outbox(self, rnd: int) -> dict[int, Any]:
        return self._outbox(rnd)

    def receive(self, rnd: int, inbox: Inbox) -> None:
        self._guard(self._receive, rnd, inbox)

    # -- helpers --

    def _guard(self, fn, *args) -> None:
        try:
            fn(*args)
        except (AdviceError, ReconstructionError, ProtocolFault) as exc:
            self.fault = f"{type(exc).__name__}: {exc}"
            self.halted = True

    def _emit(self, rnd: int, out: LabeledMap) -> None:
        if self.output is not None:
            raise ProtocolFault("output written twice")
        self.output = out
        self.output_round = rnd

    def _maybe_halt(self, rnd: int) -> None:
        if self.halt_round is None:
            return
        if rnd > self.halt_round:
            raise ProtocolFault(f"output at round {rnd} after scheduled halt {self.halt_round}")
        if rnd == self.halt_round:
            self.halted = True

    def _start(self) -> None:
        raise NotImplementedError

    def _outbox(self, rnd: int) -> dict[int, Any]:
        raise NotImplementedError

    def _receive(self, rnd: int, inbox: Inbox) -> None:
        raise NotImplementedError


def _layer_tops(inbox: Inbox, deg: int, slot: int) -> list[tuple[int, int | None]]:
    out = []
    for p in range(deg):
        if p not in inbox:
            raise ProtocolFault(f"no message on port {p}")
        q, payload = inbox[p]
        out.append((q, payload[slot]))
    return out


class TR1Node(NodeAutomaton):
    """Advice is one bit; labels are lex-least shortest paths to the 1-node."""

    protocol = "tr1"

    def _start(self) -> None:
        if self.advice not in ("0", "1"):
            raise AdviceError(f"tr1 advice must be a single bit, got {self.advice!r}")
        self.a = LazyLayer(self.store, self.deg, self.advice)
        self.star = LazyLayer(self.store, self.deg, "" if self.advice == "1" else None)
        self.label: str | None = self.star.value
        self._try_output(0)

    def _outbox(self, rnd: int) -> dict[int, Any]:
        payload = (self.a.top, self.star.top)
        return {p: payload for p in range(self.deg)}

    def _receive(self, rnd: int, inbox: Inbox) -> None:
        self.a.advance(_layer_tops(inbox, self.deg, 0))
        if self.label is None:
            hit = self.store.nearest(self.a.top, _is_one)
            if hit is not None:
                self.label = path_to_str(hit[1])
                self.star.set_value(self.label)
        self.star.advance(_layer_tops(inbox, self.deg, 1))
        self._try_output(rnd)
        self._maybe_halt(rnd)

    def _try_output(self, rnd: int) -> None:
        if self.output is None and self.star.top is not None:
            out = self.store.reconstruct(self.star.top)
            if out is not None:
                self._emit(rnd, out)
                self.halt_round = 2 * out.graph.diameter + 1


class TR2Node(NodeAutomaton):
    """Segmented labels around a sparse dominating set, then path-qualified labels.

    Payload per port: ``(A1 top, A2 top, A3 top, relayed segments)`` where
    each relayed segment is ``(remaining path, path label, bits)``.
    """

    protocol = "tr2"

    def _start(self) -> None:
        if set(self.advice) - {"0", "1"}:
            raise AdviceError(f"advice {self.advice!r} is not a bit string")
        self.t = self.params.t()
        store = self.store
        self.pending: list[tuple[tuple, tuple, str]] = []
        self.collected: list[tuple[tuple, str]] = []
        self.a3_value: str | None = None
        if self.t == 0:
            if not self.advice:
                raise AdviceError("tr2 with t=0 needs a label as advice")
            self.role = "x"
            self.a1 = LazyLayer(store, self.deg)
            self.a2 = LazyLayer(store, self.deg)
            self.a3 = LazyLayer(store, self.deg, self.advice)
            self.a3_value = self.advice
            self._try_output(0)
            return
        if self.advice == "":
            self.role = "out"
        elif self.advice.endswith("1"):
            self.role = "x"
        else:
            self.role = "member"
        self.segment = self.advice[:-1]
        self.a1 = LazyLayer(store, self.deg, self.advice)
        self.a2 = LazyLayer(store, self.deg, None if self.role == "x" else "")
        self.a3 = LazyLayer(store, self.deg)
        self.lprime: tuple | None = None
        self.detected_t: int | None = None
        self.label_bits: str | None = None

    def _outbox(self, rnd: int) -> dict[int, Any]:
        relays: dict[int, list] = {}
        for steps, lp, bits in self.pending:
            relays.setdefault(steps[0][0], []).append((steps[1:], lp, bits))
        self.pending = []
        base = (self.a1.top, self.a2.top, self.a3.top)
        return {p: base + (tuple(relays.get(p, ())),) for p in range(self.deg)}

    def _receive(self, rnd: int, inbox: Inbox) -> None:
        if self.t == 0:
            self.a3.advance(_layer_tops(inbox, self.deg, 2))
            self._try_output(rnd)
            self._maybe_halt(rnd)
            return
        store = self.store
        self.a1.advance(_layer_tops(inbox, self.deg, 0))
        for p in range(self.deg):
            for rest, lp, bits in inbox[p][1][3]:
                if rest:
                    self.pending.append((rest, lp, bits))
                elif self.role == "x":
                    self.collected.append((lp, bits))
                else:
                    raise ProtocolFault("relayed segment ended at a node outside the dominating set")
        if self.role == "member" and self.lprime is None:
            hit = store.nearest(self.a1.top, _ends_with_one)
            if hit is not None:
                self.lprime = hit[1]
                self.pending.append((hit[1], hit[1], self.segment))
        if self.role == "x":
            if self.detected_t is None:
                hit = store.nearest(self.a1.top, _is_empty)
                if hit is not None:
                    self.detected_t = hit[0]
                    if hit[0] != self.t:
                        raise ProtocolFault(f"detected t={hit[0]} but parameters give t={self.t}")
            if rnd == 2 * self.t:
                if self.detected_t is None:
                    raise ProtocolFault("t not detected by round 2t")
                self.label_bits = self.segment + "".join(bits for _, bits in sorted(self.collected))
                self.a2.set_value(self.label_bits)
        self.a2.advance(_layer_tops(inbox, self.deg, 1))
        if self.a3_value is None and self.a2.top is not None:
            hit = store.nearest(self.a2.top, _non_empty)
            if hit is not None:
                self.a3_value = f"{path_to_str(hit[1])}#{hit[2]}"
                self.a3.set_value(self.a3_value)
        self.a3.advance(_layer_tops(inbox, self.deg, 2))
        self._try_output(rnd)
        self._maybe_halt(rnd)

    def _try_output(self, rnd: int) -> None:
        if self.output is None and self.a3.top is not None:
            out = self.store.reconstruct(self.a3.top)
            if out is not None:
                self._emit(rnd, out)
                self.halt_round = out.graph.diameter + 4 * self.t + 1
                self.trace_info["a3"] = self.a3_value


class _FloodNode(NodeAutomaton):
    """Edge-code flooding shared by tr3 and tr4."""

    def _outbox(self, rnd: int) -> dict[int, Any]:
        payload = frozenset(self.known)
        return {p: payload for p in range(self.deg)}

    def _receive(self, rnd: int, inbox: Inbox) -> None:
        for _, payload in inbox.values():
            self.known |= payload
        self._finish_if_due(rnd)

    def _finish_if_due(self, rnd: int) -> None:
        if rnd == self.halt_round:
            self._emit(rnd, LabeledMap.from_codes(self.known, self.label))
            self.halted = True


class TR3Node(_FloodNode):
    protocol = "tr3"

    def _start(self) -> None:
        diameter, self.label, codes = decode_tr3(self.advice)
        self.known = set(codes)
        self.halt_round = diameter
        self.trace_info["codes"] = len(codes)
        self._finish_if_due(0)


class TR4Node(_FloodNode):
    protocol = "tr4"

    def _start(self) -> None:
        self.label, t, codes = decode_tr4(self.advice)
        self.known = set(codes)
        self.halt_round = 3 * t
        self.trace_info["codes"] = len(codes)
        self.trace_info["t"] = t
        self._finish_if_due(0)


_NODES = {"tr1": TR1Node, "tr2": TR2Node, "tr3": TR3Node, "tr4": TR4Node}


def make_node_automaton(params: ProtocolParams, advice: str, degree: int, store: ViewStore | None = None) -> NodeAutomaton:
    return _NODES[params.protocol](params, advice, degree, store)
