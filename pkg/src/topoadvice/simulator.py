"""Synchronous round engine.

Two interchangeable backends produce a :class:`Trace`:

``faithful``
    Node automata exchange messages round by round.
``view``
    Each node's round-``r`` knowledge is a function of its depth-``r``
    decorated view, so the same quantities the automata derive from their
    views are computed directly on the graph, without any messages.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

from .advice import AdviceError, advice_size
from .graph import PortGraph, lex_min_shortest_path
from .protocols.nodes import make_node_automaton
from .protocols.oracles import ProtocolParams, decode_tr3, decode_tr4
from .views import LabeledMap, ReconstructionError, ViewStore, path_to_str, views_equal

BACKENDS = ("faithful", "view")


class SimulationError(RuntimeError):
    def __init__(self, message: str, trace: "Trace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass
class Trace:
    protocol: str
    backend: str
    advice_bits: int
    halts: list[int | None]
    output_rounds: list[int | None]
    outputs: list[LabeledMap | None]
    faults: list[str | None]
    log: list[list[tuple[int, int, Any]]] | None = None
    info: dict[str, Any] = field(default_factory=dict)
    store: ViewStore | None = field(default=None, repr=False, compare=False)

    @property
    def rounds(self) -> int:
        return max((h for h in self.halts if h is not None), default=0)

    @property
    def faulted(self) -> bool:
        return any(f is not None for f in self.faults)

    def to_dict(self, iso_ok: Sequence[bool] | None = None, store: ViewStore | None = None, include_log: bool = False) -> dict:
        nodes = []
        for u in range(len(self.halts)):
            entry = {
                "halt": self.halts[u],
                "output_round": self.output_rounds[u],
                "fault": self.faults[u],
                "output": None if self.outputs[u] is None else self.outputs[u].to_dict(),
            }
            if iso_ok is not None:
                entry["output_iso_ok"] = bool(iso_ok[u])
            nodes.append(entry)
        data = {
            "protocol": self.protocol,
            "backend": self.backend,
            "rounds": self.rounds,
            "advice_bits": self.advice_bits,
            "nodes": nodes,
            "info": _jsonable(self.info),
        }
        if include_log and self.log is not None:
            store = store or self.store
            data["log"] = [[[p, r, _payload_repr(m, store)] for p, r, m in entries] for entries in self.log]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Trace":
        nodes = data["nodes"]
        return cls(
            protocol=data["protocol"],
            backend=data.get("backend", "view"),
            advice_bits=data["advice_bits"],
            halts=[x["halt"] for x in nodes],
            output_rounds=[x.get("output_round") for x in nodes],
            outputs=[None if x["output"] is None else LabeledMap.from_dict(x["output"]) for x in nodes],
            faults=[x.get("fault") for x in nodes],
            info=data.get("info", {}),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(**kwargs))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in obj]
    return obj


def _payload_repr(payload, store: ViewStore | None):
    """Message payloads with view ids replaced by content digests."""
    if isinstance(payload, frozenset):
        return sorted([list(c) for c in payload])
    if isinstance(payload, tuple):
        out = []
        for i, item in enumerate(payload):
            if isinstance(item, int) and store is not None and i < 3:
                out.append(store.digest(item))
            else:
                out.append(_jsonable(item))
        return out
    return _jsonable(payload)


def _default_budget_mb() -> float | None:
    raw = os.environ.get("TRA_MEM_BUDGET_MB")
    return float(raw) if raw else None


def simulate(
    g: PortGraph,
    advice: Sequence[str],
    params: ProtocolParams,
    backend: str = "view",
    max_rounds: int | None = None,
    keep_log: bool = False,
    mem_budget_mb: float | None = None,
) -> Trace:
    if len(advice) != g.n:
        raise ValueError(f"advice has {len(advice)} entries for {g.n} nodes")
    if max_rounds is None:
        max_rounds = 2 * g.n + 2
    if backend == "faithful":
        return _simulate_faithful(g, advice, params, max_rounds, keep_log, mem_budget_mb)
    if backend == "view":
        return view_backend_step(g, advice, params, max_rounds)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


# -- faithful -----------------------------------------------------------------------------


def _simulate_faithful(g, advice, params, max_rounds, keep_log, mem_budget_mb) -> Trace:
    store = ViewStore(mem_budget_mb if mem_budget_mb is not None else _default_budget_mb())
    nodes = [make_node_automaton(params, advice[u], g.degree(u), store) for u in range(g.n)]
    halts: list[int | None] = [None] * g.n
    log: list[list] | None = [[] for _ in range(g.n)] if keep_log else None
    for u, a in enumerate(nodes):
        a.start()
        if a.halted:
            halts[u] = 0
    rnd = 0

    def snapshot() -> Trace:
        trace = Trace(
            protocol=params.protocol,
            backend="faithful",
            advice_bits=advice_size(advice),
            halts=list(halts),
            output_rounds=[a.output_round for a in nodes],
            outputs=[a.output for a in nodes],
            faults=[a.fault for a in nodes],
            log=log,
        )
        _attach_info(trace, g, params, [a.trace_info for a in nodes])
        trace.info["views_interned"] = len(store)
        trace.store = store
        return trace

    while not all(a.halted for a in nodes):
        rnd += 1
        if rnd > max_rounds:
            raise SimulationError(f"round budget {max_rounds} exhausted", snapshot())
        inboxes: list[dict] = [{} for _ in range(g.n)]
        for u, a in enumerate(nodes):
            if a.halted:
                continue
            for p, payload in a.outbox(rnd).items():
                v, q = g.adj[u][p]
                inboxes[v][q] = (p, payload)
        for v, a in enumerate(nodes):
            if a.halted:
                continue
            if log is not None:
                log[v].extend((q, rnd, msg) for q, (_, msg) in sorted(inboxes[v].items()))
            a.receive(rnd, inboxes[v])
            if a.halted:
                halts[v] = rnd
    trace = snapshot()
    return trace


def _attach_info(trace: Trace, g: PortGraph, params: ProtocolParams, infos: list[dict]) -> None:
    if params.protocol == "tr2":
        vals = [i.get("a3") for i in infos]
        trace.info["a3_injective"] = None not in vals and len(set(vals)) == len(vals)
    if params.protocol in ("tr3", "tr4"):
        trace.info["edge_codes"] = [i.get("codes") for i in infos]


# -- view-based ---------------------------------------------------------------------------


def lazy_depths(g: PortGraph, starts: Sequence[int | None], rounds: int) -> list[list[int]]:
    """Depth of each node's lazily-started view after every round ``0..rounds``.

    ``starts[u]`` is the round at which ``u`` learns its own value (``None``:
    never). Mirrors the recurrence of the automata's view layers.
    """
    depth = [0 if s == 0 else -1 for s in starts]
    history = [list(depth)]
    for r in range(1, rounds + 1):
        new = []
        for u in range(g.n):
            s = starts[u]
            if s is None or r < s:
                new.append(-1)
                continue
            m = min((depth[v] for v, _ in g.adj[u]), default=-1)
            new.append(max(depth[u], max(0, m + 1)))
        depth = new
        history.append(list(depth))
    return history


def _first_round(history: list[list[int]], u: int, need: int) -> int | None:
    for r, row in enumerate(history):
        if row[u] >= need:
            return r
    return None


def _completion_level(g: PortGraph, values: Sequence[str], u: int) -> int:
    """Least ``l`` with equal value sets on the balls of radius ``l`` and ``l + 1``."""
    row = g.distance_matrix[u]
    ecc = max(row)
    seen: set[str] = set()
    prev = -1
    for lvl in range(ecc + 2):
        seen.update(values[v] for v in range(g.n) if row[v] == lvl)
        if len(seen) == prev:
            return lvl - 1
        prev = len(seen)
    return ecc  # unreachable for connected graphs


def _labeled_map(g: PortGraph, values: Sequence[str], u: int) -> LabeledMap:
    codes = [(values[a], p, q, values[b]) for a, p, b, q in g.edges]
    return LabeledMap.from_codes(codes, values[u])


def _reconstruction_outputs(g, values, starts, horizon, halt_of, halts, out_rounds, outputs, faults) -> None:
    """Output rounds and maps for nodes reconstructing from a lazily-started injective view."""
    history = lazy_depths(g, starts, horizon)
    injective = len(set(values)) == g.n
    for u in range(g.n):
        if faults[u]:
            continue
        if not injective:
            faults[u] = "ReconstructionError: decoration is not injective"
            continue
        lvl = _completion_level(g, values, u)
        r = _first_round(history, u, lvl + 1)
        if r is None:
            faults[u] = "round budget exhausted before output"
            continue
        out_rounds[u] = r
        outputs[u] = _labeled_map(g, values, u)
        h = halt_of(outputs[u])
        if r > h:
            faults[u] = f"ProtocolFault: output at round {r} after scheduled halt {h}"
            continue
        halts[u] = h


def view_backend_step(g: PortGraph, advice: Sequence[str], params: ProtocolParams, max_rounds: int | None = None) -> Trace:
    n = g.n
    if max_rounds is None:
        max_rounds = 2 * n + 2
    halts: list[int | None] = [None] * n
    out_rounds: list[int | None] = [None] * n
    outputs: list[LabeledMap | None] = [None] * n
    faults: list[str | None] = [None] * n
    info: dict[str, Any] = {}
    proto = params.protocol
    dist = g.distance_matrix

    if proto == "tr1":
        ones = [u for u in range(n) if advice[u] == "1"]
        bad = [u for u in range(n) if advice[u] not in ("0", "1")]
        for u in bad:
            faults[u] = "AdviceError: tr1 advice must be a single bit"
        if ones:
            labels = [path_to_str(lex_min_shortest_path(g, u, ones)[0]) for u in range(n)]
            starts = [min(dist[u][v] for v in ones) for u in range(n)]
            _reconstruction_outputs(g, labels, starts, max_rounds, lambda m: 2 * m.graph.diameter + 1,
                           halts, out_rounds, outputs, faults)
        else:
            for u in range(n):
                faults[u] = faults[u] or "round budget exhausted before output"

    elif proto == "tr2":
        t = params.t()
        if t == 0:
            if any(a == "" for a in advice):
                for u in range(n):
                    if advice[u] == "":
                        faults[u] = "AdviceError: tr2 with t=0 needs a label as advice"
            values = list(advice)
            info["a3_injective"] = len(set(values)) == n
            _reconstruction_outputs(g, values, [0] * n, max_rounds, lambda m: m.graph.diameter + 1,
                           halts, out_rounds, outputs, faults)
        else:
            values = _tr2_labels(g, advice, t, faults)
            if values is not None:
                x_nodes = [u for u in range(n) if advice[u].endswith("1")]
                a2 = [values[0].get(u, "") for u in range(n)]
                starts2 = [2 * t if u in values[0] else 0 for u in range(n)]
                hist2 = lazy_depths(g, starts2, max_rounds)
                a3: list[str] = []
                starts3: list[int | None] = []
                for u in range(n):
                    d = min(dist[u][x] for x in x_nodes)
                    r = _first_round(hist2, u, d)
                    path, end = lex_min_shortest_path(g, u, x_nodes)
                    a3.append(f"{path_to_str(path)}#{a2[end]}")
                    starts3.append(r)
                info["a3_injective"] = len(set(a3)) == n
                _reconstruction_outputs(g, a3, starts3, max_rounds, lambda m: m.graph.diameter + 4 * t + 1,
                               halts, out_rounds, outputs, faults)
            else:
                info["a3_injective"] = False

    elif proto in ("tr3", "tr4"):
        decoded = []
        for u in range(n):
            try:
                if proto == "tr3":
                    d, label, codes = decode_tr3(advice[u])
                    decoded.append((label, d, codes))
                else:
                    label, t, codes = decode_tr4(advice[u])
                    decoded.append((label, 3 * t, codes))
            except AdviceError as exc:
                faults[u] = f"AdviceError: {exc}"
                decoded.append(None)
        info["edge_codes"] = [None if x is None else len(x[2]) for x in decoded]
        for u in range(n):
            if decoded[u] is None:
                continue
            label, horizon, _ = decoded[u]
            reach = [v for v in range(n) if dist[u][v] <= horizon]
            if any(decoded[v] is None for v in reach):
                faults[u] = "ProtocolFault: no message on a port"
                continue
            known = {c for v in reach for c in decoded[v][2]}
            try:
                outputs[u] = LabeledMap.from_codes(known, label)
            except ReconstructionError as exc:
                faults[u] = f"ReconstructionError: {exc}"
                continue
            out_rounds[u] = halts[u] = horizon
    else:
        raise ValueError(f"unknown protocol {proto!r}")

    for u in range(n):
        if faults[u] is not None:
            halts[u] = halts[u] if halts[u] is not None else 0
    trace = Trace(proto, "view", advice_size(advice), halts, out_rounds, outputs, faults, None, info)
    out_of_rounds = any(f is not None and f.startswith("round budget") for f in faults)
    if out_of_rounds or (not trace.faulted and trace.rounds > max_rounds):
        raise SimulationError(f"round budget {max_rounds} exhausted", trace)
    return trace


def _tr2_labels(g: PortGraph, advice: Sequence[str], t: int, faults: list) -> tuple[dict[int, str]] | None:
    """Labels the dominating-set nodes reassemble by round ``2t``."""
    n = g.n
    x_nodes = [u for u in range(n) if advice[u].endswith("1")]
    members = [u for u in range(n) if advice[u].endswith("0")]
    if not x_nodes:
        for u in range(n):
            faults[u] = "ProtocolFault: no dominating-set node"
        return None
    empties = [u for u in range(n) if advice[u] == ""]
    dist = g.distance_matrix
    for x in x_nodes:
        seen = min((dist[x][e] for e in empties), default=None)
        if seen != t:
            faults[x] = f"ProtocolFault: detected t={seen} but parameters give t={t}"
    collected: dict[int, list] = {x: [] for x in x_nodes}
    for u in members:
        path, end = lex_min_shortest_path(g, u, x_nodes)
        if len(path) > t:
            # arrives after round 2t: the center reassembles without it
            continue
        collected[end].append((path, advice[u][:-1]))
    labels = {x: advice[x][:-1] + "".join(bits for _, bits in sorted(collected[x])) for x in x_nodes}
    return (labels,)


def check_indistinguishable(g, a, u, g2, a2, u2, t: int | None) -> bool:
    """Whether ``u`` and ``u2`` see the same advice-decorated view at depth ``t``.

    If so, any ``t``-round algorithm behaves identically at both nodes, so
    when ``g`` and ``g2`` are not isomorphic one of them must answer wrongly.
    """
    return views_equal(g, a, u, g2, a2, u2, t)
