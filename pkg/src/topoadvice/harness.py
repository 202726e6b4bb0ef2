"""Corpus, recognition checks, lower-bound witnesses and the experiment runner."""

from __future__ import annotations

import csv
import io
import itertools
import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .advice import int_width
from .families import (
    BroomSpec,
    FamilyError,
    GadgetPair,
    LollipopSpec,
    derive_prime_pair,
    enumerate_matchings,
    make_broom,
    make_h_pair,
    make_lollipop,
    random_connected,
    search_yk,
    verify_gadget_pair,
)
from .graph import PortGraph, extend_from_root, port_isomorphism
from .protocols import ProtocolParams, make_advice
from .protocols.oracles import tr2_advice_bound, tr3_advice_bound, tr4_code_bound
from .simulator import Trace, check_indistinguishable, simulate

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version",
    "family",
    "n",
    "D",
    "k",
    "protocol",
    "backend",
    "seed",
    "rounds_used",
    "advice_bits",
    "recognition_ok",
    "bound_ok",
    "wall_ms",
)


# -- corpus ------------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    family: str
    graph: PortGraph
    seed: int | None = None


def _family_graphs() -> Iterator[CorpusEntry]:
    for n, D, s in ((6, 3, 0), (6, 3, 1), (6, 1, 0), (8, 3, 0), (12, 5, 0), (16, 8, 2), (24, 12, 3), (32, 20, 4)):
        yield CorpusEntry(f"lollipop-{n}-{D}-s{s}", "lollipop", make_lollipop(LollipopSpec(n, D, seed=s)).graph, s)
    for n, D, k in ((11, 4, 1), (12, 5, 2), (16, 6, 2), (23, 6, 3), (32, 10, 3)):
        yield CorpusEntry(f"broom-{n}-{D}-{k}", "broom", make_broom(BroomSpec(n, D, k)).graph)
    base = search_yk()
    prime = derive_prime_pair(base)
    pairs = [("yk", "yk", base), ("yk-prime", "yk-prime", prime)]
    pairs += [
        (f"h-pair-{n}-{D}", "h-pair", make_h_pair(n, D, base, prime)) for n, D in ((10, 3), (12, 4), (14, 5), (16, 6))
    ]
    for name, family, pair in pairs:
        for i, g in enumerate(pair.graphs):
            yield CorpusEntry(f"{name}-{i + 1}", family, g, i)


def random_corpus(count: int = 200, max_n: int = 32, seed: int = 0) -> list[CorpusEntry]:
    rng = random.Random(seed)
    out = []
    for i in range(count):
        n = rng.randint(2, max_n)
        deg = rng.randint(2, 5)
        g = random_connected(n, deg, seed=seed * 100_003 + i)
        out.append(CorpusEntry(f"random-{i}", "random", g, i))
    return out


@lru_cache(maxsize=4)
def corpus(random_count: int = 200, max_n: int = 32, seed: int = 0) -> tuple[CorpusEntry, ...]:
    """All generated family instances plus ``random_count`` random connected graphs."""
    return tuple(_family_graphs()) + tuple(random_corpus(random_count, max_n, seed))


# -- recognition -------------------------------------------------------------------------


def verify_recognition(g: PortGraph, trace: Trace, mode: str = "labeled") -> bool:
    """Check a completed trace against the true graph.

    ``anonymous``: every output is port-isomorphic to ``g``. ``labeled``:
    additionally all nodes output the same labeled map, and one bijection
    (fixed by where node 0 places itself) sends every node's self position
    to that node.
    """
    if mode not in ("anonymous", "labeled"):
        raise ValueError(f"unknown mode {mode!r}")
    if trace.faulted:
        raise ValueError(f"trace has faults: {[f for f in trace.faults if f][:3]}")
    outs = trace.outputs
    if len(outs) != g.n or any(o is None for o in outs):
        return False
    checked: dict[PortGraph, bool] = {}
    for o in outs:
        if o.graph not in checked:
            checked[o.graph] = port_isomorphism(o.graph, g) is not None
        if not checked[o.graph]:
            return False
    if mode == "anonymous":
        return True
    first = outs[0]
    if any(o.graph != first.graph or o.labels != first.labels or o.self is None for o in outs):
        return False
    f = extend_from_root(first.graph, g, first.self, 0)
    return f is not None and all(f[o.self] == u for u, o in enumerate(outs))


# -- witnesses ---------------------------------------------------------------------------


@dataclass
class WitnessReport:
    family: str
    params: dict
    instances: list[str]
    depth: int
    indistinguishable: bool
    non_isomorphic: bool

    @property
    def conclusion(self) -> bool:
        return self.indistinguishable and self.non_isomorphic

    def to_dict(self) -> dict:
        return {**asdict(self), "conclusion": self.conclusion}


def _pairwise_witness(graphs: Sequence[PortGraph], nodes: Sequence[int], depth: int) -> tuple[bool, bool]:
    empty = [[""] * g.n for g in graphs]
    same = all(
        check_indistinguishable(graphs[0], empty[0], nodes[0], graphs[i], empty[i], nodes[i], depth)
        for i in range(1, len(graphs))
    )
    distinct = all(port_isomorphism(a, b) is None for a, b in itertools.combinations(graphs, 2))
    return same, distinct


def witness_lollipop(n: int, D: int, seeds: Sequence[int], depth: int | None = None) -> WitnessReport:
    """Stick ends of lollipops with different candy ports look alike for ``D`` rounds."""
    lols = [make_lollipop(LollipopSpec(n, D, seed=s)) for s in seeds]
    depth = D if depth is None else depth
    same, distinct = _pairwise_witness([x.graph for x in lols], [x.u for x in lols], depth)
    return WitnessReport("lollipop", {"n": n, "D": D, "seeds": list(seeds)}, [f"seed={s}" for s in seeds], depth, same, distinct)


def witness_broom(n: int, D: int, k: int, max_matchings: int | None = None, depth: int | None = None) -> WitnessReport:
    """The handle node of every broom in the family has one view up to depth ``D + k``."""
    spec = BroomSpec(n, D, k)
    spec.validate()
    matchings = list(itertools.islice(enumerate_matchings(spec.m), max_matchings))
    brooms = [make_broom(spec, m) for m in matchings]
    depth = D + k if depth is None else depth
    same, distinct = _pairwise_witness([b.graph for b in brooms], [b.h for b in brooms], depth)
    return WitnessReport(
        "broom", {"n": n, "D": D, "k": k, "m": spec.m}, [json.dumps([list(p) for p in m]) for m in matchings], depth, same, distinct
    )


def witness_gadget(pair: GadgetPair) -> WitnessReport:
    """Black nodes of a gadget pair agree at the refinement fixpoint depth."""
    g1, g2 = pair.graphs
    depth = g1.n + g2.n - 1
    empty1, empty2 = [""] * g1.n, [""] * g2.n
    same = all(
        check_indistinguishable(g1, empty1, pair.black[0][0], g, e, b, depth)
        for g, e, blk in ((g1, empty1, pair.black[0]), (g2, empty2, pair.black[1]))
        for b in blk
    )
    distinct = port_isomorphism(g1, g2) is None
    return WitnessReport(
        f"gadget-{pair.kind}", {"n": pair.n, "D": pair.D}, ["G1", "G2"], depth, same and verify_gadget_pair(pair).ok, distinct
    )


# -- experiments -------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    families: list[str] = field(default_factory=lambda: ["random"])
    n: list[int] = field(default_factory=lambda: [16])
    D: list[int] | None = None
    k: list[int] | None = None
    broom_k: list[int] = field(default_factory=lambda: [1])
    protocols: list[str] = field(default_factory=lambda: ["tr1", "tr2", "tr3", "tr4"])
    backend: str = "view"
    seeds: list[int] = field(default_factory=lambda: [0])
    max_degree: int = 4
    output: str | None = None
    max_rounds: int | None = None
    mem_budget_mb: float | None = None
    workers: int = 1

    def __post_init__(self):
        for p in self.protocols:
            ProtocolParams(p, 1)
        if self.k is not None and any(k < 1 for k in self.k):
            raise ValueError("k values must be >= 1")
        unknown = set(self.families) - {"random", "lollipop", "broom", "h-pair"}
        if unknown:
            raise ValueError(f"unknown families {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = cls.__dataclass_fields__
        extra = set(data) - set(known)
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _instances(cfg: ExperimentConfig) -> Iterator[tuple[str, int, int, PortGraph]]:
    """Yield ``(family, n, seed, graph)``; infeasible parameter points are skipped."""
    yk = None
    for family in cfg.families:
        for n in cfg.n:
            if family == "random":
                for s in cfg.seeds:
                    g = random_connected(n, cfg.max_degree, seed=s)
                    if cfg.D is None or g.diameter in cfg.D:
                        yield family, n, s, g
                continue
            for D in cfg.D or ():
                try:
                    if family == "lollipop":
                        for s in cfg.seeds:
                            yield family, n, s, make_lollipop(LollipopSpec(n, D, seed=s)).graph
                    elif family == "broom":
                        for bk in cfg.broom_k:
                            yield family, n, bk, make_broom(BroomSpec(n, D, bk)).graph
                    else:
                        yk = yk or search_yk()
                        pair = make_h_pair(n, D, yk)
                        for i, g in enumerate(pair.graphs):
                            yield family, n, i, g
                except FamilyError:
                    continue


def allotted_time(protocol: str, D: int, k: int | None) -> int:
    return {"tr1": 2 * D + 1, "tr2": D + (k or 0), "tr3": D, "tr4": D - (k or 0)}[protocol]


def check_bounds(g: PortGraph, params: ProtocolParams, trace: Trace) -> bool:
    """Per-instance round and advice bounds of each protocol."""
    D, n = g.diameter, g.n
    if trace.faulted or any(h is None for h in trace.halts):
        return False
    rounds, bits = trace.rounds, trace.advice_bits
    if params.protocol == "tr1":
        return bits == 1 and all(h == 2 * D + 1 for h in trace.halts)
    if params.protocol == "tr2":
        t = params.t()
        return rounds <= D + params.k and bits <= tr2_advice_bound(n, t) and bool(trace.info.get("a3_injective"))
    if params.protocol == "tr3":
        return all(h == D for h in trace.halts) and bits <= tr3_advice_bound(n) <= 4 * n * int_width(n)
    t = params.t(D)
    codes = trace.info.get("edge_codes") or [0]
    return rounds <= 3 * t <= D - params.k and max(codes) <= tr4_code_bound(g.num_edges, t)


def run_instance(g: PortGraph, params: ProtocolParams, backend: str = "view", **kwargs) -> tuple[Trace, bool, bool]:
    """Advise, simulate and check one instance: ``(trace, recognition_ok, bound_ok)``."""
    trace = simulate(g, make_advice(g, params), params, backend=backend, **kwargs)
    ok = not trace.faulted and verify_recognition(g, trace, "labeled")
    return trace, ok, check_bounds(g, params, trace)


def _row(job) -> dict:
    family, n, seed, g, protocol, k, backend, max_rounds, mem = job
    params = ProtocolParams(protocol, k)
    start = time.perf_counter()
    row = {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "n": n,
        "D": g.diameter,
        "k": "" if k is None else k,
        "protocol": protocol,
        "backend": backend,
        "seed": seed,
    }
    try:
        kwargs = {"max_rounds": max_rounds}
        if backend == "faithful":
            kwargs["mem_budget_mb"] = mem
        trace, rec, bound = run_instance(g, params, backend, **kwargs)
        row.update(rounds_used=trace.rounds, advice_bits=trace.advice_bits, recognition_ok=rec, bound_ok=bound)
    except Exception as exc:  # recorded in the row, the sweep keeps going
        row.update(rounds_used="", advice_bits="", recognition_ok=False, bound_ok=False, error=f"{type(exc).__name__}: {exc}")
    row["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
    return row


def _jobs(cfg: ExperimentConfig) -> Iterator[tuple]:
    for family, n, seed, g in _instances(cfg):
        D = g.diameter
        for protocol in cfg.protocols:
            ks: Iterable[int | None]
            if protocol in ("tr2", "tr4"):
                ks = [k for k in (cfg.k or range(1, D + 1)) if k <= D]
            else:
                ks = [None]
            for k in ks:
                yield family, n, seed, g, protocol, k, cfg.backend, cfg.max_rounds, cfg.mem_budget_mb


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Run every (instance, protocol, k) of the sweep; rows come back in generation order."""
    jobs = list(_jobs(cfg))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_row, jobs, chunksize=8))
    else:
        rows = [_row(j) for j in jobs]
    if cfg.output:
        write_csv(rows, cfg.output)
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(rows: Iterable[dict], path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def advice_time_violations(rows: Iterable[dict]) -> list[dict]:
    """Places where more allotted time comes with more advice, per ``(n, D)``.

    For each ``(n, D)`` the largest advice at every allotted time is taken
    over all rows; a violation is a pair of consecutive times whose advice
    goes up.
    """
    worst: dict[tuple[int, int], dict[int, tuple[int, str]]] = {}
    for r in rows:
        if r["advice_bits"] in ("", None):
            continue
        n, D = int(r["n"]), int(r["D"])
        k = int(r["k"]) if r["k"] not in ("", None) else None
        t = allotted_time(r["protocol"], D, k)
        bits = int(r["advice_bits"])
        slot = worst.setdefault((n, D), {})
        label = r["protocol"] if k is None else f"{r['protocol']}(k={k})"
        if t not in slot or bits > slot[t][0]:
            slot[t] = (bits, label)
    out = []
    for (n, D), slot in sorted(worst.items()):
        times = sorted(slot)
        for a, b in zip(times, times[1:]):
            if slot[b][0] > slot[a][0]:
                out.append(
                    {"n": n, "D": D, "time": b, "advice": slot[b][0], "by": slot[b][1],
                     "prev_time": a, "prev_advice": slot[a][0], "prev_by": slot[a][1]}
                )
    return out
