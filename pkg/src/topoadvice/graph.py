"""Port-labeled graphs.

A :class:`PortGraph` is a simple connected undirected graph in which the
edges at a node of degree ``d`` carry the local port numbers ``0..d-1``.
Node identifiers ``0..n-1`` exist for bookkeeping only; protocols never see
them.
"""

from __future__ import annotations

import json
from collections import deque
from functools import cached_property
from pathlib import Path
from typing import Hashable, Iterable, Sequence

Edge = tuple[int, int, int, int]  # (u, p, v, q): port p at u, port q at v
PathLabel = tuple[tuple[int, int], ...]  # sequence of (exit port, entry port)


class GraphError(ValueError):
    """Raised when edge records do not describe a valid port-labeled graph.

    ``code`` is one of ``node_range``, ``self_loop``, ``duplicate_edge``,
    ``port_duplicate``, ``port_gap``, ``disconnected``, ``bad_port``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class PortGraph:
    """Immutable port-labeled graph.

    Edges are stored canonically with ``u < v`` and sorted, so two graphs
    compare equal exactly when they have the same node count and the same
    port-labeled edge set.
    """

    __slots__ = ("n", "edges", "adj", "__dict__")

    def __init__(self, n: int, edges: tuple[Edge, ...], adj: tuple[tuple[tuple[int, int], ...], ...]):
        self.n = n
        self.edges = edges
        self.adj = adj  # adj[u][p] == (v, q)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PortGraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"PortGraph(n={self.n}, m={len(self.edges)})"

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def distance_matrix(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(_bfs(self.adj, [u])) for u in range(self.n))

    @cached_property
    def diameter(self) -> int:
        return max((max(row) for row in self.distance_matrix), default=0)

    def eccentricity(self, u: int) -> int:
        return max(self.distance_matrix[u])

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def _canonical(e: Edge) -> Edge:
    u, p, v, q = e
    return (u, p, v, q) if u < v else (v, q, u, p)


def _bfs(adj, sources: Iterable[int]) -> list[int]:
    dist = [-1] * len(adj)
    queue = deque()
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        x = queue.popleft()
        for y, _ in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> PortGraph:
    """Validate edge records ``(u, p, v, q)`` and return a :class:`PortGraph`."""
    if n < 1:
        raise GraphError("node_range", f"graph needs at least one node, got n={n}")
    seen_pairs: set[tuple[int, int]] = set()
    slots: list[dict[int, tuple[int, int]]] = [{} for _ in range(n)]
    canon: list[Edge] = []
    for rec in edges:
        u, p, v, q = (int(x) for x in rec)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError("node_range", f"edge {rec} references a node outside 0..{n - 1}")
        if p < 0 or q < 0:
            raise GraphError("port_gap", f"negative port in edge {rec}")
        if u == v:
            raise GraphError("self_loop", f"self-loop at node {u}")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            raise GraphError("duplicate_edge", f"more than one edge between {pair[0]} and {pair[1]}")
        seen_pairs.add(pair)
        for x, px, y, py in ((u, p, v, q), (v, q, u, p)):
            if px in slots[x]:
                raise GraphError("port_duplicate", f"port {px} used twice at node {x}")
            slots[x][px] = (y, py)
        canon.append(_canonical((u, p, v, q)))
    adj = []
    for x in range(n):
        d = len(slots[x])
        missing = [p for p in range(d) if p not in slots[x]]
        if missing:
            raise GraphError("port_gap", f"port {missing[0]} missing at node {x} (degree {d})")
        adj.append(tuple(slots[x][p] for p in range(d)))
    adj_t = tuple(adj)
    if min(_bfs(adj_t, [0])) < 0:
        raise GraphError("disconnected", "graph is not connected")
    return PortGraph(n, tuple(sorted(canon)), adj_t)


def neighbor_via_port(g: PortGraph, u: int, p: int) -> tuple[int, int]:
    """Return ``(v, q)``: the node reached from ``u`` through port ``p`` and the entry port."""
    if not 0 <= p < g.degree(u):
        raise GraphError("bad_port", f"node {u} has degree {g.degree(u)}, no port {p}")
    return g.adj[u][p]


def distances_from(g: PortGraph, u: int) -> list[int]:
    return list(g.distance_matrix[u])


def diameter(g: PortGraph) -> int:
    return g.diameter


def ball(g: PortGraph, u: int, t: int) -> set[int]:
    """Nodes at distance at most ``t`` from ``u``."""
    row = g.distance_matrix[u]
    return {v for v in range(g.n) if row[v] <= t}


def r_independent_dominating_set(g: PortGraph, r: int) -> list[int]:
    """Greedy independent dominating set of the r-th power of ``g``.

    Nodes are scanned in ascending order and kept when no kept node lies
    within distance ``r``. The result dominates every node within distance
    ``r`` and its members are pairwise more than ``r`` apart.
    """
    if r < 1:
        raise ValueError(f"radius must be positive, got {r}")
    dist = g.distance_matrix
    chosen: list[int] = []
    for u in range(g.n):
        if all(dist[u][x] > r for x in chosen):
            chosen.append(u)
    return chosen


def lex_min_shortest_path(g: PortGraph, u: int, targets: Iterable[int]) -> tuple[PathLabel, int]:
    """Lexicographically least shortest path from ``u`` to the nearest target.

    Returns the path label (a tuple of ``(exit port, entry port)`` steps)
    together with the target node it ends at. Since the exit port fixes the
    next node, taking the smallest exit port that keeps the walk on a
    shortest path yields the lexicographic minimum.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("targets must be non-empty")
    to_target = _bfs(g.adj, targets)
    steps = []
    x = u
    while to_target[x] > 0:
        for p, (y, q) in enumerate(g.adj[x]):
            if to_target[y] == to_target[x] - 1:
                steps.append((p, q))
                x = y
                break
    return tuple(steps), x


# -- port-respecting color refinement ---------------------------------------


def refine(adj: Sequence[Sequence[tuple[int, int]]], values: Sequence[Hashable], rounds: int | None = None) -> list[int]:
    """Port-respecting color refinement.

    Round 0 colors nodes by ``(value, degree)``; round ``i + 1`` by the
    round-``i`` color together with ``(entry port, neighbor color)`` listed in
    exit-port order. Colors are ranks of sorted signatures, so they are
    comparable across the components of one adjacency structure. With
    ``rounds=None`` refinement runs to its fixpoint.
    """
    colors = _rank([(values[u], len(adj[u])) for u in range(len(adj))])
    count = len(set(colors))
    i = 0
    while rounds is None or i < rounds:
        sigs = [(colors[u], tuple((q, colors[v]) for v, q in adj[u])) for u in range(len(adj))]
        colors = _rank(sigs)
        i += 1
        new_count = len(set(colors))
        if new_count == count:
            # Partition is stable; further rounds leave the ranks unchanged.
            break
        count = new_count
    return colors


def _rank(keys: list) -> list[int]:
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def union_adjacency(*graphs: PortGraph) -> tuple[list[tuple[tuple[int, int], ...]], list[int]]:
    """Adjacency of the disjoint union, plus the node offset of each graph."""
    adj: list[tuple[tuple[int, int], ...]] = []
    offsets = []
    for g in graphs:
        off = len(adj)
        offsets.append(off)
        adj.extend(tuple((v + off, q) for v, q in row) for row in g.adj)
    return adj, offsets


# -- isomorphism -------------------------------------------------------------


def extend_from_root(g: PortGraph, h: PortGraph, u: int, x: int) -> list[int] | None:
    """Extend ``u -> x`` along ports to a full port-preserving map, if one exists."""
    if g.n != h.n:
        return None
    fwd = [-1] * g.n
    used = [False] * h.n
    fwd[u] = x
    used[x] = True
    queue = deque([u])
    while queue:
        a = queue.popleft()
        b = fwd[a]
        if len(g.adj[a]) != len(h.adj[b]):
            return None
        for p, (c, q) in enumerate(g.adj[a]):
            d, q2 = h.adj[b][p]
            if q != q2:
                return None
            if fwd[c] < 0:
                if used[d]:
                    return None
                fwd[c] = d
                used[d] = True
                queue.append(c)
            elif fwd[c] != d:
                return None
    if -1 in fwd:
        return None
    return fwd


def port_isomorphism(g: PortGraph, h: PortGraph) -> list[int] | None:
    """Return ``f`` with ``f[u]`` the image of ``u`` if ``g`` and ``h`` are port-isomorphic.

    In a connected graph the image of a single node fixes the whole map, so
    the search only branches over the image of node 0, restricted to nodes
    of ``h`` with the same stable refinement color.
    """
    if g.n != h.n or len(g.edges) != len(h.edges):
        return None
    if sorted(map(len, g.adj)) != sorted(map(len, h.adj)):
        return None
    adj, (_, off) = union_adjacency(g, h)
    colors = refine(adj, [""] * len(adj))
    for x in range(h.n):
        if colors[off + x] != colors[0]:
            continue
        f = extend_from_root(g, h, 0, x)
        if f is not None:
            return f
    return None


# -- file format -------------------------------------------------------------


def graph_to_json(g: PortGraph, meta: dict | None = None) -> str:
    data = g.to_dict()
    if meta is not None:
        data["meta"] = meta
    return json.dumps(data)


def graph_from_dict(data: dict) -> PortGraph:
    return build_graph(int(data["n"]), [tuple(e) for e in data["edges"]])


def load_graph(path: str | Path) -> PortGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))


def save_graph(g: PortGraph, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(graph_to_json(g, meta) + "\n")
