"""Decorated views, view equality and map reconstruction.

Two representations of truncated views live here:

* :class:`DecoratedViewTree` is an explicit tree, one object per walk. It
  is exponential in the depth and is kept as a small-scale oracle and as a
  wire/fixture format.
* :class:`ViewStore` hash-conses views: every distinct subtree gets one
  integer id, so a depth-``l`` view of an ``n``-node graph costs at most
  ``n`` ids per level. The simulator passes these ids as message payloads.

View equality at scale is decided by :func:`view_colors` (port-respecting
color refinement), which coincides with tree equality depth by depth.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .graph import (
    GraphError,
    PathLabel,
    PortGraph,
    build_graph,
    lex_min_shortest_path,
    refine,
    union_adjacency,
)

__all__ = [
    "DecoratedViewTree",
    "LabeledMap",
    "ReconstructionError",
    "ViewBudgetError",
    "ViewStore",
    "decorated_view",
    "lex_min_shortest_path",
    "path_to_str",
    "reconstruct_from_injective_decoration",
    "view_colors",
    "view_tree_size",
    "views_equal",
]

DEFAULT_TREE_BUDGET = 200_000


class ViewBudgetError(RuntimeError):
    pass


class ReconstructionError(ValueError):
    """The view shows two tree nodes with one value but conflicting neighborhoods."""


def path_to_str(path: PathLabel) -> str:
    """Text form of a path label, e.g. ``"0.1/2.0"``; the empty path is ``""``."""
    return "/".join(f"{p}.{q}" for p, q in path)


# -- explicit trees ------------------------------------------------------------


@dataclass(frozen=True)
class DecoratedViewTree:
    """Truncated view: ``kids[p] == (q, subtree)`` for every exit port ``p``.

    Leaves at the truncation depth have no kids but still carry the degree
    of the node they stand for; a node learns its neighbors' degrees one
    round after start, so the degree is part of what a view reveals.
    """

    val: str
    deg: int
    kids: tuple[tuple[int, "DecoratedViewTree"], ...] = ()

    @property
    def depth(self) -> int:
        return 1 + max(k.depth for _, k in self.kids) if self.kids else 0

    @property
    def children(self) -> dict[tuple[int, int], "DecoratedViewTree"]:
        return {(p, q): sub for p, (q, sub) in enumerate(self.kids)}

    def size(self) -> int:
        return 1 + sum(sub.size() for _, sub in self.kids)

    def to_dict(self) -> dict:
        return {
            "val": self.val,
            "deg": self.deg,
            "kids": {f"{p},{q}": sub.to_dict() for p, (q, sub) in enumerate(self.kids)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DecoratedViewTree":
        items = []
        for key, sub in data.get("kids", {}).items():
            p, q = (int(x) for x in key.split(","))
            items.append((p, q, cls.from_dict(sub)))
        items.sort(key=lambda it: it[0])
        if [p for p, _, _ in items] != list(range(len(items))):
            raise ValueError("view tree kids must cover exit ports 0..d-1")
        return cls(str(data["val"]), int(data.get("deg", len(items))), tuple((q, sub) for _, q, sub in items))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def view_tree_size(g: PortGraph, u: int, depth: int) -> int:
    """Number of tree nodes in the depth-``depth`` view of ``u``."""
    counts = [1] * g.n
    for _ in range(depth):
        counts = [1 + sum(counts[v] for v, _ in g.adj[x]) for x in range(g.n)]
    return counts[u]


def decorated_view(
    g: PortGraph,
    f: Sequence[str],
    u: int,
    depth: int,
    budget: int = DEFAULT_TREE_BUDGET,
) -> DecoratedViewTree:
    """Materialize the decorated view of ``u`` at ``depth``, one object per walk."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    size = view_tree_size(g, u, depth)
    if size > budget:
        raise ViewBudgetError(
            f"view of node {u} at depth {depth} has {size} tree nodes (budget {budget}); "
            "use views_equal / view_colors for equality instead"
        )

    def build(x: int, d: int) -> DecoratedViewTree:
        if d == 0:
            return DecoratedViewTree(f[x], g.degree(x))
        return DecoratedViewTree(f[x], g.degree(x), tuple((q, build(y, d - 1)) for y, q in g.adj[x]))

    return build(u, depth)


# -- refinement ------------------------------------------------------------------


@dataclass(frozen=True)
class ColorAssignment:
    colors: tuple[int, ...]
    round: int


def view_colors(g: PortGraph, f: Sequence[str], depth: int) -> ColorAssignment:
    """Colors after ``depth`` refinement rounds: equal colors iff equal depth-``depth`` views."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return ColorAssignment(tuple(refine(g.adj, f, depth)), depth)


def union_view_colors(
    graphs: Sequence[PortGraph], decorations: Sequence[Sequence[str]], depth: int | None
) -> list[list[int]]:
    """Refinement colors on the disjoint union, split back per graph."""
    adj, offsets = union_adjacency(*graphs)
    values = [val for f in decorations for val in f]
    colors = refine(adj, values, depth)
    return [colors[off : off + g.n] for g, off in zip(graphs, offsets)]


def views_equal(
    g: PortGraph,
    f: Sequence[str],
    u: int,
    g2: PortGraph,
    f2: Sequence[str],
    u2: int,
    depth: int | None,
) -> bool:
    """Whether ``u`` in ``(g, f)`` and ``u2`` in ``(g2, f2)`` have equal decorated views.

    ``depth=None`` compares full (infinite) views via the refinement fixpoint.
    """
    c1, c2 = union_view_colors([g, g2], [f, f2], depth)
    return c1[u] == c2[u2]


# -- labeled maps ------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledMap:
    """Output of topology recognition.

    Map nodes are numbered in sorted label order, so two maps built from the
    same labeled edge set are equal as values.
    """

    graph: PortGraph
    labels: tuple[str, ...]
    self: int | None = None

    @classmethod
    def from_codes(cls, codes: Iterable[tuple[str, int, int, str]], self_label: str | None = None) -> "LabeledMap":
        """Build a map from edge codes ``(label_u, p, q, label_v)``.

        Codes may repeat and may list an edge from either side. Conflicting
        codes raise :class:`ReconstructionError`.
        """
        seen: dict[tuple[str, int], tuple[int, str]] = {}
        for a, p, q, b in codes:
            for x, px, y, py in ((a, p, b, q), (b, q, a, p)):
                prev = seen.setdefault((x, px), (py, y))
                if prev != (py, y):
                    raise ReconstructionError(f"port {px} of {x!r} leads to both {prev} and {(py, y)}")
        labels = sorted({x for x, _ in seen} | ({self_label} if self_label is not None else set()))
        index = {lab: i for i, lab in enumerate(labels)}
        edges = {
            tuple(sorted(((index[x], px), (index[y], py))))
            for (x, px), (py, y) in seen.items()
        }
        try:
            graph = build_graph(len(labels), [(a, p, b, q) for (a, p), (b, q) in edges])
        except GraphError as exc:
            raise ReconstructionError(f"edge codes do not form a valid graph: {exc}") from exc
        return cls(graph, tuple(labels), None if self_label is None else index[self_label])

    def codes(self) -> set[tuple[str, int, int, str]]:
        lab = self.labels
        return {(lab[u], p, q, lab[v]) for u, p, v, q in self.graph.edges}

    def to_dict(self) -> dict:
        return {**self.graph.to_dict(), "labels": list(self.labels), "self": self.self}

    @classmethod
    def from_dict(cls, data: Mapping) -> "LabeledMap":
        g = build_graph(int(data["n"]), [tuple(e) for e in data["edges"]])
        return cls(g, tuple(data["labels"]), data.get("self"))


# -- hash-consed views -------------------------------------------------------------


class MemoryBudgetError(MemoryError):
    pass


_BYTES_PER_VIEW = 240  # rough footprint of one interned view with its indices


class ViewStore:
    """Content-addressed table of truncated views.

    A view is ``(value, degree, depth, kids)`` with ``kids`` the tuple of
    ``(entry port, child id)`` in exit-port order. Equal views always get the
    same id, so id equality is view equality.
    """

    def __init__(self, mem_budget_mb: float | None = None):
        self._index: dict[tuple, int] = {}
        self.val: list[str] = []
        self.deg: list[int] = []
        self.depth: list[int] = []
        self.kids: list[tuple[tuple[int, int], ...]] = []
        self._max_views = None if mem_budget_mb is None else int(mem_budget_mb * 2**20 / _BYTES_PER_VIEW)
        self._trunc: dict[tuple[int, int], int] = {}
        self._levels: dict[int, list[frozenset[int]]] = {}
        self._nearest: dict[Callable, dict[int, tuple | None]] = {}
        self._digest: dict[int, str] = {}

    def __len__(self) -> int:
        return len(self.val)

    def node(self, val: str, deg: int, kids: tuple[tuple[int, int], ...] = ()) -> int:
        depth = 1 + max(self.depth[c] for _, c in kids) if kids else 0
        key = (val, deg, depth, kids)
        vid = self._index.get(key)
        if vid is None:
            if self._max_views is not None and len(self.val) >= self._max_views:
                raise MemoryBudgetError(f"view store exceeded {len(self.val)} views")
            vid = len(self.val)
            self._index[key] = vid
            self.val.append(val)
            self.deg.append(deg)
            self.depth.append(depth)
            self.kids.append(kids)
        return vid

    def truncate(self, vid: int, depth: int) -> int:
        if depth >= self.depth[vid]:
            return vid
        key = (vid, depth)
        out = self._trunc.get(key)
        if out is None:
            if depth == 0:
                out = self.node(self.val[vid], self.deg[vid])
            else:
                out = self.node(
                    self.val[vid],
                    self.deg[vid],
                    tuple((q, self.truncate(c, depth - 1)) for q, c in self.kids[vid]),
                )
            self._trunc[key] = out
        return out

    def intern_tree(self, tree: DecoratedViewTree) -> int:
        return self.node(tree.val, tree.deg, tuple((q, self.intern_tree(sub)) for q, sub in tree.kids))

    def expand(self, vid: int) -> DecoratedViewTree:
        return DecoratedViewTree(self.val[vid], self.deg[vid], tuple((q, self.expand(c)) for q, c in self.kids[vid]))

    def levels(self, vid: int) -> list[frozenset[int]]:
        """Ids present at each level of the view (level 0 is the root)."""
        out = self._levels.get(vid)
        if out is None:
            out = [frozenset([vid])]
            while True:
                nxt = frozenset(c for x in out[-1] for _, c in self.kids[x])
                if not nxt:
                    break
                out.append(nxt)
            self._levels[vid] = out
        return out

    def nearest(self, vid: int, match: Callable[[str], bool]) -> tuple[int, PathLabel, str] | None:
        """Shortest, then lexicographically least, path to a tree node whose value matches.

        Returns ``(distance, path label, matched value)``.
        """
        memo = self._nearest.setdefault(match, {})

        def go(x: int):
            if x in memo:
                return memo[x]
            if match(self.val[x]):
                res = (0, (), self.val[x])
            else:
                res = None
                for p, (q, c) in enumerate(self.kids[x]):
                    sub = go(c)
                    if sub is None:
                        continue
                    cand = (sub[0] + 1, ((p, q),) + sub[1], sub[2])
                    if res is None or cand[:2] < res[:2]:
                        res = cand
            memo[x] = res
            return res

        return go(vid)

    def completion_level(self, vid: int) -> int | None:
        """Least ``l`` with the same value set at depth ``<= l`` and ``<= l + 1``.

        ``None`` while the view is too shallow to witness such an ``l``.
        """
        seen: set[str] = set()
        prev = -1
        for lvl, ids in enumerate(self.levels(vid)):
            seen.update(self.val[x] for x in ids)
            if len(seen) == prev:
                return lvl - 1
            prev = len(seen)
        return None

    def reconstruct(self, vid: int, self_label: str | None = None) -> LabeledMap | None:
        """Labeled map from a view decorated by an injective decoration.

        Returns ``None`` if the view is not yet deep enough; raises
        :class:`ReconstructionError` on evidence of non-injectivity.
        """
        lvl = self.completion_level(vid)
        if lvl is None:
            return None
        levels = self.levels(vid)
        degree_of: dict[str, int] = {}
        codes = []
        for ids in levels[: lvl + 2]:
            for x in ids:
                val = self.val[x]
                if degree_of.setdefault(val, self.deg[x]) != self.deg[x]:
                    raise ReconstructionError(f"value {val!r} appears with degrees {degree_of[val]} and {self.deg[x]}")
        for ids in levels[: lvl + 1]:
            for x in ids:
                for p, (q, c) in enumerate(self.kids[x]):
                    codes.append((self.val[x], p, q, self.val[c]))
        out = LabeledMap.from_codes(codes, self.val[vid] if self_label is None else self_label)
        for i, lab in enumerate(out.labels):
            if out.graph.degree(i) != degree_of[lab]:
                raise ReconstructionError(f"value {lab!r}: degree {degree_of[lab]} in view, {out.graph.degree(i)} in map")
        return out

    def digest(self, vid: int) -> str:
        """Stable content hash of a view, used in serialized message logs."""
        out = self._digest.get(vid)
        if out is None:
            h = hashlib.sha1()
            h.update(json.dumps([self.val[vid], self.deg[vid], [(q, self.digest(c)) for q, c in self.kids[vid]]]).encode())
            out = h.hexdigest()[:16]
            self._digest[vid] = out
        return out


def reconstruct_from_injective_decoration(tree: DecoratedViewTree) -> LabeledMap:
    """Rebuild the labeled map seen in ``tree``; ``self`` is the root's position."""
    store = ViewStore()
    out = store.reconstruct(store.intern_tree(tree))
    if out is None:
        raise ReconstructionError(f"view of depth {tree.depth} is too shallow: value set still growing")
    return out
