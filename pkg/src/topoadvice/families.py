"""Graph families: brooms, lollipops, indistinguishable gadget pairs, random graphs."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .graph import PortGraph, build_graph, port_isomorphism, union_adjacency, refine

ALPHA = 0.75


class FamilyError(ValueError):
    pass


# -- brooms ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BroomSpec:
    n: int
    D: int
    k: int
    alpha: float = ALPHA
    check: bool = True

    @property
    def m(self) -> int:
        """Largest even ``m`` with ``k*m + D - k < n``."""
        m = (self.n - 1 - (self.D - self.k)) // self.k
        return m - (m % 2)

    def validate(self) -> None:
        n, D, k = self.n, self.D, self.k
        if k < 1 or D - k < 1:
            raise FamilyError(f"broom needs 1 <= k < D, got D={D}, k={k}")
        if self.check:
            if 2 * k > D:
                raise FamilyError(f"broom needs k <= D/2, got D={D}, k={k}")
            if D > self.alpha * n:
                raise FamilyError(f"D={D} exceeds alpha*n={self.alpha * n}")
        if self.m < 2:
            raise FamilyError(f"no even m >= 2 with k*m + D - k < n for n={n}, D={D}, k={k}")


@dataclass(frozen=True)
class Broom:
    graph: PortGraph
    spec: BroomSpec
    bristles: tuple[tuple[int, ...], ...]  # each listed tail first, head last
    stick: tuple[int, ...]  # from v (port 0 end) to u (port 1 end)
    handle: tuple[int, ...]
    matching: tuple[tuple[int, int], ...]  # pairs of bristle indices

    @property
    def u(self) -> int:
        return self.stick[-1]

    @property
    def v(self) -> int:
        return self.stick[0]

    @property
    def h(self) -> int:
        """The handle node whose edge has port 0 at both ends."""
        return self.handle[0]

    def meta(self) -> dict:
        return {
            "family": "broom",
            "n": self.spec.n,
            "D": self.spec.D,
            "k": self.spec.k,
            "m": self.spec.m,
            "bristles": [list(b) for b in self.bristles],
            "stick": list(self.stick),
            "handle": list(self.handle),
            "matching": [list(p) for p in self.matching],
        }


def enumerate_matchings(m: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All perfect matchings of ``0..m-1`` in lexicographic order."""
    if m < 2 or m % 2:
        raise FamilyError(f"need an even m >= 2, got {m}")

    def rec(items: tuple[int, ...]):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for i, other in enumerate(rest):
            for tail in rec(rest[:i] + rest[i + 1 :]):
                yield ((first, other),) + tail

    yield from rec(tuple(range(m)))


def make_broom(spec: BroomSpec, matching: Sequence[tuple[int, int]] | None = None) -> Broom:
    spec.validate()
    n, D, k, m = spec.n, spec.D, spec.k, spec.m
    if matching is None:
        matching = tuple((2 * i, 2 * i + 1) for i in range(m // 2))
    matching = tuple(tuple(sorted(p)) for p in matching)
    if sorted(x for p in matching for x in p) != list(range(m)):
        raise FamilyError("matching must pair up all bristles")
    edges = []
    bristles = []
    nxt = 0
    for _ in range(m):
        nodes = tuple(range(nxt, nxt + k))
        nxt += k
        bristles.append(nodes)
        for a, b in zip(nodes, nodes[1:]):
            edges.append((a, 0, b, 1))  # port 0 toward the head, port 1 toward the tail
    stick = tuple(range(nxt, nxt + D - k))
    nxt += D - k
    for a, b in zip(stick, stick[1:]):
        edges.append((a, 0, b, 1))
    handle = tuple(range(nxt, n))
    v, u = stick[0], stick[-1]
    for i, nodes in enumerate(bristles, start=1):
        edges.append((v, i, nodes[-1], 0))
    for i, j in matching:
        edges.append((bristles[i][0], 1, bristles[j][0], 1))
    if u != v:
        ports = [0] + list(range(2, len(handle) + 1))
    else:
        ports = [0] + list(range(m + 1, m + len(handle)))
    for port, x in zip(ports, handle):
        edges.append((u, port, x, 0))
    g = build_graph(n, edges)
    if spec.check and g.diameter != D:
        raise FamilyError(f"broom has diameter {g.diameter}, expected {D}")
    return Broom(g, spec, tuple(bristles), stick, handle, matching)


# -- lollipops --------------------------------------------------------------------------


@dataclass(frozen=True)
class LollipopSpec:
    n: int
    D: int
    seed: int | None = None
    alpha: float = ALPHA
    check: bool = True

    def validate(self) -> None:
        if self.D < 1 or self.n - self.D < 2:
            raise FamilyError(f"lollipop needs D >= 1 and n - D >= 2, got n={self.n}, D={self.D}")
        if self.check and self.D > self.alpha * self.n:
            raise FamilyError(f"D={self.D} exceeds alpha*n={self.alpha * self.n}")


@dataclass(frozen=True)
class Lollipop:
    graph: PortGraph
    spec: LollipopSpec
    candy: tuple[int, ...]  # w_1 .. w_{n-D}
    stick: tuple[int, ...]  # from u (port 0 end) to v (port 1 end)

    @property
    def u(self) -> int:
        return self.stick[0]

    @property
    def v(self) -> int:
        return self.stick[-1]

    def meta(self) -> dict:
        return {
            "family": "lollipop",
            "n": self.spec.n,
            "D": self.spec.D,
            "seed": self.spec.seed,
            "candy": list(self.candy),
            "stick": list(self.stick),
        }


def make_lollipop(spec: LollipopSpec) -> Lollipop:
    """Clique "candy" of ``n - D`` nodes hanging off a path "stick" of ``D`` nodes.

    Clique ports at each candy node are a permutation drawn from ``seed``
    (``None`` keeps them in ascending neighbor order).
    """
    spec.validate()
    n, D = spec.n, spec.D
    c = n - D
    stick = tuple(range(D))
    candy = tuple(range(D, n))
    rng = random.Random(spec.seed)
    port_of: dict[tuple[int, int], int] = {}
    for w in candy:
        others = [x for x in candy if x != w]
        perm = list(range(c - 1))
        if spec.seed is not None:
            rng.shuffle(perm)
        for x, p in zip(others, perm):
            port_of[(w, x)] = p
    edges = [(a, p, b, port_of[(b, a)]) for (a, b), p in port_of.items() if a < b]
    for a, b in zip(stick, stick[1:]):
        edges.append((a, 0, b, 1))
    u, v = stick[0], stick[-1]
    for i, w in enumerate(candy, start=1):
        port = 0 if i == 1 else (i if u != v else i - 1)
        edges.append((v, port, w, c - 1))
    g = build_graph(n, edges)
    if g.diameter != D:
        raise FamilyError(f"lollipop has diameter {g.diameter}, expected {D}")
    return Lollipop(g, spec, candy, stick)


# -- random connected graphs ---------------------------------------------------------------


def random_connected(n: int, max_degree: int = 4, seed: int | None = None, extra_edges: int | None = None) -> PortGraph:
    """Random spanning tree plus random extra edges, with shuffled ports at every node."""
    if n < 2:
        raise FamilyError("random_connected needs n >= 2")
    if max_degree < 2 and n > 2:
        raise FamilyError("max_degree must be at least 2 for n > 2")
    rng = random.Random(seed)
    deg = [0] * n
    pairs: set[tuple[int, int]] = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        x = order[i]
        candidates = [y for y in order[:i] if deg[y] < max_degree]
        y = rng.choice(candidates)
        pairs.add((min(x, y), max(x, y)))
        deg[x] += 1
        deg[y] += 1
    if extra_edges is None:
        extra_edges = rng.randint(0, n)
    for _ in range(extra_edges * 4):
        if extra_edges <= 0:
            break
        x, y = rng.sample(range(n), 2)
        key = (min(x, y), max(x, y))
        if key in pairs or deg[x] >= max_degree or deg[y] >= max_degree:
            continue
        pairs.add(key)
        deg[x] += 1
        deg[y] += 1
        extra_edges -= 1
    ports = []
    for x in range(n):
        perm = list(range(deg[x]))
        rng.shuffle(perm)
        ports.append(perm)
    used = [0] * n
    edges = []
    for x, y in sorted(pairs):
        edges.append((x, ports[x][used[x]], y, ports[y][used[y]]))
        used[x] += 1
        used[y] += 1
    return build_graph(n, edges)


# -- gadget pairs ------------------------------------------------------------------------


@dataclass(frozen=True)
class GadgetPair:
    graphs: tuple[PortGraph, PortGraph]
    black: tuple[tuple[int, int], tuple[int, int]]
    kind: str  # "G", "G'" or "H"
    n: int
    D: int | None = None  # exact diameter for H; None means "checked per kind"

    def meta(self, which: int | None = None) -> dict:
        out = {"family": "gadget", "kind": self.kind, "n": self.n, "D": self.D, "black": [list(b) for b in self.black]}
        if which is not None:
            out["which"] = which
        return out

    def to_dict(self) -> dict:
        return {**self.meta(), "graphs": [g.to_dict() for g in self.graphs]}

    @classmethod
    def from_dict(cls, data: dict) -> "GadgetPair":
        graphs = tuple(build_graph(x["n"], [tuple(e) for e in x["edges"]]) for x in data["graphs"])
        return cls(graphs, tuple(tuple(b) for b in data["black"]), data["kind"], data["n"], data.get("D"))


@dataclass
class GadgetReport:
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def verify_gadget_pair(pair: GadgetPair) -> GadgetReport:
    g1, g2 = pair.graphs
    (a1, b1), (a2, b2) = pair.black
    rep = GadgetReport()
    rep.checks["non_isomorphic"] = port_isomorphism(g1, g2) is None
    rep.checks["size"] = g1.n == g2.n == pair.n
    if pair.kind == "G":
        rep.checks["diameter"] = g1.diameter == g2.diameter == 3
        want_dist = 1
    elif pair.kind == "G'":
        rep.checks["diameter"] = g1.diameter <= 4 and g2.diameter <= 4
        want_dist = 2
    else:
        rep.checks["diameter"] = g1.diameter == g2.diameter == pair.D
        want_dist = 1 if pair.D % 2 else 2
    adj, (o1, o2) = union_adjacency(g1, g2)
    colors = refine(adj, [""] * len(adj), len(adj) - 1)
    rep.checks["black_views_equal"] = len({colors[o1 + a1], colors[o1 + b1], colors[o2 + a2], colors[o2 + b2]}) == 1
    rep.checks["black_distance"] = (
        g1.distance_matrix[a1][b1] == want_dist and g2.distance_matrix[a2][b2] == want_dist
    )
    return rep


def _lift(base_deg: Sequence[int], pairing: dict[tuple[int, int], tuple[int, int]], volt: dict) -> PortGraph | None:
    """2-lift of a port-labeled base multigraph; node ``(x, s)`` gets id ``2x + s``."""
    edges = []
    pairs = set()
    done = set()
    for d1, d2 in pairing.items():
        if d1 in done:
            continue
        done.add(d1)
        done.add(d2)
        (x, p), (y, q) = d1, d2
        for s in (0, 1):
            if d1 == d2:
                if s == 1:
                    continue
                a, b = 2 * x, 2 * x + 1
                edges.append((a, p, b, p))
            else:
                s2 = s ^ volt[d1]
                a, b = 2 * x + s, 2 * y + s2
                if a == b:
                    return None
                edges.append((a, p, b, q))
            key = (min(a, b), max(a, b))
            if key in pairs:
                return None
            pairs.add(key)
    try:
        return build_graph(2 * len(base_deg), edges)
    except ValueError:
        return None


def _pairings(darts: list[tuple[int, int]]) -> Iterator[dict]:
    """Involutions on base darts: fixed points are half-loops (at most one per node)."""
    if not darts:
        yield {}
        return
    first, rest = darts[0], darts[1:]
    # half-loop
    for sub in _pairings(rest):
        if not any(k == v and k[0] == first[0] for k, v in sub.items()):
            out = dict(sub)
            out[first] = first
            yield out
    for i, other in enumerate(rest):
        if other[0] == first[0]:
            continue  # ordinary loops never lift to simple graphs
        for sub in _pairings(rest[:i] + rest[i + 1 :]):
            out = dict(sub)
            out[first] = other
            out[other] = first
            yield out


_FIXTURE = "yk_pair.json"


def _fixture_path() -> Path:
    return Path(str(resources.files("topoadvice") / "data" / _FIXTURE))


def _yk_candidates(budget: int) -> Iterator[GadgetPair]:
    tried = 0
    for degs in sorted(itertools.product(range(1, 5), repeat=3), key=lambda d: (sum(d), d)):
        if sum(degs) % 1:
            continue
        darts = [(x, p) for x in range(3) for p in range(degs[x])]
        for pairing in _pairings(darts):
            # the black base node 0 must carry a half-loop
            if not any(k == v and k[0] == 0 for k, v in pairing.items()):
                continue
            free = sorted({min(k, v) for k, v in pairing.items() if k != v})
            lifts = []
            for bits in itertools.product((0, 1), repeat=len(free)):
                volt = {}
                for d, b in zip(free, bits):
                    volt[d] = b
                    volt[pairing[d]] = b
                tried += 1
                if tried > budget:
                    return
                g = _lift(degs, pairing, volt)
                if g is None or g.diameter != 3:
                    continue
                if max(g.distance_matrix[0]) > 2 or max(g.distance_matrix[1]) > 2:
                    continue
                lifts.append(g)
            for g1, g2 in itertools.combinations(lifts, 2):
                yield GadgetPair((g1, g2), ((0, 1), (0, 1)), "G", 6)


def _usable(pair: GadgetPair) -> bool:
    if not verify_gadget_pair(pair).ok:
        return False
    try:
        prime = derive_prime_pair(pair)
    except FamilyError:
        return False
    for n, D in ((10, 3), (12, 4), (14, 5)):
        try:
            make_h_pair(n, D, pair, prime)
        except FamilyError:
            return False
    return True


def search_yk(budget: int = 2_000_000, use_fixture: bool = True, accept: Callable[[GadgetPair], bool] | None = None) -> GadgetPair:
    """Find a 6-node pair of non-isomorphic graphs whose adjacent black nodes share a view.

    Candidates are 2-lifts of one 3-node base graph, which makes the two
    lifts of each base node view-equivalent; the black fiber sits on a
    half-loop so the black nodes are adjacent. A candidate is accepted when
    :func:`verify_gadget_pair` passes and the derived pairs can be built.
    """
    if use_fixture and accept is None:
        path = _fixture_path()
        if path.exists():
            return GadgetPair.from_dict(json.loads(path.read_text()))
    accept = accept or _usable
    for pair in _yk_candidates(budget):
        if accept(pair):
            return pair
    raise FamilyError(f"no gadget pair found within a budget of {budget} lifts")


def save_yk_fixture(pair: GadgetPair, path: Path | None = None) -> Path:
    path = path or _fixture_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(pair.to_dict(), indent=1) + "\n")
    return path


def derive_prime_pair(pair: GadgetPair) -> GadgetPair:
    """Replace the black-black edge by two paths of length 2 (8-node pair, blacks at distance 2)."""
    if pair.kind != "G":
        raise FamilyError("derive_prime_pair expects a kind-G pair")
    graphs = []
    blacks = []
    for g, (a, b) in zip(pair.graphs, pair.black):
        if g.distance_matrix[a][b] != 1:
            raise FamilyError("black nodes must be adjacent")
        x, y = g.n, g.n + 1
        edges = []
        for e in g.edges:
            u, p, v, q = e
            if {u, v} == {a, b}:
                if p != q:
                    raise FamilyError("black edge must carry the same port at both ends")
                port, new = p, g.degree(a)
                edges += [(a, port, x, 0), (b, new, x, 1), (b, port, y, 0), (a, new, y, 1)]
            else:
                edges.append(e)
        graphs.append(build_graph(g.n + 2, edges))
        blacks.append((a, b))
    out = GadgetPair(tuple(graphs), tuple(blacks), "G'", 8)
    rep = verify_gadget_pair(out)
    if not rep.ok:
        raise FamilyError(f"derived pair fails {rep.failures()}")
    return out


def _attach(g: PortGraph, blacks: tuple[int, int], k: int, clique: int) -> PortGraph:
    edges = list(g.edges)
    nxt = g.n
    for b in blacks:
        d = g.degree(b)
        path = list(range(nxt, nxt + k))
        nxt += k
        chain = [b] + path
        for i, (x, y) in enumerate(zip(chain, chain[1:])):
            edges.append((x, d if i == 0 else 1, y, 0))
        nodes = list(range(nxt, nxt + clique))
        nxt += clique
        for i, w in enumerate(nodes):
            edges.append((b, d + (1 if k else 0) + i, w, 0))
            for j, w2 in enumerate(nodes):
                if j > i:
                    # port at w toward w2: 1 + index among the other clique nodes
                    pw = 1 + (j - 1)
                    pw2 = 1 + i
                    edges.append((w, pw, w2, pw2))
    return build_graph(nxt, edges)


def make_h_pair(n: int, D: int, base: GadgetPair, prime: GadgetPair | None = None) -> GadgetPair:
    """Pad a gadget pair to size ``n`` and diameter ``D``.

    Each black node gets a path of length ``k`` and a clique, identically in
    both graphs; odd ``D = 2k + 1`` pads the kind-G pair, even ``D = 2k + 2``
    the kind-G' pair.
    """
    if D < 3 or n < D + 6 or n % 2:
        raise FamilyError(f"need D >= 3 and even n >= D + 6, got n={n}, D={D}")
    if D % 2:
        k, src, core = (D - 1) // 2, base, 6
    else:
        k, src, core = (D - 2) // 2, prime if prime is not None else derive_prime_pair(base), 8
    clique = (n - 2 * k - core) // 2
    if clique < 0:
        raise FamilyError(f"n={n} is too small for D={D}")
    graphs = tuple(_attach(g, blk, k, clique) for g, blk in zip(src.graphs, src.black))
    pair = GadgetPair(graphs, src.black, "H", n, D)
    rep = verify_gadget_pair(pair)
    if not rep.ok:
        raise FamilyError(f"H pair for n={n}, D={D} fails {rep.failures()}")
    return pair
