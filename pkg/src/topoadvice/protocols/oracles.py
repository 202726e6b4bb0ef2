"""Advice oracles for the four recognition protocols, and the matching decoders."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..advice import (
    AdviceError,
    decode_int,
    encode_int,
    int_width,
    read_width_prefix,
    split_label,
    split_sequence,
    width_prefix,
)
from ..graph import PortGraph, ball, lex_min_shortest_path, r_independent_dominating_set

PROTOCOLS = ("tr1", "tr2", "tr3", "tr4")

EdgeCode = tuple[str, int, int, str]


@dataclass(frozen=True)
class ProtocolParams:
    protocol: str
    k: int | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.protocol in ("tr2", "tr4"):
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.protocol} needs k >= 1, got {self.k}")

    def t(self, diameter: int | None = None) -> int:
        """Protocol time unit: ``ceil(k/4) - 1`` for tr2, ``floor((D-k)/3)`` for tr4."""
        if self.protocol == "tr2":
            return math.ceil(self.k / 4) - 1
        if self.protocol == "tr4":
            if diameter is None:
                raise ValueError("tr4's t depends on the diameter")
            return (diameter - self.k) // 3
        raise ValueError(f"{self.protocol} has no t")


def _check_k(g: PortGraph, k: int) -> None:
    if not 0 < k <= g.diameter:
        raise ValueError(f"k must satisfy 0 < k <= D={g.diameter}, got {k}")


def _assert_disjoint(g: PortGraph, centers: list[int], radius: int) -> None:
    seen: set[int] = set()
    for x in centers:
        b = ball(g, x, radius)
        if seen & b:
            raise AssertionError(f"balls of radius {radius} around dominating-set nodes overlap")
        seen |= b


def edge_code_bits(code: tuple[int, int, int, int], width: int) -> str:
    return "".join(encode_int(x, width) for x in code)


def all_edge_codes(g: PortGraph) -> list[tuple[int, int, int, int]]:
    """Every edge once, as (label u, p, q, label v) with labels equal to node ids."""
    return [(u, p, q, v) for u, p, v, q in g.edges]


def tr1_oracle(g: PortGraph) -> list[str]:
    """One node (id 0) gets ``"1"``, everybody else ``"0"``."""
    return ["1" if u == 0 else "0" for u in range(g.n)]


def tr2_oracle(g: PortGraph, k: int) -> list[str]:
    _check_k(g, k)
    t = ProtocolParams("tr2", k).t()
    w = int_width(g.n)
    if t == 0:
        return [encode_int(u, w) for u in range(g.n)]
    centers = r_independent_dominating_set(g, 2 * t)
    _assert_disjoint(g, centers, t)
    advice = [""] * g.n
    for v in centers:
        members = sorted(ball(g, v, t - 1), key=lambda u: lex_min_shortest_path(g, u, [v])[0])
        segments = split_label(encode_int(v, w), len(members)).segments
        assert members[0] == v
        advice[v] = segments[0] + "1"
        for u, seg in zip(members[1:], segments[1:]):
            advice[u] = seg + "0"
    return advice


def tr3_oracle(g: PortGraph) -> list[str]:
    """Width prefix, diameter, own label and the codes of all incident edges."""
    w = int_width(g.n)
    out = []
    for u in range(g.n):
        bits = [width_prefix(w), encode_int(g.diameter, w), encode_int(u, w)]
        for p, (v, q) in enumerate(g.adj[u]):
            bits.append(edge_code_bits((u, p, q, v), w))
        out.append("".join(bits))
    return out


def tr4_members(g: PortGraph, x: int, t: int) -> list[int]:
    """Enumeration of the radius-``t`` ball around ``x`` by lex-least path to ``x``."""
    return sorted(ball(g, x, t), key=lambda u: lex_min_shortest_path(g, u, [x])[0])


def tr4_oracle(g: PortGraph, k: int) -> list[str]:
    _check_k(g, k)
    t = ProtocolParams("tr4", k).t(g.diameter)
    w = int_width(g.n)
    codes = [edge_code_bits(c, w) for c in all_edge_codes(g)]
    head = [width_prefix(w) + encode_int(u, w) + encode_int(t, w) for u in range(g.n)]
    if t == 0:
        return [h + "".join(codes) for h in head]
    centers = r_independent_dominating_set(g, 2 * t)
    _assert_disjoint(g, centers, t)
    advice = list(head)
    for x in centers:
        members = tr4_members(g, x, t)
        for u, part in zip(members, split_sequence(codes, len(members))):
            advice[u] += "".join(part)
    return advice


def make_advice(g: PortGraph, params: ProtocolParams) -> list[str]:
    if params.protocol == "tr1":
        return tr1_oracle(g)
    if params.protocol == "tr2":
        return tr2_oracle(g, params.k)
    if params.protocol == "tr3":
        return tr3_oracle(g)
    return tr4_oracle(g, params.k)


# -- decoders -------------------------------------------------------------------------


def _read_codes(bits: str, w: int) -> list[EdgeCode]:
    if len(bits) % (4 * w):
        raise AdviceError("edge-code section is not a whole number of codes")
    out = []
    for i in range(0, len(bits), 4 * w):
        chunk = bits[i : i + 4 * w]
        a, p, q, b = (chunk[j * w : (j + 1) * w] for j in range(4))
        out.append((a, decode_int(p), decode_int(q), b))
    return out


def _check_bits(bits: str) -> None:
    if set(bits) - {"0", "1"}:
        raise AdviceError(f"advice {bits!r} is not a bit string")


def decode_tr3(bits: str) -> tuple[int, str, list[EdgeCode]]:
    """Return ``(diameter, own label, incident edge codes)``."""
    _check_bits(bits)
    w, rest = read_width_prefix(bits)
    if len(rest) < 2 * w:
        raise AdviceError("tr3 advice too short")
    return decode_int(rest[:w]), rest[w : 2 * w], _read_codes(rest[2 * w :], w)


def decode_tr4(bits: str) -> tuple[str, int, list[EdgeCode]]:
    """Return ``(own label, t, edge codes)``."""
    _check_bits(bits)
    w, rest = read_width_prefix(bits)
    if len(rest) < 2 * w:
        raise AdviceError("tr4 advice too short")
    return rest[:w], decode_int(rest[w : 2 * w]), _read_codes(rest[2 * w :], w)


# -- per-instance bounds -----------------------------------------------------------------


def tr2_advice_bound(n: int, t: int) -> int:
    w = int_width(n)
    return w if t == 0 else -(-w // t) + 1


def tr3_advice_bound(n: int) -> int:
    """Closed form of the tr3 encoding at the largest possible degree ``n - 1``."""
    w = int_width(n)
    return (w + 1) + 2 * w + 4 * w * (n - 1)


def tr4_code_bound(num_edges: int, t: int) -> int:
    return -(-num_edges // (t + 1))
