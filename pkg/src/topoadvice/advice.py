"""Advice strings: sizes, fixed-width integers, label segmentation and files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TypeVar

T = TypeVar("T")

PROTOCOL_IDS = {"tr1": 1, "tr2": 2, "tr3": 3, "tr4": 4}


class AdviceError(ValueError):
    pass


def advice_size(advice: Sequence[str]) -> int:
    """Length of the longest advice string."""
    return max((len(a) for a in advice), default=0)


def int_width(n: int) -> int:
    """Bits needed for any value in ``0..n-1`` (at least one)."""
    return max(1, (n - 1).bit_length())


def encode_int(x: int, width: int) -> str:
    if x < 0 or x >= 1 << width:
        raise AdviceError(f"{x} does not fit in {width} bits")
    return format(x, f"0{width}b")


def decode_int(bits: str) -> int:
    return int(bits, 2)


@dataclass(frozen=True)
class SegmentedLabel:
    segments: tuple[str, ...]
    original: str


def split_sequence(items: Sequence[T], parts: int) -> list[Sequence[T]]:
    """Consecutive split into ``parts`` pieces whose sizes differ by at most one.

    Longer pieces come first; trailing pieces may be empty.
    """
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    size, extra = divmod(len(items), parts)
    out = []
    start = 0
    for i in range(parts):
        end = start + size + (1 if i < extra else 0)
        out.append(items[start:end])
        start = end
    return out


def split_label(label: str, parts: int) -> SegmentedLabel:
    """Split a bit string into ``parts`` consecutive segments of length at most ``ceil(len/parts)``.

    >>> split_label("10110", 3).segments
    ('10', '11', '0')
    """
    return SegmentedLabel(tuple(split_sequence(label, parts)), label)


def rejoin(segments: Sequence[str] | SegmentedLabel) -> str:
    if isinstance(segments, SegmentedLabel):
        segments = segments.segments
    return "".join(segments)


# Self-delimiting prefix used by the edge-code protocols: the field width w
# in unary ("1" * w + "0"), so a node can parse its advice without knowing n.


def width_prefix(width: int) -> str:
    return "1" * width + "0"


def read_width_prefix(bits: str) -> tuple[int, str]:
    w = bits.find("0")
    if w <= 0:
        raise AdviceError("advice lacks a width prefix")
    return w, bits[w + 1 :]


# -- advice files --------------------------------------------------------------------


def file_header(protocol: str, width: int) -> str:
    """16-bit header: 4-bit protocol id, 12-bit field width."""
    return encode_int(PROTOCOL_IDS[protocol], 4) + encode_int(width, 12)


def parse_file_header(header: str) -> tuple[str, int]:
    if len(header) != 16 or set(header) - {"0", "1"}:
        raise AdviceError(f"bad advice header {header!r}")
    pid = decode_int(header[:4])
    names = {v: k for k, v in PROTOCOL_IDS.items()}
    if pid not in names:
        raise AdviceError(f"unknown protocol id {pid}")
    return names[pid], decode_int(header[4:])


def save_advice(advice: Sequence[str], path: str | Path, protocol: str | None = None, n: int | None = None, k: int | None = None) -> None:
    data: dict = {"advice": list(advice)}
    if protocol is not None:
        data["header"] = file_header(protocol, int_width(n if n is not None else len(advice)))
        if k is not None:
            data["k"] = k
    Path(path).write_text(json.dumps(data) + "\n")


def load_advice(path: str | Path) -> dict:
    """Read an advice file; returns the parsed JSON with ``advice`` validated."""
    data = json.loads(Path(path).read_text())
    advice = data.get("advice")
    if not isinstance(advice, list) or any(not isinstance(a, str) or set(a) - {"0", "1"} for a in advice):
        raise AdviceError("advice must be a list of 0/1 strings")
    if "header" in data:
        data["protocol"], data["width"] = parse_file_header(data["header"])
    return data
