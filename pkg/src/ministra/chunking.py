# src/ministra/chunking.py

"""
Heuristic splitting of large inputs into independently parseable chunks.

A chunk boundary is only ever placed in front of a top-level statement of the
format (``*D_NET`` for SPEF, ``(CELL`` for SDF, ``module`` for Verilog), so a
parser can run on each byte range with nothing but the file header as shared
context. The first chunk always begins at offset 0 and carries that header.
"""

import bisect
import logging
import re
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, TypeVar

from .sources import Source

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")

ChunkFormat = Literal["spef", "sdf", "verilog"]

BOUNDARY_PATTERNS: dict[str, re.Pattern[bytes]] = {
    "spef": re.compile(rb"^[ \t]*\*D_NET\b", re.MULTILINE),
    "sdf": re.compile(rb"\(\s*CELL\b"),
    "verilog": re.compile(rb"^[ \t]*module\b", re.MULTILINE),
}


def statement_starts(data: bytes, fmt: ChunkFormat) -> list[int]:
    """Byte offsets of every top-level statement of ``fmt`` in ``data``."""
    pattern = BOUNDARY_PATTERNS[fmt]
    return [m.start() for m in pattern.finditer(data)]


def split_chunks(source: Source | bytes, n: int, fmt: ChunkFormat) -> list[tuple[int, int]]:
    """
    Partition ``source`` into at most ``n`` half-open byte ranges.

    Boundaries are picked from statement starts (excluding the first one, which
    stays with the header) nearest to the even split points. Fewer than ``n``
    ranges come back when the file has too few statements; a file without any
    safe boundary is returned as a single range.
    """
    if n < 1:
        raise ValueError("chunk count must be at least 1")
    data = source.data if isinstance(source, Source) else source
    size = len(data)
    if n == 1 or size == 0:
        return [(0, size)]

    candidates = statement_starts(data, fmt)[1:]
    if not candidates:
        return [(0, size)]

    cuts: list[int] = []
    prev = 0
    for i in range(1, n):
        target = i * size // n
        lo = bisect.bisect_right(candidates, prev)
        if lo >= len(candidates):
            break
        j = bisect.bisect_left(candidates, target, lo)
        options = [c for c in (candidates[j - 1] if j - 1 >= lo else None,
                               candidates[j] if j < len(candidates) else None) if c is not None]
        best = min(options, key=lambda c: (abs(c - target), c))
        if best <= prev:
            continue
        cuts.append(best)
        prev = best

    bounds = [0, *cuts, size]
    ranges = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    logger.debug("Split input", extra={"format": fmt, "requested": n, "chunks": len(ranges)})
    return ranges


def parallel_map(fn: Callable[[U], T], items: Sequence[U], threads: int = 1) -> list[T]:
    """Apply ``fn`` to every item on up to ``threads`` workers, results in item order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        futures = [pool.submit(fn, item) for item in items]
        return [f.result() for f in futures]


def map_chunks(fn: Callable[[int, int], T], ranges: Sequence[tuple[int, int]], threads: int = 1) -> list[T]:
    """Apply ``fn(start, end)`` to every range, results in range order."""
    return parallel_map(lambda r: fn(r[0], r[1]), ranges, threads)
