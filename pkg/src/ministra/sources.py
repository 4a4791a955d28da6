# src/ministra/sources.py

"""
Input byte-stream handling shared by every file parser.

Parsers never see paths or file objects: they receive a ``Source`` holding the
raw bytes plus a display name used in error messages. Compressed inputs are
recognised by the gzip magic bytes, never by their file extension.
"""

import gzip
import io
import logging
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

from .exceptions import ParseError

logger = logging.getLogger(__name__)

GZIP_MAGIC = b"\x1f\x8b"
_READ_CHUNK = 64 * 1024


@dataclass(frozen=True, slots=True)
class Source:
    """A fully decompressed input stream."""

    name: str
    data: bytes

    def line_of(self, offset: int) -> int:
        """1-based line number of a byte offset."""
        return self.data.count(b"\n", 0, offset) + 1


def is_gzipped(data: bytes) -> bool:
    return data[:2] == GZIP_MAGIC


def _read_stream(stream: BinaryIO) -> bytes:
    buf = io.BytesIO()
    for chunk in iter(lambda: stream.read(_READ_CHUNK), b""):
        buf.write(chunk)
    return buf.getvalue()


def load_source(
    src: "str | Path | bytes | bytearray | BinaryIO | Source", name: str | None = None
) -> Source:
    """
    Normalise any supported input into a decompressed ``Source``.

    Accepts a path, raw bytes, or a binary file-like object. Gzip payloads are
    transparently inflated.
    """
    if isinstance(src, Source):
        return src
    if isinstance(src, (bytes, bytearray)):
        raw = bytes(src)
        label = name or "<bytes>"
    elif isinstance(src, (str, Path)):
        path = Path(src)
        with path.open("rb") as fh:
            raw = _read_stream(fh)
        label = name or str(path)
    else:
        raw = _read_stream(src)
        label = name or getattr(src, "name", None) or "<stream>"

    if is_gzipped(raw):
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as e:
            raise ParseError(f"corrupt gzip stream: {e}", file=label, offset=0, line=1) from e
        logger.debug("Inflated gzip input", extra={"source": label, "bytes": len(raw)})
    return Source(name=label, data=raw)
