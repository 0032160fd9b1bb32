"""Wire framing for the model-side adapter, standard library only.

Frame layout (little-endian integers):

    "IPT1" | u32 header length | UTF-8 JSON header | u64 payload length | payload

Headers are written canonically (sorted keys, compact separators) so the
adapter's bytes match the harness encoder bit for bit. Decoding accepts
any valid JSON object header.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

MAGIC = b"IPT1"
PROTOCOL_VERSION = 1
MAX_HEADER_BYTES = 16 * 1024 * 1024
MAX_PAYLOAD_BYTES = 1024 * 1024 * 1024


class ProtocolError(Exception):
    pass


class ConnectionClosed(ProtocolError):
    """Clean end of stream at a frame boundary."""


def encode_message(header: dict, payload: bytes = b"") -> bytes:
    header_bytes = json.dumps(
        header, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")
    if len(header_bytes) > MAX_HEADER_BYTES:
        raise ProtocolError(f"header too large: {len(header_bytes)} bytes")
    if len(payload) > MAX_PAYLOAD_BYTES:
        raise ProtocolError(f"payload too large: {len(payload)} bytes")
    return (
        MAGIC
        + struct.pack("<I", len(header_bytes))
        + header_bytes
        + struct.pack("<Q", len(payload))
        + payload
    )


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    parts = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise ProtocolError(
                f"truncated stream: expected {n} {what}, received {n - remaining}"
            )
        parts.append(chunk)
        remaining -= len(chunk)
    return b"".join(parts)


def decode_message(stream: BinaryIO) -> tuple[dict, bytes]:
    first = stream.read(1)
    if not first:
        raise ConnectionClosed("end of stream")
    magic = first + _read_exact(stream, len(MAGIC) - 1, "magic bytes")
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    (header_len,) = struct.unpack("<I", _read_exact(stream, 4, "header length"))
    if header_len > MAX_HEADER_BYTES:
        raise ProtocolError(f"declared header length {header_len} exceeds limit")
    raw = _read_exact(stream, header_len, "header bytes")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"invalid header: {exc}") from None
    if not isinstance(header, dict):
        raise ProtocolError("header must be a JSON object")
    (payload_len,) = struct.unpack("<Q", _read_exact(stream, 8, "payload length"))
    if payload_len > MAX_PAYLOAD_BYTES:
        raise ProtocolError(f"declared payload length {payload_len} exceeds limit")
    return header, _read_exact(stream, payload_len, "payload bytes")
