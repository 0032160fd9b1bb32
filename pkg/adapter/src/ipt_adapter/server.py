"""Serial request loop wrapping a classifier callable behind the protocol.

The model is any callable taking a video dict with keys id, width,
height, frame_count, fps and pixels (raw RGB8 bytes, frame-major
row-major). It returns either a score list (one float per label) or a
(scores, features) tuple where features maps tag -> (shape, values).

Protocol violations are answered with an error message and the
connection closes; the process itself shuts down cleanly.
"""

from __future__ import annotations

import socket
import struct
from typing import BinaryIO, Callable

from .protocol import (
    PROTOCOL_VERSION,
    ConnectionClosed,
    ProtocolError,
    decode_message,
    encode_message,
)

Model = Callable[[dict], object]


def _call_model(model: Model, video: dict) -> tuple[list[float], dict]:
    result = model(video)
    if isinstance(result, tuple):
        scores, features = result
    else:
        scores, features = result, {}
    return [float(s) for s in scores], dict(features or {})


def serve_connection(rfile: BinaryIO, wfile: BinaryIO, model: Model,
                     labels: list[str], feature_taps: list[str]) -> None:
    def reply(header: dict, payload: bytes = b"") -> None:
        wfile.write(encode_message(header, payload))
        wfile.flush()

    try:
        while True:
            try:
                header, payload = decode_message(rfile)
            except ConnectionClosed:
                return
            except ProtocolError as exc:
                reply({"msg": "error", "detail": str(exc)})
                return

            msg = header.get("msg")
            if msg == "hello":
                if header.get("v") != PROTOCOL_VERSION:
                    reply({"msg": "error",
                           "detail": f"unsupported protocol version {header.get('v')!r}"})
                    return
                reply({
                    "msg": "hello",
                    "v": PROTOCOL_VERSION,
                    "labels": list(labels),
                    "features": list(feature_taps),
                })
                continue
            if msg != "infer":
                reply({"msg": "error", "detail": f"unexpected message {msg!r}"})
                return

            try:
                video = {
                    "id": str(header["id"]),
                    "width": int(header["w"]),
                    "height": int(header["h"]),
                    "frame_count": int(header["n"]),
                    "fps": float(header.get("fps") or 0.0),
                    "pixels": payload,
                }
                want = [str(t) for t in header.get("want") or []]
            except (KeyError, TypeError, ValueError) as exc:
                reply({"msg": "error", "detail": f"bad infer request: {exc}"})
                return
            expected = video["width"] * video["height"] * video["frame_count"] * 3
            if len(payload) != expected:
                reply({"msg": "error",
                       "detail": f"payload is {len(payload)} bytes, expected {expected}"})
                return
            unknown = [t for t in want if t not in feature_taps]
            if unknown:
                reply({"msg": "error", "detail": f"unknown feature tags {unknown}"})
                return

            try:
                scores, features = _call_model(model, video)
            except Exception as exc:  # relayed verbatim, connection survives no further
                reply({"msg": "error", "detail": f"model failure: {exc}"})
                return
            if len(scores) != len(labels):
                reply({"msg": "error",
                       "detail": f"model returned {len(scores)} scores for "
                                 f"{len(labels)} labels"})
                return
            reply(
                {"msg": "scores", "id": video["id"], "k": len(scores)},
                struct.pack(f"<{len(scores)}f", *scores),
            )
            for tag in want:
                if tag not in features:
                    reply({"msg": "error",
                           "detail": f"model produced no tensor for tag {tag!r}"})
                    return
                shape, values = features[tag]
                flat = [float(v) for v in values]
                count = 1
                for s in shape:
                    count *= int(s)
                if count != len(flat):
                    reply({"msg": "error",
                           "detail": f"feature {tag!r}: {len(flat)} values for "
                                     f"shape {list(shape)}"})
                    return
                reply(
                    {"msg": "feature", "tag": tag,
                     "shape": [int(s) for s in shape]},
                    struct.pack(f"<{len(flat)}f", *flat),
                )
    except BrokenPipeError:
        return


def serve_stdio(model: Model, labels: list[str], feature_taps: list[str]) -> None:
    import sys

    serve_connection(sys.stdin.buffer, sys.stdout.buffer, model, labels, feature_taps)


def serve_tcp(port: int, model: Model, labels: list[str],
              feature_taps: list[str]) -> None:
    """Accept connections one at a time, each with its own serial loop."""
    server = socket.create_server(("127.0.0.1", port))
    try:
        while True:
            conn, _addr = server.accept()
            with conn:
                rfile = conn.makefile("rb")
                wfile = conn.makefile("wb")
                serve_connection(rfile, wfile, model, labels, feature_taps)
    finally:
        server.close()
