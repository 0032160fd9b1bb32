"""Framed wire protocol between the harness and a model under test.

Frame layout, all integers little-endian:

    magic "IPT1" (4 bytes) | u32 header length | UTF-8 JSON header
    | u64 payload length | payload bytes

Headers are encoded canonically (sorted keys, compact separators) so
that independently implemented peers produce byte-identical frames for
identical content. Decoding accepts any valid JSON object.

Message flow per connection: one 'hello' exchange, then strictly serial
'infer' requests. A scores response may be followed by one 'feature'
message per requested tag, in request order. Servers answer protocol
violations with an 'error' message and close.
"""

from __future__ import annotations

import json
import math
import selectors
import shlex
import socket
import struct
import subprocess
from dataclasses import dataclass, field
from typing import BinaryIO, Mapping, Protocol, Sequence

import numpy as np

from .core import LabelSpace, ScoreVector, Video

MAGIC = b"IPT1"
PROTOCOL_VERSION = 1
MAX_HEADER_BYTES = 16 * 1024 * 1024
MAX_PAYLOAD_BYTES = 1024 * 1024 * 1024
DEFAULT_TIMEOUT_S = 120.0


class ProtocolError(Exception):
    """Base for every framing or conversation failure."""


class BadMagicError(ProtocolError):
    pass


class TruncatedStreamError(ProtocolError):
    def __init__(self, expected: int, received: int, what: str = "bytes"):
        self.expected = expected
        self.received = received
        super().__init__(
            f"truncated stream: expected {expected} {what}, received {received}"
        )


class OversizeError(ProtocolError):
    pass


class HeaderError(ProtocolError):
    """Header bytes are not valid UTF-8 JSON, or not a JSON object."""


class ConnectionClosed(ProtocolError):
    """Clean end of stream at a frame boundary."""


class EndpointError(ProtocolError):
    """Transport-level failure talking to the model."""


class ModelError(ProtocolError):
    """Error message relayed verbatim from the model side."""


def encode_message(header: Mapping, payload: bytes = b"") -> bytes:
    """Encode one frame; canonical JSON keeps peers byte-compatible."""
    try:
        header_bytes = json.dumps(
            dict(header), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise HeaderError(f"header does not serialize: {exc}") from None
    if len(header_bytes) > MAX_HEADER_BYTES:
        raise OversizeError(f"header is {len(header_bytes)} bytes (max {MAX_HEADER_BYTES})")
    if len(payload) > MAX_PAYLOAD_BYTES:
        raise OversizeError(f"payload is {len(payload)} bytes (max {MAX_PAYLOAD_BYTES})")
    return b"".join(
        [
            MAGIC,
            struct.pack("<I", len(header_bytes)),
            header_bytes,
            struct.pack("<Q", len(payload)),
            payload,
        ]
    )


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            raise TruncatedStreamError(n, n - remaining, what)
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def decode_message(stream: BinaryIO) -> tuple[dict, bytes]:
    """Inverse of encode_message; raises ConnectionClosed on clean EOF."""
    first = stream.read(1)
    if not first:
        raise ConnectionClosed("stream closed at frame boundary")
    magic = first + _read_exact(stream, len(MAGIC) - 1, "magic bytes")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (header_len,) = struct.unpack("<I", _read_exact(stream, 4, "header length"))
    if header_len > MAX_HEADER_BYTES:
        raise OversizeError(f"declared header length {header_len} exceeds limit")
    header_bytes = _read_exact(stream, header_len, "header bytes")
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"invalid header: {exc}") from None
    if not isinstance(header, dict):
        raise HeaderError(f"header must be a JSON object, got {type(header).__name__}")
    (payload_len,) = struct.unpack("<Q", _read_exact(stream, 8, "payload length"))
    if payload_len > MAX_PAYLOAD_BYTES:
        raise OversizeError(f"declared payload length {payload_len} exceeds limit")
    payload = _read_exact(stream, payload_len, "payload bytes")
    return header, payload


@dataclass(frozen=True)
class InferRequest:
    """One video shipped to the model, raw RGB8, frame-major row-major."""

    video_id: str
    width: int
    height: int
    frame_count: int
    payload: bytes
    want_features: tuple[str, ...] = ()
    fps: float = 0.0

    def __post_init__(self):
        expected = self.frame_count * self.width * self.height * 3
        if len(self.payload) != expected:
            raise ProtocolError(
                f"request {self.video_id!r}: payload is {len(self.payload)} bytes, "
                f"expected {expected}"
            )

    @classmethod
    def from_video(cls, video: Video, want_features: Sequence[str] = ()
                   ) -> "InferRequest":
        return cls(
            video_id=video.video_id,
            width=video.width,
            height=video.height,
            frame_count=video.frame_count,
            payload=video.tobytes(),
            want_features=tuple(want_features),
            fps=video.fps,
        )

    def header(self) -> dict:
        return {
            "msg": "infer",
            "id": self.video_id,
            "w": self.width,
            "h": self.height,
            "n": self.frame_count,
            "fps": self.fps,
            "want": list(self.want_features),
        }


@dataclass(frozen=True)
class InferResponse:
    video_id: str
    scores: ScoreVector
    features: Mapping[str, tuple[tuple[int, ...], np.ndarray]] = field(
        default_factory=dict
    )


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise EndpointError(f"cannot connect to {host}:{port}: {exc}") from None
        self._sock.settimeout(timeout)
        self._file = self._sock.makefile("rwb")

    def send(self, data: bytes) -> None:
        try:
            self._file.write(data)
            self._file.flush()
        except (OSError, ValueError) as exc:
            raise EndpointError(f"send failed: {exc}") from None

    def recv_message(self) -> tuple[dict, bytes]:
        try:
            return decode_message(self._file)
        except socket.timeout:
            raise EndpointError("timed out waiting for the model") from None
        except OSError as exc:
            raise EndpointError(f"receive failed: {exc}") from None

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


class _PipeReader:
    """File-like wrapper adding a read deadline to a subprocess pipe.

    Works on the raw (unbuffered) stream: with a buffered reader the
    selector would block on the fd while the wanted bytes sit in the
    buffer.
    """

    def __init__(self, pipe, timeout: float):
        self._pipe = pipe.raw if hasattr(pipe, "raw") else pipe
        self._timeout = timeout
        self._selector = selectors.DefaultSelector()
        self._selector.register(self._pipe, selectors.EVENT_READ)

    def read(self, n: int) -> bytes:
        if not self._selector.select(self._timeout):
            raise EndpointError("timed out waiting for the model")
        return self._pipe.read(n)

    def close(self) -> None:
        self._selector.close()


class _ExecTransport:
    def __init__(self, command: str, timeout: float):
        argv = shlex.split(command)
        if not argv:
            raise EndpointError("empty exec command")
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise EndpointError(f"cannot start {argv[0]!r}: {exc}") from None
        self._reader = _PipeReader(self._proc.stdout, timeout)

    def send(self, data: bytes) -> None:
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise EndpointError(f"send to child failed: {exc}") from None

    def recv_message(self) -> tuple[dict, bytes]:
        return decode_message(self._reader)

    def close(self) -> None:
        self._reader.close()
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


def parse_endpoint_spec(spec: str) -> tuple[str, str]:
    """Split an endpoint spec into (transport, rest).

    Accepted forms: "tcp:HOST:PORT" and "exec:COMMAND ...".
    """
    if spec.startswith("tcp:"):
        return "tcp", spec[4:]
    if spec.startswith("exec:"):
        return "exec", spec[5:]
    raise EndpointError(f"endpoint spec must start with tcp: or exec:, got {spec!r}")


class ModelEndpoint:
    """Client side of the protocol; one serial connection to the model."""

    def __init__(self, spec: str, timeout: float = DEFAULT_TIMEOUT_S):
        self.spec = spec
        self.timeout = timeout
        self._transport = None
        self.label_space: LabelSpace | None = None
        self.feature_tags: tuple[str, ...] = ()

    def connect(self) -> "ModelEndpoint":
        kind, rest = parse_endpoint_spec(self.spec)
        if kind == "tcp":
            host, sep, port = rest.rpartition(":")
            if not sep or not host:
                raise EndpointError(f"tcp endpoint needs HOST:PORT, got {rest!r}")
            try:
                port_num = int(port)
            except ValueError:
                raise EndpointError(f"invalid tcp port {port!r}") from None
            self._transport = _TcpTransport(host, port_num, self.timeout)
        else:
            self._transport = _ExecTransport(rest, self.timeout)
        self._handshake()
        return self

    def _handshake(self) -> None:
        self._transport.send(
            encode_message({"msg": "hello", "v": PROTOCOL_VERSION})
        )
        header, _ = self._transport.recv_message()
        if header.get("msg") == "error":
            raise ModelError(str(header.get("detail")))
        if header.get("msg") != "hello" or header.get("v") != PROTOCOL_VERSION:
            raise ProtocolError(f"unexpected handshake response {header!r}")
        labels = header.get("labels")
        if not labels:
            raise ProtocolError("handshake response carries no labels")
        self.label_space = LabelSpace(tuple(labels))
        self.feature_tags = tuple(header.get("features") or ())

    def infer(self, request: InferRequest) -> InferResponse:
        """One request, one response; feature tensors follow in want order."""
        if self._transport is None or self.label_space is None:
            raise ProtocolError("endpoint not connected; call connect() first")
        unknown = [t for t in request.want_features if t not in self.feature_tags]
        if unknown:
            raise ProtocolError(
                f"model does not advertise feature tags {unknown}; "
                f"available: {list(self.feature_tags)}"
            )
        self._transport.send(encode_message(request.header(), request.payload))

        header, payload = self._transport.recv_message()
        if header.get("msg") == "error":
            raise ModelError(str(header.get("detail")))
        if header.get("msg") != "scores":
            raise ProtocolError(f"expected scores message, got {header!r}")
        if header.get("id") != request.video_id:
            raise ProtocolError(
                f"response id {header.get('id')!r} does not match "
                f"request {request.video_id!r}"
            )
        k = header.get("k")
        if not isinstance(k, int) or k != len(self.label_space):
            raise ProtocolError(
                f"scores carry k={k}, label space has {len(self.label_space)}"
            )
        if len(payload) != 4 * k:
            raise ProtocolError(
                f"scores payload is {len(payload)} bytes, expected {4 * k}"
            )
        values = struct.unpack(f"<{k}f", payload)
        if not all(math.isfinite(v) for v in values):
            raise ProtocolError("model returned non-finite scores")
        scores = ScoreVector(values)

        features: dict[str, tuple[tuple[int, ...], np.ndarray]] = {}
        for tag in request.want_features:
            f_header, f_payload = self._transport.recv_message()
            if f_header.get("msg") == "error":
                raise ModelError(str(f_header.get("detail")))
            if f_header.get("msg") != "feature" or f_header.get("tag") != tag:
                raise ProtocolError(
                    f"expected feature message for {tag!r}, got {f_header!r}"
                )
            shape = tuple(int(s) for s in f_header.get("shape", []))
            count = int(np.prod(shape)) if shape else 0
            if len(f_payload) != 4 * count:
                raise ProtocolError(
                    f"feature {tag!r}: payload is {len(f_payload)} bytes for "
                    f"shape {shape}"
                )
            values_f = np.frombuffer(f_payload, dtype="<f4").reshape(shape)
            features[tag] = (shape, values_f)
        return InferResponse(request.video_id, scores, features)

    def close(self) -> None:
        if self._transport is not None:
            self._transport.close()
            self._transport = None

    def __enter__(self) -> "ModelEndpoint":
        return self.connect()

    def __exit__(self, *exc) -> None:
        self.close()


class ModelServer(Protocol):
    """What a served model must provide; see serve_connection."""

    def labels(self) -> Sequence[str]: ...

    def feature_tags(self) -> Sequence[str]: ...

    def score(self, request: InferRequest) -> Sequence[float]: ...

    def features(self, request: InferRequest
                 ) -> Mapping[str, tuple[Sequence[int], Sequence[float]]]: ...


def serve_connection(rfile: BinaryIO, wfile: BinaryIO, model: ModelServer) -> None:
    """Serial request loop: hello handshake, then infer until EOF.

    Protocol violations and model failures are answered with an error
    message; the loop then closes the connection.
    """

    def reply(header: Mapping, payload: bytes = b"") -> None:
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
                    "labels": list(model.labels()),
                    "features": list(model.feature_tags()),
                })
                continue
            if msg != "infer":
                reply({"msg": "error", "detail": f"unexpected message {msg!r}"})
                return
            try:
                request = InferRequest(
                    video_id=str(header["id"]),
                    width=int(header["w"]),
                    height=int(header["h"]),
                    frame_count=int(header["n"]),
                    payload=payload,
                    want_features=tuple(header.get("want") or ()),
                    fps=float(header.get("fps") or 0.0),
                )
            except (KeyError, TypeError, ValueError, ProtocolError) as exc:
                reply({"msg": "error", "detail": f"bad infer request: {exc}"})
                return
            unknown = [t for t in request.want_features
                       if t not in model.feature_tags()]
            if unknown:
                reply({"msg": "error",
                       "detail": f"unknown feature tags {unknown}"})
                return
            try:
                scores = [float(s) for s in model.score(request)]
                tensors = model.features(request) if request.want_features else {}
            except Exception as exc:  # noqa: BLE001 - relayed to the client
                reply({"msg": "error", "detail": f"model failure: {exc}"})
                return
            reply(
                {"msg": "scores", "id": request.video_id, "k": len(scores)},
                struct.pack(f"<{len(scores)}f", *scores),
            )
            for tag in request.want_features:
                shape, values = tensors[tag]
                arr = np.asarray(values, dtype="<f4").reshape(-1)
                reply(
                    {"msg": "feature", "tag": tag, "shape": [int(s) for s in shape]},
                    arr.tobytes(),
                )
    except BrokenPipeError:
        return
