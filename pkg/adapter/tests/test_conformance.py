"""Conformance against the frozen golden vectors plus fuzz robustness.

The golden files live in the harness repo (tests/golden); they are the
byte-level contract both sides must match.
"""

import io
import json
import random
import struct
import subprocess
import sys
from pathlib import Path

import pytest

from ipt_adapter.baseline import CentroidBaseline
from ipt_adapter.protocol import (
    ConnectionClosed,
    ProtocolError,
    decode_message,
    encode_message,
)
from ipt_adapter.server import serve_connection

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "golden"

GOLDEN_FRAMES = {
    "framing_empty.bin": ({}, b""),
    "framing_hello.bin": ({"msg": "hello"}, b""),
    "framing_scores.bin": (
        {"msg": "scores", "id": "v0", "k": 2},
        struct.pack("<2f", 0.75, 0.25),
    ),
    "hello_request.bin": ({"msg": "hello", "v": 1}, b""),
    "hello_response.bin": (
        {"msg": "hello", "v": 1, "labels": ["blue", "red"], "features": []},
        b"",
    ),
}


def serve_bytes(request: bytes, labels=("blue", "red"), taps=()) -> bytes:
    model = CentroidBaseline(list(labels))
    out = io.BytesIO()
    serve_connection(io.BytesIO(request), out, model, list(labels), list(taps))
    return out.getvalue()


class TestGoldenVectors:
    @pytest.mark.parametrize("name", sorted(GOLDEN_FRAMES))
    def test_encoder_matches_golden(self, name):
        header, payload = GOLDEN_FRAMES[name]
        assert encode_message(header, payload) == (GOLDEN / name).read_bytes()

    @pytest.mark.parametrize("name", sorted(GOLDEN_FRAMES))
    def test_decoder_reads_golden(self, name):
        header, payload = GOLDEN_FRAMES[name]
        got_header, got_payload = decode_message(
            io.BytesIO((GOLDEN / name).read_bytes())
        )
        assert got_header == header
        assert got_payload == payload

    def test_hello_exchange_in_process(self):
        request = (GOLDEN / "hello_request.bin").read_bytes()
        response = serve_bytes(request)
        assert response == (GOLDEN / "hello_response.bin").read_bytes()

    def test_hello_exchange_subprocess(self, tmp_path):
        labels = tmp_path / "labels.json"
        labels.write_text(json.dumps(["blue", "red"]))
        proc = subprocess.run(
            [sys.executable, "-m", "ipt_adapter", "--stdio",
             "--labels", str(labels)],
            input=(GOLDEN / "hello_request.bin").read_bytes(),
            capture_output=True,
            timeout=30,
        )
        assert proc.returncode == 0
        assert proc.stdout == (GOLDEN / "hello_response.bin").read_bytes()


class TestFraming:
    def test_round_trip(self):
        rng = random.Random(7)
        for _ in range(300):
            header = {
                f"k{i}": rng.choice([rng.randint(-999, 999), "txt", [1, 2.5], True])
                for i in range(rng.randint(0, 5))
            }
            payload = rng.randbytes(rng.randint(0, 256))
            back_h, back_p = decode_message(
                io.BytesIO(encode_message(header, payload))
            )
            assert back_h == json.loads(json.dumps(header))
            assert back_p == payload

    def test_clean_eof(self):
        with pytest.raises(ConnectionClosed):
            decode_message(io.BytesIO(b""))

    def test_bad_magic(self):
        with pytest.raises(ProtocolError, match="magic"):
            decode_message(io.BytesIO(b"XPT1" + b"\x00" * 20))

    def test_fuzz_never_crashes(self):
        rng = random.Random(99)
        valid = encode_message({"msg": "infer", "id": "v"}, b"abc")
        for i in range(400):
            kind = i % 3
            if kind == 0:
                blob = rng.randbytes(rng.randint(0, 64))
            elif kind == 1:
                blob = valid[: rng.randint(0, len(valid))]
            else:
                mutated = bytearray(valid)
                mutated[rng.randrange(len(mutated))] ^= 0xFF
                blob = bytes(mutated)
            try:
                decode_message(io.BytesIO(blob))
            except ProtocolError:
                pass


class TestServerRobustness:
    def test_malformed_magic_answered_with_error(self):
        response = serve_bytes(b"GARBAGE-NOT-A-FRAME")
        header, _ = decode_message(io.BytesIO(response))
        assert header["msg"] == "error"

    def test_fuzzed_frames_yield_structured_replies(self):
        rng = random.Random(41)
        hello = encode_message({"msg": "hello", "v": 1})
        for _ in range(100):
            blob = hello + rng.randbytes(rng.randint(0, 80))
            response = serve_bytes(blob)
            stream = io.BytesIO(response)
            seen = []
            while True:
                try:
                    header, _ = decode_message(stream)
                except ConnectionClosed:
                    break
                seen.append(header["msg"])
            assert seen, "server must answer the valid hello"
            assert seen[0] == "hello"
            assert all(m in ("hello", "scores", "feature", "error") for m in seen)

    def test_wrong_payload_size_is_error(self):
        request = encode_message({"msg": "hello", "v": 1}) + encode_message(
            {"msg": "infer", "id": "v", "w": 4, "h": 4, "n": 1, "want": []},
            b"\x00" * 5,
        )
        response = serve_bytes(request)
        stream = io.BytesIO(response)
        decode_message(stream)  # hello
        header, _ = decode_message(stream)
        assert header["msg"] == "error"
        assert "expected 48" in header["detail"]

    def test_version_mismatch(self):
        response = serve_bytes(encode_message({"msg": "hello", "v": 99}))
        header, _ = decode_message(io.BytesIO(response))
        assert header["msg"] == "error"
