"""Regenerate the frozen wire-protocol golden vectors in tests/golden/.

These bytes are the conformance surface for any independent protocol
implementation; regenerate only on a deliberate protocol revision.
"""

import struct
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from ipt_probe.protocol import encode_message  # noqa: E402

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"

# the conformance server scenario: labels blue/red, no feature taps
CASES = {
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
    "infer_request.bin": (
        {
            "msg": "infer",
            "id": "v0",
            "w": 2,
            "h": 2,
            "n": 1,
            "fps": 8.0,
            "want": [],
        },
        bytes(range(12)),
    ),
}


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, (header, payload) in CASES.items():
        data = encode_message(header, payload)
        (GOLDEN / name).write_bytes(data)
        print(f"{name}: {len(data)} bytes")


if __name__ == "__main__":
    main()
