"""Acceptance for the model-side adapter package (secondary component).

The adapter is exercised purely through its external interfaces: the
`python -m ipt_adapter` command speaking protocol bytes on stdio, and
the frozen golden vectors shared with the harness.
"""

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ipt_probe.cli import main
from ipt_probe.core import Frame, LabelSpace, MaskSequence, Video, save_dataset
from ipt_probe.metrics import read_records
from ipt_probe.protocol import ConnectionClosed, decode_message, encode_message

from conftest import FIXTURES

GOLDEN = FIXTURES.parent / "golden"


def run_adapter(request_bytes: bytes, labels_file, extra=()) -> bytes:
    proc = subprocess.run(
        [sys.executable, "-m", "ipt_adapter", "--stdio",
         "--labels", str(labels_file), *extra],
        input=request_bytes, capture_output=True, timeout=60,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout


def ok(name):
    print(f"\nACCEPTANCE {name}: PASS")


@pytest.fixture
def toy_labels(tmp_path):
    path = tmp_path / "labels.json"
    path.write_text(json.dumps([
        {"name": "blue", "color": [0, 0, 255]},
        {"name": "red", "color": [255, 0, 0]},
    ]))
    return path


def test_c10_adapter_conformance(tmp_path):
    labels = tmp_path / "labels.json"
    labels.write_text(json.dumps(["blue", "red"]))

    # golden hello request bytes -> golden hello response bytes
    response = run_adapter((GOLDEN / "hello_request.bin").read_bytes(), labels)
    assert response == (GOLDEN / "hello_response.bin").read_bytes()

    # malformed magic: structured error reply, clean shutdown
    response = run_adapter(b"XPT1 definitely not a frame", labels)
    header, _ = decode_message(io.BytesIO(response))
    assert header["msg"] == "error"

    # fuzzed byte streams: every reply parses, never a crash
    rng = np.random.default_rng(123)
    hello = (GOLDEN / "hello_request.bin").read_bytes()
    for i in range(40):
        kind = i % 3
        if kind == 0:
            blob = rng.bytes(int(rng.integers(0, 60)))
        elif kind == 1:
            blob = hello[: int(rng.integers(0, len(hello)))]
        else:
            blob = hello + rng.bytes(int(rng.integers(1, 60)))
        out = run_adapter(blob, labels)
        stream = io.BytesIO(out)
        while True:
            try:
                header, _ = decode_message(stream)
            except ConnectionClosed:
                break
            assert header["msg"] in ("hello", "error")
    ok("adapter conformance (golden exchange, bad magic, 40 fuzz cases)")


def build_toy_dataset(root):
    """Two classes whose signal is the full-frame color field.

    The binary mask labels that color field as the foreground; the small
    "person" rectangle (carrying the *opposite* class color) is the
    mask-zero region. Foreground-only videos therefore keep the signal,
    background-only videos keep only the misleading rectangle.
    """
    labels = LabelSpace(("blue", "red"))
    colors = {"blue": (0, 0, 255), "red": (255, 0, 0)}
    videos, mask_map = [], {}
    for class_id, name in enumerate(labels.labels):
        field = colors[name]
        other = colors["red" if name == "blue" else "blue"]
        for v in range(3):
            frames, masks = [], []
            for t in range(3):
                arr = np.zeros((16, 16, 3), dtype=np.uint8)
                arr[:, :] = field
                top, left = 4 + v, 3 + 2 * t
                arr[top:top + 5, left:left + 4] = other
                mask = np.ones((16, 16), dtype=np.uint8)
                mask[top:top + 5, left:left + 4] = 0
                frames.append(Frame(arr))
                masks.append(mask)
            video_id = f"{name}_{v}"
            videos.append(Video(tuple(frames), 8.0, class_id, video_id))
            mask_map[video_id] = MaskSequence(tuple(masks))
    save_dataset(root, videos, labels, masks=mask_map)
    return labels


def test_c11_adapter_toy_pipeline(tmp_path, toy_labels):
    dataset = tmp_path / "toy"
    build_toy_dataset(dataset)

    split_root = tmp_path / "split"
    assert main(["transform", str(dataset), "--out", str(split_root),
                 "--spec", "semantic"]) == 0

    endpoint = (
        f"exec:{sys.executable} -m ipt_adapter --stdio --labels {toy_labels}"
    )
    records = tmp_path / "records.jsonl"
    for ds, condition in [
        (dataset, "original"),
        (split_root / "fg", "foreground"),
        (split_root / "bg", "background"),
    ]:
        assert main(["evaluate", str(ds), "--model", endpoint,
                     "--out", str(records), "--condition", condition]) == 0

    loaded, errors = read_records(records)
    assert not errors
    assert len(loaded) == 18  # 6 videos x 3 conditions

    report_dir = tmp_path / "report"
    assert main(["report", str(records), "--mode", "semantic",
                 "--out", str(report_dir)]) == 0
    rows = list(csv.DictReader(open(report_dir / "semantic_metrics.csv")))
    assert len(rows) == 2
    for row in rows:
        assert float(row["acc_o"]) == 1.0  # top-1 on originals
        assert (float(row["cr_f"]), float(row["cr_b"])) == (0.0, 1.0)
        assert row["regime"] == "foreground_reliant"
    summary = json.loads((report_dir / "semantic_summary.json").read_text())
    assert summary["regime_counts"]["foreground_reliant"] == 2
    ok("adapter toy pipeline (top-1 = 1.0, cr_f = 0, cr_b = 1, both classes)")
