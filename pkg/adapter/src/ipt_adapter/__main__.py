"""Entry point: python -m ipt_adapter --stdio|--tcp PORT --model MODULE:FUNC --labels FILE

The labels file is JSON: either a plain list of class names, or a list
of {"name": ..., "color": [r, g, b]} objects. Colors, when present,
become the nearest-centroid baseline's prototypes; --model overrides the
baseline with any importable callable.

Wrapping a real checkpoint (a TSN or I3D release from OpenMMLab or the
deepmind I3D repository, for instance) means writing one function that
maps the video dict to a score list, exposing it as MODULE:FUNC, and
listing the checkpoint's class names in the labels file; see README.
"""

from __future__ import annotations

import argparse
import importlib
import json
import sys
from pathlib import Path

from .baseline import CentroidBaseline
from .server import serve_stdio, serve_tcp


def load_labels(path: str) -> tuple[list[str], dict[str, list[float]]]:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"cannot read labels file {path}: {exc}")
    names, prototypes = [], {}
    for item in data:
        if isinstance(item, str):
            names.append(item)
        elif isinstance(item, dict) and "name" in item:
            names.append(str(item["name"]))
            if "color" in item:
                prototypes[str(item["name"])] = [float(v) for v in item["color"]]
        else:
            raise SystemExit(f"labels file entry not understood: {item!r}")
    if not names:
        raise SystemExit("labels file lists no classes")
    return names, prototypes


def load_model(spec: str):
    module_name, sep, attr = spec.partition(":")
    if not sep:
        raise SystemExit(f"--model must be MODULE:FUNC, got {spec!r}")
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise SystemExit(f"cannot import model module {module_name!r}: {exc}")
    try:
        return getattr(module, attr)
    except AttributeError:
        raise SystemExit(f"module {module_name!r} has no attribute {attr!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m ipt_adapter")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--stdio", action="store_true",
                       help="speak the protocol on stdin/stdout")
    group.add_argument("--tcp", type=int, metavar="PORT",
                       help="listen on 127.0.0.1:PORT")
    parser.add_argument("--labels", required=True, help="labels JSON file")
    parser.add_argument("--model", default="",
                        help="MODULE:FUNC classifier callable "
                             "(default: built-in nearest-centroid baseline)")
    parser.add_argument("--feature-taps", default="",
                        help="comma-separated feature tags to advertise")
    parser.add_argument("--seed", type=int, default=0,
                        help="baseline prototype seed")
    args = parser.parse_args(argv)

    names, prototypes = load_labels(args.labels)
    taps = [t for t in args.feature_taps.split(",") if t]
    if args.model:
        model = load_model(args.model)
    else:
        model = CentroidBaseline(names, prototypes, seed=args.seed)
    if args.stdio:
        serve_stdio(model, names, taps)
    else:
        serve_tcp(args.tcp, model, names, taps)
    return 0


if __name__ == "__main__":
    sys.exit(main())
