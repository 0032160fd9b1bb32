"""Command-line orchestration: generate, transform, evaluate, report, mock.

Every command is idempotent for identical inputs and seed. All
randomness derives from the single --seed flag through
seeding.derive_seed(seed, purpose, video_id). Exit codes: 0 success,
2 configuration error, 3 endpoint error, 4 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis, svg
from .bvh import BvhError, parse_bvh
from .core import (
    DatasetError,
    FactorVector,
    LabelSpace,
    load_dataset,
    save_dataset,
)
from .metrics import (
    Condition,
    MetricsError,
    PredictionRecord,
    classify_regime,
    per_class_metrics,
    read_records,
    topk_accuracy,
    write_records,
)
from .mock_model import MockModel, MockModelError
from .protocol import (
    DEFAULT_TIMEOUT_S,
    EndpointError,
    InferRequest,
    ModelEndpoint,
    ModelError,
    ProtocolError,
    serve_connection,
)
from .render import (
    DEFAULT_APPEARANCES,
    AppearanceProfile,
    FactorSweep,
    RenderError,
    SceneSpec,
    enumerate_sweep,
    figure_height,
    render,
)
from .seeding import derive_seed
from .semantic import DEFAULT_DROP_THRESHOLD, SemanticError, split_fg_bg
from .transforms import ImageTransformSpec, TransformError, apply_transform

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENDPOINT = 3
EXIT_DATA = 4

DEFAULT_FPS = 30.0
DEFAULT_FIGURE_FRACTION = 1.0 / 3.0
DEFAULT_SMOOTHING_WINDOW = 5
DEFAULT_PCA_DIMS = 3


class ConfigError(Exception):
    pass


def load_config(path: str | Path) -> dict:
    """Parse and schema-validate the config document before any work."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        config = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    schema = json.loads(
        resources.files("ipt_probe").joinpath("config_schema.json").read_text("utf-8")
    )
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: e.json_path)
    if errors:
        detail = "; ".join(f"{e.json_path}: {e.message}" for e in errors[:5])
        raise ConfigError(f"{path}: {detail}")
    return config


def _require_section(config: dict, name: str) -> dict | list:
    if name not in config:
        raise ConfigError(f"config is missing the {name!r} section")
    return config[name]


# ---------------------------------------------------------------- generate


def _appearance_registry(render_cfg: dict) -> tuple[dict, list[str]]:
    if "appearances" not in render_cfg:
        return dict(DEFAULT_APPEARANCES), sorted(DEFAULT_APPEARANCES)
    registry = {}
    order = []
    for item in render_cfg["appearances"]:
        profile = AppearanceProfile(
            appearance_id=item["appearance_id"],
            limb_color=tuple(item["limb_color"]),
            limb_radius=float(item["limb_radius"]),
            joint_color=tuple(item["joint_color"]),
        )
        if profile.appearance_id in registry:
            raise ConfigError(f"duplicate appearance_id {profile.appearance_id!r}")
        registry[profile.appearance_id] = profile
        order.append(profile.appearance_id)
    return registry, order


def cmd_generate(args) -> int:
    config = load_config(args.config)
    render_cfg = _require_section(config, "render")
    sweep_cfgs = _require_section(config, "sweeps")
    config_dir = Path(args.config).resolve().parent

    labels = LabelSpace(tuple(render_cfg["labels"]))
    fps = float(render_cfg.get("fps", DEFAULT_FPS))
    style = render_cfg.get("style", "stick-figure")
    width, height = render_cfg["image_size"]
    fraction = float(render_cfg.get("figure_fraction", DEFAULT_FIGURE_FRACTION))
    explicit_focal = render_cfg.get("focal_length")
    registry, appearance_ids = _appearance_registry(render_cfg)
    base = render_cfg["base_factors"]

    tasks = []  # (video_id, spec, class_label)
    for clip_cfg in render_cfg["clips"]:
        clip_path = config_dir / clip_cfg["path"]
        if not clip_path.is_file():
            raise ConfigError(f"clip {clip_cfg['id']!r}: {clip_path} does not exist")
        clip = parse_bvh(clip_path.read_text("utf-8"), clip_cfg["label"])
        if "max_frames" in render_cfg:
            clip = clip.sliced(int(render_cfg["max_frames"]))
        class_label = labels.index_of(clip_cfg["label"])
        clip_height = figure_height(clip)
        for app_id in appearance_ids:
            if app_id not in registry:
                raise ConfigError(f"unknown appearance_id {app_id!r}")
            for sweep_cfg in sweep_cfgs:
                factor = sweep_cfg["factor"]
                anchor = (
                    float(sweep_cfg["x1"]) if factor == "distance"
                    else float(base["distance"])
                )
                focal = (
                    float(explicit_focal)
                    if explicit_focal
                    else fraction * height * anchor / clip_height
                )
                base_spec = SceneSpec(
                    clip=clip,
                    factors=FactorVector(
                        azimuth_deg=base["azimuth_deg"],
                        elevation_deg=base["elevation_deg"],
                        distance=base["distance"],
                        appearance_id=app_id,
                        background_id=base["background_id"],
                        light_intensity=base["light_intensity"],
                    ),
                    image_size=(width, height),
                    focal_length=focal,
                    seed=derive_seed(args.seed, "render", clip_cfg["id"], app_id),
                    style=style,
                )
                sweep = FactorSweep(
                    factor, float(sweep_cfg["x1"]), float(sweep_cfg["delta"]),
                    int(sweep_cfg["count"]), base_spec,
                )
                for i, spec in enumerate(enumerate_sweep(sweep)):
                    video_id = f"{clip_cfg['id']}__{app_id}__{factor}_{i:04d}"
                    tasks.append((video_id, spec, class_label))

    def run_one(task):
        video_id, spec, class_label = task
        video, masks = render(
            spec, appearances=registry, video_id=video_id,
            fps=fps, class_label=class_label,
        )
        return video_id, video, masks, spec.factors

    videos, mask_map, factor_map = [], {}, {}
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for video_id, video, masks, factors in pool.map(run_one, tasks):
            videos.append(video)
            mask_map[video_id] = masks
            factor_map[video_id] = factors

    save_dataset(args.out, videos, labels, masks=mask_map, factors=factor_map)
    print(f"generated {len(videos)} videos under {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- transform


def _parse_transform_spec(text: str, seed: int) -> ImageTransformSpec:
    if text.strip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--spec is not valid JSON: {exc}") from None
        spec = ImageTransformSpec.from_json(obj)
    else:
        spec = ImageTransformSpec(text.strip())
    return spec


def _semantic_transform(dataset, out_root: Path, threshold: float) -> int:
    fg_videos, bg_videos = [], []
    report = []
    for video_id in dataset.video_ids():
        masks = dataset.load_masks(video_id)
        if masks is None:
            raise DatasetError(
                f"semantic mode needs masks, video {video_id!r} has none"
            )
        video = dataset.load_video(video_id)
        empty = [i for i, m in enumerate(masks.masks) if not m.any()]
        fraction = len(empty) / video.frame_count
        # a fully undetected video has nothing to split, whatever the threshold
        retained = fraction <= threshold and fraction < 1.0
        report.append(
            {
                "video_id": video_id,
                "dropped_fraction": fraction,
                "dropped_frames": empty,
                "retained": retained,
            }
        )
        if not retained:
            continue
        fg, bg, _dropped = split_fg_bg(video, masks)
        fg_videos.append(fg)
        bg_videos.append(bg)

    out_root.mkdir(parents=True, exist_ok=True)
    label_space = dataset.manifest.label_space
    if not fg_videos:
        raise SemanticError(
            f"no videos retained at drop threshold {threshold}; nothing to write"
        )
    save_dataset(out_root / "fg", fg_videos, label_space)
    save_dataset(out_root / "bg", bg_videos, label_space)
    payload = {"threshold": threshold, "videos": report}
    (out_root / "drop_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    print(
        f"semantic split: {len(fg_videos)}/{len(report)} videos retained, "
        f"datasets under {out_root}/fg and {out_root}/bg"
    )
    return EXIT_OK


def _apply_image_transform(dataset, out_root: Path, spec: ImageTransformSpec,
                           seed: int) -> None:
    videos = []
    for video_id in dataset.video_ids():
        video = dataset.load_video(video_id)
        if spec.kind == "gaussian_noise":
            params = dict(spec.params)
            params["seed"] = derive_seed(seed, "noise", video_id)
            video_spec = ImageTransformSpec(spec.kind, params)
        else:
            video_spec = spec
        videos.append(apply_transform(video, video_spec))
    # masks are not carried over: rotation breaks pixel alignment
    save_dataset(
        out_root, videos, dataset.manifest.label_space,
        factors={
            e.video_id: e.factors
            for e in dataset.manifest.videos if e.factors is not None
        },
    )
    print(f"applied {spec.name} to {len(videos)} videos, dataset under {out_root}")


def cmd_transform(args) -> int:
    dataset = load_dataset(args.input)
    out_root = Path(args.out)
    config = load_config(args.config) if args.config else {}

    if args.spec == "semantic":
        threshold = args.threshold
        if threshold is None:
            threshold = config.get("report", {}).get(
                "drop_threshold", DEFAULT_DROP_THRESHOLD
            )
        return _semantic_transform(dataset, out_root, threshold)

    if args.spec:
        specs = [_parse_transform_spec(args.spec, args.seed)]
        _apply_image_transform(dataset, out_root, specs[0], args.seed)
        return EXIT_OK

    # no --spec: run the whole battery declared in the config
    declared = config.get("transforms")
    if not declared:
        raise ConfigError(
            "transform needs --spec, or --config with a transforms section"
        )
    specs = [ImageTransformSpec.from_json(obj) for obj in declared]
    for spec in specs:
        _apply_image_transform(dataset, out_root / spec.name, spec, args.seed)
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def _parse_condition(text: str):
    """Returns (constant Condition | None, sweep factor | None)."""
    if text in ("original", "foreground", "background"):
        return Condition(text), None
    if text.startswith("transformed:"):
        return Condition.transformed(text.split(":", 1)[1]), None
    if text.startswith("sweep:"):
        factor = text.split(":", 1)[1]
        if factor not in ("azimuth", "elevation", "distance"):
            raise ConfigError(f"unknown sweep factor {factor!r}")
        return None, factor
    raise ConfigError(
        "--condition must be original|foreground|background|"
        f"transformed:NAME|sweep:FACTOR, got {text!r}"
    )


def _factor_value(factors: FactorVector | None, factor: str, video_id: str) -> float:
    if factors is None:
        raise DatasetError(
            f"video {video_id!r} has no factor vector; cannot tag sweep records"
        )
    return {
        "azimuth": factors.azimuth_deg,
        "elevation": factors.elevation_deg,
        "distance": factors.distance,
    }[factor]


def cmd_evaluate(args) -> int:
    dataset = load_dataset(args.dataset)
    out_path = Path(args.out)
    condition, sweep_factor = _parse_condition(args.condition)
    eval_cfg = (load_config(args.config) if args.config else {}).get("evaluate", {})
    if not args.model:
        args.model = eval_cfg.get("endpoint")
        if not args.model:
            raise ConfigError("evaluate needs --model or config evaluate.endpoint")
    if args.timeout is None:
        args.timeout = float(eval_cfg.get("timeout_s", DEFAULT_TIMEOUT_S))
    if args.jobs is None:
        args.jobs = int(eval_cfg.get("connections", 1))
    features_arg = args.features
    if not features_arg:
        features_arg = ",".join(eval_cfg.get("features", []))
    want = tuple(t for t in (features_arg or "").split(",") if t)

    existing_records, existing_errors = (
        read_records(out_path) if out_path.exists() else ([], {})
    )
    have = {r.video_id for r in existing_records}
    todo = [e for e in dataset.manifest.videos if e.video_id not in have]
    if not todo:
        write_records(out_path, existing_records, existing_errors)
        print(f"all {len(have)} videos already evaluated; no model contact")
        return EXIT_OK

    n_connections = min(max(1, args.jobs), len(todo))
    endpoints = [
        ModelEndpoint(args.model, timeout=args.timeout).connect()
        for _ in range(n_connections)
    ]
    try:
        endpoint_labels = endpoints[0].label_space
        for name in dataset.manifest.label_space.labels:
            if name not in endpoint_labels.labels:
                raise EndpointError(
                    f"endpoint label space does not cover dataset label {name!r}"
                )
        missing_tags = [t for t in want if t not in endpoints[0].feature_tags]
        if missing_tags:
            raise EndpointError(
                f"endpoint does not serve feature tags {missing_tags}; "
                f"available: {list(endpoints[0].feature_tags)}"
            )

        queue = deque(todo)
        lock = threading.Lock()
        new_records: dict[str, PredictionRecord] = {}
        new_errors: dict[str, str] = {}

        def worker(endpoint: ModelEndpoint):
            while True:
                with lock:
                    if not queue:
                        return
                    entry = queue.popleft()
                try:
                    video = dataset.load_video(entry.video_id)
                    response = endpoint.infer(InferRequest.from_video(video, want))
                    label_name = dataset.manifest.label_space.labels[entry.class_label]
                    if sweep_factor is not None:
                        cond = Condition.sweep(
                            sweep_factor,
                            _factor_value(entry.factors, sweep_factor, entry.video_id),
                        )
                    else:
                        cond = condition
                    features = None
                    if response.features:
                        features = {
                            tag: (shape, tuple(float(v) for v in values.reshape(-1)))
                            for tag, (shape, values) in response.features.items()
                        }
                    record = PredictionRecord(
                        video_id=entry.video_id,
                        true_label=endpoint_labels.index_of(label_name),
                        scores=response.scores.scores,
                        condition=cond,
                        features=features,
                    )
                    with lock:
                        new_records[entry.video_id] = record
                except (ProtocolError, DatasetError) as exc:
                    with lock:
                        new_errors[entry.video_id] = str(exc)

        threads = [
            threading.Thread(target=worker, args=(ep,), daemon=True)
            for ep in endpoints
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        for ep in endpoints:
            ep.close()

    all_records = list(existing_records) + list(new_records.values())
    all_errors = dict(existing_errors)
    all_errors.update(new_errors)
    write_records(out_path, all_records, all_errors)
    sidecar = {
        "labels": list(endpoint_labels.labels),
        "features": list(want),
        "endpoint": args.model,
    }
    Path(str(out_path) + ".labels.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    print(
        f"evaluated {len(new_records)} videos "
        f"({len(new_errors)} errors, {len(have)} resumed) -> {out_path}"
    )
    return EXIT_OK


# ---------------------------------------------------------------- report


def _load_all_records(paths):
    records = []
    label_names = None
    for path in paths:
        recs, _errors = read_records(path)
        records.extend(recs)
        sidecar = Path(str(path) + ".labels.json")
        if sidecar.exists() and label_names is None:
            label_names = json.loads(sidecar.read_text("utf-8"))["labels"]
    return records, label_names


def _check_conditions(records, allowed: set[str], mode: str):
    seen = {r.condition.kind for r in records}
    bad = seen - allowed
    if bad:
        raise MetricsError(
            f"{mode} report cannot mix in {sorted(bad)} records; "
            f"expected only {sorted(allowed)}"
        )


def _report_image(records, labels, outdir: Path, args) -> None:
    _check_conditions(records, {"original", "transformed"}, "image")
    groups: dict[str, list] = {}
    for r in records:
        key = "original" if r.condition.kind == "original" else r.condition.name
        groups.setdefault(key, []).append(r)
    names = sorted(groups, key=lambda k: (k != "original", k))
    n_labels = max(len(r.scores) for r in records)
    rows = []
    for name in names:
        recs = groups[name]
        rows.append(
            {
                "condition": name,
                "top1": topk_accuracy(recs, 1),
                "top5": topk_accuracy(recs, min(5, n_labels)),
                "n_videos": len(recs),
            }
        )
    with open(outdir / "image_accuracy.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["condition", "top1", "top5", "n_videos"])
        writer.writeheader()
        writer.writerows(rows)
    (outdir / "image_accuracy.json").write_text(
        json.dumps(rows, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    svg.bar_chart(
        outdir / "image_accuracy.svg",
        categories=[r["condition"] for r in rows],
        series=[
            ("top1", [r["top1"] for r in rows]),
            ("top5", [r["top5"] for r in rows]),
        ],
        title="Accuracy by image transform",
        y_label="accuracy",
    )


def _report_semantic(records, labels, outdir: Path, args, report_cfg) -> None:
    _check_conditions(records, {"original", "foreground", "background"}, "semantic")
    tau_lo = args.tau_lo if args.tau_lo is not None else report_cfg.get("tau_lo", 0.25)
    tau_hi = args.tau_hi if args.tau_hi is not None else report_cfg.get("tau_hi", 0.75)
    metrics, excluded = per_class_metrics(records)

    def label_name(class_id):
        if labels and 0 <= class_id < len(labels):
            return labels[class_id]
        return f"class_{class_id}"

    rows = []
    regime_counts = {"foreground_reliant": 0, "background_reliant": 0, "mixed": 0}
    for m in metrics:
        regime = classify_regime(m.cr_f, m.cr_b, tau_lo, tau_hi)
        regime_counts[regime] += 1
        rows.append(
            {
                "class_id": m.class_id,
                "label": label_name(m.class_id),
                "acc_o": m.acc_o,
                "acc_f": m.acc_f,
                "acc_b": m.acc_b,
                "cr_f": m.cr_f,
                "cr_b": m.cr_b,
                "regime": regime,
                "n_videos": m.n_videos,
            }
        )
    with open(outdir / "semantic_metrics.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["class_id", "label", "acc_o", "acc_f", "acc_b",
                        "cr_f", "cr_b", "regime", "n_videos"],
        )
        writer.writeheader()
        writer.writerows(rows)
    summary = {
        "regime_counts": regime_counts,
        "excluded_classes": [
            {"class_id": c, "label": label_name(c)} for c in excluded
        ],
        "tau_lo": tau_lo,
        "tau_hi": tau_hi,
    }
    (outdir / "semantic_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    if rows:
        svg.bar_chart(
            outdir / "changing_rates.svg",
            categories=[r["label"] for r in rows],
            series=[
                ("cr_f", [r["cr_f"] for r in rows]),
                ("cr_b", [r["cr_b"] for r in rows]),
            ],
            title="Accuracy changing rates by class (sorted by cr_f)",
            y_label="changing rate",
        )


def _report_sweep(records, labels, outdir: Path, args, report_cfg) -> None:
    _check_conditions(records, {"sweep"}, "sweep")
    window = args.window if args.window is not None else report_cfg.get(
        "smoothing_window", DEFAULT_SMOOTHING_WINDOW)
    pca_dims = args.pca_dims if args.pca_dims is not None else report_cfg.get(
        "pca_dims", DEFAULT_PCA_DIMS)
    groups: dict[tuple[str, int], list] = {}
    for r in records:
        groups.setdefault((r.condition.factor, r.true_label), []).append(r)

    stats_index = {}
    for (factor, class_id), recs in sorted(groups.items()):
        name = labels[class_id] if labels and class_id < len(labels) else str(class_id)
        stem = f"sweep_{factor}_class_{class_id}"
        curve = analysis.build_curve(
            recs, class_id, metadata={"factor": factor, "class": name}
        )
        stats = analysis.curve_stats(curve, window)
        (outdir / f"{stem}_curve.json").write_text(
            json.dumps(curve.to_json(), indent=2, sort_keys=True) + "\n", "utf-8"
        )
        (outdir / f"{stem}_stats.json").write_text(
            json.dumps(stats.to_json(), indent=2, sort_keys=True) + "\n", "utf-8"
        )
        svg.line_plot(
            outdir / f"{stem}_curve.svg",
            [(curve.xs, curve.ys, name)],
            title=f"{name}: true-class score vs {factor}",
            x_label=factor,
            y_label="score",
        )
        stats_index[stem] = stats.to_json()

        # feature manifolds, one embedding per tag, samples ordered by x
        tagged = {}
        for r in sorted(recs, key=lambda r: r.condition.value):
            for tag, (shape, values) in (r.features or {}).items():
                tagged.setdefault(tag, []).append(values)
        for tag, rows in sorted(tagged.items()):
            if len(rows) < 3:
                continue
            matrix = np.asarray(rows, dtype=float)
            d = min(pca_dims, matrix.shape[0] - 1, matrix.shape[1])
            embedding = analysis.pca(matrix, d)
            payload = embedding.to_json()
            payload["loop_closure"] = (
                analysis.loop_closure(embedding) if factor == "azimuth" else None
            )
            (outdir / f"{stem}_pca_{tag}.json").write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8"
            )
            coords = embedding.coords
            pairs = [(0, 1)] + ([(0, 2), (1, 2)] if coords.shape[1] >= 3 else [])
            for a, b in pairs:
                svg.scatter_plot(
                    outdir / f"{stem}_pca_{tag}_pc{a + 1}_pc{b + 1}.svg",
                    [(float(p[a]), float(p[b])) for p in coords],
                    title=f"{tag} embedding: PC{a + 1} vs PC{b + 1}",
                    x_label=f"PC{a + 1}",
                    y_label=f"PC{b + 1}",
                )
    (outdir / "sweep_stats_index.json").write_text(
        json.dumps(stats_index, indent=2, sort_keys=True) + "\n", "utf-8"
    )


def cmd_report(args) -> int:
    records, label_names = _load_all_records(args.records)
    if not records:
        raise MetricsError("record files contain no usable records")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report_cfg = (load_config(args.config) if args.config else {}).get("report", {})
    if args.mode == "image":
        _report_image(records, label_names, outdir, args)
    elif args.mode == "semantic":
        _report_semantic(records, label_names, outdir, args, report_cfg)
    else:
        _report_sweep(records, label_names, outdir, args, report_cfg)
    print(f"{args.mode} report written to {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------- mock


def cmd_mock(args) -> int:
    azimuth_map = {}
    if args.manifest:
        dataset = load_dataset(args.manifest)
        label_space = dataset.manifest.label_space
        for entry in dataset.manifest.videos:
            if entry.factors is not None:
                azimuth_map[entry.video_id] = entry.factors.azimuth_deg
    elif args.labels:
        label_space = LabelSpace(tuple(args.labels.split(",")))
    else:
        raise ConfigError("mock needs --labels or --manifest")
    if args.mode == "azimuth_oracle" and not azimuth_map:
        raise ConfigError(
            "azimuth_oracle mode needs --manifest with factor vectors"
        )
    model = MockModel(label_space, args.mode, seed=args.seed,
                      azimuth_by_video=azimuth_map)
    serve_connection(sys.stdin.buffer, sys.stdout.buffer, model)
    return EXIT_OK


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipt-probe",
        description="Probe a video activity classifier with "
                    "identity-preserving transforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render factor sweeps into a dataset")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--jobs", type=int, default=1)
    gen.set_defaults(func=cmd_generate)

    tr = sub.add_parser("transform", help="apply an image or semantic transform")
    tr.add_argument("input", help="input dataset root")
    tr.add_argument("--out", required=True)
    tr.add_argument("--spec", default="",
                    help='transform kind, inline JSON, or "semantic"; '
                         "omit to run the config's transforms section")
    tr.add_argument("--config", default="")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--threshold", type=float, default=None,
                    help="semantic drop-fraction threshold (default 0.2)")
    tr.set_defaults(func=cmd_transform)

    ev = sub.add_parser("evaluate", help="drive a model endpoint over a dataset")
    ev.add_argument("dataset", help="dataset root")
    ev.add_argument("--model", default="",
                    help="endpoint spec: tcp:HOST:PORT or exec:COMMAND")
    ev.add_argument("--out", required=True, help="records JSONL path")
    ev.add_argument("--condition", default="original")
    ev.add_argument("--features", default="")
    ev.add_argument("--config", default="")
    ev.add_argument("--jobs", type=int, default=None)
    ev.add_argument("--timeout", type=float, default=None)
    ev.set_defaults(func=cmd_evaluate)

    rp = sub.add_parser("report", help="summarize prediction records")
    rp.add_argument("records", nargs="+", help="records JSONL files")
    rp.add_argument("--mode", required=True,
                    choices=["image", "semantic", "sweep"])
    rp.add_argument("--out", required=True, help="output directory")
    rp.add_argument("--config", default="")
    rp.add_argument("--window", type=int, default=None,
                    help="smoothing window for sweep curves")
    rp.add_argument("--pca-dims", type=int, default=None)
    rp.add_argument("--tau-lo", type=float, default=None)
    rp.add_argument("--tau-hi", type=float, default=None)
    rp.set_defaults(func=cmd_report)

    mk = sub.add_parser("mock", help="serve the deterministic mock model on stdio")
    mk.add_argument("--mode", default="uniform",
                    choices=["uniform", "centroid", "azimuth_oracle"])
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("--labels", default="")
    mk.add_argument("--manifest", default="")
    mk.set_defaults(func=cmd_mock)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TransformError, MockModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EndpointError, ModelError, ProtocolError) as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except (DatasetError, BvhError, RenderError, SemanticError,
            MetricsError, analysis.AnalysisError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
