"""Accuracy and accuracy-changing-rate computations with the regime taxonomy.

A changing rate compares top-1 accuracy on the original videos with
accuracy on a degraded variant: cr = (acc_original - acc_variant) /
acc_original. Classes the model never gets right on original footage
have no defined rate and are excluded, never silently zeroed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

CONDITION_KINDS = ("original", "foreground", "background", "transformed", "sweep")
REGIMES = ("foreground_reliant", "background_reliant", "mixed")

DEFAULT_TAU_LO = 0.25
DEFAULT_TAU_HI = 0.75


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class Condition:
    """Which variant of the data a prediction was made on."""

    kind: str
    name: str | None = None      # transform name for kind="transformed"
    factor: str | None = None    # swept factor for kind="sweep"
    value: float | None = None   # factor value for kind="sweep"

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise MetricsError(f"unknown condition kind {self.kind!r}")
        if self.kind == "transformed" and not self.name:
            raise MetricsError("transformed condition needs a name")
        if self.kind == "sweep" and (self.factor is None or self.value is None):
            raise MetricsError("sweep condition needs factor and value")

    @classmethod
    def original(cls):
        return cls("original")

    @classmethod
    def foreground(cls):
        return cls("foreground")

    @classmethod
    def background(cls):
        return cls("background")

    @classmethod
    def transformed(cls, name: str):
        return cls("transformed", name=name)

    @classmethod
    def sweep(cls, factor: str, value: float):
        return cls("sweep", factor=factor, value=float(value))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.name is not None:
            out["name"] = self.name
        if self.factor is not None:
            out["factor"] = self.factor
            out["value"] = self.value
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Condition":
        return cls(
            kind=obj["kind"],
            name=obj.get("name"),
            factor=obj.get("factor"),
            value=obj.get("value"),
        )


@dataclass(frozen=True)
class PredictionRecord:
    """One model call: scores for one video under one condition."""

    video_id: str
    true_label: int
    scores: tuple[float, ...]
    condition: Condition
    features: Mapping[str, tuple[tuple[int, ...], tuple[float, ...]]] | None = None

    def __post_init__(self):
        scores = tuple(float(s) for s in self.scores)
        if not scores or not all(math.isfinite(s) for s in scores):
            raise MetricsError(f"record {self.video_id!r}: scores must be finite")
        object.__setattr__(self, "scores", scores)

    def to_json(self) -> dict:
        out = {
            "video_id": self.video_id,
            "true_label": self.true_label,
            "scores": list(self.scores),
            "condition": self.condition.to_json(),
        }
        if self.features:
            out["features"] = {
                tag: {"shape": list(shape), "values": list(values)}
                for tag, (shape, values) in sorted(self.features.items())
            }
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "PredictionRecord":
        features = None
        if obj.get("features"):
            features = {
                tag: (tuple(f["shape"]), tuple(f["values"]))
                for tag, f in obj["features"].items()
            }
        return cls(
            video_id=obj["video_id"],
            true_label=int(obj["true_label"]),
            scores=tuple(obj["scores"]),
            condition=Condition.from_json(obj["condition"]),
            features=features,
        )


@dataclass(frozen=True)
class ClassMetrics:
    class_id: int
    acc_o: float
    acc_f: float
    acc_b: float
    cr_f: float
    cr_b: float
    n_videos: int


def write_records(path: str | Path, records: Sequence[PredictionRecord],
                  errors: Mapping[str, str] | None = None) -> None:
    """JSON-lines persistence, one record per line, sorted by video_id."""
    lines = [
        json.dumps(r.to_json(), sort_keys=True)
        for r in sorted(records, key=lambda r: r.video_id)
    ]
    for video_id in sorted(errors or {}):
        lines.append(
            json.dumps({"video_id": video_id, "error": errors[video_id]},
                       sort_keys=True)
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")


def read_records(path: str | Path
                 ) -> tuple[list[PredictionRecord], dict[str, str]]:
    records, errors = [], {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MetricsError(f"{path}:{lineno}: malformed record: {exc}") from None
        if "error" in obj:
            errors[obj["video_id"]] = obj["error"]
        else:
            records.append(PredictionRecord.from_json(obj))
    return records, errors


def ranked_labels(scores: Sequence[float]) -> list[int]:
    """Class ids from best to worst score; ties broken by lower class id."""
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def topk_accuracy(records: Sequence[PredictionRecord], k: int) -> float:
    if k < 1:
        raise MetricsError("k must be at least 1")
    if not records:
        raise MetricsError("no records to score")
    hits = sum(
        1 for r in records if r.true_label in ranked_labels(r.scores)[:k]
    )
    return hits / len(records)


def changing_rates(acc_o: float, acc_f: float, acc_b: float
                   ) -> tuple[float, float] | None:
    """(cr_f, cr_b) per the defining formula, or None when acc_o is zero.

    None is the "undefined for this class" marker: with zero original
    accuracy there is no baseline to change from.
    """
    for name, v in (("acc_o", acc_o), ("acc_f", acc_f), ("acc_b", acc_b)):
        if not 0.0 <= v <= 1.0:
            raise MetricsError(f"{name}={v} outside [0, 1]")
    if acc_o == 0.0:
        return None
    return (acc_o - acc_f) / acc_o, (acc_o - acc_b) / acc_o


def classify_regime(cr_f: float, cr_b: float,
                    tau_lo: float = DEFAULT_TAU_LO,
                    tau_hi: float = DEFAULT_TAU_HI) -> str:
    """Coarse taxonomy of a class's (cr_f, cr_b) pair.

    foreground_reliant: accuracy survives on foreground-only video and
    collapses on background-only; background_reliant is the reverse;
    everything else is mixed.
    """
    if cr_f <= tau_lo and cr_b >= tau_hi:
        return "foreground_reliant"
    if cr_f >= tau_hi and cr_b <= tau_lo:
        return "background_reliant"
    return "mixed"


def per_class_metrics(records: Iterable[PredictionRecord]
                      ) -> tuple[list[ClassMetrics], list[int]]:
    """Per-class accuracies and changing rates from mixed-condition records.

    Returns (metrics sorted by cr_f descending, excluded class ids).
    Classes with zero original accuracy land in the exclusion list.
    Records are grouped by true label; every class must appear under the
    original, foreground and background conditions.
    """
    by_class: dict[int, dict[str, list[PredictionRecord]]] = {}
    for record in sorted(records, key=lambda r: r.video_id):
        kind = record.condition.kind
        if kind not in ("original", "foreground", "background"):
            continue
        by_class.setdefault(record.true_label, {}).setdefault(kind, []).append(record)

    out: list[ClassMetrics] = []
    excluded: list[int] = []
    for class_id in sorted(by_class):
        groups = by_class[class_id]
        for kind in ("original", "foreground", "background"):
            if kind not in groups:
                raise MetricsError(
                    f"class {class_id}: no records under condition {kind!r}"
                )
        acc_o = topk_accuracy(groups["original"], 1)
        acc_f = topk_accuracy(groups["foreground"], 1)
        acc_b = topk_accuracy(groups["background"], 1)
        rates = changing_rates(acc_o, acc_f, acc_b)
        if rates is None:
            excluded.append(class_id)
            continue
        out.append(
            ClassMetrics(
                class_id=class_id,
                acc_o=acc_o,
                acc_f=acc_f,
                acc_b=acc_b,
                cr_f=rates[0],
                cr_b=rates[1],
                n_videos=len(groups["original"]),
            )
        )
    out.sort(key=lambda m: (-m.cr_f, m.class_id))
    return out, excluded
