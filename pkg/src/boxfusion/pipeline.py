"""Per-image fusion and dataset-level evaluation over loaded indexes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .evaluation import (
    ApReport,
    GroundTruthBox,
    Metrics,
    ap_report,
    filter_by_score,
    match_detections,
    precision_recall_f1,
)
from .fusion import (
    DEFAULT_SCORE_FLOOR,
    Detection,
    FusionConfig,
    nms,
    soft_nms,
    weighted_boxes_fusion,
)

METHODS = ("wbf", "nms", "soft-nms")
SWEEP_THRESHOLDS = (0.4, 0.5, 0.6, 0.7, 0.75, 0.8)


def _label_order(label: str | None) -> tuple[int, str]:
    return (0, "") if label is None else (1, label)


def fuse_image(
    per_model: Sequence[Sequence[Detection]],
    method: str = "wbf",
    thr: float = 0.7,
    clamp: bool = False,
    image_id: str = "",
) -> list[Detection]:
    """Fuse one image's detections, partitioned by label.

    Results are re-indexed as model 0 with ``source_order`` equal to their
    output position, ready to be evaluated or written.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    labels = sorted({d.label for dets in per_model for d in dets}, key=_label_order)
    out: list[Detection] = []
    for label in labels:
        group = [[d for d in dets if d.label == label] for dets in per_model]
        if method == "wbf":
            config = FusionConfig(thr=thr, model_count=len(per_model), clamp_confidence=clamp)
            results = [(f.box, f.confidence) for f in weighted_boxes_fusion(group, config)]
        else:
            flat = [d for dets in group for d in dets]
            kept = nms(flat, thr) if method == "nms" else soft_nms(flat, thr, DEFAULT_SCORE_FLOOR)
            results = [(d.box, d.confidence) for d in kept]
        for box, conf in results:
            out.append(Detection(box, conf, 0, len(out), image_id, label))
    return out


def fuse_index(
    index: Mapping[str, Sequence[Sequence[Detection]]],
    method: str = "wbf",
    thr: float = 0.7,
    clamp: bool = False,
) -> dict[str, list[Detection]]:
    return {
        image_id: fuse_image(index[image_id], method, thr, clamp, image_id)
        for image_id in sorted(index)
    }


def single_model(index: Mapping[str, Sequence[Sequence[Detection]]]) -> dict[str, list[Detection]]:
    """Flatten an index holding one model into image_id -> detections."""
    return {k: [d for dets in v for d in dets] for k, v in index.items()}


@dataclass(frozen=True)
class EvalRow:
    metrics: Metrics
    report: ApReport


def evaluate(
    detections: Mapping[str, Sequence[Detection]],
    gts: Mapping[str, Sequence[GroundTruthBox]],
    iou_thr: float = 0.5,
    score_thr: float = 0.0,
) -> EvalRow:
    """P/R/F1 at an operating point plus the AP report over all detections."""
    m = match_detections(filter_by_score(detections, score_thr), gts, iou_thr)
    return EvalRow(precision_recall_f1(m), ap_report(detections, gts))


def sweep(
    index: Mapping[str, Sequence[Sequence[Detection]]],
    gts: Mapping[str, Sequence[GroundTruthBox]],
    thresholds: Sequence[float] = SWEEP_THRESHOLDS,
    clamp: bool = False,
) -> list[tuple[float, ApReport]]:
    return [
        (thr, ap_report(fuse_index(index, "wbf", thr, clamp), gts)) for thr in thresholds
    ]
