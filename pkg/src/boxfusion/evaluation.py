"""Detection matching, precision/recall/F1 and 101-point interpolated AP."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .fusion import Detection, rank_key
from .geometry import Box, iou

RECALL_STEPS = 100  # S = {0, 0.01, ..., 1} has RECALL_STEPS + 1 points
AP_RANGE_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))


@dataclass(frozen=True)
class GroundTruthBox:
    box: Box
    image_id: str = ""
    label: str | None = None


@dataclass
class MatchResult:
    n_tp: int
    n_fp: int
    n_fn: int
    # (detection, is_tp) ranked by confidence across the whole dataset
    flagged_detections: list[tuple[Detection, bool]] = field(default_factory=list)

    @property
    def total_gt(self) -> int:
        return self.n_tp + self.n_fn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


@dataclass
class PRCurve:
    points: list[tuple[float, float]]
    interpolated: list[float]


@dataclass(frozen=True)
class ApReport:
    ap50: float
    ap75: float
    ap_range: float


DetectionIndex = Mapping[str, Sequence[Detection]]
GroundTruthIndex = Mapping[str, Sequence[GroundTruthBox]]


def _match_image(
    dets: Sequence[Detection], gts: Sequence[GroundTruthBox], iou_thr: float
) -> list[tuple[Detection, bool]]:
    consumed = [False] * len(gts)
    flagged = []
    for det in sorted(dets, key=rank_key):
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts):
            if consumed[j] or gt.label != det.label:
                continue
            o = iou(det.box, gt.box)
            if o > best_iou:
                best, best_iou = j, o
        is_tp = best >= 0 and best_iou > iou_thr
        if is_tp:
            consumed[best] = True
        flagged.append((det, is_tp))
    return flagged


def match_detections(
    detections: DetectionIndex, gts: GroundTruthIndex, iou_thr: float
) -> MatchResult:
    """Greedy per-image matching at a fixed IoU threshold.

    Within an image, detections are visited by decreasing confidence and each
    claims the unmatched ground truth of the same label it overlaps most,
    provided that overlap is strictly above ``iou_thr``.  The flagged list is
    then ranked globally.
    """
    missing = sorted(k for k, v in detections.items() if v and k not in gts)
    if missing:
        warnings.warn(
            f"{len(missing)} image(s) with detections have no ground truth entry "
            f"(e.g. {missing[0]!r}); their detections count as false positives",
            stacklevel=2,
        )
    flagged: list[tuple[Detection, bool]] = []
    n_gt = 0
    for image_id in sorted(set(detections) | set(gts)):
        image_gts = gts.get(image_id, ())
        n_gt += len(image_gts)
        flagged.extend(_match_image(detections.get(image_id, ()), image_gts, iou_thr))
    # stable sort keeps per-image order (and image_id order) among ties
    flagged.sort(key=lambda item: -item[0].confidence)
    n_tp = sum(1 for _, tp in flagged if tp)
    return MatchResult(n_tp=n_tp, n_fp=len(flagged) - n_tp, n_fn=n_gt - n_tp,
                       flagged_detections=flagged)


def precision_recall_f1(m: MatchResult) -> Metrics:
    n_pred = m.n_tp + m.n_fp
    precision = m.n_tp / n_pred if n_pred else 0.0
    if m.total_gt:
        recall = m.n_tp / m.total_gt
    else:
        warnings.warn("no ground truth boxes; recall defined as 0", stacklevel=2)
        recall = 0.0
    s = precision + recall
    f1 = 2 * precision * recall / s if s > 0 else 0.0
    return Metrics(precision, recall, f1)


def _ranked_counts(m: MatchResult) -> list[tuple[int, int]]:
    """Cumulative (tp, fp) after each rank."""
    tp = fp = 0
    out = []
    for _, is_tp in m.flagged_detections:
        if is_tp:
            tp += 1
        else:
            fp += 1
        out.append((tp, fp))
    return out


def _interpolated(counts: list[tuple[int, int]], total_gt: int) -> list[float]:
    if total_gt == 0:
        return [0.0] * (RECALL_STEPS + 1)
    # running max from the tail gives max precision over recall >= r
    envelope = [0.0] * len(counts)
    best = 0.0
    for k in range(len(counts) - 1, -1, -1):
        tp, fp = counts[k]
        best = max(best, tp / (tp + fp))
        envelope[k] = best
    interp = []
    k = 0
    for i in range(RECALL_STEPS + 1):
        # recall tp/total_gt >= i/100, compared in integers to avoid rounding
        while k < len(counts) and counts[k][0] * RECALL_STEPS < i * total_gt:
            k += 1
        interp.append(envelope[k] if k < len(counts) else 0.0)
    return interp


def average_precision(m: MatchResult, total_gt: int | None = None) -> float:
    if total_gt is None:
        total_gt = m.total_gt
    if total_gt == 0:
        warnings.warn("no ground truth boxes; AP defined as 0", stacklevel=2)
        return 0.0
    return sum(_interpolated(_ranked_counts(m), total_gt)) / (RECALL_STEPS + 1)


def pr_curve(
    detections: DetectionIndex, gts: GroundTruthIndex, iou_thr: float
) -> PRCurve:
    m = match_detections(detections, gts, iou_thr)
    counts = _ranked_counts(m)
    total = m.total_gt
    points = [(tp / total if total else 0.0, tp / (tp + fp)) for tp, fp in counts]
    return PRCurve(points, _interpolated(counts, total))


def ap_report(detections: DetectionIndex, gts: GroundTruthIndex) -> ApReport:
    aps = {}
    for thr in AP_RANGE_THRESHOLDS:
        aps[thr] = average_precision(match_detections(detections, gts, thr))
    return ApReport(
        ap50=aps[0.5],
        ap75=aps[0.75],
        ap_range=sum(aps.values()) / len(aps),
    )


def filter_by_score(detections: DetectionIndex, score_thr: float) -> dict[str, list[Detection]]:
    return {
        k: [d for d in v if d.confidence >= score_thr] for k, v in detections.items()
    }
