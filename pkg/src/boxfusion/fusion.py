"""Weighted boxes fusion with NMS and soft-NMS baselines.

WBF keeps two parallel lists while walking the confidence-sorted input:
``clusters`` (every detection assigned so far, grouped) and ``fused`` (one
averaged box per cluster).  A detection joins the first fused box it
overlaps by more than ``thr``; the fused box is recomputed right away so
later detections are matched against the updated average.  Confidences are
rescaled by ``T / N`` once the walk is done.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .geometry import Box, iou

DEFAULT_WBF_THR = 0.7
DEFAULT_SCORE_FLOOR = 0.001


class DegenerateClusterError(ValueError):
    """Raised when every member of a cluster has zero confidence."""


@dataclass(frozen=True)
class Detection:
    box: Box
    confidence: float
    model_id: int = 0
    source_order: int = 0
    image_id: str = ""
    label: str | None = None


@dataclass
class Cluster:
    members: list[Detection] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class FusedBox:
    box: Box
    confidence: float
    cluster_size: int


@dataclass(frozen=True)
class FusionConfig:
    thr: float = DEFAULT_WBF_THR
    model_count: int = 1
    clamp_confidence: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.thr < 1.0:
            raise ValueError(f"thr must lie in (0, 1), got {self.thr}")
        if self.model_count < 1:
            raise ValueError(f"model_count must be >= 1, got {self.model_count}")


def rank_key(d: Detection) -> tuple[float, int, int]:
    """Sort key: confidence descending, then model_id, then source_order."""
    return (-d.confidence, d.model_id, d.source_order)


def fuse_cluster(cluster: Cluster) -> FusedBox:
    members = cluster.members
    if not members:
        raise ValueError("cannot fuse an empty cluster")
    total = sum(d.confidence for d in members)
    if total <= 0:
        raise DegenerateClusterError(
            f"cluster of {len(members)} boxes has zero total confidence"
        )
    coords = [
        sum(d.confidence * c for d, c in zip(members, col)) / total
        for col in zip(*(d.box.as_tuple() for d in members))
    ]
    # weighted means can drift outside the member envelope by an ulp
    for i, col in enumerate(zip(*(d.box.as_tuple() for d in members))):
        coords[i] = min(max(coords[i], min(col)), max(col))
    return FusedBox(Box(*coords), total / len(members), len(members))


def rescale_confidence(fused: FusedBox, config: FusionConfig) -> FusedBox:
    c = fused.confidence * fused.cluster_size / config.model_count
    if config.clamp_confidence:
        c = min(c, 1.0)
    return replace(fused, confidence=c)


def wbf_clusters(
    per_model_detections: Sequence[Sequence[Detection]], config: FusionConfig
) -> tuple[list[Cluster], list[FusedBox]]:
    """Run WBF and return both the cluster list and the rescaled fused list.

    ``clusters[i]`` holds the detections that produced ``fused[i]``.
    """
    if len(per_model_detections) != config.model_count:
        raise ValueError(
            f"got {len(per_model_detections)} model lists but model_count is "
            f"{config.model_count}"
        )
    ranked: list[Detection] = []
    for dets in per_model_detections:
        for d in dets:
            if not 0 <= d.model_id < config.model_count:
                raise ValueError(
                    f"detection model_id {d.model_id} outside [0, {config.model_count})"
                )
            ranked.append(d)
    ranked.sort(key=rank_key)

    clusters: list[Cluster] = []
    fused: list[FusedBox] = []
    for det in ranked:
        for i, f in enumerate(fused):
            if iou(f.box, det.box) > config.thr:
                clusters[i].members.append(det)
                fused[i] = fuse_cluster(clusters[i])
                break
        else:
            cluster = Cluster([det])
            clusters.append(cluster)
            fused.append(fuse_cluster(cluster))

    return clusters, [rescale_confidence(f, config) for f in fused]


def weighted_boxes_fusion(
    per_model_detections: Sequence[Sequence[Detection]], config: FusionConfig
) -> list[FusedBox]:
    return wbf_clusters(per_model_detections, config)[1]


def nms(detections: Sequence[Detection], iou_thr: float) -> list[Detection]:
    remaining = sorted(detections, key=rank_key)
    kept: list[Detection] = []
    while remaining:
        top = remaining.pop(0)
        kept.append(top)
        remaining = [d for d in remaining if iou(top.box, d.box) <= iou_thr]
    return kept


def soft_nms(
    detections: Sequence[Detection],
    iou_thr: float,
    score_floor: float = DEFAULT_SCORE_FLOOR,
) -> list[Detection]:
    """Linear soft-NMS.

    Boxes overlapping a selected box by more than ``iou_thr`` have their
    confidence multiplied by ``1 - IoU``; any box whose confidence falls
    below ``score_floor`` is dropped.  Returned detections carry the decayed
    confidence and come out in selection order.
    """
    pool = [d for d in detections if d.confidence >= score_floor]
    kept: list[Detection] = []
    while pool:
        pool.sort(key=rank_key)
        top = pool.pop(0)
        kept.append(top)
        decayed = []
        for d in pool:
            o = iou(top.box, d.box)
            if o > iou_thr:
                d = replace(d, confidence=d.confidence * (1.0 - o))
            if d.confidence >= score_floor:
                decayed.append(d)
        pool = decayed
    return kept
