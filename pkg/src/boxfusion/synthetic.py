"""Seeded synthetic ground truth and two-detector predictions.

Used for demos, the threshold sweep and tests.  Each simulated detector
sees every ground-truth ship with some probability and emits a jittered box
for it; sometimes it also emits a second, badly localised box on the same
ship at lower confidence, and a few background false alarms per image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import GroundTruthBox
from .fusion import Detection
from .geometry import Box


@dataclass(frozen=True)
class DetectorProfile:
    recall: float = 0.9
    jitter: float = 0.06  # std of corner noise, as a fraction of box size
    duplicate_rate: float = 0.5
    duplicate_jitter: float = 0.2
    false_alarms: float = 0.5  # mean background boxes per image


def synthetic_scene(
    n_images: int = 100,
    seed: int = 0,
    profiles: tuple[DetectorProfile, ...] = (DetectorProfile(), DetectorProfile()),
    canvas: float = 512.0,
    max_ships: int = 4,
) -> tuple[dict[str, list[GroundTruthBox]], dict[str, list[list[Detection]]]]:
    """Return ``(ground_truth_index, prediction_index)`` keyed by image id."""
    rng = np.random.default_rng(seed)
    gts: dict[str, list[GroundTruthBox]] = {}
    preds: dict[str, list[list[Detection]]] = {}
    for i in range(n_images):
        image_id = f"img{i:04d}"
        ships = []
        for _ in range(int(rng.integers(1, max_ships + 1))):
            w, h = rng.uniform(20, 80, size=2)
            x, y = rng.uniform(0, canvas - 80, size=2)
            ships.append(Box(x, y, x + w, y + h))
        gts[image_id] = [GroundTruthBox(b, image_id) for b in ships]

        per_model: list[list[Detection]] = []
        for model_id, prof in enumerate(profiles):
            dets: list[Detection] = []

            def emit(box: Box, conf: float) -> None:
                dets.append(Detection(box, float(conf), model_id, len(dets), image_id))

            for b in ships:
                if rng.random() < prof.recall:
                    emit(_jitter(b, prof.jitter, rng), rng.uniform(0.5, 1.0))
                if rng.random() < prof.duplicate_rate:
                    emit(_jitter(b, prof.duplicate_jitter, rng), rng.uniform(0.1, 0.6))
            for _ in range(int(rng.poisson(prof.false_alarms))):
                w, h = rng.uniform(20, 80, size=2)
                x, y = rng.uniform(0, canvas - 80, size=2)
                emit(Box(x, y, x + w, y + h), rng.uniform(0.05, 0.5))
            per_model.append(dets)
        preds[image_id] = per_model
    return gts, preds


def _jitter(b: Box, scale: float, rng: np.random.Generator) -> Box:
    w, h = b.xmax - b.xmin, b.ymax - b.ymin
    dx0, dx1 = rng.normal(0, scale * w, size=2)
    dy0, dy1 = rng.normal(0, scale * h, size=2)
    x0, x1 = sorted((b.xmin + dx0, b.xmax + dx1))
    y0, y1 = sorted((b.ymin + dy0, b.ymax + dy1))
    return Box(float(x0), float(y0), float(x1), float(y1))
