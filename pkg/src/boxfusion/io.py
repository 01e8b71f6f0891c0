"""Reading and writing prediction, ground-truth, metrics and PR-curve files.

Two record formats are understood, picked by ``fmt`` or by file extension:

* CSV: ``image_id,xmin,ymin,xmax,ymax,score[,label]`` for predictions and
  ``image_id,xmin,ymin,xmax,ymax[,label]`` for ground truth.  Lines starting
  with ``#`` are comments/headers; a first line starting with ``image_id`` is
  treated as a header too.
* JSON lines: one object per line with keys ``image_id``, ``xmin``, ``ymin``,
  ``xmax``, ``ymax``, ``score`` and optionally ``label``.

Numbers are written with 9 significant digits.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .evaluation import ApReport, GroundTruthBox, Metrics, PRCurve
from .fusion import Detection, FusedBox
from .geometry import Box

CSV_FORMAT = "csv"
JSONL_FORMAT = "jsonl"
FORMATS = (CSV_FORMAT, JSONL_FORMAT)

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_COORDS = ("xmin", "ymin", "xmax", "ymax")


class FormatError(ValueError):
    """A malformed record; the message names the file, line and field."""

    def __init__(self, path: str | Path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


# image_id -> one detection list per model
PredictionIndex = dict[str, list[list[Detection]]]
GroundTruthIndex = dict[str, list[GroundTruthBox]]


def fmt_float(x: float) -> str:
    return format(x, ".9g")


def resolve_format(path: str | Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return JSONL_FORMAT
    return CSV_FORMAT


def _parse_number(text: str, path: Path, line: int, name: str) -> float:
    t = text.strip()
    if not _NUMBER.fullmatch(t):
        raise FormatError(path, line, f"field {name!r}: not a decimal number: {text!r}")
    return float(t)


@dataclass
class _Record:
    line: int
    image_id: str
    coords: tuple[float, float, float, float]
    score: float | None
    label: str | None


def _records(path: Path, fmt: str, with_score: bool) -> Iterator[_Record]:
    names = _COORDS + (("score",) if with_score else ())
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if fmt == CSV_FORMAT:
            parts = [p.strip() for p in s.split(",")]
            if lineno == 1 and parts[0].lower() == "image_id":
                continue
            if len(parts) not in (len(names) + 1, len(names) + 2):
                raise FormatError(
                    path, lineno,
                    f"expected {len(names) + 1} or {len(names) + 2} fields, got {len(parts)}",
                )
            image_id = parts[0]
            values = [_parse_number(v, path, lineno, n) for v, n in zip(parts[1:], names)]
            label = parts[len(names) + 1] if len(parts) == len(names) + 2 else None
        else:
            try:
                obj = json.loads(s)
            except json.JSONDecodeError as exc:
                raise FormatError(path, lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise FormatError(path, lineno, "expected a JSON object")
            values = []
            for n in ("image_id",) + names:
                if n not in obj:
                    raise FormatError(path, lineno, f"missing field {n!r}")
            for n in names:
                v = obj[n]
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise FormatError(path, lineno, f"field {n!r}: not a number: {v!r}")
                values.append(float(v))
            image_id = str(obj["image_id"])
            label = None if obj.get("label") is None else str(obj["label"])
        if not image_id:
            raise FormatError(path, lineno, "field 'image_id': empty")
        for v, n in zip(values, names):
            if not math.isfinite(v):
                raise FormatError(path, lineno, f"field {n!r}: not finite")
        xmin, ymin, xmax, ymax = values[:4]
        if xmin > xmax:
            raise FormatError(path, lineno, f"field 'xmin': xmin {xmin} > xmax {xmax}")
        if ymin > ymax:
            raise FormatError(path, lineno, f"field 'ymin': ymin {ymin} > ymax {ymax}")
        score = values[4] if with_score else None
        yield _Record(lineno, image_id, (xmin, ymin, xmax, ymax), score, label)


def load_predictions(
    paths: Sequence[str | Path], fmt: str | None = None, *, max_score: float | None = 1.0
) -> PredictionIndex:
    """Load one prediction file per model.

    ``model_id`` is the position of the file in ``paths``; ``source_order``
    is the record's position within its file.  Every image in the result
    has exactly ``len(paths)`` lists, possibly empty.  ``max_score=None``
    accepts fused outputs whose rescaled confidence exceeds 1.
    """
    index: PredictionIndex = {}
    n_models = len(paths)
    for model_id, p in enumerate(paths):
        path = Path(p)
        f = resolve_format(path, fmt)
        for order, rec in enumerate(_records(path, f, with_score=True)):
            assert rec.score is not None
            if rec.score < 0 or (max_score is not None and rec.score > max_score):
                raise FormatError(path, rec.line, f"field 'score': {rec.score} outside [0, 1]")
            det = Detection(
                Box(*rec.coords), rec.score, model_id=model_id, source_order=order,
                image_id=rec.image_id, label=rec.label,
            )
            index.setdefault(rec.image_id, [[] for _ in range(n_models)])[model_id].append(det)
    return index


def load_ground_truth(path: str | Path, fmt: str | None = None) -> GroundTruthIndex:
    path = Path(path)
    f = resolve_format(path, fmt)
    index: GroundTruthIndex = {}
    seen: set[tuple] = set()
    for rec in _records(path, f, with_score=False):
        key = (rec.image_id, rec.coords, rec.label)
        if key in seen:
            warnings.warn(f"{path}:{rec.line}: duplicate ground truth box", stacklevel=2)
        seen.add(key)
        index.setdefault(rec.image_id, []).append(
            GroundTruthBox(Box(*rec.coords), rec.image_id, rec.label)
        )
    return index


def _record_line(fmt: str, image_id: str, box: Box, score: float, label: str | None) -> str:
    coords = [fmt_float(c) for c in box.as_tuple()]
    if fmt == CSV_FORMAT:
        fields = [image_id, *coords, fmt_float(score)]
        if label is not None:
            fields.append(label)
        return ",".join(fields)
    obj: dict = {"image_id": image_id}
    for name, c in zip(_COORDS, coords):
        obj[name] = float(c)
    obj["score"] = float(fmt_float(score))
    if label is not None:
        obj["label"] = label
    return json.dumps(obj)


def write_fused(
    fused: Mapping[str, Sequence[FusedBox | Detection]],
    path: str | Path,
    fmt: str | None = None,
) -> None:
    """Write fused (or kept) boxes in the prediction format, images sorted by id."""
    path = Path(path)
    f = resolve_format(path, fmt)
    any_label = any(getattr(b, "label", None) is not None for v in fused.values() for b in v)
    lines = []
    if f == CSV_FORMAT:
        lines.append("# image_id,xmin,ymin,xmax,ymax,score" + (",label" if any_label else ""))
    for image_id in sorted(fused):
        for b in fused[image_id]:
            lines.append(
                _record_line(f, image_id, b.box, b.confidence, getattr(b, "label", None))
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_fused(path: str | Path, fmt: str | None = None) -> dict[str, list[Detection]]:
    return {
        k: v[0] for k, v in load_predictions([path], fmt, max_score=None).items()
    }


def write_metrics(metrics: Metrics, report: ApReport, path: str | Path) -> None:
    obj = {
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "ap50": report.ap50,
        "ap75": report.ap75,
        "ap": report.ap_range,
    }
    obj = {k: float(fmt_float(v)) for k, v in obj.items()}
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def read_metrics(path: str | Path) -> tuple[Metrics, ApReport]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return (
        Metrics(obj["precision"], obj["recall"], obj["f1"]),
        ApReport(obj["ap50"], obj["ap75"], obj["ap"]),
    )


def write_pr_curve(curve: PRCurve, path: str | Path) -> None:
    lines = ["# recall,precision"]
    lines += [f"{fmt_float(r)},{fmt_float(p)}" for r, p in curve.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pr_curve(path: str | Path) -> list[tuple[float, float]]:
    path = Path(path)
    points = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split(",")
        if len(parts) != 2:
            raise FormatError(path, lineno, f"expected 2 fields, got {len(parts)}")
        points.append((
            _parse_number(parts[0], path, lineno, "recall"),
            _parse_number(parts[1], path, lineno, "precision"),
        ))
    return points
