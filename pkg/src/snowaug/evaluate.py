"""Detector evaluation: custom penalized image-level IoU, micro-averaged
precision/recall/F1, and average precision at one or a sweep of IoU gates.

Matching rules, shared by all metrics:

- a (ground truth, prediction) pair is eligible only when class ids agree
  and its IoU is strictly greater than the gate threshold;
- matching is one-to-one, greedy on globally highest IoU first, ties broken
  by lower ground-truth index, then lower prediction index.

The geometric metrics (image IoU, P/R/F1) ignore confidences; average
precision ranks predictions by descending confidence (input order on ties).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .core import BoundingBox, Detection
from .errors import AnnotationParseError, EmptyDatasetError

log = logging.getLogger(__name__)

MAP_RANGE_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass
class MatchResult:
    pairs: list[tuple[int, int, float]]
    unmatched_gt: list[int]
    unmatched_pred: list[int]


@dataclass
class EvalReport:
    avg_iou: float
    precision: float
    recall: float
    f1: float
    map50: float
    map50_95: float
    per_image: list[dict] = field(default_factory=list)

    # Fixed row order mirrors the summary table layout.
    TABLE_ROWS = ("Average IOU", "mAP@50-95", "mAP@50", "Precision", "F1 Score")

    def table_values(self):
        return (self.avg_iou, self.map50_95, self.map50, self.precision, self.f1)

    def to_table(self) -> str:
        width = max(len(r) for r in self.TABLE_ROWS)
        lines = [
            f"{name:<{width}}  {value:.4f}"
            for name, value in zip(self.TABLE_ROWS, self.table_values())
        ]
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(
            {
                "avg_iou": self.avg_iou,
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
                "map50": self.map50,
                "map50_95": self.map50_95,
                "per_image": self.per_image,
            },
            indent=2,
        )


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def match_boxes(gt: list[BoundingBox], pred: list[BoundingBox],
                threshold: float = 0.5) -> MatchResult:
    """One-to-one greedy matching, globally highest IoU first.

    Only pairs with equal class id and IoU strictly above ``threshold`` are
    eligible. Ties on IoU go to the lower gt index, then lower pred index.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    candidates = []
    for gi, g in enumerate(gt):
        for pi, p in enumerate(pred):
            if g.class_id != p.class_id:
                continue
            iou = box_iou(g, p)
            if iou > threshold:
                candidates.append((iou, gi, pi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    pairs = []
    used_gt, used_pred = set(), set()
    for iou, gi, pi in candidates:
        if gi in used_gt or pi in used_pred:
            continue
        pairs.append((gi, pi, iou))
        used_gt.add(gi)
        used_pred.add(pi)
    unmatched_gt = [i for i in range(len(gt)) if i not in used_gt]
    unmatched_pred = [i for i in range(len(pred)) if i not in used_pred]
    return MatchResult(pairs, unmatched_gt, unmatched_pred)


def image_iou(gt: list[BoundingBox], pred: list[BoundingBox],
              threshold: float = 0.5) -> float:
    """Sum of matched IoUs over (|gt| + extra predictions).

    The denominator counts every ground-truth box plus every unmatched
    prediction, penalizing spurious detections. An image where both sets are
    empty scores 1.0 (nothing to detect, nothing detected).
    """
    if not gt and not pred:
        return 1.0
    result = match_boxes(gt, pred, threshold)
    denom = len(gt) + len(result.unmatched_pred)
    return sum(iou for _, _, iou in result.pairs) / denom


def dataset_iou(images: list[tuple[list[BoundingBox], list[BoundingBox]]],
                threshold: float = 0.5) -> float:
    """Unweighted mean of per-image IoU scores."""
    if not images:
        raise EmptyDatasetError("dataset-level IoU needs at least one image")
    return sum(image_iou(gt, pred, threshold) for gt, pred in images) / len(images)


def precision_recall_f1(images, threshold: float = 0.5):
    """Micro-averaged P/R/F1 over geometric matches; 0/0 counts as 0."""
    tp = fp = fn = 0
    for gt, pred in images:
        result = match_boxes(gt, pred, threshold)
        tp += len(result.pairs)
        fp += len(result.unmatched_pred)
        fn += len(result.unmatched_gt)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _rank_detections(images: list[tuple[list[BoundingBox], list[Detection]]]):
    ranked = []
    for img_idx, (_, dets) in enumerate(images):
        for det_idx, det in enumerate(dets):
            ranked.append((img_idx, det_idx, det))
    # Stable sort keeps input order among equal confidences.
    ranked.sort(key=lambda r: -r[2].confidence)
    return ranked


def average_precision(images: list[tuple[list[BoundingBox], list[Detection]]],
                      iou_threshold: float = 0.5) -> float:
    """Area under the all-points-interpolated precision-recall curve.

    Detections are ranked by descending confidence and assigned TP/FP
    greedily per image: a detection is a TP when its best-IoU not-yet-matched
    same-class ground truth clears the (strict) gate. Interpolation uses the
    precision envelope (max precision at any recall >= r).
    """
    n_gt = sum(len(gt) for gt, _ in images)
    ranked = _rank_detections(images)
    if n_gt == 0 or not ranked:
        return 0.0
    matched = [set() for _ in images]
    tps = []
    for img_idx, _, det in ranked:
        gt = images[img_idx][0]
        best_iou, best_gi = 0.0, -1
        for gi, g in enumerate(gt):
            if gi in matched[img_idx] or g.class_id != det.box.class_id:
                continue
            iou = box_iou(g, det.box)
            if iou > best_iou:
                best_iou, best_gi = iou, gi
        if best_gi >= 0 and best_iou > iou_threshold:
            matched[img_idx].add(best_gi)
            tps.append(1)
        else:
            tps.append(0)
    recalls, precisions = [], []
    tp_cum = 0
    for rank, is_tp in enumerate(tps, start=1):
        tp_cum += is_tp
        recalls.append(tp_cum / n_gt)
        precisions.append(tp_cum / rank)
    # Precision envelope, then sum over recall increments.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for recall, precision in zip(recalls, precisions):
        if recall > prev_recall:
            ap += (recall - prev_recall) * precision
            prev_recall = recall
    return ap


def map_range(images, thresholds=MAP_RANGE_THRESHOLDS) -> float:
    """Mean average precision across a sweep of IoU gates."""
    if not thresholds:
        raise ValueError("need at least one threshold")
    return sum(average_precision(images, t) for t in thresholds) / len(thresholds)


def evaluate(images: list[tuple[list[BoundingBox], list[Detection]]],
             threshold: float = 0.5,
             image_names: list[str] | None = None) -> EvalReport:
    """Full report over (ground truth, detections) pairs, one per image."""
    geom = [(gt, [d.box for d in dets]) for gt, dets in images]
    per_image = []
    for idx, (gt, pred) in enumerate(geom):
        name = image_names[idx] if image_names else str(idx)
        per_image.append({
            "image": name,
            "n_gt": len(gt),
            "n_pred": len(pred),
            "image_iou": image_iou(gt, pred, threshold),
        })
    precision, recall, f1 = precision_recall_f1(geom, threshold)
    return EvalReport(
        avg_iou=dataset_iou(geom, threshold),
        precision=precision,
        recall=recall,
        f1=f1,
        map50=average_precision(images, 0.5),
        map50_95=map_range(images),
        per_image=per_image,
    )


def parse_prediction_line(line: str, path, line_no: int, width: int, height: int,
                          normalized: bool = False) -> Detection:
    """``class_id confidence x_min y_min x_max y_max`` in absolute pixels, or
    ``class_id confidence cx cy w h`` normalized when ``normalized`` is set."""
    parts = line.split()
    if len(parts) != 6:
        raise AnnotationParseError(path, line_no, f"expected 6 fields, got {len(parts)}")
    try:
        class_id = int(parts[0])
        confidence = float(parts[1])
        vals = [float(p) for p in parts[2:]]
    except ValueError as exc:
        raise AnnotationParseError(path, line_no, str(exc)) from None
    if not 0.0 <= confidence <= 1.0:
        raise AnnotationParseError(path, line_no, f"confidence {confidence} not in [0, 1]")
    if normalized:
        cx, cy, w, h = vals
        box = (
            (cx - w / 2) * width, (cy - h / 2) * height,
            (cx + w / 2) * width, (cy + h / 2) * height,
        )
    else:
        box = tuple(vals)
    if box[0] >= box[2] or box[1] >= box[3]:
        raise AnnotationParseError(path, line_no, f"degenerate box {box}")
    return Detection(BoundingBox(*box, class_id), confidence)


def load_predictions(pred_dir, stems: list[str], sizes: dict[str, tuple[int, int]],
                     fmt: str = "txt", normalized: bool = False):
    """Per-image detections for every stem; a missing file means no
    predictions for that image."""
    pred_dir = Path(pred_dir)
    if fmt == "jsonl":
        index = pred_dir / "predictions.jsonl"
        by_stem: dict[str, list[Detection]] = {}
        if index.exists():
            for line_no, line in enumerate(
                index.read_text(encoding="utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    stem = Path(doc["image"]).stem
                    dets = [
                        Detection(
                            BoundingBox(d["x_min"], d["y_min"], d["x_max"],
                                        d["y_max"], int(d.get("class_id", 0))),
                            float(d["confidence"]),
                        )
                        for d in doc["detections"]
                    ]
                except (KeyError, ValueError, TypeError) as exc:
                    raise AnnotationParseError(index, line_no, str(exc)) from None
                by_stem[stem] = dets
        return [by_stem.get(stem, []) for stem in stems]
    if fmt != "txt":
        raise ValueError(f"unknown prediction format {fmt!r}")
    result = []
    for stem in stems:
        path = pred_dir / f"{stem}.txt"
        if not path.exists():
            result.append([])
            continue
        width, height = sizes[stem]
        dets = []
        for line_no, line in enumerate(
            path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            dets.append(
                parse_prediction_line(line, path, line_no, width, height, normalized)
            )
        result.append(dets)
    return result
