"""Dataset ingestion, annotation-preserving resize, and the mixed
original/synthetic training-set writer.

Two annotation formats are supported:

- ``yolo``: one ``<stem>.txt`` next to each image, lines of
  ``class_id cx cy w h`` with normalized floats;
- ``jsonl``: a single ``annotations.jsonl`` in the dataset root, one object
  per line with keys image, width, height, boxes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .core import (BoundingBox, clamp_box, derive_item_seed, ensure_dir,
                   image_size, item_rng, load_image, resize_bilinear, save_png)
from .errors import (AnnotationParseError, ConfigError, DegenerateBoxError,
                     MissingAnnotationError)
from .snow import SnowConfig, synthesize_snow

log = logging.getLogger(__name__)

MANIFEST_SCHEMA_VERSION = 1
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
FORMATS = ("yolo", "jsonl")


@dataclass
class DatasetItem:
    """One annotated image."""

    image_path: Path
    width: int
    height: int
    boxes: list[BoundingBox] = field(default_factory=list)


@dataclass(frozen=True)
class MixPolicy:
    """Per-image Bernoulli choice between the original and the snow branch."""

    p_synthetic: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_synthetic <= 1.0:
            raise ConfigError(f"p_synthetic must be in [0, 1], got {self.p_synthetic}")


@dataclass
class Manifest:
    """Reproducibility ledger for a mix/generate run."""

    schema_version: int
    config_digest: str
    records: list[dict]

    @property
    def n_original(self) -> int:
        return sum(1 for r in self.records if r["branch"] == "original")

    @property
    def n_synthetic(self) -> int:
        return sum(1 for r in self.records if r["branch"] == "synthetic")

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r["branch"] == "error")

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": self.schema_version,
                "config_digest": self.config_digest,
                "records": self.records,
            },
            indent=2,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Manifest":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(doc["schema_version"], doc["config_digest"], doc["records"])


def config_digest(snow: SnowConfig, policy: MixPolicy) -> str:
    """Stable hash of the canonicalized run configuration."""
    doc = {"snow": asdict(snow), "mix": asdict(policy)}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_yolo_line(line: str, path, line_no: int, width: int,
                    height: int) -> BoundingBox:
    """``class_id cx cy w h`` (normalized center format) -> pixel corner box."""
    parts = line.split()
    if len(parts) != 5:
        raise AnnotationParseError(path, line_no, f"expected 5 fields, got {len(parts)}")
    try:
        class_id = int(parts[0])
        cx, cy, w, h = (float(p) for p in parts[1:])
    except ValueError as exc:
        raise AnnotationParseError(path, line_no, str(exc)) from None
    if w <= 0 or h <= 0:
        raise DegenerateBoxError(f"{path}:{line_no}: non-positive box extent")
    return BoundingBox(
        (cx - w / 2) * width, (cy - h / 2) * height,
        (cx + w / 2) * width, (cy + h / 2) * height,
        class_id,
    )


def format_yolo_line(box: BoundingBox, width: int, height: int) -> str:
    cx = (box.x_min + box.x_max) / 2 / width
    cy = (box.y_min + box.y_max) / 2 / height
    w = (box.x_max - box.x_min) / width
    h = (box.y_max - box.y_min) / height
    return f"{box.class_id} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}"


def _clamp_boxes(raw_boxes, width, height, origin):
    boxes, dropped = [], 0
    for box in raw_boxes:
        try:
            boxes.append(clamp_box(box, width, height))
        except DegenerateBoxError:
            dropped += 1
    if dropped:
        log.warning("%s: dropped %d zero-area box(es)", origin, dropped)
    return boxes


def _load_yolo(root: Path) -> list[DatasetItem]:
    image_paths = sorted(
        (p for p in root.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.as_posix(),
    )
    items = []
    for img_path in image_paths:
        label_path = img_path.with_suffix(".txt")
        if not label_path.exists():
            raise MissingAnnotationError(f"no label file for image {img_path}")
        width, height = image_size(img_path)
        raw = []
        for line_no, line in enumerate(
            label_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                raw.append(parse_yolo_line(line, label_path, line_no, width, height))
            except DegenerateBoxError:
                raw.append(None)
        boxes = _clamp_boxes([b for b in raw if b is not None], width, height, img_path)
        if any(b is None for b in raw):
            log.warning("%s: skipped degenerate source box(es)", label_path)
        items.append(DatasetItem(img_path, width, height, boxes))
    return items


def _load_jsonl(root: Path) -> list[DatasetItem]:
    index = root / "annotations.jsonl"
    if not index.exists():
        raise MissingAnnotationError(f"no annotations.jsonl under {root}")
    items = []
    for line_no, line in enumerate(
        index.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            width, height = int(doc["width"]), int(doc["height"])
            raw = [
                BoundingBox(b["x_min"], b["y_min"], b["x_max"], b["y_max"],
                            int(b.get("class_id", 0)))
                for b in doc["boxes"]
            ]
            img_path = root / doc["image"]
        except (KeyError, ValueError, TypeError, DegenerateBoxError) as exc:
            raise AnnotationParseError(index, line_no, str(exc)) from None
        boxes = _clamp_boxes(raw, width, height, img_path)
        items.append(DatasetItem(img_path, width, height, boxes))
    items.sort(key=lambda it: it.image_path.as_posix())
    return items


def load_dataset(root, fmt: str = "yolo") -> list[DatasetItem]:
    """Load an annotated dataset, sorted lexicographically by image path.

    The stable ordering is what per-item seed derivation keys on.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    if fmt == "yolo":
        return _load_yolo(root)
    if fmt == "jsonl":
        return _load_jsonl(root)
    raise ConfigError(f"unknown dataset format {fmt!r}; expected one of {FORMATS}")


def resize_with_annotations(item: DatasetItem, image, target):
    """Bilinear resize plus box re-scaling; boxes that collapse below one
    pixel raise DegenerateBoxError."""
    tw, th = target
    resized = resize_bilinear(image, (tw, th))
    sx, sy = tw / item.width, th / item.height
    boxes = []
    for box in item.boxes:
        scaled = box.scaled(sx, sy)
        if scaled.x_max - scaled.x_min < 1.0 or scaled.y_max - scaled.y_min < 1.0:
            raise DegenerateBoxError(
                f"box {box} collapses below 1 px at target size {target}"
            )
        boxes.append(clamp_box(scaled, tw, th))
    return resized, boxes


def write_dataset(items: list[DatasetItem], out, fmt: str = "yolo") -> int:
    """Write images (copied) and labels to ``out``; returns items written."""
    out = ensure_dir(out)
    if fmt == "yolo":
        for item in items:
            dst = out / item.image_path.name
            shutil.copyfile(item.image_path, dst)
            lines = [format_yolo_line(b, item.width, item.height) for b in item.boxes]
            dst.with_suffix(".txt").write_text(
                "".join(line + "\n" for line in lines), encoding="utf-8"
            )
    elif fmt == "jsonl":
        records = []
        for item in items:
            shutil.copyfile(item.image_path, out / item.image_path.name)
            records.append(json.dumps({
                "image": item.image_path.name,
                "width": item.width,
                "height": item.height,
                "boxes": [
                    {"x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max,
                     "y_max": b.y_max, "class_id": b.class_id}
                    for b in item.boxes
                ],
            }))
        (out / "annotations.jsonl").write_text(
            "".join(r + "\n" for r in records), encoding="utf-8"
        )
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}; expected one of {FORMATS}")
    return len(items)


def _emit_labels(item: DatasetItem, out_image_name: str, out: Path, fmt: str):
    if fmt == "yolo":
        src_label = item.image_path.with_suffix(".txt")
        dst_label = (out / out_image_name).with_suffix(".txt")
        if src_label.exists():
            shutil.copyfile(src_label, dst_label)
        else:
            lines = [format_yolo_line(b, item.width, item.height) for b in item.boxes]
            dst_label.write_text(
                "".join(line + "\n" for line in lines), encoding="utf-8"
            )


def _process_item(index, item, snow, policy, out, fmt, force_synthetic):
    record = {
        "index": index,
        "source": str(item.image_path),
        "item_seed": None,
        "branch": None,
        "output": None,
    }
    try:
        if force_synthetic:
            synthetic = True
        else:
            branch_rng = item_rng(policy.seed, index)
            synthetic = bool(branch_rng.random() < policy.p_synthetic)
        if synthetic:
            record["item_seed"] = derive_item_seed(snow.seed, index)
            image = load_image(item.image_path)
            rendered = synthesize_snow(image, snow, item_rng(snow.seed, index))
            out_name = item.image_path.stem + ".png"
            save_png(out / out_name, rendered)
            record["branch"] = "synthetic"
        else:
            record["item_seed"] = derive_item_seed(policy.seed, index)
            out_name = item.image_path.name
            shutil.copyfile(item.image_path, out / out_name)
            record["branch"] = "original"
        record["output"] = str(out / out_name)
        _emit_labels(item, out_name, out, fmt)
    except Exception as exc:  # long dataset jobs keep going; error is ledgered
        log.error("item %d (%s) failed: %s", index, item.image_path, exc)
        record["branch"] = "error"
        record["error"] = str(exc)
    return record


def mix_datasets(items: list[DatasetItem], snow: SnowConfig, policy: MixPolicy,
                 out, fmt: str = "yolo", workers: int = 1,
                 force_synthetic: bool = False) -> Manifest:
    """Write the mixed original/synthetic dataset and its manifest.

    Each item's branch choice and snow stream come from seeds derived from
    its index in the (sorted) item list, so the manifest is a pure function
    of (items, snow, policy) and independent of the worker count.
    """
    out = ensure_dir(out)
    digest = config_digest(snow, policy)
    if workers <= 1:
        records = [
            _process_item(i, item, snow, policy, out, fmt, force_synthetic)
            for i, item in enumerate(items)
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda pair: _process_item(pair[0], pair[1], snow, policy, out,
                                           fmt, force_synthetic),
                enumerate(items),
            ))
    if fmt == "jsonl":
        lines = []
        for item, record in zip(items, records):
            if record["branch"] == "error":
                continue
            lines.append(json.dumps({
                "image": Path(record["output"]).name,
                "width": item.width,
                "height": item.height,
                "boxes": [
                    {"x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max,
                     "y_max": b.y_max, "class_id": b.class_id}
                    for b in item.boxes
                ],
            }))
        (out / "annotations.jsonl").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    manifest = Manifest(MANIFEST_SCHEMA_VERSION, digest, records)
    manifest.save(out / "manifest.json")
    return manifest
