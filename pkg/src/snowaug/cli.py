"""Command-line interface.

Subcommands: generate, mix, eval, import-bosch, inspect.
Exit codes: 0 success, 1 partial failure (some items errored), 2 bad
config/arguments/input.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from collections import Counter
from pathlib import Path

import yaml

from . import dataset as ds
from .config import load_run_config
from .evaluate import evaluate as evaluate_images
from .evaluate import load_predictions
from .core import ensure_dir, image_size
from .errors import SnowaugError

log = logging.getLogger("snowaug")


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed; all randomness derives from it")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads for item-level parallelism")
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML config file; flags override file values")
    parser.add_argument("--format", choices=ds.FORMATS, default=None,
                        help="annotation format (default yolo)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snowaug",
        description="Synthetic snow augmentation and detection evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize snow for every image")
    _add_common(p)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)

    p = sub.add_parser("mix", help="emit a mixed original/synthetic dataset")
    _add_common(p)
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--p-synthetic", type=float, default=None,
                   help="probability of the synthetic branch (default 0.5)")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    _add_common(p)
    p.add_argument("gt", type=Path, help="ground-truth dataset root")
    p.add_argument("pred", type=Path, help="directory of per-image prediction files")
    p.add_argument("--pred-format", choices=("txt", "jsonl"), default="txt")
    p.add_argument("--pred-normalized", action="store_true",
                   help="prediction boxes are YOLO-normalized center format")
    p.add_argument("--report", type=Path, default=None,
                   help="also write the report as JSON to this path")

    p = sub.add_parser("import-bosch",
                       help="convert a Bosch-style YAML index to the YOLO layout")
    p.add_argument("yaml_index", type=Path)
    p.add_argument("output", type=Path)

    p = sub.add_parser("inspect", help="print dataset statistics")
    _add_common(p)
    p.add_argument("input", type=Path)
    return parser


def _load_items_or_die(root: Path, fmt: str):
    if not root.is_dir():
        raise SnowaugError(f"input directory {root} does not exist or is unreadable")
    return ds.load_dataset(root, fmt)


def _run_pipeline(args, force_synthetic: bool) -> int:
    p_synth = getattr(args, "p_synthetic", None)
    run = load_run_config(args.config, seed=args.seed, workers=args.workers,
                          fmt=args.format, p_synthetic=p_synth)
    items = _load_items_or_die(args.input, run.fmt)
    manifest = ds.mix_datasets(items, run.snow, run.mix, args.output,
                               fmt=run.fmt, workers=run.workers,
                               force_synthetic=force_synthetic)
    print(f"{manifest.n_original} original, {manifest.n_synthetic} synthetic, "
          f"{manifest.n_failed} failed")
    if manifest.n_failed:
        for record in manifest.records:
            if record["branch"] == "error":
                print(f"  failed: {record['source']}: {record['error']}",
                      file=sys.stderr)
        return 1
    return 0


def cmd_generate(args) -> int:
    return _run_pipeline(args, force_synthetic=True)


def cmd_mix(args) -> int:
    return _run_pipeline(args, force_synthetic=False)


def cmd_eval(args) -> int:
    run = load_run_config(args.config, seed=args.seed, fmt=args.format)
    items = _load_items_or_die(args.gt, run.fmt)
    stems = [item.image_path.stem for item in items]
    sizes = {item.image_path.stem: (item.width, item.height) for item in items}
    dets = load_predictions(args.pred, stems, sizes, fmt=args.pred_format,
                            normalized=args.pred_normalized)
    images = [(item.boxes, det) for item, det in zip(items, dets)]
    report = evaluate_images(images, image_names=stems)
    print(report.to_table())
    if args.report is not None:
        args.report.write_text(report.to_json() + "\n", encoding="utf-8")
    return 0


def cmd_import_bosch(args) -> int:
    """Bosch-style YAML index -> YOLO-txt layout; all light states map to
    class 0; inverted source boxes are skipped with a warning."""
    try:
        entries = yaml.safe_load(args.yaml_index.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise SnowaugError(f"cannot read YAML index {args.yaml_index}: {exc}") from None
    if not isinstance(entries, list):
        raise SnowaugError(f"{args.yaml_index}: expected a top-level list of entries")
    out = ensure_dir(args.output)
    base = args.yaml_index.parent
    failed = 0
    for entry in entries:
        try:
            src = (base / entry["path"]).resolve()
        except (TypeError, KeyError):
            raise SnowaugError(f"{args.yaml_index}: entry without a 'path' key")
        if not src.exists():
            log.warning("image %s not found, skipping", src)
            failed += 1
            continue
        width, height = image_size(src)
        shutil.copyfile(src, out / src.name)
        lines = []
        for box in entry.get("boxes") or []:
            x_min, x_max = float(box["x_min"]), float(box["x_max"])
            y_min, y_max = float(box["y_min"]), float(box["y_max"])
            if x_min >= x_max or y_min >= y_max:
                log.warning("%s: skipping degenerate box %s", src.name, box)
                continue
            cx = (x_min + x_max) / 2 / width
            cy = (y_min + y_max) / 2 / height
            lines.append(f"0 {cx:.6f} {cy:.6f} "
                         f"{(x_max - x_min) / width:.6f} {(y_max - y_min) / height:.6f}")
        (out / src.name).with_suffix(".txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    print(f"imported {len(entries) - failed} of {len(entries)} entries")
    return 1 if failed else 0


def cmd_inspect(args) -> int:
    run = load_run_config(args.config, seed=args.seed, fmt=args.format)
    items = _load_items_or_die(args.input, run.fmt)
    n_boxes = sum(len(item.boxes) for item in items)
    classes = Counter(b.class_id for item in items for b in item.boxes)
    sizes = Counter((item.width, item.height) for item in items)
    print(f"items: {len(items)}")
    print(f"boxes: {n_boxes}")
    print("classes: " + json.dumps({str(k): v for k, v in sorted(classes.items())}))
    print("sizes: " + ", ".join(f"{w}x{h} ({n})" for (w, h), n in sorted(sizes.items())))
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "mix": cmd_mix,
    "eval": cmd_eval,
    "import-bosch": cmd_import_bosch,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SnowaugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
