import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from snowaug.core import save_png


def make_image(rng, width, height):
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def write_yolo_item(root, name, image, lines):
    """One image + its YOLO label file; returns the image path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    img_path = root / f"{name}.png"
    save_png(img_path, image)
    (root / f"{name}.txt").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    return img_path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def yolo_dataset(tmp_path, rng):
    """Three small annotated images in YOLO layout."""
    root = tmp_path / "data"
    boxes = {
        "img_a": ["0 0.5 0.5 0.2 0.2"],
        "img_b": ["0 0.25 0.25 0.1 0.1", "1 0.75 0.75 0.2 0.3"],
        "img_c": [],
    }
    for name, lines in boxes.items():
        write_yolo_item(root, name, make_image(rng, 64, 48), lines)
    return root
