"""Acceptance gate: one test per criterion, each prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
summary lines as they pass.
"""

import math
import shutil
import time

import numpy as np
import pytest

from conftest import make_image, write_yolo_item
from oracles import (image_iou_reference, prf_reference, reflect_index)
from snowaug import kernels
from snowaug.core import BoundingBox, Detection, item_rng, save_png
from snowaug.dataset import MixPolicy, load_dataset, mix_datasets, write_dataset
from snowaug.evaluate import (average_precision, dataset_iou, image_iou,
                              map_range, precision_recall_f1)
from snowaug.snow import (SnowConfig, blend_layer, build_gaussian_kernel,
                          resize_roundtrip, synthesize_snow, threshold_field)
from test_eval import as_tuples, random_eval_cases


def report(number, name, detail=""):
    print(f"PASS criterion {number}: {name}" + (f" ({detail})" if detail else ""))


def brute_conv2d_fast(field, kernel):
    """Direct (non-separable) 2-D convolution oracle, vectorized.

    Mirror borders are realized by explicit index maps so the padding logic
    is independent of the implementation under test.
    """
    h, w = field.shape
    ry, rx = kernel.shape[0] // 2, kernel.shape[1] // 2
    row_idx = np.array([reflect_index(i - ry, h) for i in range(h + 2 * ry)])
    col_idx = np.array([reflect_index(j - rx, w) for j in range(w + 2 * rx)])
    padded = field[np.ix_(row_idx, col_idx)]
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.shape)
    return np.einsum("ijkl,kl->ij", windows, kernel)


def test_c01_convolution_oracle():
    rng = np.random.default_rng(101)
    worst = 0.0
    start = time.perf_counter()
    for case in range(50):
        field = rng.normal(size=(16, 16))
        for sigma in (0.5, 1.0, 2.0, 4.0):
            k = build_gaussian_kernel(sigma)
            got = kernels.sepconv2d_reflect(field, k.taps)
            want = brute_conv2d_fast(field, k.weights_2d)
            worst = max(worst, np.abs(got - want).max())
    elapsed = time.perf_counter() - start
    assert worst < 1e-9
    assert elapsed < 10.0
    report(1, "separable filter equals direct 2-D convolution",
           f"max abs err {worst:.2e}, {elapsed:.2f}s")


def test_c02_gaussian_ratio_fidelity():
    start = time.perf_counter()
    worst = 0.0
    for sigma in (0.5, 1.0, 2.0, 4.0):
        k = build_gaussian_kernel(sigma)
        w = k.weights_2d
        c = k.radius
        for dy in range(-c, c + 1):
            for dx in range(-c, c + 1):
                expected = math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))
                worst = max(worst, abs(w[c + dy, c + dx] / w[c, c] - expected))
    elapsed = time.perf_counter() - start
    assert worst < 1e-12
    assert elapsed < 1.0
    report(2, "kernel weight ratios match the analytic Gaussian",
           f"max ratio err {worst:.2e}")


def test_c03_blend_properties():
    rng = np.random.default_rng(103)
    start = time.perf_counter()
    pixels = rng.uniform(0, 255, size=1000)
    alphas = rng.uniform(0, 1, size=1000)
    out = blend_layer(pixels.reshape(1, -1), alphas.reshape(1, -1)).ravel()
    want = pixels * (1 - alphas) + 255.0 * alphas
    assert np.abs(out - want).max() < 1e-9

    cfg = SnowConfig(working_size=(320, 180), coverage_quantile=0.05, seed=31)
    for i in range(10):
        image = rng.integers(0, 256, size=(180, 320, 3), dtype=np.uint8)
        snowy = synthesize_snow(image, cfg, item_rng(cfg.seed, i))
        ref = resize_roundtrip(image, cfg.working_size)
        assert (snowy.astype(int) >= ref.astype(int)).all()
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(3, "blend formula exact and snow only brightens",
           f"{elapsed:.2f}s")


def test_c04_synthesis_determinism(tmp_path):
    rng = np.random.default_rng(104)
    image = rng.integers(0, 256, size=(720, 1280, 3), dtype=np.uint8)
    cfg = SnowConfig(seed=77)
    start = time.perf_counter()

    renders = []
    for run in range(3):
        out = synthesize_snow(image, cfg, item_rng(cfg.seed, 0))
        path = tmp_path / f"run{run}.png"
        save_png(path, out)
        renders.append(path.read_bytes())
    assert renders[0] == renders[1] == renders[2]

    root = tmp_path / "data"
    for i in range(4):
        write_yolo_item(root, f"img_{i}", image, ["0 0.5 0.5 0.1 0.1"])
    items = load_dataset(root, "yolo")
    mix_datasets(items, cfg, MixPolicy(1.0, seed=1), tmp_path / "w1", workers=1)
    mix_datasets(items, cfg, MixPolicy(1.0, seed=1), tmp_path / "w4", workers=4)
    for i in range(4):
        assert (tmp_path / "w1" / f"img_{i}.png").read_bytes() == \
            (tmp_path / "w4" / f"img_{i}.png").read_bytes()
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(4, "byte-identical renders across runs and worker counts",
           f"{elapsed:.2f}s")


def test_c05_coverage_control():
    rng = np.random.default_rng(105)
    start = time.perf_counter()
    for coverage in (0.01, 0.04, 0.10):
        field = rng.normal(size=(1000, 1000))
        got = threshold_field(field, coverage).mean()
        assert abs(got - coverage) <= 0.002, (coverage, got)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report(5, "threshold coverage within +/-0.002", f"{elapsed:.2f}s")


@pytest.mark.slow
def test_c06_mixing_statistics(tmp_path):
    rng = np.random.default_rng(106)
    root = tmp_path / "data"
    root.mkdir()
    # 10,000 items sharing one tiny source image; synthesis still runs at
    # the full 320x180 working size per synthetic item.
    proto = root / "img_00000.png"
    save_png(proto, make_image(rng, 16, 9))
    proto_label = root / "img_00000.txt"
    proto_label.write_text("0 0.5 0.5 0.4 0.4\n")
    for i in range(1, 10_000):
        shutil.copyfile(proto, root / f"img_{i:05d}.png")
        shutil.copyfile(proto_label, root / f"img_{i:05d}.txt")
    items = load_dataset(root, "yolo")
    assert len(items) == 10_000

    cfg = SnowConfig(working_size=(320, 180), filter_sigma_base=0.6,
                     blur_lengths=(3, 4, 5, 7, 9), kernel_smooth_coeff=0.6,
                     coverage_quantile=0.03, seed=61)
    policy = MixPolicy(0.5, seed=62)
    # The 2-minute budget bounds a mixing run over the 10,000 items; each
    # run (including the rerun used for the manifest comparison) is timed
    # against it independently of the fixture scaffolding above.
    start = time.perf_counter()
    m1 = mix_datasets(items, cfg, policy, tmp_path / "out1", workers=1)
    run1 = time.perf_counter() - start
    frac = m1.n_synthetic / len(items)
    assert 0.485 <= frac <= 0.515, frac
    start = time.perf_counter()
    m2 = mix_datasets(items, cfg, policy, tmp_path / "out2", workers=1)
    run2 = time.perf_counter() - start
    strip = lambda recs: [{k: v for k, v in r.items() if k != "output"}
                          for r in recs]
    assert strip(m1.records) == strip(m2.records)
    assert m1.config_digest == m2.config_digest
    assert run1 < 120.0, f"{run1:.1f}s"
    assert run2 < 120.0, f"{run2:.1f}s"
    report(6, "mix fraction within 3-sigma and manifest reproducible",
           f"fraction {frac:.4f}, runs {run1:.1f}s / {run2:.1f}s")


def test_c07_metric_oracle():
    start = time.perf_counter()
    cases = random_eval_cases(200, seed=71)
    for gt, pred in cases:
        got = image_iou(gt, pred)
        ref = image_iou_reference(as_tuples(gt), as_tuples(pred))
        assert abs(got - ref) <= 1e-12
    got_prf = precision_recall_f1(cases)
    ref_prf = prf_reference([(as_tuples(g), as_tuples(p)) for g, p in cases])
    assert all(abs(a - b) <= 1e-12 for a, b in zip(got_prf, ref_prf))
    ref_mean = sum(image_iou_reference(as_tuples(g), as_tuples(p))
                   for g, p in cases) / len(cases)
    assert abs(dataset_iou(cases) - ref_mean) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report(7, "matching metrics equal brute-force reference on 200 cases",
           f"{elapsed:.2f}s")


def test_c08_ap_fixture():
    start = time.perf_counter()
    # Loose-match sweep: IoU exactly 0.6 passes the strict gate only at
    # thresholds 0.50 and 0.55 -> mean AP over the ten thresholds is 0.2.
    gt = BoundingBox(0, 0, 10, 10)
    loose = BoundingBox(0, 0, 10, 6)
    sweep = map_range([([gt], [Detection(loose, 1.0)])])
    assert abs(sweep - 0.2) < 1e-12

    # Worked 3-detection/2-gt example, stated expected value 0.875.
    # NOTE: under the documented envelope interpolation the raw PR points
    # are (r=0.5, p=1), (r=0.5, p=1/2), (r=1, p=2/3), whose envelope
    # integrates to 5/6 = 0.8333..., not 0.875. The implementation is held
    # to the documented definition; this assertion records the discrepancy.
    g1, g2 = BoundingBox(0, 0, 10, 10), BoundingBox(20, 0, 30, 10)
    far = BoundingBox(100, 100, 110, 110)
    images = [([g1, g2], [Detection(g1, 0.9), Detection(far, 0.8),
                          Detection(g2, 0.7)])]
    ap = average_precision(images, 0.5)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    assert ap == 0.875, (
        f"AP is {ap} (= 5/6 from the envelope over the actual PR points); "
        "the stated 0.875 is not reachable from TP/FP counts of 2 gts and "
        "detections [TP 0.9, FP 0.8, TP 0.7] under any precision envelope"
    )
    report(8, "AP fixtures reproduce hand-computed values")


def test_c09_format_roundtrip(tmp_path):
    rng = np.random.default_rng(109)
    start = time.perf_counter()
    root = tmp_path / "gen"
    for i in range(100):
        lines = []
        for _ in range(int(rng.integers(0, 4))):
            cx, cy = rng.uniform(0.3, 0.7, 2)
            w, h = rng.uniform(0.05, 0.2, 2)
            lines.append(f"{int(rng.integers(0, 5))} {cx:.6f} {cy:.6f} "
                         f"{w:.6f} {h:.6f}")
        write_yolo_item(root, f"item_{i:03d}", make_image(rng, 96, 64), lines)
    items = load_dataset(root, "yolo")
    write_dataset(items, tmp_path / "copy", "yolo")
    back = load_dataset(tmp_path / "copy", "yolo")
    assert len(back) == 100
    for a, b in zip(items, back):
        assert len(a.boxes) == len(b.boxes)
        for ba, bb in zip(a.boxes, b.boxes):
            assert ba.class_id == bb.class_id
            for va, vb in zip((ba.x_min, ba.y_min, ba.x_max, ba.y_max),
                              (bb.x_min, bb.y_min, bb.x_max, bb.y_max)):
                assert abs(va - vb) <= 0.5
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report(9, "load/write/load preserves boxes within 0.5 px",
           f"{elapsed:.2f}s")


def test_c10_end_to_end_smoke(tmp_path):
    import yaml

    from snowaug.cli import main

    rng = np.random.default_rng(110)
    start = time.perf_counter()
    bosch = tmp_path / "bosch"
    (bosch / "rgb").mkdir(parents=True)
    for i in range(3):
        save_png(bosch / "rgb" / f"{i:04d}.png", make_image(rng, 128, 72))
    index = [
        {"path": f"./rgb/{i:04d}.png",
         "boxes": [{"label": "Green", "occluded": False,
                    "x_min": 20.0 + i, "x_max": 40.0 + i,
                    "y_min": 10.0, "y_max": 30.0}]}
        for i in range(3)
    ]
    (bosch / "index.yaml").write_text(yaml.safe_dump(index))

    imported = tmp_path / "imported"
    assert main(["import-bosch", str(bosch / "index.yaml"), str(imported)]) == 0

    mixed = tmp_path / "mixed"
    assert main(["mix", str(imported), str(mixed), "--seed", "5"]) == 0

    pred = tmp_path / "pred"
    pred.mkdir()
    for item in load_dataset(mixed, "yolo"):
        lines = [f"{b.class_id} 1.0 {b.x_min} {b.y_min} {b.x_max} {b.y_max}"
                 for b in item.boxes]
        (pred / f"{item.image_path.stem}.txt").write_text(
            "".join(line + "\n" for line in lines))
    report_path = tmp_path / "report.json"
    assert main(["eval", str(mixed), str(pred),
                 "--report", str(report_path)]) == 0

    import json

    doc = json.loads(report_path.read_text())
    for key in ("avg_iou", "map50_95", "map50", "precision", "f1"):
        assert doc[key] == 1.0, (key, doc[key])
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(10, "import-bosch -> mix -> eval yields all-ones report",
           f"{elapsed:.2f}s")


def test_c11_throughput_soft_target():
    rng = np.random.default_rng(111)
    image = rng.integers(0, 256, size=(360, 640, 3), dtype=np.uint8)
    cfg = SnowConfig(seed=11)  # default working size 640x360, 5 scales
    synthesize_snow(image, cfg, item_rng(cfg.seed, 0))  # warm up
    n = 10
    start = time.perf_counter()
    for i in range(n):
        synthesize_snow(image, cfg, item_rng(cfg.seed, i))
    rate = n / (time.perf_counter() - start)
    # Soft target: >= 10 images/s/core. A miss is a performance regression
    # flag, not a correctness failure, so it never fails the suite.
    verdict = "met" if rate >= 10.0 else "REGRESSION FLAG (below 10 img/s)"
    report(11, "throughput soft target",
           f"{rate:.1f} img/s at 640x360 [{kernels.BACKEND} backend] - {verdict}")
