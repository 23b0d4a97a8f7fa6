"""snowaug: multi-scale synthetic snow for detection datasets, plus a
penalized-IoU / mAP evaluation toolkit and a dataset-mixing CLI."""

from .core import (BoundingBox, Detection, clamp_box, derive_item_seed,
                   item_rng, load_image, save_png)
from .dataset import (DatasetItem, Manifest, MixPolicy, load_dataset,
                      mix_datasets, resize_with_annotations, write_dataset)
from .evaluate import (EvalReport, MatchResult, average_precision, box_iou,
                       dataset_iou, evaluate, image_iou, map_range,
                       match_boxes, precision_recall_f1)
from .kernels import BACKEND as KERNEL_BACKEND
from .snow import (GaussianKernel, MotionBlurKernel, SnowConfig,
                   apply_motion_blur, blend_layer, build_gaussian_kernel,
                   build_motion_blur_kernel, gaussian_filter, resize_roundtrip,
                   sample_noise_field, synthesize_snow, threshold_field)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "Detection", "clamp_box", "derive_item_seed", "item_rng",
    "load_image", "save_png",
    "DatasetItem", "Manifest", "MixPolicy", "load_dataset", "mix_datasets",
    "resize_with_annotations", "write_dataset",
    "EvalReport", "MatchResult", "average_precision", "box_iou", "dataset_iou",
    "evaluate", "image_iou", "map_range", "match_boxes", "precision_recall_f1",
    "KERNEL_BACKEND",
    "GaussianKernel", "MotionBlurKernel", "SnowConfig", "apply_motion_blur",
    "blend_layer", "build_gaussian_kernel", "build_motion_blur_kernel",
    "gaussian_filter", "resize_roundtrip", "sample_noise_field",
    "synthesize_snow", "threshold_field",
    "__version__",
]
