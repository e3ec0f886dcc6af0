"""Synthetic OOD data generation by compounded corruptions, (K+1)-class
detectors, and exact ReLU activation-region analysis on 2D toys."""

from .corruptions import (
    CorruptionSpec,
    apply_corruption,
    corrupt_point_2d,
    load_severity_tables,
    registry_list,
)
from .datasets import (
    LabeledImageSet,
    Point2Dataset,
    gaussian_clusters_2d,
    load_cifar10_binary,
    two_moons,
    uniform_ring,
)
from .estimator import CnCGenerator, OodMlpClassifier
from .metrics import (
    EvalReport,
    auroc,
    classify_id,
    detect,
    detection_error,
    diversity,
    ece,
    entropy,
    evaluate_scores,
    select_delta,
    subfunction_bound,
    tnr_at_tpr95,
)
from .mlp import (
    MlpModel,
    TrainConfig,
    backward,
    forward,
    init_model,
    load_checkpoint,
    loss_eq2,
    save_checkpoint,
    train,
)
from .pbcc import CropBox, apply_pbcc, box_extent, pbcc_2d, pbcc_pairing, sample_box
from .pipeline import GenConfig, cnc_datagen, cnc_datagen_2d
from .polytope import (
    DecisionCell,
    RegionPolygon,
    decision_cells,
    domain_from_points,
    enumerate_regions,
    export_complex_svg,
    export_regions_csv,
    id_empty_polytope_area,
    split_polygon,
)
from .rng import RngStream
from .tensor import ImageTensor, export_ppm, load_raw_tensor, save_raw_tensor

__version__ = "0.1.0"
