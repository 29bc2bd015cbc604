"""Geometric facial-expression recognition from tracked landmark trajectories."""

from .boosting import (
    BoostTrace,
    StrongClassifier,
    samme,
    samme_alpha,
    select_binary_features,
    strong_classify,
    train_samme,
    weak_classify,
    weak_confusion_scores,
    weak_prediction_matrix,
)
from .data import (
    DEFAULT_CLASS_NAMES,
    Dataset,
    FeatureId,
    LandmarkSequence,
    enumerate_pool,
    load_dataset,
    save_dataset,
)
from .dtw import DtwConfig, dtw_distance, lower_bound, nearest_prototype
from .evaluation import (
    ConfusionMatrix,
    RegionMap,
    default_region_map,
    region_analysis,
    run_cv,
    stratified_kfold,
)
from .features import FeatureVector, extract_feature, extract_type_one, extract_type_two
from .normalization import (
    NeutralReference,
    NormalizedSequence,
    compute_neutral_reference,
    normalize_sequence,
    resample_sequence,
)
from .pipeline import Model, PipelineConfig, fit_pipeline
from .prototypes import PrototypeSet, build_prototypes
from .svm import MarginModel, classify_margin, compact_features, train_margin_model
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"
