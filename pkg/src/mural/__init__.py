"""Multi-scale region-based active learning selection for object detection."""

from .geometry import BBox, clip_box, contains, coverage_fraction, intersection_area, iou, rescale_box
from .data import (
    ClassVocabulary,
    Dataset,
    DatasetState,
    Detection,
    GroundTruthObject,
    ImageRecord,
    RunConfig,
    ScaleSpec,
    load_dataset,
    load_state,
    save_state,
)
from .candidates import RegionCandidate, generate_multiscale_candidates, greedy_cover
from .scoring import class_distribution, informative_score, reweighted_score, score_candidates
from .selection import SelectionResult, scale_aware_select
from .acquisition import CycleReport, acquire, objects_for_region
from .metrics import compute_metrics

__version__ = "0.1.0"
