from .detector import ClassSkill, DetectorModel, simulate_detections
from .fixtures import cityscapes_like, make_synthetic_dataset
from .loop import STRATEGIES, RunResult, UnknownStrategyError, run_cycle, run_loop, run_simulation

__all__ = [
    "ClassSkill",
    "DetectorModel",
    "simulate_detections",
    "cityscapes_like",
    "make_synthetic_dataset",
    "STRATEGIES",
    "RunResult",
    "UnknownStrategyError",
    "run_cycle",
    "run_loop",
    "run_simulation",
]
