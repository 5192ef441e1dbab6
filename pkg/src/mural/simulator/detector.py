"""
Synthetic stand-in for a trained detector.

Confidence for a true object grows with the log of how many objects of its
class are already labeled, saturating at ``base + gain`` once the whole class
is labeled. This is not a model of real detector behaviour; it only closes the
feedback loop so selection strategies can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..data import Dataset, DatasetState, Detection, ImageRecord
from ..geometry import BBox


@dataclass(frozen=True)
class ClassSkill:
    base_confidence: float = 0.5
    confidence_gain: float = 0.3
    miss_rate_base: float = 0.1

    def __post_init__(self):
        if not 0 <= self.base_confidence <= 1:
            raise ValueError(f"base_confidence must be in [0, 1], got {self.base_confidence}")
        if self.confidence_gain < 0:
            raise ValueError(f"confidence_gain must be >= 0, got {self.confidence_gain}")
        if not 0 <= self.miss_rate_base <= 1:
            raise ValueError(f"miss_rate_base must be in [0, 1], got {self.miss_rate_base}")


@dataclass(frozen=True)
class DetectorModel:
    skills: tuple[ClassSkill, ...]
    box_jitter: float = 0.05
    false_positive_rate: float = 0.5
    confidence_noise: float = 0.05
    fp_confidence: tuple[float, float] = (0.05, 0.3)
    rng_seed: int = 0
    # objects per class in the whole dataset; sets where confidence saturates
    class_totals: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.box_jitter <= 1:
            raise ValueError(f"box_jitter must be in [0, 1], got {self.box_jitter}")
        if self.false_positive_rate < 0:
            raise ValueError(f"false_positive_rate must be >= 0, got {self.false_positive_rate}")
        if self.confidence_noise < 0:
            raise ValueError(f"confidence_noise must be >= 0, got {self.confidence_noise}")
        lo, hi = self.fp_confidence
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"fp_confidence must satisfy 0 <= lo <= hi <= 1, got {self.fp_confidence}")

    @classmethod
    def uniform(cls, num_classes: int, skill: Optional[ClassSkill] = None, **kwargs) -> "DetectorModel":
        return cls(tuple([skill or ClassSkill()] * num_classes), **kwargs)

    def for_dataset(self, dataset: Dataset) -> "DetectorModel":
        if len(self.skills) != len(dataset.vocabulary):
            raise ValueError(f"detector has {len(self.skills)} class skills, dataset has {len(dataset.vocabulary)} classes")
        return replace(self, class_totals=tuple(dataset.class_totals()))

    def to_json(self) -> dict:
        return {
            "skills": [vars(s) for s in self.skills],
            "box_jitter": self.box_jitter,
            "false_positive_rate": self.false_positive_rate,
            "confidence_noise": self.confidence_noise,
            "fp_confidence": list(self.fp_confidence),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, doc: dict, num_classes: Optional[int] = None) -> "DetectorModel":
        doc = dict(doc)
        skills = doc.pop("skills", None)
        if isinstance(skills, dict):
            skills = [skills] * (num_classes or 1)
        elif skills is None:
            skills = [{}] * (num_classes or 1)
        if "fp_confidence" in doc:
            doc["fp_confidence"] = tuple(doc["fp_confidence"])
        return cls(tuple(ClassSkill(**s) for s in skills), **doc)

    def mean_confidence(self, class_id: int, n_labeled: int) -> float:
        skill = self.skills[class_id]
        total = self.class_totals[class_id] if self.class_totals else 0
        progress = math.log1p(n_labeled) / math.log1p(total) if total > 0 else 0.0
        return skill.base_confidence + skill.confidence_gain * min(progress, 1.0)


def _jitter(box: BBox, u: np.ndarray, frac: float, image: ImageRecord) -> BBox:
    x1 = box.x + frac * box.w * u[0]
    y1 = box.y + frac * box.h * u[1]
    x2 = box.x2 + frac * box.w * u[2]
    y2 = box.y2 + frac * box.h * u[3]
    x1, y1 = max(x1, 0.0), max(y1, 0.0)
    x2, y2 = min(x2, image.width), min(y2, image.height)
    if x2 <= x1 or y2 <= y1:
        return box
    return BBox.from_xyxy(x1, y1, x2, y2)


def simulate_detections(image: ImageRecord, model: DetectorModel, state: DatasetState) -> list[Detection]:
    """
    Predictions for one image given the current labeled pool.

    Output depends only on (model, image, labeled class counts, cycle index).
    Every object consumes the same number of random draws whether or not it
    is missed, so changing one parameter does not reshuffle the others.
    """
    num_classes = len(model.skills)
    rng = np.random.default_rng([model.rng_seed, image.image_id, state.cycle_index])
    n_labeled = state.class_counts(num_classes)
    out = []
    for obj in image.objects:
        miss_u = rng.random()
        z = rng.standard_normal()
        u = rng.uniform(-1.0, 1.0, size=4)
        if miss_u < model.skills[obj.class_id].miss_rate_base:
            continue
        conf = model.mean_confidence(obj.class_id, n_labeled[obj.class_id]) + model.confidence_noise * z
        conf = float(min(max(conf, 0.0), 1.0))
        box = _jitter(obj.box, u, model.box_jitter, image) if model.box_jitter > 0 else obj.box
        out.append(Detection(image.image_id, box, obj.class_id, conf, obj.object_id))

    lo, hi = model.fp_confidence
    for _ in range(int(rng.poisson(model.false_positive_rate))):
        cls_id = int(rng.integers(num_classes))
        fw, fh = rng.uniform(0.02, 0.2, size=2)
        w, h = fw * image.width, fh * image.height
        x = rng.uniform(0.0, image.width - w)
        y = rng.uniform(0.0, image.height - h)
        out.append(Detection(image.image_id, BBox(float(x), float(y), float(w), float(h)), cls_id, float(rng.uniform(lo, hi))))
    return out


def simulate_all(images: Sequence[ImageRecord], model: DetectorModel, state: DatasetState) -> dict[int, list[Detection]]:
    return {im.image_id: simulate_detections(im, model, state) for im in images}
