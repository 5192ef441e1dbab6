"""
Multi-scale region candidate generation.

Each image is resized to every configured scale. A window the size of the
original image is slid over the resized image, and windows are picked
greedily, each time taking the one that fully contains the most predictions
not yet enclosed, until every prediction that fits in some window is
enclosed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import DatasetState, Detection, ImageRecord, RunConfig, ScaleSpec
from .geometry import BBox, contains, rescale_box

_EPS = 1e-9


@dataclass
class RegionCandidate:
    image_id: int
    scale_index: int
    region_scaled: BBox
    region_original: BBox
    assigned_detections: tuple[Detection, ...]
    score: Optional[float] = None
    # ground-truth ids the annotator would label; filled in when a dataset is available
    object_ids: tuple[int, ...] = field(default=())

    @property
    def sort_key(self) -> tuple:
        return (self.image_id, self.region_scaled.y, self.region_scaled.x)

    def to_json(self, with_score: bool = True) -> dict:
        d = {
            "image_id": self.image_id,
            "scale_index": self.scale_index,
            "region_scaled": self.region_scaled.to_list(),
            "region_original": self.region_original.to_list(),
            "detections": [
                {"class_id": det.class_id, "bbox": det.box.to_list(), "score": det.confidence}
                for det in self.assigned_detections
            ],
            "object_ids": list(self.object_ids),
        }
        if with_score:
            d["score"] = self.score
        return d

    @classmethod
    def from_json(cls, doc: dict) -> "RegionCandidate":
        dets = tuple(
            Detection(int(doc["image_id"]), BBox.from_list(d["bbox"]), int(d["class_id"]), float(d["score"]))
            for d in doc["detections"]
        )
        score = doc.get("score")
        return cls(
            int(doc["image_id"]),
            int(doc["scale_index"]),
            BBox.from_list(doc["region_scaled"]),
            BBox.from_list(doc["region_original"]),
            dets,
            None if score is None else float(score),
            tuple(int(i) for i in doc.get("object_ids", ())),
        )


def compute_scale_factor(image: ImageRecord, spec: ScaleSpec) -> float:
    short, long = min(image.width, image.height), max(image.width, image.height)
    return min(spec.min_side / short, spec.max_side / long)


def default_stride(image: ImageRecord) -> int:
    return max(1, int(min(image.width, image.height) // 4))


def _offsets(max_offset: float, stride: int) -> list[float]:
    if max_offset <= _EPS:
        return [0.0]
    offs = [float(v) for v in np.arange(0, max_offset, stride)]
    if max_offset - offs[-1] > _EPS:
        offs.append(float(max_offset))
    return offs


def enumerate_windows(image: ImageRecord, factor: float, stride: int) -> list[BBox]:
    """
    Windows of the original image size placed over the image resized by
    ``factor``, in scaled coordinates, ordered by (y, x).

    The last offset on each axis is always the far edge. If the resized image
    is smaller than the window, the single window is the whole resized image.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    sw, sh = image.width * factor, image.height * factor
    if sw < image.width - _EPS or sh < image.height - _EPS:
        return [BBox(0.0, 0.0, sw, sh)]
    ys = _offsets(sh - image.height, stride)
    xs = _offsets(sw - image.width, stride)
    return [BBox(x, y, image.width, image.height) for y in ys for x in xs]


def _as_xyxy(boxes: Sequence[BBox]) -> np.ndarray:
    return np.array([[b.x, b.y, b.x2, b.y2] for b in boxes], dtype=float).reshape(-1, 4)


def containment_matrix(windows: Sequence[BBox], boxes: Sequence[BBox]) -> np.ndarray:
    """Boolean (n_windows, n_boxes) matrix; True where the window fully contains the box."""
    w = _as_xyxy(windows)[:, None, :]
    b = _as_xyxy(boxes)[None, :, :]
    return (b[..., 0] >= w[..., 0]) & (b[..., 1] >= w[..., 1]) & (b[..., 2] <= w[..., 2]) & (b[..., 3] <= w[..., 3])


def greedy_cover(windows: Sequence[BBox], boxes: Sequence[BBox], prune: bool = True) -> list[tuple[BBox, list[int]]]:
    """
    Greedily pick windows covering the boxes.

    Args:
        windows: candidate windows.
        boxes: prediction boxes in the same coordinate space.
        prune: drop windows containing no box before the loop starts.

    Returns:
        ``(window, box_indices)`` pairs in pick order. Ties on the number of
        newly enclosed boxes go to the window with the smallest (y, x).
    """
    if not windows or not boxes:
        return []
    order = sorted(range(len(windows)), key=lambda i: (windows[i].y, windows[i].x, i))
    wins = [windows[i] for i in order]
    mask = containment_matrix(wins, boxes)
    if prune:
        keep = mask.any(axis=1)
        wins = [w for w, k in zip(wins, keep) if k]
        mask = mask[keep]
    out = []
    while mask.size:
        counts = mask.sum(axis=1)
        g = int(np.argmax(counts))
        if counts[g] == 0:
            break
        cols = np.flatnonzero(mask[g])
        out.append((wins[g], [int(c) for c in cols]))
        mask[:, cols] = False
    return out


def eligible_detections(
    detections: Sequence[Detection], state: Optional[DatasetState], threshold: float
) -> list[Detection]:
    """
    Drop low-confidence predictions and predictions that are already labeled.

    A prediction counts as labeled if it was matched to a labeled object or if
    it lies entirely inside a region labeled in an earlier cycle.
    """
    out = [d for d in detections if d.confidence >= threshold]
    if state is None:
        return out
    regions: dict[int, list[BBox]] = {}
    for r in state.labeled_regions:
        regions.setdefault(r.image_id, []).append(r.box)
    kept = []
    for d in out:
        if d.matched_gt is not None and d.matched_gt in state.labeled_objects:
            continue
        if any(contains(r, d.box) for r in regions.get(d.image_id, ())):
            continue
        kept.append(d)
    return kept


def _clamp(box: BBox, image: ImageRecord) -> BBox:
    # undo float drift from the inverse rescale
    x1, y1 = max(box.x, 0.0), max(box.y, 0.0)
    x2, y2 = min(box.x2, image.width), min(box.y2, image.height)
    return BBox.from_xyxy(x1, y1, x2, y2)


def candidates_at_scale(
    image: ImageRecord, detections: Sequence[Detection], factor: float, stride: int, scale_index: int
) -> list[RegionCandidate]:
    if not detections:
        return []
    windows = enumerate_windows(image, factor, stride)
    scaled = [rescale_box(d.box, factor) for d in detections]
    out = []
    for window, idx in greedy_cover(windows, scaled):
        out.append(
            RegionCandidate(
                image.image_id,
                scale_index,
                window,
                _clamp(rescale_box(window, 1.0 / factor), image),
                tuple(detections[i] for i in idx),
            )
        )
    return out


def generate_multiscale_candidates(
    image: ImageRecord, detections: Sequence[Detection], config: RunConfig
) -> list[list[RegionCandidate]]:
    """
    Candidates for one image, one list per configured scale.

    ``detections`` are in original-image coordinates; only those at or above
    the confidence threshold take part.
    """
    dets = [d for d in detections if d.image_id == image.image_id and d.confidence >= config.confidence_threshold]
    stride = config.stride if config.stride is not None else default_stride(image)
    return [
        candidates_at_scale(image, dets, compute_scale_factor(image, spec), stride, s)
        for s, spec in enumerate(config.scales)
    ]


def with_score(candidate: RegionCandidate, score: float) -> RegionCandidate:
    return replace(candidate, score=score)
