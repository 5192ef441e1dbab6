"""
Label acquisition for selected regions.

An object is labeled through a region when its overlap with the region
exceeds the configured threshold. By default the overlap is the fraction of
the object's own area inside the region; ``overlap_rule="iou"`` switches to
plain IoU. Labeled boxes are cropped to the region.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .candidates import RegionCandidate
from .data import (
    Dataset,
    DatasetState,
    GroundTruthObject,
    ImageRecord,
    LabeledObject,
    LabeledRegion,
    RunConfig,
)
from .geometry import BBox, clip_box, coverage_fraction, iou, translate
from .metrics import class_entropy, kl_to_uniform
from .selection import OK, SelectionResult


class StaleSelectionError(ValueError):
    """Selection was computed against a different cycle than the state is in."""


@dataclass
class CycleReport:
    cycle_index: int
    strategy: str
    annotated_per_class: list[int]
    annotated_per_scale: list[int]
    budget_requested: int
    budget_consumed: int
    num_regions: int
    selected_images: list[int]
    status: str = OK
    selected_class_entropy: float = 0.0
    kl_to_uniform: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "CycleReport":
        return cls(**doc)


def overlap(box: BBox, region: BBox, rule: str) -> float:
    if rule == "coverage":
        return coverage_fraction(box, region)
    if rule == "iou":
        return iou(box, region)
    raise ValueError(f"unknown overlap rule {rule!r}")


def objects_for_region(
    region,
    image: ImageRecord,
    config: RunConfig,
    labeled: Optional[Mapping[int, object]] = None,
) -> list[tuple[GroundTruthObject, BBox]]:
    """
    Ground-truth objects the annotator labels for ``region``.

    Args:
        region: a RegionCandidate, or a BBox in original-image coordinates.
        image: the region's image.
        config: supplies the overlap rule and threshold.
        labeled: object ids to skip because they already carry labels.

    Returns:
        ``(object, clipped_box)`` pairs, the clipped box in region-local
        coordinates.
    """
    box = region.region_original if isinstance(region, RegionCandidate) else region
    labeled = labeled or {}
    out = []
    for obj in image.objects:
        if obj.object_id in labeled:
            continue
        if overlap(obj.box, box, config.overlap_rule) > config.overlap_threshold:
            clipped = clip_box(obj.box, box)
            if clipped is not None:
                out.append((obj, clipped))
    return out


def object_counter(dataset: Dataset, state: DatasetState, config: RunConfig) -> Callable[[RegionCandidate], int]:
    """
    Dry-run annotator for selection.

    The returned function counts the objects a region would newly label,
    remembering what earlier calls already claimed, so the total it reports
    matches what ``acquire`` will label for the same regions in the same order.
    """
    claimed: set[int] = set()

    def count(cand: RegionCandidate) -> int:
        objs = objects_for_region(cand, dataset.image(cand.image_id), config, state.labeled_objects)
        new = [o.object_id for o, _ in objs if o.object_id not in claimed]
        claimed.update(new)
        return len(new)

    return count


def id_counter(state: DatasetState) -> Callable[[RegionCandidate], int]:
    """Like ``object_counter`` but reads the precomputed ``object_ids`` of each candidate."""
    claimed: set[int] = set(state.labeled_objects)

    def count(cand: RegionCandidate) -> int:
        new = [i for i in cand.object_ids if i not in claimed]
        claimed.update(new)
        return len(new)

    return count


def _refresh_pool(state: DatasetState, image: ImageRecord) -> None:
    if all(o.object_id in state.labeled_objects for o in image.objects):
        state.unlabeled_images.discard(image.image_id)


def label_region(
    state: DatasetState, image: ImageRecord, region: BBox, scale_index: int, config: RunConfig
) -> list[GroundTruthObject]:
    """Record ``region`` as labeled and label its qualifying objects, mutating ``state``."""
    state.labeled_regions.append(LabeledRegion(image.image_id, region, scale_index))
    ridx = len(state.labeled_regions) - 1
    new = []
    for obj, local in objects_for_region(region, image, config, state.labeled_objects):
        state.labeled_objects[obj.object_id] = LabeledObject(
            obj.object_id, image.image_id, obj.class_id, translate(local, region.x, region.y), ridx
        )
        new.append(obj)
    _refresh_pool(state, image)
    return new


def label_instance(state: DatasetState, image: ImageRecord, obj: GroundTruthObject, scale_index: int) -> None:
    """Label one object in full; its own box is recorded as the labeled region."""
    state.labeled_regions.append(LabeledRegion(image.image_id, obj.box, scale_index))
    state.labeled_objects[obj.object_id] = LabeledObject(
        obj.object_id, image.image_id, obj.class_id, obj.box, len(state.labeled_regions) - 1
    )
    _refresh_pool(state, image)


@dataclass
class CycleTally:
    """Accumulates what one cycle labeled, then turns it into a report."""

    num_classes: int
    num_scales: int
    per_class: list[int] = field(default_factory=list)
    per_scale: list[int] = field(default_factory=list)
    images: set[int] = field(default_factory=set)
    regions: int = 0

    def __post_init__(self):
        self.per_class = [0] * self.num_classes
        self.per_scale = [0] * self.num_scales

    def add(self, image_id: int, objects: Iterable[GroundTruthObject], scale_index: int) -> None:
        self.regions += 1
        self.images.add(image_id)
        for obj in objects:
            self.per_class[obj.class_id] += 1
            if 0 <= scale_index < self.num_scales:
                self.per_scale[scale_index] += 1

    def report(self, cycle_index: int, strategy: str, budget: int, status: str = OK) -> CycleReport:
        return CycleReport(
            cycle_index=cycle_index,
            strategy=strategy,
            annotated_per_class=list(self.per_class),
            annotated_per_scale=list(self.per_scale),
            budget_requested=budget,
            budget_consumed=sum(self.per_class),
            num_regions=self.regions,
            selected_images=sorted(self.images),
            status=status,
            selected_class_entropy=class_entropy(self.per_class),
            kl_to_uniform=kl_to_uniform(self.per_class),
        )


def acquire(
    selection: SelectionResult,
    state: DatasetState,
    dataset: Dataset,
    config: RunConfig,
    strategy: str = "mural",
) -> tuple[DatasetState, CycleReport]:
    """
    Annotate the selected regions and advance the state by one cycle.

    The input state is left untouched. Objects reachable from several selected
    regions are labeled (and charged) once, through the first region.
    """
    if selection.cycle_index != state.cycle_index:
        raise StaleSelectionError(
            f"selection was made for cycle {selection.cycle_index}, state is at cycle {state.cycle_index}"
        )
    new = state.copy()
    tally = CycleTally(len(dataset.vocabulary), config.num_scales)
    for cand in selection.selected:
        image = dataset.image(cand.image_id)
        objs = label_region(new, image, cand.region_original, cand.scale_index, config)
        tally.add(image.image_id, objs, cand.scale_index)
    report = tally.report(state.cycle_index, strategy, selection.budget_requested, selection.status)
    new.cycle_index += 1
    return new, report
