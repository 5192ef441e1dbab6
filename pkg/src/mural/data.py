"""
Dataset ingestion, pool state and run configuration.

The dataset file is a small COCO-style subset::

    {"categories": [{"id", "name"}],
     "images": [{"id", "width", "height"}],
     "annotations": [{"id", "image_id", "category_id", "bbox": [x, y, w, h]}]}

Category ids in the file may be arbitrary integers; they are mapped to
contiguous class ids starting at 0 in ascending id order.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import jsonschema
import numpy as np

from .geometry import BBox

STATE_VERSION = 1

# scale_index values for labeled regions that are not multi-scale windows
WHOLE_IMAGE = -1
INSTANCE = -2


class DatasetError(ValueError):
    """Input file does not match its schema or is internally inconsistent."""


class StateError(ValueError):
    """State file is unreadable, corrupted or written by another version."""


_BBOX_SCHEMA = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
}

DATASET_SCHEMA = {
    "type": "object",
    "required": ["categories", "images", "annotations"],
    "properties": {
        "categories": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "name"],
                "properties": {"id": {"type": "integer"}, "name": {"type": "string"}},
            },
        },
        "images": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "width", "height"],
                "properties": {
                    "id": {"type": "integer"},
                    "width": {"type": "number", "exclusiveMinimum": 0},
                    "height": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "annotations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "image_id", "category_id", "bbox"],
                "properties": {
                    "id": {"type": "integer"},
                    "image_id": {"type": "integer"},
                    "category_id": {"type": "integer"},
                    "bbox": _BBOX_SCHEMA,
                },
            },
        },
    },
}

PREDICTIONS_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["image_id", "category_id", "bbox", "score"],
        "properties": {
            "image_id": {"type": "integer"},
            "category_id": {"type": "integer"},
            "bbox": _BBOX_SCHEMA,
            "score": {"type": "number", "minimum": 0, "maximum": 1},
        },
    },
}


@dataclass(frozen=True)
class ClassVocabulary:
    names: tuple[str, ...]
    category_ids: tuple[int, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("vocabulary needs at least one class")
        if len(self.names) != len(self.category_ids):
            raise ValueError("names and category_ids differ in length")
        if len(set(self.category_ids)) != len(self.category_ids):
            raise ValueError("duplicate category ids")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def classes(self) -> list[tuple[int, str]]:
        return list(enumerate(self.names))

    def class_id(self, category_id: int) -> int:
        try:
            return self.category_ids.index(category_id)
        except ValueError:
            raise KeyError(category_id) from None


@dataclass(frozen=True)
class GroundTruthObject:
    object_id: int
    image_id: int
    box: BBox
    class_id: int


@dataclass(frozen=True)
class ImageRecord:
    image_id: int
    width: float
    height: float
    objects: tuple[GroundTruthObject, ...] = ()

    @property
    def bounds(self) -> BBox:
        return BBox(0.0, 0.0, self.width, self.height)


@dataclass(frozen=True)
class Detection:
    image_id: int
    box: BBox
    class_id: int
    confidence: float
    matched_gt: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass
class Dataset:
    vocabulary: ClassVocabulary
    images: list[ImageRecord]

    def __post_init__(self):
        self._by_id = {im.image_id: im for im in self.images}
        self._objects = {o.object_id: o for im in self.images for o in im.objects}

    def image(self, image_id: int) -> ImageRecord:
        return self._by_id[image_id]

    def object(self, object_id: int) -> GroundTruthObject:
        return self._objects[object_id]

    @property
    def num_objects(self) -> int:
        return len(self._objects)

    def class_totals(self) -> list[int]:
        totals = [0] * len(self.vocabulary)
        for obj in self._objects.values():
            totals[obj.class_id] += 1
        return totals

    def to_json(self) -> dict:
        voc = self.vocabulary
        return {
            "categories": [{"id": cid, "name": name} for cid, name in zip(voc.category_ids, voc.names)],
            "images": [{"id": im.image_id, "width": im.width, "height": im.height} for im in self.images],
            "annotations": [
                {
                    "id": o.object_id,
                    "image_id": o.image_id,
                    "category_id": voc.category_ids[o.class_id],
                    "bbox": o.box.to_list(),
                }
                for im in self.images
                for o in im.objects
            ],
        }


def _schema_path(err: jsonschema.ValidationError) -> str:
    out = ""
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else part)
    return out or "<root>"


def _validate(doc, schema, source) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as err:
        raise DatasetError(f"{source}: {_schema_path(err)}: {err.message}") from None


def _read_json(path) -> object:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise DatasetError(f"{path}: invalid JSON: {err}") from None


def parse_dataset(doc: dict, source: str = "<dataset>") -> Dataset:
    _validate(doc, DATASET_SCHEMA, source)

    cats = sorted(doc["categories"], key=lambda c: c["id"])
    seen = set()
    for i, c in enumerate(doc["categories"]):
        if c["id"] in seen:
            raise DatasetError(f"{source}: categories[{i}]: duplicate category id {c['id']}")
        seen.add(c["id"])
    vocab = ClassVocabulary(tuple(c["name"] for c in cats), tuple(c["id"] for c in cats))

    sizes = {}
    for i, im in enumerate(doc["images"]):
        if im["id"] in sizes:
            raise DatasetError(f"{source}: images[{i}]: duplicate image id {im['id']}")
        sizes[im["id"]] = (float(im["width"]), float(im["height"]))

    objects: dict[int, list[GroundTruthObject]] = {k: [] for k in sizes}
    seen_obj = set()
    for i, ann in enumerate(doc["annotations"]):
        where = f"{source}: annotations[{i}]"
        if ann["id"] in seen_obj:
            raise DatasetError(f"{where}: duplicate object id {ann['id']}")
        seen_obj.add(ann["id"])
        if ann["image_id"] not in sizes:
            raise DatasetError(f"{where}: unknown image_id {ann['image_id']}")
        try:
            class_id = vocab.class_id(ann["category_id"])
        except KeyError:
            raise DatasetError(f"{where}: unknown category_id {ann['category_id']}") from None
        x, y, w, h = (float(v) for v in ann["bbox"])
        if not all(math.isfinite(v) for v in (x, y, w, h)) or w <= 0 or h <= 0:
            raise DatasetError(f"{where}.bbox: degenerate box {ann['bbox']}")
        width, height = sizes[ann["image_id"]]
        # clip against the image rectangle; origin may lie outside it
        x1, y1 = max(x, 0.0), max(y, 0.0)
        x2, y2 = min(x + w, width), min(y + h, height)
        if x2 <= x1 or y2 <= y1:
            raise DatasetError(f"{where}.bbox: box {ann['bbox']} lies outside its image")
        box = BBox(x1, y1, x2 - x1, y2 - y1)
        objects[ann["image_id"]].append(GroundTruthObject(ann["id"], ann["image_id"], box, class_id))

    images = [
        ImageRecord(iid, w, h, tuple(sorted(objects[iid], key=lambda o: o.object_id)))
        for iid, (w, h) in sorted(sizes.items())
    ]
    return Dataset(vocab, images)


def load_dataset(path) -> Dataset:
    return parse_dataset(_read_json(path), str(path))


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.to_json(), indent=1))


def load_predictions(path, dataset: Dataset) -> list[Detection]:
    """Read a COCO-style results file; boxes are clipped to their image."""
    doc = _read_json(path)
    _validate(doc, PREDICTIONS_SCHEMA, str(path))
    out = []
    for i, p in enumerate(doc):
        where = f"{path}: [{i}]"
        try:
            image = dataset.image(p["image_id"])
        except KeyError:
            raise DatasetError(f"{where}: unknown image_id {p['image_id']}") from None
        try:
            class_id = dataset.vocabulary.class_id(p["category_id"])
        except KeyError:
            raise DatasetError(f"{where}: unknown category_id {p['category_id']}") from None
        x, y, w, h = (float(v) for v in p["bbox"])
        if w <= 0 or h <= 0:
            raise DatasetError(f"{where}.bbox: degenerate box {p['bbox']}")
        x1, y1 = max(x, 0.0), max(y, 0.0)
        x2, y2 = min(x + w, image.width), min(y + h, image.height)
        if x2 <= x1 or y2 <= y1:
            continue
        out.append(Detection(image.image_id, BBox(x1, y1, x2 - x1, y2 - y1), class_id, float(p["score"])))
    return out


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ScaleSpec:
    min_side: float
    max_side: float

    def __post_init__(self):
        if not 0 < self.min_side <= self.max_side:
            raise ValueError(f"need 0 < min_side <= max_side, got ({self.min_side}, {self.max_side})")


CITYSCAPES_SCALES = (ScaleSpec(2400, 3200), ScaleSpec(1024, 2048), ScaleSpec(600, 1200))
COCO_SCALES = (ScaleSpec(480, 512), ScaleSpec(800, 1280), ScaleSpec(1400, 2000))


@dataclass(frozen=True)
class RunConfig:
    scales: tuple[ScaleSpec, ...] = CITYSCAPES_SCALES
    budget_per_cycle: int = 500
    num_cycles: int = 6
    # None: a quarter of the window's short side, per image
    stride: Optional[int] = None
    confidence_threshold: float = 0.05
    overlap_rule: str = "coverage"
    overlap_threshold: float = 0.7
    smoothing: str = "laplace"
    rng_seed: int = 0
    initial_labeled_fraction: float = 0.01
    coarse_aggregation: str = "mean"

    def __post_init__(self):
        if len(self.scales) < 1:
            raise ValueError("need at least one scale")
        if self.budget_per_cycle < 1:
            raise ValueError(f"budget_per_cycle must be >= 1, got {self.budget_per_cycle}")
        if self.num_cycles < 1:
            raise ValueError(f"num_cycles must be >= 1, got {self.num_cycles}")
        if self.stride is not None and self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not 0 <= self.confidence_threshold < 1:
            raise ValueError(f"confidence_threshold must be in [0, 1), got {self.confidence_threshold}")
        if self.overlap_rule not in ("coverage", "iou"):
            raise ValueError(f"overlap_rule must be 'coverage' or 'iou', got {self.overlap_rule!r}")
        if not 0 < self.overlap_threshold <= 1:
            raise ValueError(f"overlap_threshold must be in (0, 1], got {self.overlap_threshold}")
        if self.smoothing not in ("laplace", "none"):
            raise ValueError(f"smoothing must be 'laplace' or 'none', got {self.smoothing!r}")
        if not 0 < self.initial_labeled_fraction <= 1:
            raise ValueError(f"initial_labeled_fraction must be in (0, 1], got {self.initial_labeled_fraction}")
        if self.coarse_aggregation not in ("mean", "max"):
            raise ValueError(f"coarse_aggregation must be 'mean' or 'max', got {self.coarse_aggregation!r}")

    @property
    def num_scales(self) -> int:
        return len(self.scales)

    def to_json(self) -> dict:
        d = asdict(self)
        d["scales"] = [[s.min_side, s.max_side] for s in self.scales]
        return d

    @classmethod
    def from_json(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(doc)
        if "scales" in kwargs:
            scales = []
            for s in kwargs["scales"]:
                if isinstance(s, dict):
                    scales.append(ScaleSpec(s["min_side"], s["max_side"]))
                else:
                    a, b = s
                    scales.append(ScaleSpec(a, b))
            kwargs["scales"] = tuple(scales)
        return cls(**kwargs)


def load_config(path) -> RunConfig:
    doc = _read_json(path)
    try:
        return RunConfig.from_json(doc)
    except (TypeError, ValueError, KeyError) as err:
        raise DatasetError(f"{path}: {err}") from None


# -- pool state ----------------------------------------------------------------


@dataclass(frozen=True)
class LabeledRegion:
    image_id: int
    box: BBox
    scale_index: int


@dataclass(frozen=True)
class LabeledObject:
    object_id: int
    image_id: int
    class_id: int
    # image coordinates, cropped to the region it was labeled through
    clipped_box: BBox
    region_index: int


@dataclass
class DatasetState:
    labeled_objects: dict[int, LabeledObject] = field(default_factory=dict)
    labeled_regions: list[LabeledRegion] = field(default_factory=list)
    unlabeled_images: set[int] = field(default_factory=set)
    cycle_index: int = 0

    def class_counts(self, num_classes: int) -> list[int]:
        counts = [0] * num_classes
        for lo in self.labeled_objects.values():
            counts[lo.class_id] += 1
        return counts

    def regions_of(self, image_id: int) -> list[LabeledRegion]:
        return [r for r in self.labeled_regions if r.image_id == image_id]

    def copy(self) -> "DatasetState":
        return DatasetState(
            dict(self.labeled_objects), list(self.labeled_regions), set(self.unlabeled_images), self.cycle_index
        )

    def to_json(self) -> dict:
        return {
            "version": STATE_VERSION,
            "cycle_index": self.cycle_index,
            "labeled_objects": [
                {
                    "object_id": lo.object_id,
                    "image_id": lo.image_id,
                    "class_id": lo.class_id,
                    "clipped_bbox": lo.clipped_box.to_list(),
                    "region_index": lo.region_index,
                }
                for _, lo in sorted(self.labeled_objects.items())
            ],
            "labeled_regions": [
                {"image_id": r.image_id, "bbox": r.box.to_list(), "scale_index": r.scale_index}
                for r in self.labeled_regions
            ],
            "unlabeled_images": sorted(self.unlabeled_images),
        }

    @classmethod
    def from_json(cls, doc) -> "DatasetState":
        if not isinstance(doc, dict) or "version" not in doc:
            raise StateError("state file has no version field")
        if doc["version"] != STATE_VERSION:
            raise StateError(f"state version {doc['version']} is not supported (expected {STATE_VERSION})")
        try:
            objs = {}
            for o in doc["labeled_objects"]:
                lo = LabeledObject(
                    int(o["object_id"]),
                    int(o["image_id"]),
                    int(o["class_id"]),
                    BBox.from_list(o["clipped_bbox"]),
                    int(o["region_index"]),
                )
                if lo.object_id in objs:
                    raise StateError(f"object {lo.object_id} labeled twice")
                objs[lo.object_id] = lo
            regions = [
                LabeledRegion(int(r["image_id"]), BBox.from_list(r["bbox"]), int(r["scale_index"]))
                for r in doc["labeled_regions"]
            ]
            cycle = int(doc["cycle_index"])
            unlabeled = {int(i) for i in doc["unlabeled_images"]}
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, StateError):
                raise
            raise StateError(f"malformed state: {err!r}") from None
        if cycle < 0:
            raise StateError(f"negative cycle_index {cycle}")
        return cls(objs, regions, unlabeled, cycle)


def save_state(state: DatasetState, path) -> None:
    Path(path).write_text(json.dumps(state.to_json(), indent=1, sort_keys=True) + "\n")


def load_state(path) -> DatasetState:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise StateError(f"{path}: corrupted state file: {err}") from None
    return DatasetState.from_json(doc)


def initial_state(dataset: Dataset, fraction: float, seed: int) -> DatasetState:
    """
    Seed the labeled pool with a uniformly sampled fraction of whole images.

    At least one image is drawn. The chosen images are fully labeled and
    leave the unlabeled pool for good.
    """
    ids = [im.image_id for im in dataset.images]
    n = max(1, int(round(fraction * len(ids))))
    rng = np.random.default_rng(seed)
    chosen = sorted(int(i) for i in rng.choice(ids, size=min(n, len(ids)), replace=False))
    state = DatasetState(unlabeled_images=set(ids))
    for iid in chosen:
        label_whole_image(state, dataset.image(iid))
    return state


def label_whole_image(state: DatasetState, image: ImageRecord) -> list[GroundTruthObject]:
    """Label every remaining object of ``image``; returns the newly labeled ones."""
    state.labeled_regions.append(LabeledRegion(image.image_id, image.bounds, WHOLE_IMAGE))
    ridx = len(state.labeled_regions) - 1
    new = []
    for obj in image.objects:
        if obj.object_id in state.labeled_objects:
            continue
        state.labeled_objects[obj.object_id] = LabeledObject(obj.object_id, image.image_id, obj.class_id, obj.box, ridx)
        new.append(obj)
    state.unlabeled_images.discard(image.image_id)
    return new


def unlabeled_objects(state: DatasetState, images: Iterable[ImageRecord]) -> int:
    return sum(1 for im in images for o in im.objects if o.object_id not in state.labeled_objects)
