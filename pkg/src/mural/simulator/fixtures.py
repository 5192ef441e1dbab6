"""Seeded synthetic datasets."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..data import ClassVocabulary, Dataset, GroundTruthObject, ImageRecord
from ..geometry import BBox

CITYSCAPES_CLASSES = ("person", "rider", "car", "truck", "bus", "train", "motorcycle", "bicycle")
# rough shape of the street-scene imbalance; illustrative, not measured
CITYSCAPES_FREQS = (0.30, 0.04, 0.46, 0.02, 0.02, 0.01, 0.02, 0.13)


def make_synthetic_dataset(
    num_images: int,
    class_freqs: Sequence[float],
    objects_per_image: int = 10,
    image_size: tuple[float, float] = (2048, 1024),
    size_range: tuple[float, float] = (0.03, 0.4),
    seed: int = 0,
    class_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """
    Build a dataset of randomly placed boxes.

    Args:
        num_images: number of images.
        class_freqs: sampling weight per class; normalised internally.
        objects_per_image: exact object count in every image.
        image_size: (width, height) shared by all images.
        size_range: object side length as a fraction of the image's short
            side, drawn log-uniformly so both small and large objects occur.
        seed: RNG seed.
        class_names: defaults to ``class0``, ``class1``, ...
    """
    freqs = np.asarray(class_freqs, dtype=float)
    freqs = freqs / freqs.sum()
    k = len(freqs)
    names = tuple(class_names) if class_names else tuple(f"class{i}" for i in range(k))
    vocab = ClassVocabulary(names, tuple(range(k)))
    width, height = image_size
    short = min(width, height)
    lo, hi = np.log(size_range[0]), np.log(size_range[1])
    rng = np.random.default_rng(seed)

    images = []
    oid = 1
    for iid in range(1, num_images + 1):
        objs = []
        classes = rng.choice(k, size=objects_per_image, p=freqs)
        for c in classes:
            side = short * float(np.exp(rng.uniform(lo, hi)))
            aspect = float(np.exp(rng.uniform(np.log(0.5), np.log(2.0))))
            w = min(side * np.sqrt(aspect), width)
            h = min(side / np.sqrt(aspect), height)
            x = float(rng.uniform(0, width - w))
            y = float(rng.uniform(0, height - h))
            # integer pixel grid keeps containment exact
            x, y = float(np.floor(x)), float(np.floor(y))
            w, h = float(max(1.0, np.floor(w))), float(max(1.0, np.floor(h)))
            objs.append(GroundTruthObject(oid, iid, BBox(x, y, w, h), int(c)))
            oid += 1
        images.append(ImageRecord(iid, float(width), float(height), tuple(objs)))
    return Dataset(vocab, images)


def cityscapes_like(num_images: int = 400, objects_per_image: int = 12, seed: int = 0) -> Dataset:
    """Eight street-scene classes on 2048x1024 images."""
    return make_synthetic_dataset(
        num_images,
        CITYSCAPES_FREQS,
        objects_per_image=objects_per_image,
        image_size=(2048, 1024),
        size_range=(0.02, 0.5),
        seed=seed,
        class_names=CITYSCAPES_CLASSES,
    )
