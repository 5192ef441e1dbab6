"""Informative region scores, plain and class re-weighted."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .candidates import RegionCandidate
from .data import DatasetState, Detection, RunConfig


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class ClassDistribution:
    probs: tuple[float, ...]
    smoothing: str
    source_count: int

    def __getitem__(self, class_id: int) -> float:
        return self.probs[class_id]

    def __len__(self) -> int:
        return len(self.probs)


def class_distribution(counts: Sequence[int], smoothing: str = "laplace") -> ClassDistribution:
    """
    Empirical class frequencies of the labeled pool.

    With ``"laplace"`` every class gets one pseudo-count. Without smoothing a
    class with no labels would have probability zero, which the re-weighting
    cannot divide by, so that case raises.
    """
    if not counts:
        raise ScoringError("class vocabulary is empty")
    if any(c < 0 for c in counts):
        raise ScoringError(f"negative class count in {list(counts)}")
    total = sum(counts)
    if smoothing == "laplace":
        denom = total + len(counts)
        probs = tuple((c + 1) / denom for c in counts)
    elif smoothing == "none":
        if total == 0 or any(c == 0 for c in counts):
            raise ScoringError("distribution has zero mass class; re-weighting undefined")
        probs = tuple(c / total for c in counts)
    else:
        raise ValueError(f"unknown smoothing {smoothing!r}")
    return ClassDistribution(probs, smoothing, total)


def _detections(candidate) -> Sequence[Detection]:
    dets = candidate.assigned_detections if isinstance(candidate, RegionCandidate) else candidate
    if len(dets) == 0:
        raise ScoringError("region has no detections; score undefined")
    return dets


def informative_score(candidate) -> float:
    """Mean uncertainty ``1 - confidence`` over the region's detections."""
    dets = _detections(candidate)
    return sum(1.0 - d.confidence for d in dets) / len(dets)


def reweighted_score(candidate, dist: ClassDistribution) -> float:
    """Mean over detections of ``(1 - confidence) / p(predicted class)``."""
    dets = _detections(candidate)
    total = 0.0
    for d in dets:
        p = dist[d.class_id]
        if p <= 0:
            raise ScoringError(f"class {d.class_id} has zero probability")
        total += (1.0 - d.confidence) / p
    return total / len(dets)


def score_candidates(
    candidates: Sequence[RegionCandidate],
    state: DatasetState,
    config: RunConfig,
    num_classes: int,
    reweight: bool = True,
) -> list[RegionCandidate]:
    """
    Set each candidate's score in place and return the same candidates.

    The class distribution is recomputed from ``state``'s labeled objects on
    every call.
    """
    if reweight:
        dist = class_distribution(state.class_counts(num_classes), config.smoothing)
        for c in candidates:
            c.score = reweighted_score(c, dist)
    else:
        for c in candidates:
            c.score = informative_score(c)
    return list(candidates)
