"""
Active learning cycles against a simulated detector and annotator.

Each cycle runs inference on the unlabeled pool, picks what to label with the
chosen strategy, labels it from ground truth and records a CycleReport.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..acquisition import CycleReport, CycleTally, acquire, label_instance, object_counter
from ..candidates import eligible_detections, generate_multiscale_candidates
from ..data import INSTANCE, Dataset, DatasetState, RunConfig, initial_state, label_whole_image
from ..geometry import coverage_fraction, iou
from ..scoring import score_candidates
from ..selection import OK, POOL_EXHAUSTED, scale_aware_select
from .detector import DetectorModel, simulate_detections

STRATEGIES = (
    "mural",
    "mural_unweighted",
    "coarse_random",
    "coarse_confidence",
    "fine_random",
    "fine_confidence",
)


class UnknownStrategyError(ValueError):
    pass


@dataclass
class RunResult:
    strategy: str
    reports: list[CycleReport]
    states: list[DatasetState] = field(default_factory=list)

    @property
    def initial_state(self) -> DatasetState:
        return self.states[0]

    @property
    def final_state(self) -> DatasetState:
        return self.states[-1]


def _detections(dataset: Dataset, state: DatasetState, model: DetectorModel, config: RunConfig):
    for iid in sorted(state.unlabeled_images):
        image = dataset.image(iid)
        dets = eligible_detections(simulate_detections(image, model, state), state, config.confidence_threshold)
        yield image, dets


def _region_cycle(dataset, state, config, model, reweight, strategy):
    by_scale = [[] for _ in config.scales]
    for image, dets in _detections(dataset, state, model, config):
        for s, cands in enumerate(generate_multiscale_candidates(image, dets, config)):
            by_scale[s].extend(cands)
    all_cands = [c for cands in by_scale for c in cands]
    score_candidates(all_cands, state, config, len(dataset.vocabulary), reweight=reweight)
    selection = scale_aware_select(
        by_scale, config.budget_per_cycle, object_counter(dataset, state, config), state.cycle_index
    )
    return acquire(selection, state, dataset, config, strategy)


def _image_score(dets, aggregation: str) -> float:
    if not dets:
        return 0.0
    unc = [1.0 - d.confidence for d in dets]
    return max(unc) if aggregation == "max" else sum(unc) / len(unc)


def _coarse_cycle(dataset, state, config, model, by_confidence, strategy):
    if by_confidence:
        scored = [(-_image_score(dets, config.coarse_aggregation), im.image_id) for im, dets in _detections(dataset, state, model, config)]
        order = [iid for _, iid in sorted(scored)]
    else:
        rng = np.random.default_rng([config.rng_seed, state.cycle_index, 1])
        order = [int(i) for i in rng.permutation(sorted(state.unlabeled_images))]

    new = state.copy()
    tally = CycleTally(len(dataset.vocabulary), config.num_scales)
    acc = 0
    for iid in order:
        if acc >= config.budget_per_cycle:
            break
        objs = label_whole_image(new, dataset.image(iid))
        tally.add(iid, objs, -1)
        acc += len(objs)
    status = OK if acc >= config.budget_per_cycle else POOL_EXHAUSTED
    report = tally.report(state.cycle_index, strategy, config.budget_per_cycle, status)
    new.cycle_index += 1
    return new, report


def _best_match(image, det, labeled, threshold):
    best, best_key = None, None
    for obj in image.objects:
        if obj.object_id in labeled:
            continue
        cov = coverage_fraction(obj.box, det.box)
        if cov <= threshold:
            continue
        key = (cov, iou(obj.box, det.box), -obj.object_id)
        if best_key is None or key > best_key:
            best, best_key = obj, key
    return best


def _fine_cycle(dataset, state, config, model, by_confidence, strategy):
    pool = [(image, d) for image, dets in _detections(dataset, state, model, config) for d in dets]
    if by_confidence:
        pool.sort(key=lambda p: (p[1].confidence, p[0].image_id, p[1].box.y, p[1].box.x))
    else:
        rng = np.random.default_rng([config.rng_seed, state.cycle_index, 2])
        pool = [pool[i] for i in rng.permutation(len(pool))]

    new = state.copy()
    tally = CycleTally(len(dataset.vocabulary), config.num_scales)
    acc = 0
    for image, det in pool:
        if acc >= config.budget_per_cycle:
            break
        obj = _best_match(image, det, new.labeled_objects, config.overlap_threshold)
        if obj is None:
            continue
        label_instance(new, image, obj, INSTANCE)
        tally.add(image.image_id, [obj], INSTANCE)
        acc += 1
    status = OK if acc >= config.budget_per_cycle else POOL_EXHAUSTED
    report = tally.report(state.cycle_index, strategy, config.budget_per_cycle, status)
    new.cycle_index += 1
    return new, report


def run_cycle(dataset: Dataset, state: DatasetState, config: RunConfig, model: DetectorModel, strategy: str):
    """One acquisition round; returns the new state and its report."""
    if strategy == "mural":
        return _region_cycle(dataset, state, config, model, True, strategy)
    if strategy == "mural_unweighted":
        return _region_cycle(dataset, state, config, model, False, strategy)
    if strategy in ("coarse_random", "coarse_confidence"):
        return _coarse_cycle(dataset, state, config, model, strategy == "coarse_confidence", strategy)
    if strategy in ("fine_random", "fine_confidence"):
        return _fine_cycle(dataset, state, config, model, strategy == "fine_confidence", strategy)
    raise UnknownStrategyError(f"unknown strategy {strategy!r}; valid: {', '.join(STRATEGIES)}")


def run_simulation(
    dataset: Dataset,
    config: RunConfig,
    model: DetectorModel,
    strategy: str,
    state: Optional[DatasetState] = None,
) -> RunResult:
    """
    Run up to ``config.num_cycles`` cycles, stopping early once the pool is
    exhausted. Every intermediate state is kept, starting with the initial one.
    """
    if strategy not in STRATEGIES:
        raise UnknownStrategyError(f"unknown strategy {strategy!r}; valid: {', '.join(STRATEGIES)}")
    if state is None:
        state = initial_state(dataset, config.initial_labeled_fraction, config.rng_seed)
    if not model.class_totals:
        model = model.for_dataset(dataset)
    result = RunResult(strategy, [], [state])
    for _ in range(config.num_cycles):
        state, report = run_cycle(dataset, state, config, model, strategy)
        result.reports.append(report)
        result.states.append(state)
        if report.status == POOL_EXHAUSTED:
            break
    return result


def run_loop(dataset: Dataset, config: RunConfig, model: DetectorModel, strategy: str) -> list[CycleReport]:
    return run_simulation(dataset, config, model, strategy).reports
