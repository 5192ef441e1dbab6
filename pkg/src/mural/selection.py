"""Scale-aware round-robin selection under an object-label budget."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .candidates import RegionCandidate

OK = "ok"
POOL_EXHAUSTED = "pool exhausted"


@dataclass
class SelectionResult:
    selected: list[RegionCandidate]
    budget_requested: int
    budget_consumed: int
    per_scale_counts: list[int]
    exhausted_scales: set[int]
    # object count charged for each selected region, same order as ``selected``
    object_counts: list[int] = field(default_factory=list)
    cycle_index: int = 0

    @property
    def status(self) -> str:
        return OK if self.budget_consumed >= self.budget_requested else POOL_EXHAUSTED

    def to_json(self) -> dict:
        return {
            "cycle": self.cycle_index,
            "status": self.status,
            "budget_requested": self.budget_requested,
            "budget_consumed": self.budget_consumed,
            "per_scale_counts": self.per_scale_counts,
            "exhausted_scales": sorted(self.exhausted_scales),
            "regions": [
                {
                    "image_id": c.image_id,
                    "scale": c.scale_index,
                    "bbox": c.region_original.to_list(),
                    "score": c.score,
                    "n_o": n,
                }
                for c, n in zip(self.selected, self.object_counts)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def sort_by_score(candidates: Sequence[RegionCandidate]) -> list[RegionCandidate]:
    """Descending score; ties by (image_id, y, x) of the scaled region."""
    for c in candidates:
        if c.score is None:
            raise ValueError(f"candidate in image {c.image_id} has no score")
    return sorted(candidates, key=lambda c: (-c.score, *c.sort_key))


def scale_aware_select(
    candidates_by_scale: Sequence[Sequence[RegionCandidate]],
    budget: int,
    object_count_fn: Callable[[RegionCandidate], int],
    cycle_index: int = 0,
) -> SelectionResult:
    """
    Visit scales in turn, popping each scale's best remaining candidate and
    charging its object count, until the accumulated count reaches ``budget``.

    The budget is checked after every pop, so the last region may overshoot
    it. Empty scales are skipped. ``object_count_fn`` is called exactly once
    per selected candidate, in selection order, so it may track objects
    already claimed earlier in the same round.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if len(candidates_by_scale) < 1:
        raise ValueError("need at least one scale")
    queues = [sort_by_score(cands) for cands in candidates_by_scale]
    heads = [0] * len(queues)
    selected: list[RegionCandidate] = []
    counts: list[int] = []
    per_scale = [0] * len(queues)
    acc = 0
    while acc < budget and any(h < len(q) for h, q in zip(heads, queues)):
        for s, q in enumerate(queues):
            if heads[s] >= len(q):
                continue
            cand = q[heads[s]]
            heads[s] += 1
            n = int(object_count_fn(cand))
            selected.append(cand)
            counts.append(n)
            per_scale[s] += 1
            acc += n
            if acc >= budget:
                break
    exhausted = {s for s, (h, q) in enumerate(zip(heads, queues)) if h >= len(q)}
    return SelectionResult(selected, budget, acc, per_scale, exhausted, counts, cycle_index)
