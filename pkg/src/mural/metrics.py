"""Class-distribution statistics of annotated labels."""

from __future__ import annotations

import csv
import io
import math
from typing import Sequence


def class_entropy(counts: Sequence[int]) -> float:
    """Shannon entropy in nats of the empirical distribution; 0 for no labels."""
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log(p)
    return h


def kl_to_uniform(counts: Sequence[int]) -> float:
    """KL(p || uniform) in nats; 0 for no labels."""
    total = sum(counts)
    if total == 0:
        return 0.0
    k = len(counts)
    return sum((c / total) * math.log(c * k / total) for c in counts if c > 0)


def compute_metrics(reports) -> list[dict]:
    """
    Cumulative per-cycle summary rows.

    Entropy and KL are taken over the classes of all labels acquired up to
    and including each cycle (the initial seed pool is not included).
    """
    if not reports:
        raise ValueError("need at least one cycle report")
    rows = []
    cum_class = [0] * len(reports[0].annotated_per_class)
    cum_scale = [0] * len(reports[0].annotated_per_scale)
    labels = 0
    for r in reports:
        cum_class = [a + b for a, b in zip(cum_class, r.annotated_per_class)]
        cum_scale = [a + b for a, b in zip(cum_scale, r.annotated_per_scale)]
        labels += r.budget_consumed
        row = {
            "cycle": r.cycle_index,
            "strategy": r.strategy,
            "entropy": class_entropy(cum_class),
            "kl_uniform": kl_to_uniform(cum_class),
            "labels_cum": labels,
        }
        for s, n in enumerate(cum_scale):
            row[f"per_scale_{s}"] = n / labels if labels else 0.0
        rows.append(row)
    return rows


def metrics_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
