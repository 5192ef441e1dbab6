"""
Exit criteria for the selection engine and simulator.

Each test records one PASS/FAIL line, printed in the pytest terminal summary.
"""

import json
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from mural.candidates import RegionCandidate, enumerate_windows, greedy_cover
from mural.cli import main
from mural.data import Detection, ImageRecord, RunConfig, ScaleSpec, save_dataset
from mural.geometry import BBox, contains
from mural.metrics import compute_metrics
from mural.scoring import ClassDistribution, informative_score, reweighted_score
from mural.selection import scale_aware_select
from mural.simulator import STRATEGIES, ClassSkill, DetectorModel, cityscapes_like, make_synthetic_dataset, run_simulation
from oracles import literal_region_candidates


def record(number, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, f"criterion {number} failed: {detail}"


def _cover_instances(n, seed=2024):
    """Random (windows, boxes) pairs with stride-1 windows, <= 100 windows and <= 20 boxes."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        w, h, f = int(rng.integers(2, 9)), int(rng.integers(2, 9)), int(rng.integers(1, 4))
        windows = enumerate_windows(ImageRecord(0, float(w), float(h)), float(f), 1)
        if len(windows) > 100:
            continue
        sw, sh = w * f, h * f
        boxes = []
        for _ in range(int(rng.integers(0, 21))):
            bw, bh = int(rng.integers(1, w + 2)), int(rng.integers(1, h + 2))
            bw, bh = min(bw, sw), min(bh, sh)
            x, y = int(rng.integers(0, sw - bw + 1)), int(rng.integers(0, sh - bh + 1))
            boxes.append(BBox(float(x), float(y), float(bw), float(bh)))
        out.append((windows, boxes))
    return out


INSTANCES = _cover_instances(200)


def test_1_algorithm1_oracle_equivalence():
    t0 = time.perf_counter()
    mismatches = 0
    for windows, boxes in INSTANCES:
        fast = greedy_cover(windows, boxes)
        # the literal loop emits one zero-object window when nothing fits anywhere; that is not a candidate
        ref = [c for c in literal_region_candidates(windows, boxes) if c[1]]
        mismatches += fast != ref
    elapsed = time.perf_counter() - t0
    record(1, "Algorithm 1 oracle equivalence", mismatches == 0 and elapsed < 10.0,
           f"{len(INSTANCES)} instances, {mismatches} mismatches, {elapsed:.2f}s (limit 10s)")


def test_2_coverage_invariant():
    violations = 0
    for windows, boxes in INSTANCES:
        cover = greedy_cover(windows, boxes)
        assigned = [j for _, idx in cover for j in idx]
        coverable = {j for j, b in enumerate(boxes) if any(contains(w, b) for w in windows)}
        violations += len(assigned) != len(set(assigned))
        violations += set(assigned) != coverable
        violations += sum(not all(contains(w, boxes[j]) for j in idx) for w, idx in cover)
    record(2, "Coverage invariant", violations == 0, f"{violations} violations over {len(INSTANCES)} instances")


def _region(pairs):
    dets = tuple(Detection(1, BBox(0, 0, 1, 1), k, c) for k, c in pairs)
    return RegionCandidate(1, 0, BBox(0, 0, 10, 10), BBox(0, 0, 10, 10), dets)


def test_3_equation_fixtures():
    tol = 1e-12
    checks = [
        (informative_score(_region([(0, 0.9), (0, 0.5)])), 0.3),
        (informative_score(_region([(0, 1.0)])), 0.0),
        (informative_score(_region([(0, 0.0)] * 3)), 1.0),
        (reweighted_score(_region([(0, 0.5)]), ClassDistribution((0.25, 0.75), "none", 4)), 2.0),
        (reweighted_score(_region([(0, 0.8), (1, 0.6)]), ClassDistribution((0.5, 0.1, 0.4), "none", 10)), 2.2),
    ]
    rng = np.random.default_rng(3)
    for _ in range(100):
        r = _region([(int(rng.integers(4)), float(rng.random())) for _ in range(int(rng.integers(1, 9)))])
        checks.append((reweighted_score(r, ClassDistribution((0.25,) * 4, "laplace", 0)), 4 * informative_score(r)))
    worst = max(abs(a - b) for a, b in checks)
    record(3, "Equation fixtures", worst <= tol, f"{len(checks)} checks, max |error| {worst:.2e} (tol 1e-12)")


def _cand(scale, score, n, i):
    c = RegionCandidate(1, scale, BBox(float(i), 0, 1, 1), BBox(float(i), 0, 1, 1), (), score)
    c.object_ids = tuple(range(n))
    return c


def _n(c):
    return len(c.object_ids)


def test_4_algorithm2_hand_trace_and_overshoot():
    lists = [[_cand(s, 0.9, 2, 0), _cand(s, 0.5, 2, 1)] for s in range(3)]
    res = scale_aware_select(lists, 5, _n)
    trace_ok = len(res.selected) == 3 and res.budget_consumed == 6 and res.per_scale_counts == [1, 1, 1]

    rng = np.random.default_rng(4)
    violations = 0
    for _ in range(500):
        t = int(rng.integers(1, 5))
        lists = [[_cand(s, float(rng.random()), int(rng.integers(1, 8)), i) for i in range(int(rng.integers(0, 40)))] for s in range(t)]
        if not any(lists):
            lists[0].append(_cand(0, 0.5, 1, 0))
        budget = int(rng.integers(1, 100))
        res = scale_aware_select(lists, budget, _n)
        max_n = max(_n(c) for l in lists for c in l)
        violations += not (res.budget_consumed - budget < max_n)
    record(4, "Algorithm 2 hand trace and overshoot bound", trace_ok and violations == 0,
           f"hand trace {'ok' if trace_ok else 'wrong'}; {violations} overshoot violations over 500 instances")


def test_5_round_robin_fairness():
    rng = np.random.default_rng(5)
    checked = violations = 0
    while checked < 200:
        t = int(rng.integers(2, 5))
        lists = [[_cand(s, float(rng.random()), int(rng.integers(0, 6)), i) for i in range(int(rng.integers(5, 40)))] for s in range(t)]
        res = scale_aware_select(lists, int(rng.integers(1, 80)), _n)
        if res.exhausted_scales:
            continue
        checked += 1
        violations += max(res.per_scale_counts) - min(res.per_scale_counts) > 1
    record(5, "Round-robin fairness", violations == 0, f"{violations} violations over {checked} instances")


def test_6_acquisition_ledger():
    ds = make_synthetic_dataset(150, (0.72, 0.12, 0.08, 0.05, 0.03), objects_per_image=10, seed=6)
    cfg = RunConfig(budget_per_cycle=100, num_cycles=6)
    violations = []
    for strategy in STRATEGIES:
        res = run_simulation(ds, cfg, DetectorModel.uniform(5), strategy)
        if len(res.reports) != 6:
            violations.append(f"{strategy}: {len(res.reports)} cycles")
        growth = len(res.final_state.labeled_objects) - len(res.initial_state.labeled_objects)
        if sum(r.budget_consumed for r in res.reports) != growth:
            violations.append(f"{strategy}: ledger")
        for prev, cur in zip(res.states, res.states[1:]):
            for oid, lo in prev.labeled_objects.items():
                if cur.labeled_objects.get(oid) != lo:
                    violations.append(f"{strategy}: object {oid} relabeled")
        final = res.final_state
        for lo in final.labeled_objects.values():
            if not contains(final.labeled_regions[lo.region_index].box, lo.clipped_box):
                violations.append(f"{strategy}: object {lo.object_id} outside its region")
    record(6, "Acquisition ledger", not violations, f"{len(violations)} violations across {len(STRATEGIES)} strategies x 6 cycles")


def test_7_selected_category_balance():
    t0 = time.perf_counter()
    freqs = (0.72, 0.12, 0.08, 0.05, 0.03)
    ds = make_synthetic_dataset(200, freqs, objects_per_image=10, seed=0)
    cfg = RunConfig(budget_per_cycle=100, num_cycles=6)
    # equal confidence for every prediction: no class-dependent skill, no noise
    model = DetectorModel.uniform(5, ClassSkill(0.5, 0.0, 0.0), box_jitter=0.0, false_positive_rate=0.0, confidence_noise=0.0)
    entropy = {}
    for strategy in ("mural", "mural_unweighted", "coarse_confidence"):
        reports = run_simulation(ds, cfg, model, strategy).reports
        entropy[strategy] = compute_metrics(reports)[-1]["entropy"]
    elapsed = time.perf_counter() - t0
    gap = entropy["mural"] - entropy["mural_unweighted"]
    ok = ds.num_objects == 2000 and gap >= 0.15 and entropy["mural"] > entropy["coarse_confidence"] and elapsed < 60
    record(7, "Selected category balance", ok,
           f"entropy mural {entropy['mural']:.4f}, unweighted {entropy['mural_unweighted']:.4f} (gap {gap:.4f} >= 0.15), "
           f"coarse_confidence {entropy['coarse_confidence']:.4f}; {elapsed:.1f}s (limit 60s)")


def test_8_paper_configuration_smoke(tmp_path):
    save_dataset(cityscapes_like(num_images=400, objects_per_image=12, seed=0), tmp_path / "cs.json")
    cfg = RunConfig(scales=(ScaleSpec(2400, 3200), ScaleSpec(1024, 2048), ScaleSpec(600, 1200)), budget_per_cycle=500, num_cycles=6)
    (tmp_path / "cfg.json").write_text(json.dumps(cfg.to_json()))
    codes = []
    for name in ("a", "b"):
        codes.append(main([
            "simulate", "--dataset", str(tmp_path / "cs.json"), "--config", str(tmp_path / "cfg.json"),
            "--strategy", "mural", "--seed", "0", "--out-dir", str(tmp_path / name),
        ]))
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    identical = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    reports = [json.loads(line) for line in (tmp_path / "a" / "run_log.jsonl").read_text().splitlines()]
    vocab = json.loads((tmp_path / "cs.json").read_text())["categories"]
    ok = (
        codes == [0, 0]
        and identical
        and len(vocab) == 8
        and cfg.num_scales == 3
        and len(reports) == 6
        and all(r["budget_consumed"] >= 500 for r in reports)
    )
    record(8, "Paper-configuration smoke test", ok,
           f"exit codes {codes}, {len(reports)} cycles, consumed {[r['budget_consumed'] for r in reports]}, "
           f"byte-identical rerun: {identical}")


def test_9_scoring_monotonicity():
    rng = np.random.default_rng(9)
    fails = {"confidence": 0, "class_prob": 0, "ranking": 0}
    for _ in range(1000):
        k = int(rng.integers(2, 9))
        probs = rng.dirichlet(np.ones(k))
        dist = ClassDistribution(tuple(float(p) for p in probs), "none", 0)
        pairs = [(int(rng.integers(k)), float(rng.uniform(0, 0.99))) for _ in range(int(rng.integers(1, 9)))]
        base = reweighted_score(_region(pairs), dist)

        i = int(rng.integers(len(pairs)))
        lowered = list(pairs)
        lowered[i] = (pairs[i][0], pairs[i][1] * float(rng.uniform(0, 0.99)))
        fails["confidence"] += not reweighted_score(_region(lowered), dist) > base

        o = pairs[int(rng.integers(len(pairs)))][0]
        shrunk = list(dist.probs)
        shrunk[o] *= float(rng.uniform(0.01, 0.99))
        fails["class_prob"] += not reweighted_score(_region(pairs), ClassDistribution(tuple(shrunk), "none", 0)) > base

        regions = [_region([(int(rng.integers(k)), float(rng.random())) for _ in range(int(rng.integers(1, 6)))]) for _ in range(8)]
        uniform = ClassDistribution((1.0 / k,) * k, "laplace", 0)
        # every reciprocal 1/p multiplied by the same constant
        const = float(rng.uniform(0.1, 10))
        scaled = ClassDistribution(tuple(float(p) / const for p in probs), "none", 0)
        plain = np.argsort([-informative_score(r) for r in regions], kind="stable")
        weighted = np.argsort([-reweighted_score(r, uniform) for r in regions], kind="stable")
        w1 = np.argsort([-reweighted_score(r, dist) for r in regions], kind="stable")
        w2 = np.argsort([-reweighted_score(r, scaled) for r in regions], kind="stable")
        fails["ranking"] += not (np.array_equal(plain, weighted) and np.array_equal(w1, w2))
    total = sum(fails.values())
    record(9, "Scoring monotonicity", total == 0, f"failures per property over 1000 cases each: {fails}")
