"""
Command-line entry point.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .acquisition import id_counter, objects_for_region
from .candidates import RegionCandidate, eligible_detections, generate_multiscale_candidates
from .data import (
    DatasetError,
    DatasetState,
    RunConfig,
    StateError,
    load_config,
    load_dataset,
    load_predictions,
    load_state,
    save_dataset,
    save_state,
)
from .metrics import compute_metrics, metrics_csv
from .scoring import ScoringError, score_candidates
from .selection import scale_aware_select
from .simulator import STRATEGIES, DetectorModel, cityscapes_like, make_synthetic_dataset, run_simulation

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_candidates(args) -> int:
    dataset = load_dataset(args.dataset)
    config = load_config(args.config) if args.config else RunConfig()
    predictions = load_predictions(args.predictions, dataset)
    if args.state:
        state = load_state(args.state)
    else:
        state = DatasetState(unlabeled_images={im.image_id for im in dataset.images})

    by_image: dict[int, list] = {}
    for det in eligible_detections(predictions, state, config.confidence_threshold):
        by_image.setdefault(det.image_id, []).append(det)

    cands: list[RegionCandidate] = []
    for iid in sorted(state.unlabeled_images):
        image = dataset.image(iid)
        for scale_cands in generate_multiscale_candidates(image, by_image.get(iid, []), config):
            for c in scale_cands:
                c.object_ids = tuple(o.object_id for o, _ in objects_for_region(c, image, config, state.labeled_objects))
                cands.append(c)
    score_candidates(cands, state, config, len(dataset.vocabulary), reweight=not args.unweighted)
    doc = {
        "cycle": state.cycle_index,
        "num_scales": config.num_scales,
        "candidates": [c.to_json() for c in cands],
    }
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    print(f"{len(cands)} candidates over {len(state.unlabeled_images)} images -> {args.out}")
    return EXIT_OK


def cmd_select(args) -> int:
    if args.budget < 1:
        raise UsageError(f"--budget must be >= 1, got {args.budget}")
    try:
        doc = json.loads(Path(args.candidates).read_text())
        cands = [RegionCandidate.from_json(c) for c in doc["candidates"]]
        cycle = int(doc["cycle"])
        num_scales = int(doc["num_scales"])
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        raise DatasetError(f"{args.candidates}: malformed candidate dump: {err!r}") from None
    state = load_state(args.state)
    if cycle != state.cycle_index:
        raise UsageError(f"candidate dump is for cycle {cycle} but state is at cycle {state.cycle_index}")
    by_scale = [[] for _ in range(max(num_scales, 1))]
    for c in cands:
        if not 0 <= c.scale_index < num_scales:
            raise DatasetError(f"{args.candidates}: candidate with scale_index {c.scale_index} outside [0, {num_scales})")
        by_scale[c.scale_index].append(c)
    result = scale_aware_select(by_scale, args.budget, id_counter(state), cycle)
    _write(args.out, result.dumps() + "\n")
    print(
        f"status={result.status} regions={len(result.selected)} "
        f"budget={result.budget_consumed}/{result.budget_requested} per_scale={result.per_scale_counts}"
    )
    return EXIT_OK


def _strategies(value: str) -> list[str]:
    if value == "all":
        return list(STRATEGIES)
    names = [s.strip() for s in value.split(",") if s.strip()]
    bad = [s for s in names if s not in STRATEGIES]
    if bad or not names:
        raise UsageError(f"unknown strategy {', '.join(bad) or value!r}; valid: {', '.join(STRATEGIES)}")
    return names


def cmd_simulate(args) -> int:
    if args.strategy == "help":
        print("\n".join(STRATEGIES))
        return EXIT_OK
    strategies = _strategies(args.strategy)
    if not args.dataset or not args.out_dir:
        raise UsageError("simulate needs --dataset and --out-dir")
    dataset = load_dataset(args.dataset)
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)
    if args.detector:
        try:
            model = DetectorModel.from_json(json.loads(Path(args.detector).read_text()), len(dataset.vocabulary))
        except (json.JSONDecodeError, TypeError, ValueError) as err:
            raise DatasetError(f"{args.detector}: {err}") from None
    else:
        model = DetectorModel.uniform(len(dataset.vocabulary))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_lines, rows = [], []
    for strategy in strategies:
        result = run_simulation(dataset, config, model, strategy)
        for r in result.reports:
            log_lines.append(r.dumps())
            print(
                f"[{strategy}] cycle {r.cycle_index}: labeled {r.budget_consumed}/{r.budget_requested} "
                f"in {r.num_regions} units, entropy {r.selected_class_entropy:.4f}, {r.status}"
            )
        rows.extend(compute_metrics(result.reports))
        save_state(result.final_state, out / f"state_{strategy}.json")
    _write(out / "run_log.jsonl", "\n".join(log_lines) + "\n")
    _write(out / "metrics.csv", metrics_csv(rows))
    return EXIT_OK


def cmd_fixture(args) -> int:
    if args.kind == "cityscapes":
        ds = cityscapes_like(args.images, seed=args.seed)
    else:
        ds = make_synthetic_dataset(args.images, (0.72, 0.12, 0.08, 0.05, 0.03), seed=args.seed)
    save_dataset(ds, args.out)
    print(f"{len(ds.images)} images, {ds.num_objects} objects -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mural", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("candidates", help="generate and score region candidates from a predictions file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--config")
    p.add_argument("--state", help="pool state; defaults to an empty labeled pool at cycle 0")
    p.add_argument("--unweighted", action="store_true", help="skip class re-weighting")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("select", help="scale-aware selection over a candidate dump")
    p.add_argument("--candidates", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run simulated active learning cycles")
    p.add_argument("--dataset")
    p.add_argument("--config")
    p.add_argument("--strategy", default="mural", help="name, comma-separated names, 'all', or 'help'")
    p.add_argument("--seed", type=int)
    p.add_argument("--detector", help="JSON file with synthetic detector parameters")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixture", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=("imbalanced", "cityscapes"), default="imbalanced")
    p.add_argument("--images", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DatasetError, StateError, ScoringError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001
        print(f"internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
