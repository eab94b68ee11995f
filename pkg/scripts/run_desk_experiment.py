#!/usr/bin/env python3
"""Desk-scale run of the full pipeline: three dataset groups, splits, baselines.

Builds 4-vehicle, 8-vehicle, and mixed-vehicle balanced datasets, exports
fine-tuning JSONL splits, then scores the reference controller (fixed point)
and the degenerate always-no / always-yes baselines on each test split.
"""

import argparse
import json
from pathlib import Path

from junction.controller import make_controller
from junction.evaluation import evaluate_corpus, summary_to_obj, summary_to_text
from junction.layout import default_layout
from junction.oracle import OracleConfig, analyze
from junction.promptkit import build_bundle, export_jsonl, split_dataset
from junction.scenario import GenParams, generate_dataset

GROUPS = {
    "4-vehicle": (4, 4),
    "8-vehicle": (8, 8),
    "mixed-vehicle": (2, 8),
}

CONTROLLERS = ["reference", "mock:no", "mock:yes"]


def run_group(name, count_range, n, seed, out, layout, cfg):
    print(f"== {name}: generating {n} balanced scenarios (seed {seed})")
    params = GenParams(vehicle_count_range=count_range, conflict_balance=0.5, seed=seed)
    corpus = generate_dataset(params, n, layout, cfg)

    bundles = [build_bundle(s, layout, cfg, analysis=a) for s, a in corpus]
    split = split_dataset(bundles, (0.7, 0.1, 0.2), seed)
    group_dir = out / name
    group_dir.mkdir(parents=True, exist_ok=True)
    for part_name, part in (
        ("train", split.train),
        ("validation", split.validation),
        ("test", split.test),
    ):
        export_jsonl(part, group_dir / f"{part_name}.jsonl")
    print(
        f"   exported splits {len(split.train)}/{len(split.validation)}/{len(split.test)}"
    )

    test_corpus = [(b.scenario, analyze(b.scenario, layout, cfg)) for b in split.test]
    results = {}
    for selector in CONTROLLERS:
        controller = make_controller(selector, layout, cfg)
        summary = evaluate_corpus(controller, test_corpus, layout, cfg)
        results[selector] = summary
        (group_dir / f"summary_{selector.replace(':', '_')}.json").write_text(
            json.dumps(summary_to_obj(summary), indent=2) + "\n", "utf-8"
        )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000, help="scenarios per group")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="runs/desk")
    args = parser.parse_args()

    layout = default_layout()
    cfg = OracleConfig()
    out = Path(args.out)

    all_results = {}
    for name, count_range in GROUPS.items():
        all_results[name] = run_group(name, count_range, args.n, args.seed, out, layout, cfg)

    print("\n================ test-split results ================")
    header = f"{'group':<14} {'controller':<11} {'acc':>6} {'prec':>6} {'rec':>6} {'f1':>6}"
    print(header)
    print("-" * len(header))
    for name, results in all_results.items():
        for selector, summary in results.items():
            m = summary.metrics
            print(
                f"{name:<14} {selector:<11} {m.accuracy:>6.3f} {m.precision:>6.3f} "
                f"{m.recall:>6.3f} {m.f1:>6.3f}"
            )
    print(f"\nartifacts under {out}/")
    print("\nreference-controller detail (mixed-vehicle):")
    print(summary_to_text(all_results["mixed-vehicle"]["reference"]))


if __name__ == "__main__":
    main()
