#!/usr/bin/env python3
"""End-to-end demo on the bundled fixture.

Loads the fixture manifest, clusters it, generates a storyline under the
default budget, and compares the result against the brute-force optimum
and both baselines.

Usage: python scripts/demo_storyline.py [--k 3] [--n-max 8] [--seed 0]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from wbp.clustering import cluster_materials, format_assignment  # noqa: E402
from wbp.features import load_manifest  # noqa: E402
from wbp.model import load_model  # noqa: E402
from wbp.oracle import (  # noqa: E402
    baseline_greedy,
    baseline_random,
    brute_force_storyline,
)
from wbp.seeds import sub_seed  # noqa: E402
from wbp.sequencer import SolverConfig, generate_storyline  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--manifest", default=str(FIXTURES / "manifest.json"))
    ap.add_argument("--model", default=str(FIXTURES / "model.lwc"))
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    mset = load_manifest(args.manifest)
    model = load_model(args.model)

    assignment = cluster_materials(mset, args.k, seed=sub_seed(args.seed, "clustering"))
    print("cluster assignment:")
    print(format_assignment(assignment))

    story = generate_storyline(mset, model, args.k, args.n_max,
                               SolverConfig(n_max=args.n_max, seed=args.seed))
    print("storyline:")
    for item in story.items:
        print(f"  {item.id:<12} cluster={item.cluster} duration={item.duration_s}s")
    print(f"objective: {story.total_objective:.6f}")

    if len(mset) <= 8 and args.k <= 3:
        exact = brute_force_storyline(mset, model, assignment, args.n_max)
        print(f"\nbrute-force optimum: {exact.total_objective:.6f} "
              f"({exact.metadata['states']} states)")
    greedy = baseline_greedy(mset, model, args.n_max)
    rand = baseline_random(mset, args.n_max, seed=sub_seed(args.seed, "baselines"),
                           model=model)
    print(f"greedy baseline:     {greedy.total_objective:.6f}")
    print(f"random baseline:     {rand.total_objective:.6f}")


if __name__ == "__main__":
    main()
