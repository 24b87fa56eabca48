"""Ground-truth brute force, naive baselines, and the revenue-uplift calculator.

The brute force exhausts every per-cluster ordered-arrangement choice and
is the reference the dynamic-programming path is verified against; it is
only viable on tiny instances.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment
from .errors import LoadError, UsageError
from .features import DEFAULT_INCENTIVE, MaterialSet, sequence_features
from .model import LwcModel, sequence_score
from .sequencer import NEG_INF, StoryBlock, StoryItem, Storyline

BRUTE_FORCE_MAX_MATERIALS = 8
BRUTE_FORCE_MAX_CLUSTERS = 3

UNCLUSTERED = -1


def brute_force_storyline(mset: MaterialSet, model: LwcModel,
                          labels: ClusterAssignment, n_max: int,
                          incentive: float | None = None) -> Storyline:
    """Exact optimum by exhausting all per-cluster choices with total length
    <= n_max; the number of states visited lands in metadata["states"]."""
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    if len(mset) > BRUTE_FORCE_MAX_MATERIALS:
        raise UsageError(
            f"brute force is bounded to {BRUTE_FORCE_MAX_MATERIALS} materials, "
            f"got {len(mset)}")
    clusters = labels.clusters()
    if len(clusters) > BRUTE_FORCE_MAX_CLUSTERS:
        raise UsageError(
            f"brute force is bounded to {BRUTE_FORCE_MAX_CLUSTERS} clusters, "
            f"got {len(clusters)}")
    if incentive is None:
        incentive = mset.incentive if mset.incentive is not None else DEFAULT_INCENTIVE

    # Score every ordered arrangement per cluster once; the empty choice has
    # length 0 and contributes nothing to the objective.
    choices: list[list[tuple[int, tuple[str, ...], float]]] = []
    for member_ids in clusters:
        ids = sorted(member_ids)
        options = [(0, (), 0.0)]
        for length in range(1, min(len(ids), n_max) + 1):
            for order in itertools.permutations(ids, length):
                value = sequence_score(
                    model, sequence_features(list(order), mset, incentive))
                options.append((length, order, value))
        choices.append(options)

    best_total = NEG_INF
    best_combo: tuple = ()
    states = 0
    for combo in itertools.product(*choices):
        if sum(c[0] for c in combo) > n_max:
            continue
        states += 1
        total = sum(c[2] for c in combo)
        if total > best_total:
            best_total = total
            best_combo = combo

    blocks = [StoryBlock(cluster=j, order=c[1], score=c[2])
              for j, c in enumerate(best_combo) if c[0] > 0]
    blocks.sort(key=lambda b: (-b.score, b.cluster))
    items = tuple(StoryItem(id=mid, cluster=b.cluster, duration_s=mset.get(mid).duration_s)
                  for b in blocks for mid in b.order)
    return Storyline(
        blocks=tuple(blocks), items=items,
        total_objective=sum((b.score for b in blocks), 0.0),
        metadata={"solver": "brute-force", "n_max": n_max, "states": states,
                  "incentive": incentive},
    )


def _single_block_storyline(mset: MaterialSet, order: list[str], score: float,
                            solver: str, n_max: int) -> Storyline:
    if not order:
        return Storyline(blocks=(), items=(), total_objective=0.0,
                         metadata={"solver": solver, "n_max": n_max})
    block = StoryBlock(cluster=UNCLUSTERED, order=tuple(order), score=score)
    items = tuple(StoryItem(id=mid, cluster=UNCLUSTERED,
                            duration_s=mset.get(mid).duration_s) for mid in order)
    return Storyline(blocks=(block,), items=items, total_objective=score,
                     metadata={"solver": solver, "n_max": n_max})


def baseline_random(mset: MaterialSet, n_max: int, seed: int = 0,
                    model: LwcModel | None = None,
                    incentive: float | None = None) -> Storyline:
    """Uniform budget-sized subset in uniform random order."""
    if len(mset) < 1:
        raise UsageError("material set is empty")
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    if incentive is None:
        incentive = mset.incentive if mset.incentive is not None else DEFAULT_INCENTIVE
    rng = np.random.default_rng(seed)
    ids = sorted(mset.ids())
    take = min(n_max, len(ids))
    order = [ids[i] for i in rng.permutation(len(ids))[:take]]
    score = 0.0
    if model is not None:
        score = sequence_score(model, sequence_features(order, mset, incentive))
    return _single_block_storyline(mset, order, score, "baseline-random", n_max)


def baseline_greedy(mset: MaterialSet, model: LwcModel, n_max: int,
                    incentive: float | None = None) -> Storyline:
    """Repeatedly append the material that maximizes the running sequence
    score; stops when no appending improves it or the budget is used."""
    if len(mset) < 1:
        raise UsageError("material set is empty")
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    if incentive is None:
        incentive = mset.incentive if mset.incentive is not None else DEFAULT_INCENTIVE
    remaining = sorted(mset.ids())
    order: list[str] = []
    current = 0.0
    while remaining and len(order) < n_max:
        best_id = None
        best_score = NEG_INF
        for mid in remaining:
            cand = sequence_score(
                model, sequence_features(order + [mid], mset, incentive))
            if cand > best_score:
                best_score = cand
                best_id = mid
        if best_score <= current:
            break
        order.append(best_id)
        remaining.remove(best_id)
        current = best_score
    return _single_block_storyline(mset, order, current if order else 0.0,
                                   "baseline-greedy", n_max)


# ---------------------------------------------------------------------------
# Expected-revenue uplift.

@dataclass(frozen=True)
class RevenueCategory:
    name: str
    weight: float    # share of real-world revenue, in [0, 1]
    score_x: float   # candidate system's persuasiveness score
    score_y: float   # reference system's persuasiveness score


@dataclass(frozen=True)
class RevenueInput:
    categories: tuple[RevenueCategory, ...]

    def __post_init__(self):
        if not self.categories:
            raise UsageError("revenue input needs at least one category")
        total = 0.0
        for c in self.categories:
            if not (0.0 <= c.weight <= 1.0):
                raise UsageError(f"category {c.name!r}: weight must be in [0, 1]")
            if c.score_y <= 0.0:
                raise UsageError(f"category {c.name!r}: score_y must be > 0")
            if c.score_x <= 0.0:
                raise UsageError(f"category {c.name!r}: score_x must be > 0")
            total += c.weight
        if total > 1.0 + 1e-9:
            raise UsageError(f"category weights sum to {total}, expected <= 1")


def expected_revenue_uplift(r: RevenueInput) -> float:
    """Weighted relative uplift: sum of weight * (x - y) / y over categories."""
    total = 0.0
    for c in r.categories:
        total += c.weight * (c.score_x - c.score_y) / c.score_y
    if not math.isfinite(total):
        raise UsageError("revenue uplift is non-finite")
    return total


def load_revenue_csv(path) -> RevenueInput:
    """CSV with header name,weight,x,y; one category per row."""
    categories = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            fields = set(reader.fieldnames or ())
            if not {"name", "weight", "x", "y"} <= fields:
                raise LoadError(f"{path}: expected header name,weight,x,y")
            for i, row in enumerate(reader):
                try:
                    categories.append(RevenueCategory(
                        name=row["name"],
                        weight=float(row["weight"]),
                        score_x=float(row["x"]),
                        score_y=float(row["y"])))
                except (TypeError, ValueError) as exc:
                    raise LoadError(f"{path}: row {i + 1}: {exc}") from exc
    except OSError as exc:
        raise LoadError(f"{path}: {exc}") from exc
    try:
        return RevenueInput(categories=tuple(categories))
    except UsageError as exc:
        raise LoadError(f"{path}: {exc}") from exc
