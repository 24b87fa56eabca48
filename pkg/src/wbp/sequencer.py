"""Storyline assembly: per-cluster sequence search plus a grouped knapsack.

For every cluster and every length we find the best ordered arrangement of
that many cluster materials (exhaustively below a size threshold, by beam
search above it).  A grouped-knapsack dynamic program then picks at most
one length per cluster under the total material budget, and the chosen
blocks are concatenated into the storyline.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import perm

from .clustering import cluster_materials
from .errors import UsageError
from .features import DEFAULT_INCENTIVE, MaterialSet
from .model import LwcModel, unit_sigmoid
from .seeds import sub_seed

STORYLINE_FORMAT = "wbp-storyline-v1"

EXHAUSTIVE_THRESHOLD_DEFAULT = 8
ENUMERATION_CAP_DEFAULT = 10 ** 6
BEAM_WIDTH_DEFAULT = 50
NEG_INF = float("-inf")


@dataclass(frozen=True)
class BestSequenceEntry:
    """Best ordering of a given length within one cluster, with its score."""

    order: tuple[str, ...]
    value: float


# One table row per cluster: length -> best entry.
BestSequenceRow = dict[int, BestSequenceEntry]


@dataclass(frozen=True)
class KnapsackSolution:
    chosen: dict[int, int]      # cluster index -> selected length (0 = none)
    total_value: float
    total_length: int


@dataclass(frozen=True)
class StoryBlock:
    cluster: int
    order: tuple[str, ...]
    score: float


@dataclass(frozen=True)
class StoryItem:
    id: str
    cluster: int
    duration_s: float


@dataclass(frozen=True)
class Storyline:
    blocks: tuple[StoryBlock, ...]
    items: tuple[StoryItem, ...]
    total_objective: float
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverConfig:
    n_max: int = 8
    seed: int = 0
    exhaustive_threshold: int = EXHAUSTIVE_THRESHOLD_DEFAULT
    enumeration_cap: int = ENUMERATION_CAP_DEFAULT
    beam_width: int = BEAM_WIDTH_DEFAULT
    incentive: float | None = None   # None: manifest override, else default
    threads: int = 1


class _ClusterScorer:
    """Incremental scorer over one cluster's materials.

    Positions are indices into the cluster's id list sorted lexicographically,
    so enumeration order equals lexicographic order of id sequences.
    """

    def __init__(self, cluster_ids, mset: MaterialSet, model: LwcModel, incentive: float):
        self.ids = sorted(cluster_ids)
        bound = 1.0 + incentive
        mats = [mset.get(mid) for mid in self.ids]
        self.s_a = [min(bound, max(0.0, m.aesthetics + (incentive if m.is_video else 0.0)))
                    for m in mats]
        self.s_e = [m.arousal for m in mats]
        m_count = len(self.ids)
        self.dissim = [[mset.dissim_between(self.ids[i], self.ids[j])
                        for j in range(m_count)] for i in range(m_count)]
        w = model.wundt
        a = model.accum
        self.params = (w.r_max, w.rho_r, w.d_r, w.p_max, w.rho_p, w.d_p)
        self.weights = (a.w_d, a.w_a, a.w_e)
        self.lams = (a.lambda_d, a.lambda_a, a.lambda_e)

    def extend(self, state, pos: int):
        """Append material `pos`; state = (last_pos, S_d, S_a, S_e)."""
        last, sd, sa, se = state
        lam_d, lam_a, lam_e = self.lams
        step_d = 1.0 if last < 0 else self.dissim[last][pos]
        sd = step_d + lam_d * sd
        sa = self.s_a[pos] + lam_a * sa
        se = self.s_e[pos] + lam_e * se
        return (pos, sd, sa, se)

    def score(self, state) -> float:
        _, sd, sa, se = state
        w_d, w_a, w_e = self.weights
        x = w_d * sd + w_a * sa + w_e * se
        r_max, rho_r, d_r, p_max, rho_p, d_p = self.params
        return (r_max * unit_sigmoid(rho_r * (x - d_r))
                - p_max * unit_sigmoid(rho_p * (x - d_p)))

    INITIAL = (-1, 0.0, 0.0, 0.0)


def enumeration_count(m: int, max_len: int) -> int:
    """Number of ordered arrangements of lengths 1..min(m, max_len)."""
    return sum(perm(m, l) for l in range(1, min(m, max_len) + 1))


def best_sequences_exact(cluster: list[str], mset: MaterialSet, model: LwcModel,
                         max_len: int,
                         threshold: int = EXHAUSTIVE_THRESHOLD_DEFAULT,
                         incentive: float = DEFAULT_INCENTIVE) -> BestSequenceRow:
    """Exhaustive best ordering per length; ties go to the lexicographically
    smallest id sequence."""
    if len(cluster) > threshold:
        raise UsageError(
            f"cluster of {len(cluster)} exceeds the exhaustive threshold {threshold}; "
            "use best_sequences_beam")
    if max_len < 1:
        raise UsageError("max_len must be >= 1")
    scorer = _ClusterScorer(cluster, mset, model, incentive)
    m = len(scorer.ids)
    limit = min(m, max_len)
    best_val = [NEG_INF] * (limit + 1)
    best_order: list[tuple[int, ...]] = [()] * (limit + 1)

    def dfs(state, used: int, prefix: tuple[int, ...]):
        depth = len(prefix) + 1
        for pos in range(m):
            bit = 1 << pos
            if used & bit:
                continue
            nstate = scorer.extend(state, pos)
            val = scorer.score(nstate)
            if val > best_val[depth]:
                best_val[depth] = val
                best_order[depth] = prefix + (pos,)
            if depth < limit:
                dfs(nstate, used | bit, prefix + (pos,))

    dfs(_ClusterScorer.INITIAL, 0, ())
    return {l: BestSequenceEntry(order=tuple(scorer.ids[p] for p in best_order[l]),
                                 value=best_val[l])
            for l in range(1, limit + 1)}


def best_sequences_beam(cluster: list[str], mset: MaterialSet, model: LwcModel,
                        max_len: int, beam_width: int = BEAM_WIDTH_DEFAULT,
                        incentive: float = DEFAULT_INCENTIVE) -> BestSequenceRow:
    """Left-to-right beam over partial orderings, ranked by current score.

    Heuristic: the curve is non-monotone, so a poor prefix can still lead to
    the best full sequence; no optimality claim.
    """
    if beam_width < 1:
        raise UsageError("beam_width must be >= 1")
    if max_len < 1:
        raise UsageError("max_len must be >= 1")
    scorer = _ClusterScorer(cluster, mset, model, incentive)
    m = len(scorer.ids)
    limit = min(m, max_len)
    row: BestSequenceRow = {}
    # Beam entries: (score, order tuple, used bitmask, state).
    beam = [(scorer.score(scorer.extend(scorer.INITIAL, p)), (p,), 1 << p,
             scorer.extend(scorer.INITIAL, p)) for p in range(m)]
    for length in range(1, limit + 1):
        beam.sort(key=lambda e: (-e[0], e[1]))
        beam = beam[:beam_width]
        top = beam[0]
        row[length] = BestSequenceEntry(
            order=tuple(scorer.ids[p] for p in top[1]), value=top[0])
        if length == limit:
            break
        nxt = []
        for score, order, used, state in beam:
            for pos in range(m):
                bit = 1 << pos
                if used & bit:
                    continue
                nstate = scorer.extend(state, pos)
                nxt.append((scorer.score(nstate), order + (pos,), used | bit, nstate))
        beam = nxt
    return row


def grouped_knapsack(tables: dict[int, BestSequenceRow], n_max: int) -> KnapsackSolution:
    """Pick at most one length per cluster, total length <= n_max, max value.

    Single 1-d value array over exact used length, updated in place per
    cluster in descending weight order (so reads see the previous cluster's
    states), with a parallel per-state choice record so the winning
    selection is read off without re-solving.
    """
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    if not tables:
        raise UsageError("grouped_knapsack requires at least one cluster table")
    dp = [NEG_INF] * (n_max + 1)
    dp[0] = 0.0
    choice: list[tuple[tuple[int, int], ...]] = [()] * (n_max + 1)
    for j in sorted(tables):
        row = tables[j]
        for i in range(n_max, 0, -1):
            best = dp[i]
            best_choice = choice[i]
            for l in sorted(row):
                if l <= i and dp[i - l] > NEG_INF:
                    cand = dp[i - l] + row[l].value
                    if cand > best:
                        best = cand
                        best_choice = choice[i - l] + ((j, l),)
            dp[i] = best
            choice[i] = best_choice
    best_i = 0
    for i in range(n_max + 1):
        if dp[i] > dp[best_i]:
            best_i = i
    chosen = {j: 0 for j in tables}
    for j, l in choice[best_i]:
        chosen[j] = l
    return KnapsackSolution(chosen=chosen, total_value=dp[best_i], total_length=best_i)


def generate_storyline(mset: MaterialSet, model: LwcModel, k: int, n_max: int,
                       cfg: SolverConfig | None = None) -> Storyline:
    """Cluster, search per-cluster best sequences, solve the knapsack, and
    assemble the final cluster-contiguous storyline."""
    cfg = cfg or SolverConfig(n_max=n_max)
    if len(mset) < 1:
        raise UsageError("material set is empty")
    if not (1 <= k <= len(mset)):
        raise UsageError(f"k must be in [1, {len(mset)}], got {k}")
    if n_max < 1:
        raise UsageError("n_max must be >= 1")
    incentive = cfg.incentive
    if incentive is None:
        incentive = mset.incentive if mset.incentive is not None else DEFAULT_INCENTIVE

    assignment = cluster_materials(mset, k, seed=sub_seed(cfg.seed, "clustering"))
    clusters = assignment.clusters()

    def solve_cluster(member_ids: list[str]):
        m = len(member_ids)
        exact = (m <= cfg.exhaustive_threshold
                 and enumeration_count(m, n_max) <= cfg.enumeration_cap)
        if exact:
            row = best_sequences_exact(member_ids, mset, model, n_max,
                                       threshold=cfg.exhaustive_threshold,
                                       incentive=incentive)
        else:
            row = best_sequences_beam(member_ids, mset, model, n_max,
                                      beam_width=cfg.beam_width, incentive=incentive)
        return row, "exact" if exact else "beam"

    if cfg.threads > 1 and len(clusters) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            solved = list(pool.map(solve_cluster, clusters))
    else:
        solved = [solve_cluster(c) for c in clusters]

    tables = {j: row for j, (row, _) in enumerate(solved)}
    solution = grouped_knapsack(tables, n_max)

    blocks = [StoryBlock(cluster=j, order=tables[j][l].order, score=tables[j][l].value)
              for j, l in sorted(solution.chosen.items()) if l > 0]
    # Presentation order only: the objective is order-independent across blocks.
    blocks.sort(key=lambda b: (-b.score, b.cluster))
    items = tuple(StoryItem(id=mid, cluster=b.cluster, duration_s=mset.get(mid).duration_s)
                  for b in blocks for mid in b.order)
    total = sum((b.score for b in blocks), 0.0)
    if abs(total - solution.total_value) > 1e-12:
        raise AssertionError(
            f"block total {total!r} disagrees with knapsack value {solution.total_value!r}")
    metadata = {
        "k": k,
        "n_max": n_max,
        "seed": cfg.seed,
        "clustering_seed": sub_seed(cfg.seed, "clustering"),
        "exhaustive_threshold": cfg.exhaustive_threshold,
        "enumeration_cap": cfg.enumeration_cap,
        "beam_width": cfg.beam_width,
        "incentive": incentive,
        "solver_per_cluster": {str(j): mode for j, (_, mode) in enumerate(solved)},
        "cluster_sizes": {str(j): len(c) for j, c in enumerate(clusters)},
    }
    return Storyline(blocks=tuple(blocks), items=items, total_objective=total,
                     metadata=metadata)


# ---------------------------------------------------------------------------
# Storyline document IO.

def storyline_document(s: Storyline) -> dict:
    return {
        "format": STORYLINE_FORMAT,
        "items": [{"id": it.id, "cluster": it.cluster, "duration_s": it.duration_s}
                  for it in s.items],
        "blocks": [{"cluster": b.cluster, "ids": list(b.order), "score": b.score}
                   for b in s.blocks],
        "total_objective": s.total_objective,
        "solver": s.metadata,
    }


def render_storyline(s: Storyline) -> str:
    return json.dumps(storyline_document(s), indent=2, sort_keys=True) + "\n"


def save_storyline(s: Storyline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_storyline(s))
