"""Topic clustering of the material set.

Plain Lloyd iterations with k-means++ seeding, deterministic per seed.
Empty clusters are reseeded with the point currently farthest from its
centroid, and final labels are renumbered so cluster 0 holds the
lexicographically smallest member id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .features import Material, MaterialSet, material_embeddings

log = logging.getLogger(__name__)

DEFAULT_K = 3
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6


@dataclass
class ClusterAssignment:
    labels: dict[str, int]
    centroids: np.ndarray
    inertia: float
    inertia_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def clusters(self) -> list[list[str]]:
        """Member ids per cluster index, each list sorted."""
        out: list[list[str]] = [[] for _ in range(self.k)]
        for mid in sorted(self.labels):
            out[self.labels[mid]].append(mid)
        return out


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = x[first]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centroids[j] = x[pick]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(points: list[tuple[str, np.ndarray]], k: int, seed: int = 0,
           max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> ClusterAssignment:
    """Cluster (id, vector) points; deterministic per seed."""
    if not points:
        raise UsageError("kmeans requires at least one point")
    ids = [pid for pid, _ in points]
    x = np.asarray([np.asarray(v, dtype=np.float64) for _, v in points])
    if x.ndim != 2:
        raise UsageError("kmeans requires vectors of uniform dimension")
    n = x.shape[0]
    if not (1 <= k <= n):
        raise UsageError(f"k must be in [1, {n}], got {k}")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(x, k, rng)
    history: list[float] = []
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        labels, inertia, centroids = _assign(x, centroids)
        history.append(inertia)
        new_centroids = centroids.copy()
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    # Final assignment so labels, centroids, and inertia are mutually consistent.
    labels, inertia, centroids = _assign(x, centroids)
    history.append(inertia)
    return _canonical(ids, labels, centroids, inertia, history)


def _assign(x: np.ndarray, centroids: np.ndarray):
    """Assign points to nearest centroids, reseeding any empty cluster with
    the point farthest from its current centroid (this never raises inertia).

    Reseeded points are pinned to their new cluster so duplicate-point sets
    cannot tie-break the cluster empty again.
    """
    k = centroids.shape[0]
    idx = np.arange(len(x))
    pinned: dict[int, int] = {}
    while True:
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        for p, j in pinned.items():
            labels[p] = j
        empty = [j for j in range(k) if not (labels == j).any()]
        if not empty:
            inertia = float(d2[idx, labels].sum())
            return labels, inertia, centroids
        assigned = d2[idx, labels]
        if pinned:
            assigned = assigned.copy()
            assigned[list(pinned)] = -1.0
        farthest = int(assigned.argmax())
        centroids = centroids.copy()
        centroids[empty[0]] = x[farthest]
        pinned[farthest] = empty[0]


def _canonical(ids, labels, centroids, inertia, history) -> ClusterAssignment:
    """Renumber clusters by ascending smallest member id."""
    k = centroids.shape[0]
    min_id: dict[int, str] = {}
    for pid, lab in zip(ids, labels):
        lab = int(lab)
        if lab not in min_id or pid < min_id[lab]:
            min_id[lab] = pid
    nonempty = sorted(min_id, key=lambda j: min_id[j])
    order = nonempty + [j for j in range(k) if j not in min_id]
    remap = {old: new for new, old in enumerate(order)}
    return ClusterAssignment(
        labels={pid: remap[int(lab)] for pid, lab in zip(ids, labels)},
        centroids=centroids[order],
        inertia=inertia,
        inertia_history=history,
    )


def _representative(m: Material) -> np.ndarray:
    """Vector Lloyd runs on: the embedding, or a video's frame-embedding mean."""
    embs = material_embeddings(m)
    if len(embs) == 1:
        return embs[0]
    return np.mean(embs, axis=0)


def cluster_materials(mset: MaterialSet, k: int, seed: int = 0,
                      max_iter: int = DEFAULT_MAX_ITER,
                      tol: float = DEFAULT_TOL) -> ClusterAssignment:
    """Cluster a material set on per-material representative vectors.

    When videos are present the reported inertia is recomputed with the
    frame-min distance to the assigned centroid; labels stay as Lloyd
    produced them.
    """
    points = [(m.id, _representative(m)) for m in sorted(mset.materials, key=lambda m: m.id)]
    asn = kmeans(points, k, seed=seed, max_iter=max_iter, tol=tol)
    if any(m.is_video for m in mset.materials):
        inertia = 0.0
        for m in mset.materials:
            centroid = asn.centroids[asn.labels[m.id]]
            d = min(float(np.linalg.norm(e - centroid)) for e in material_embeddings(m))
            inertia += d * d
        asn.inertia = inertia
    return asn


def format_assignment(asn: ClusterAssignment) -> str:
    """Inspection export: one "id<TAB>cluster" line per material, id-sorted."""
    return "".join(f"{mid}\t{asn.labels[mid]}\n" for mid in sorted(asn.labels))


def choose_k(category: str | None, table: dict[str, int] | None = None) -> int:
    """Configured cluster count for a product category; defaults to 3."""
    if table and category is not None and category in table:
        return int(table[category])
    log.info("no cluster count configured for category %r; defaulting to %d",
             category, DEFAULT_K)
    return DEFAULT_K
