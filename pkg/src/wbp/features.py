"""Material ingestion and feature assembly.

Aesthetics and arousal arrive as precomputed per-material scores in the
manifest; structural dissimilarity is computed here from pixels.  Frames
are compared as 256x256 grayscale rasters (luma 0.299/0.587/0.114,
bilinear resize) and mapped through (1 - SSIM) / 2 so all three channels
live on the same [0, 1] scale.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import InputError, LoadError, UsageError
from .model import FeatureSequence

MANIFEST_FORMAT = "wbp-manifest-v1"

COMPARISON_SIZE = 256          # frames resized to this square before SSIM
EMBED_SIZE = 8                 # fallback embedding: EMBED_SIZE^2 grayscale thumbnail
FRAME_SAMPLE_CAP = 16          # max frames per video in any frame-wise aggregation
DEFAULT_IMAGE_DURATION_S = 1.5
DEFAULT_INCENTIVE = 0.1        # additive aesthetics bonus for video materials
FIRST_STEP_DISSIMILARITY = 1.0  # the opening material carries all-new information

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2

_LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Material:
    """One visual material: an image (exactly one frame) or a video (>= 1 frames)."""

    id: str
    kind: str                      # "image" | "video"
    frames: tuple[str, ...]        # paths to raster files
    duration_s: float
    aesthetics: float
    arousal: float
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("image", "video"):
            raise UsageError(f"material {self.id!r}: kind must be image or video")
        if self.kind == "image" and len(self.frames) != 1:
            raise UsageError(f"material {self.id!r}: an image has exactly one frame")
        if self.kind == "video" and len(self.frames) < 1:
            raise UsageError(f"material {self.id!r}: a video needs at least one frame")
        for name in ("aesthetics", "arousal"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise UsageError(f"material {self.id!r}: {name} must be in [0, 1], got {v!r}")
        if not (self.duration_s > 0.0):
            raise UsageError(f"material {self.id!r}: duration_s must be positive")

    @property
    def is_video(self) -> bool:
        return self.kind == "video"


@dataclass
class MaterialSet:
    """The ingested collection plus its pairwise dissimilarity matrix."""

    materials: list[Material]
    dissim: np.ndarray
    incentive: float | None = None   # manifest-level override, if declared
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        ids = [m.id for m in self.materials]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise UsageError(f"duplicate material ids: {', '.join(dupes)}")
        n = len(self.materials)
        self.dissim = np.asarray(self.dissim, dtype=np.float64)
        if self.dissim.shape != (n, n):
            raise UsageError(
                f"dissimilarity matrix shape {self.dissim.shape} does not match "
                f"{n} materials")
        self._index = {m.id: i for i, m in enumerate(self.materials)}

    def __len__(self) -> int:
        return len(self.materials)

    def ids(self) -> list[str]:
        return [m.id for m in self.materials]

    def get(self, material_id: str) -> Material:
        try:
            return self.materials[self._index[material_id]]
        except KeyError:
            raise UsageError(f"unknown material id {material_id!r}") from None

    def dissim_between(self, id_a: str, id_b: str) -> float:
        return float(self.dissim[self._index[id_a], self._index[id_b]])


# ---------------------------------------------------------------------------
# Frame loading and SSIM.

_frame_cache: dict[tuple[str, int], np.ndarray] = {}


def _load_frame(path: str, size: int, material_id: str) -> np.ndarray:
    """Decode, grayscale, and bilinearly resize one frame; cached per (path, size)."""
    key = (path, size)
    cached = _frame_cache.get(key)
    if cached is not None:
        return cached
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise InputError(f"material {material_id!r}: cannot decode frame {path}: {exc}") from exc
    if arr.ndim == 3:
        arr = _LUMA[0] * arr[:, :, 0] + _LUMA[1] * arr[:, :, 1] + _LUMA[2] * arr[:, :, 2]
    if arr.size == 0:
        raise InputError(f"material {material_id!r}: empty frame {path}")
    resized = Image.fromarray(arr.astype(np.float32), mode="F").resize(
        (size, size), Image.Resampling.BILINEAR)
    out = np.asarray(resized, dtype=np.float64)
    out.setflags(write=False)
    if len(_frame_cache) > 512:
        _frame_cache.clear()
    _frame_cache[key] = out
    return out


def sample_frames(frames: tuple[str, ...], cap: int = FRAME_SAMPLE_CAP) -> list[str]:
    """At most `cap` uniformly spaced frames, always including the endpoints."""
    if len(frames) <= cap:
        return list(frames)
    idx = np.rint(np.linspace(0, len(frames) - 1, cap)).astype(int)
    return [frames[i] for i in idx]


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return k / k.sum()


_KERNEL_1D = _gaussian_kernel()


def _gaussian_filter_valid(img: np.ndarray) -> np.ndarray:
    # Separable window; crop to the fully-covered interior so padding never
    # influences the statistics.
    half = SSIM_WINDOW // 2
    out = correlate1d(img, _KERNEL_1D, axis=0, mode="constant")
    out = correlate1d(out, _KERNEL_1D, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(frame_a: np.ndarray, frame_b: np.ndarray) -> float:
    """Mean local SSIM: 11x11 Gaussian window, sigma 1.5, K1/K2 0.01/0.03, range 255."""
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise UsageError("ssim requires non-empty images")
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape:
        raise UsageError(f"ssim requires equal-shape 2-d images, got {a.shape} and {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise UsageError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    mu_a = _gaussian_filter_valid(a)
    mu_b = _gaussian_filter_valid(b)
    var_a = _gaussian_filter_valid(a * a) - mu_a * mu_a
    var_b = _gaussian_filter_valid(b * b) - mu_b * mu_b
    cov = _gaussian_filter_valid(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + _SSIM_C1) * (var_a + var_b + _SSIM_C2)
    return float(np.mean(num / den))


def _comparison_frames(m: Material) -> list[np.ndarray]:
    return [_load_frame(p, COMPARISON_SIZE, m.id) for p in sample_frames(m.frames)]


def dissimilarity(a: Material, b: Material) -> float:
    """Structural dissimilarity (1 - SSIM) / 2; frame-wise max when a video is involved."""
    best = 0.0
    for fa in _comparison_frames(a):
        for fb in _comparison_frames(b):
            d = (1.0 - ssim(fa, fb)) / 2.0
            if d > best:
                best = d
    return min(1.0, max(0.0, best))


def dissimilarity_matrix(materials: list[Material], threads: int = 1) -> np.ndarray:
    """All pairwise dissimilarities, computed once; symmetric with zero diagonal."""
    n = len(materials)
    if n < 1:
        raise UsageError("dissimilarity_matrix requires at least one material")
    out = np.zeros((n, n), dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(
                lambda ij: dissimilarity(materials[ij[0]], materials[ij[1]]), pairs))
    else:
        values = [dissimilarity(materials[i], materials[j]) for i, j in pairs]
    for (i, j), v in zip(pairs, values):
        out[i, j] = v
        out[j, i] = v
    return out


def fallback_embedding(m: Material) -> np.ndarray:
    """First frame as an 8x8 grayscale thumbnail, flattened and scaled to [0, 1]."""
    return _frame_embedding(m.frames[0], m.id)


def _frame_embedding(path: str, material_id: str) -> np.ndarray:
    return _load_frame(path, EMBED_SIZE, material_id).reshape(-1) / 255.0


def material_embeddings(m: Material) -> list[np.ndarray]:
    """Per-frame embedding list: the manifest vector if declared, else fallback."""
    if m.embedding is not None:
        return [np.asarray(m.embedding, dtype=np.float64)]
    return [_frame_embedding(p, m.id) for p in sample_frames(m.frames)]


def clustering_distance(a: Material, b: Material) -> float:
    """Euclidean embedding distance; min over frame pairs when a video is involved."""
    ea = material_embeddings(a)
    eb = material_embeddings(b)
    if ea[0].shape != eb[0].shape:
        raise UsageError(
            f"embedding dimension mismatch: {a.id!r} has {ea[0].shape[0]}, "
            f"{b.id!r} has {eb[0].shape[0]}")
    return min(float(np.linalg.norm(va - vb)) for va in ea for vb in eb)


def sequence_features(order: list[str], mset: MaterialSet,
                      incentive: float = DEFAULT_INCENTIVE) -> FeatureSequence:
    """Assemble the (dissimilarity, aesthetics, arousal) triples for one ordering."""
    if not order:
        raise UsageError("order must be non-empty")
    if len(set(order)) != len(order):
        raise UsageError("order contains duplicate material ids")
    bound = 1.0 + incentive
    steps = []
    for i, mid in enumerate(order):
        m = mset.get(mid)
        s_a = m.aesthetics + incentive if m.is_video else m.aesthetics
        s_a = min(bound, max(0.0, s_a))
        s_d = FIRST_STEP_DISSIMILARITY if i == 0 else mset.dissim_between(order[i - 1], mid)
        steps.append((s_d, s_a, m.arousal))
    return FeatureSequence(tuple(steps))


# ---------------------------------------------------------------------------
# Manifest ingestion.

def _rescale(value: float, rng: tuple[float, float] | None, where: str) -> float:
    if rng is not None:
        lo, hi = rng
        if not (lo <= value <= hi):
            raise LoadError(f"{where}: value {value!r} outside declared source range [{lo}, {hi}]")
        return (value - lo) / (hi - lo)
    if not (0.0 <= value <= 1.0):
        raise LoadError(f"{where}: value {value!r} outside [0, 1] and no source range declared")
    return float(value)


def _parse_range(doc: dict, name: str, path) -> tuple[float, float] | None:
    ranges = doc.get("score_ranges")
    if ranges is None:
        return None
    if not isinstance(ranges, dict):
        raise LoadError(f"{path}: score_ranges: expected an object")
    rng = ranges.get(name)
    if rng is None:
        return None
    if (not isinstance(rng, list) or len(rng) != 2
            or not all(isinstance(v, (int, float)) for v in rng) or rng[0] >= rng[1]):
        raise LoadError(f"{path}: score_ranges.{name}: expected [lo, hi] with lo < hi")
    return float(rng[0]), float(rng[1])


def load_manifest(path, threads: int = 1) -> MaterialSet:
    """Load and validate a wbp-manifest-v1 file; computes the dissimilarity
    matrix unless the manifest provides an override."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise LoadError(f"{path}: missing or unsupported format tag (want {MANIFEST_FORMAT})")

    incentive = doc.get("incentive")
    if incentive is not None and (not isinstance(incentive, (int, float)) or incentive < 0.0):
        raise LoadError(f"{path}: incentive: expected a non-negative number")

    aes_range = _parse_range(doc, "aesthetics", path)
    aro_range = _parse_range(doc, "arousal", path)

    raw_materials = doc.get("materials")
    if not isinstance(raw_materials, list) or not raw_materials:
        raise LoadError(f"{path}: materials: expected a non-empty array")

    seen: set[str] = set()
    materials: list[Material] = []
    embed_dim: int | None = None
    any_embedding = False
    for i, rec in enumerate(raw_materials):
        where = f"{path}: materials[{i}]"
        if not isinstance(rec, dict):
            raise LoadError(f"{where}: expected an object")
        mid = rec.get("id")
        if not isinstance(mid, str) or not mid:
            raise LoadError(f"{where}.id: expected a non-empty string")
        if mid in seen:
            raise LoadError(f"{where}.id: duplicate material id {mid!r}")
        seen.add(mid)
        kind = rec.get("kind")
        if kind not in ("image", "video"):
            raise LoadError(f"{where}.kind: expected 'image' or 'video'")
        frames = rec.get("frames")
        if (not isinstance(frames, list) or not frames
                or not all(isinstance(f, str) and f for f in frames)):
            raise LoadError(f"{where}.frames: expected a non-empty array of paths")
        if kind == "image" and len(frames) != 1:
            raise LoadError(f"{where}.frames: an image has exactly one frame")
        resolved = tuple(str((path.parent / f).resolve()) for f in frames)
        duration = rec.get("duration_s")
        if duration is None:
            if kind == "video":
                raise LoadError(f"{where}.duration_s: required for videos")
            duration = DEFAULT_IMAGE_DURATION_S
        if not isinstance(duration, (int, float)) or duration <= 0.0:
            raise LoadError(f"{where}.duration_s: expected a positive number")
        for score_name, rng in (("aesthetics", aes_range), ("arousal", aro_range)):
            if not isinstance(rec.get(score_name), (int, float)):
                raise LoadError(f"{where}.{score_name}: expected a number")
        aesthetics = _rescale(float(rec["aesthetics"]), aes_range, f"{where}.aesthetics")
        arousal = _rescale(float(rec["arousal"]), aro_range, f"{where}.arousal")
        embedding = None
        if rec.get("embedding") is not None:
            emb = rec["embedding"]
            if not isinstance(emb, list) or not all(isinstance(v, (int, float)) for v in emb):
                raise LoadError(f"{where}.embedding: expected an array of numbers")
            if embed_dim is None:
                embed_dim = len(emb)
            elif len(emb) != embed_dim:
                raise LoadError(
                    f"{where}.embedding: dimension {len(emb)} differs from {embed_dim}")
            embedding = np.asarray(emb, dtype=np.float64)
            any_embedding = True
        try:
            materials.append(Material(
                id=mid, kind=kind, frames=resolved, duration_s=float(duration),
                aesthetics=aesthetics, arousal=arousal, embedding=embedding))
        except UsageError as exc:
            raise LoadError(f"{where}: {exc}") from exc
    if any_embedding and any(m.embedding is None for m in materials):
        missing = [m.id for m in materials if m.embedding is None]
        raise LoadError(
            f"{path}: embeddings must be declared for all materials or none; "
            f"missing for {', '.join(missing)}")

    n = len(materials)
    override = doc.get("dissimilarity")
    if override is not None:
        matrix = _validate_override(override, n, path)
    else:
        matrix = dissimilarity_matrix(materials, threads=threads)
    return MaterialSet(materials=materials, dissim=matrix,
                       incentive=None if incentive is None else float(incentive))


def _validate_override(raw, n: int, path) -> np.ndarray:
    where = f"{path}: dissimilarity"
    if not isinstance(raw, list) or len(raw) != n:
        raise LoadError(f"{where}: expected an {n}x{n} array")
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise LoadError(f"{where}[{i}]: expected a row of {n} numbers")
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
                raise LoadError(f"{where}[{i}][{j}]: expected a number in [0, 1]")
            if i == j and v != 0:
                raise LoadError(f"{where}[{i}][{j}]: diagonal must be zero")
            if j < i and raw[j][i] != v:
                raise LoadError(f"{where}[{i}][{j}]: matrix must be symmetric")
    return np.asarray(raw, dtype=np.float64)


def save_manifest(mset: MaterialSet, path) -> None:
    """Serialize a MaterialSet; the computed matrix is written as an override
    so a reload reproduces the set exactly."""
    records = []
    for m in mset.materials:
        rec = {
            "id": m.id,
            "kind": m.kind,
            "frames": list(m.frames),
            "duration_s": m.duration_s,
            "aesthetics": m.aesthetics,
            "arousal": m.arousal,
        }
        if m.embedding is not None:
            rec["embedding"] = [float(v) for v in m.embedding]
        records.append(rec)
    doc = {
        "format": MANIFEST_FORMAT,
        "materials": records,
        "dissimilarity": [[float(v) for v in row] for row in mset.dissim],
    }
    if mset.incentive is not None:
        doc["incentive"] = mset.incentive
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
