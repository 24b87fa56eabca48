"""Shared fixtures: synthetic material sets, raster fixtures, tiny manifests."""

from __future__ import annotations

import json

import numpy as np
import pytest
from PIL import Image

from wbp.features import Material, MaterialSet


def write_png(path, array: np.ndarray) -> str:
    """Write a uint8 grayscale or RGB array as PNG; returns the path string."""
    arr = np.asarray(array)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr.astype(np.uint8), mode=mode).save(path)
    return str(path)


def random_image(rng: np.random.Generator, size: int = 32) -> np.ndarray:
    return rng.integers(0, 256, (size, size)).astype(np.uint8)


def synthetic_set(rng: np.random.Generator, n: int, embed_dim: int = 4,
                  video_prob: float = 0.3, incentive: float | None = None) -> MaterialSet:
    """Material set with declared embeddings and an override dissimilarity
    matrix, so no raster decoding is ever required."""
    materials = []
    for i in range(n):
        is_video = rng.uniform() < video_prob
        kind = "video" if is_video else "image"
        frames = tuple(f"<synthetic-{i}-{j}>" for j in range(3 if is_video else 1))
        materials.append(Material(
            id=f"m{i:02d}", kind=kind, frames=frames,
            duration_s=3.0 if is_video else 1.5,
            aesthetics=float(rng.uniform()), arousal=float(rng.uniform()),
            embedding=rng.uniform(0.0, 1.0, embed_dim)))
    upper = np.triu(rng.uniform(0.0, 1.0, (n, n)), k=1)
    dissim = upper + upper.T
    return MaterialSet(materials=materials, dissim=dissim, incentive=incentive)


def random_model_vector(rng: np.random.Generator) -> list[float]:
    return [
        float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.2, 3.0)), float(rng.uniform(-1.0, 3.0)),
        float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.2, 3.0)), float(rng.uniform(-1.0, 3.0)),
        float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0)),
        float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95)),
    ]


@pytest.fixture
def image_dir(tmp_path):
    """Directory of deterministic PNG fixtures keyed by name."""
    rng = np.random.default_rng(1234)
    paths = {}
    for name in ("a", "b", "c", "d"):
        paths[name] = write_png(tmp_path / f"{name}.png", random_image(rng))
    paths["const0"] = write_png(tmp_path / "const0.png", np.zeros((32, 32), dtype=np.uint8))
    paths["const255"] = write_png(tmp_path / "const255.png", np.full((32, 32), 255, dtype=np.uint8))
    paths["const128"] = write_png(tmp_path / "const128.png", np.full((32, 32), 128, dtype=np.uint8))
    return tmp_path, paths


def write_manifest(path, doc: dict) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return str(path)


@pytest.fixture
def two_image_manifest(image_dir):
    tmp_path, paths = image_dir
    doc = {
        "format": "wbp-manifest-v1",
        "materials": [
            {"id": "img-a", "kind": "image", "frames": ["a.png"],
             "aesthetics": 0.3, "arousal": 0.4},
            {"id": "img-b", "kind": "image", "frames": ["b.png"],
             "aesthetics": 0.6, "arousal": 0.2},
        ],
    }
    return write_manifest(tmp_path / "manifest.json", doc)
