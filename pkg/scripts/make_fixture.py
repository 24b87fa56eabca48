#!/usr/bin/env python3
"""Regenerate the bundled test fixture: frames, manifest, model, ratings.

Deterministic (seed 0).  The fixture has three visual topic groups
(gradients, discs, textures) so k = 3 clustering is meaningful, plus two
clips assembled from frame variations.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wbp.model import LwcModel, save_model  # noqa: E402
from wbp.training import save_ratings, synth_dataset  # noqa: E402

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SIZE = 48


def gradient(angle: float, offset: float = 0.0) -> np.ndarray:
    yy, xx = np.mgrid[0:SIZE, 0:SIZE] / (SIZE - 1)
    field = np.cos(angle) * xx + np.sin(angle) * yy + offset
    field = (field - field.min()) / (field.max() - field.min())
    return (field * 255).astype(np.uint8)


def disc(cx: float, cy: float, r: float, bg: int = 30, fg: int = 220) -> np.ndarray:
    yy, xx = np.mgrid[0:SIZE, 0:SIZE]
    img = np.full((SIZE, SIZE), bg, dtype=np.uint8)
    img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = fg
    return img


def texture(seed: int, period: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = ((np.indices((SIZE, SIZE)).sum(axis=0) // period) % 2) * 160
    noise = rng.integers(0, 96, (SIZE, SIZE))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def main() -> None:
    frames_dir = FIXTURE_DIR / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    def save(name: str, arr: np.ndarray) -> str:
        Image.fromarray(arr, mode="L").save(frames_dir / name)
        return f"frames/{name}"

    materials = []

    def image(mid, frame, aesthetics, arousal):
        materials.append({"id": mid, "kind": "image", "frames": [frame],
                          "aesthetics": aesthetics, "arousal": arousal})

    def video(mid, frames, duration, aesthetics, arousal):
        materials.append({"id": mid, "kind": "video", "frames": frames,
                          "duration_s": duration,
                          "aesthetics": aesthetics, "arousal": arousal})

    image("grad-flat", save("grad_flat.png", gradient(0.0)), 0.42, 0.30)
    image("grad-tilt", save("grad_tilt.png", gradient(0.9)), 0.55, 0.35)
    image("grad-steep", save("grad_steep.png", gradient(1.4, 0.2)), 0.48, 0.25)
    image("disc-small", save("disc_small.png", disc(16, 16, 7)), 0.70, 0.55)
    image("disc-large", save("disc_large.png", disc(28, 26, 13)), 0.66, 0.60)
    image("tex-fine", save("tex_fine.png", texture(5, 4)), 0.35, 0.72)
    video("clip-discs",
          [save(f"clip_discs_{i}.png", disc(12 + 6 * i, 20 + 3 * i, 8 + i))
           for i in range(3)],
          4.5, 0.62, 0.66)
    video("clip-tex",
          [save(f"clip_tex_{i}.png", texture(11 + i, 6)) for i in range(3)],
          3.0, 0.44, 0.80)

    manifest = {"format": "wbp-manifest-v1", "materials": materials}
    with open(FIXTURE_DIR / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    model = LwcModel.from_vector([
        1.0, 2.0, 0.9,      # reward: ceiling, slope, onset
        1.0, 2.2, 2.1,      # punishment: ceiling, slope, onset
        0.45, 0.35, 0.30,   # channel weights
        0.40, 0.55, 0.50,   # decays
    ])
    save_model(model, FIXTURE_DIR / "model.lwc")

    data = synth_dataset(model, n=24, noise_sigma=0.03, len_range=(1, 5), seed=0)
    save_ratings(data, FIXTURE_DIR / "ratings.json")
    print(f"fixture written to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
