"""Deterministic sub-seed derivation.

All randomness flows from one top-level seed; components (clustering,
synthesis, baselines) get named sub-seeds so each can be perturbed
independently without touching the others.
"""

from __future__ import annotations

import hashlib


def sub_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
