"""Bell-shaped persuasiveness model over feature sequences.

The response curve is the difference of a reward sigmoid and a punishment
sigmoid, so effectiveness peaks at moderate stimulus intensity.  The
stimulus intensity of an ordered sequence of (dissimilarity, aesthetics,
arousal) triples is a weighted sum of three leaky per-channel
accumulations.

All operations are pure functions of their inputs; models are frozen
dataclasses and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import LoadError, UsageError

# Canonical order of the 12 trainable scalars.  Gradient vectors, serialized
# models, and tests all index parameters by this order; do not reorder.
PARAM_NAMES: tuple[str, ...] = (
    "r_max", "rho_r", "d_r",
    "p_max", "rho_p", "d_p",
    "w_d", "w_a", "w_e",
    "lambda_d", "lambda_a", "lambda_e",
)

RHO_FLOOR = 1e-6

# Per-parameter clamp bounds, in canonical order.
PARAM_BOUNDS: tuple[tuple[float, float], ...] = (
    (0.0, math.inf), (RHO_FLOOR, math.inf), (-math.inf, math.inf),
    (0.0, math.inf), (RHO_FLOOR, math.inf), (-math.inf, math.inf),
    (-math.inf, math.inf), (-math.inf, math.inf), (-math.inf, math.inf),
    (0.0, 1.0), (0.0, 1.0), (0.0, 1.0),
)

MODEL_FORMAT = "lwc-v1"


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise UsageError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class WundtParams:
    """Reward/punishment sigmoid pair: ceilings, slopes, and onsets.

    Slopes are clamped to a strictly positive floor and ceilings to zero
    at construction, so every instance satisfies the curve invariants.
    """

    r_max: float
    rho_r: float
    d_r: float
    p_max: float
    rho_p: float
    d_p: float

    def __post_init__(self):
        for name in ("r_max", "rho_r", "d_r", "p_max", "rho_p", "d_p"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "r_max", max(0.0, float(self.r_max)))
        object.__setattr__(self, "p_max", max(0.0, float(self.p_max)))
        object.__setattr__(self, "rho_r", max(RHO_FLOOR, float(self.rho_r)))
        object.__setattr__(self, "rho_p", max(RHO_FLOOR, float(self.rho_p)))
        object.__setattr__(self, "d_r", float(self.d_r))
        object.__setattr__(self, "d_p", float(self.d_p))


@dataclass(frozen=True)
class AccumulatorParams:
    """Channel weights and decay factors of the stimulus accumulator.

    Decays are clamped into [0, 1] so the accumulated intensity stays
    bounded for any sequence length.
    """

    w_d: float
    w_a: float
    w_e: float
    lambda_d: float
    lambda_a: float
    lambda_e: float

    def __post_init__(self):
        for name in ("w_d", "w_a", "w_e", "lambda_d", "lambda_a", "lambda_e"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "w_d", float(self.w_d))
        object.__setattr__(self, "w_a", float(self.w_a))
        object.__setattr__(self, "w_e", float(self.w_e))
        object.__setattr__(self, "lambda_d", min(1.0, max(0.0, float(self.lambda_d))))
        object.__setattr__(self, "lambda_a", min(1.0, max(0.0, float(self.lambda_a))))
        object.__setattr__(self, "lambda_e", min(1.0, max(0.0, float(self.lambda_e))))


@dataclass(frozen=True)
class LwcModel:
    """The 12 trainable scalars: curve parameters plus accumulator parameters."""

    wundt: WundtParams
    accum: AccumulatorParams

    def to_vector(self) -> list[float]:
        """Parameters as a flat list in canonical order."""
        w, a = self.wundt, self.accum
        return [w.r_max, w.rho_r, w.d_r, w.p_max, w.rho_p, w.d_p,
                a.w_d, a.w_a, a.w_e, a.lambda_d, a.lambda_a, a.lambda_e]

    @staticmethod
    def from_vector(vec: Sequence[float]) -> "LwcModel":
        """Build a model from 12 values in canonical order (clamps apply)."""
        if len(vec) != len(PARAM_NAMES):
            raise UsageError(f"expected {len(PARAM_NAMES)} parameters, got {len(vec)}")
        v = [float(x) for x in vec]
        return LwcModel(
            wundt=WundtParams(*v[0:6]),
            accum=AccumulatorParams(*v[6:12]),
        )


def canonical_model() -> LwcModel:
    """Well-formed bell with punishment onset after reward; symmetric channels."""
    return LwcModel(
        wundt=WundtParams(r_max=1.0, rho_r=1.0, d_r=1.0, p_max=1.0, rho_p=1.0, d_p=2.0),
        accum=AccumulatorParams(w_d=1.0 / 3.0, w_a=1.0 / 3.0, w_e=1.0 / 3.0,
                                lambda_d=0.5, lambda_a=0.5, lambda_e=0.5),
    )


@dataclass(frozen=True)
class FeatureSequence:
    """Ordered (dissimilarity, aesthetics, arousal) triples for one candidate ordering."""

    steps: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        steps = tuple(tuple(float(c) for c in step) for step in self.steps)
        if not steps:
            raise UsageError("feature sequence must be non-empty")
        for i, step in enumerate(steps):
            if len(step) != 3:
                raise UsageError(f"step {i} must be a (s_d, s_a, s_e) triple")
            for c in step:
                if not math.isfinite(c):
                    raise UsageError(f"step {i} has non-finite component {c!r}")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    def column(self, channel: int) -> tuple[float, ...]:
        """One channel as a tuple: 0 = dissimilarity, 1 = aesthetics, 2 = arousal."""
        return tuple(step[channel] for step in self.steps)


def unit_sigmoid(z: float) -> float:
    """1 / (1 + exp(-z)), saturating instead of overflowing for large |z|."""
    # Branch on sign so exp never sees a large positive argument.
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def reward(w: WundtParams, x: float) -> float:
    """Reward branch: r_max scaled sigmoid with slope rho_r and onset d_r."""
    x = _require_finite("x", x)
    return w.r_max * unit_sigmoid(w.rho_r * (x - w.d_r))


def punishment(w: WundtParams, x: float) -> float:
    """Punishment branch: p_max scaled sigmoid with slope rho_p and onset d_p."""
    x = _require_finite("x", x)
    return w.p_max * unit_sigmoid(w.rho_p * (x - w.d_p))


def wundt_eval(w: WundtParams, x: float) -> float:
    """Curve value reward(x) - punishment(x); bounded in [-p_max, r_max]."""
    x = _require_finite("x", x)
    return reward(w, x) - punishment(w, x)


def accumulate_channel(lam: float, values: Iterable[float]) -> float:
    """Leaky accumulation S_n = v_n + lam * S_{n-1} with S_0 = 0; returns S_N."""
    values = list(values)
    if not values:
        raise UsageError("accumulate_channel requires at least one value")
    s = 0.0
    for v in values:
        s = float(v) + lam * s
    return s


def stimulus_intensity(a: AccumulatorParams, seq: FeatureSequence) -> float:
    """Weighted sum of the three per-channel accumulations."""
    sd = accumulate_channel(a.lambda_d, seq.column(0))
    sa = accumulate_channel(a.lambda_a, seq.column(1))
    se = accumulate_channel(a.lambda_e, seq.column(2))
    return a.w_d * sd + a.w_a * sa + a.w_e * se


def sequence_score(m: LwcModel, seq: FeatureSequence) -> float:
    """Perceived persuasiveness of one ordering: curve value at its intensity."""
    return wundt_eval(m.wundt, stimulus_intensity(m.accum, seq))


def save_model(m: LwcModel, path) -> None:
    """Write the 12 named parameters as full-precision name=value lines."""
    lines = [f"format={MODEL_FORMAT}"]
    for name, value in zip(PARAM_NAMES, m.to_vector()):
        lines.append(f"{name}={value!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> LwcModel:
    """Read a model file written by save_model."""
    fields: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoadError(f"{path}: line {lineno}: expected name=value")
            name, value = line.split("=", 1)
            fields[name.strip()] = value.strip()
    if fields.pop("format", None) != MODEL_FORMAT:
        raise LoadError(f"{path}: missing or unsupported format tag (want {MODEL_FORMAT})")
    missing = [n for n in PARAM_NAMES if n not in fields]
    if missing:
        raise LoadError(f"{path}: missing parameters: {', '.join(missing)}")
    extra = [n for n in fields if n not in PARAM_NAMES]
    if extra:
        raise LoadError(f"{path}: unknown parameters: {', '.join(extra)}")
    try:
        vec = [float(fields[n]) for n in PARAM_NAMES]
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc
    return LwcModel.from_vector(vec)
