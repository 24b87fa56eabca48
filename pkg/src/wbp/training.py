"""Fitting the curve and accumulator parameters to rated sequences.

Full-batch fixed-rate gradient descent over the 12 scalars with analytic
chain-rule gradients.  A central finite-difference oracle cross-checks
every component; the datasets involved are tiny, so determinism matters
more than throughput.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LoadError, NumericError, TrainingError, UsageError
from .model import (
    PARAM_BOUNDS,
    PARAM_NAMES,
    FeatureSequence,
    LwcModel,
    canonical_model,
    sequence_score,
    unit_sigmoid,
)

RATINGS_FORMAT = "wbp-ratings-v1"
RAW_RATING_MAX = 4.0

INIT_PRESETS = ("canonical", "random")


@dataclass(frozen=True)
class TrainingExample:
    """One rated ordering: its feature sequence and a target in [0, 1]."""

    seq: FeatureSequence
    target: float

    def __post_init__(self):
        t = float(self.target)
        if not (0.0 <= t <= 1.0):
            raise UsageError(f"target must be in [0, 1], got {t!r}")
        object.__setattr__(self, "target", t)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 5000
    seed: int = 0
    grad_clip: float | None = None
    init: str = "canonical"

    def __post_init__(self):
        if self.learning_rate < 0.0:
            raise UsageError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.init not in INIT_PRESETS:
            raise UsageError(f"unknown init preset {self.init!r}; choose from {INIT_PRESETS}")


def initial_model(preset: str = "canonical", seed: int = 0) -> LwcModel:
    """Build the named initialization preset."""
    if preset == "canonical":
        return canonical_model()
    if preset == "random":
        rng = np.random.default_rng(seed)
        vec = [
            rng.uniform(0.2, 2.0), rng.uniform(0.2, 3.0), rng.uniform(-1.0, 2.0),
            rng.uniform(0.2, 2.0), rng.uniform(0.2, 3.0), rng.uniform(-1.0, 3.0),
            rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
            rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
        ]
        return LwcModel.from_vector(vec)
    raise UsageError(f"unknown init preset {preset!r}")


def mse_loss(m: LwcModel, data: list[TrainingExample]) -> float:
    """Mean over examples of (sequence_score - target)^2."""
    if not data:
        raise UsageError("mse_loss requires at least one example")
    total = 0.0
    for ex in data:
        err = sequence_score(m, ex.seq) - ex.target
        total += err * err
    return total / len(data)


def _example_gradient(vec: list[float], ex: TrainingExample) -> list[float]:
    """Gradient of (score - target)^2 for one example, canonical order.

    Plain float arithmetic; this sits in a loop of epochs x examples.
    """
    (r_max, rho_r, d_r, p_max, rho_p, d_p,
     w_d, w_a, w_e, lam_d, lam_a, lam_e) = vec

    # Per-channel accumulation S and its decay derivative dS via the paired
    # recurrences S_n = v_n + lam*S_{n-1}, dS_n = S_{n-1} + lam*dS_{n-1}.
    s_vals = [0.0, 0.0, 0.0]
    ds_vals = [0.0, 0.0, 0.0]
    lams = (lam_d, lam_a, lam_e)
    for step in ex.seq.steps:
        for c in range(3):
            ds_vals[c] = s_vals[c] + lams[c] * ds_vals[c]
            s_vals[c] = step[c] + lams[c] * s_vals[c]
    s_d, s_a, s_e = s_vals

    x = w_d * s_d + w_a * s_a + w_e * s_e

    sig_r = unit_sigmoid(rho_r * (x - d_r))
    sig_p = unit_sigmoid(rho_p * (x - d_p))
    e_val = r_max * sig_r - p_max * sig_p
    lp = 2.0 * (e_val - ex.target)

    dsig_r = sig_r * (1.0 - sig_r)
    dsig_p = sig_p * (1.0 - sig_p)
    de_dx = r_max * rho_r * dsig_r - p_max * rho_p * dsig_p

    grad = [
        lp * sig_r,                                # r_max
        lp * r_max * dsig_r * (x - d_r),           # rho_r
        lp * r_max * dsig_r * (-rho_r),            # d_r
        lp * (-sig_p),                             # p_max
        lp * (-p_max) * dsig_p * (x - d_p),        # rho_p
        lp * p_max * dsig_p * rho_p,               # d_p
        lp * de_dx * s_d,                          # w_d
        lp * de_dx * s_a,                          # w_a
        lp * de_dx * s_e,                          # w_e
        lp * de_dx * w_d * ds_vals[0],             # lambda_d
        lp * de_dx * w_a * ds_vals[1],             # lambda_a
        lp * de_dx * w_e * ds_vals[2],             # lambda_e
    ]
    for name, g in zip(PARAM_NAMES, grad):
        if not math.isfinite(g):
            raise NumericError(f"non-finite gradient for parameter {name}")
    return grad


def analytic_gradients(m: LwcModel, ex: TrainingExample) -> np.ndarray:
    """d(loss)/d(theta) for the 12 parameters, in canonical order."""
    return np.array(_example_gradient(m.to_vector(), ex), dtype=np.float64)


def finite_difference_gradients(m: LwcModel, ex: TrainingExample, h: float = 1e-5) -> np.ndarray:
    """Central differences per parameter, shrinking h near a clamp bound.

    Stays inside each parameter's admissible interval so the constructor
    clamps never distort the stencil; falls back to a one-sided stencil
    for a parameter pinned exactly at a bound.
    """
    if h <= 0.0:
        raise UsageError("h must be > 0")
    vec = m.to_vector()

    def loss_at(values: list[float]) -> float:
        model = LwcModel.from_vector(values)
        err = sequence_score(model, ex.seq) - ex.target
        return err * err

    grad = np.empty(len(vec), dtype=np.float64)
    for i, (lo, hi) in enumerate(PARAM_BOUNDS):
        theta = vec[i]
        hi_room = hi - theta
        lo_room = theta - lo
        step = min(h, hi_room, lo_room)
        plus = list(vec)
        minus = list(vec)
        if step > 0.0:
            plus[i] = theta + step
            minus[i] = theta - step
            grad[i] = (loss_at(plus) - loss_at(minus)) / (2.0 * step)
        else:
            # Pinned at a bound: one-sided difference into the interior.
            side = min(h, hi_room) if hi_room > 0.0 else -min(h, lo_room)
            plus[i] = theta + side
            grad[i] = (loss_at(plus) - loss_at(vec)) / side
    return grad


def _clamp_vector(vec: list[float]) -> list[float]:
    return [min(hi, max(lo, v)) for v, (lo, hi) in zip(vec, PARAM_BOUNDS)]


def train(init: LwcModel, data: list[TrainingExample],
          cfg: TrainConfig) -> tuple[LwcModel, list[float]]:
    """Full-batch descent; returns the final model and the per-epoch loss trace.

    Clamps (rho floors, lambda into [0, 1], non-negative ceilings) are
    re-applied after every step.  Deterministic for fixed inputs.
    """
    if not data:
        raise UsageError("train requires at least one example")
    vec = _clamp_vector(init.to_vector())
    alpha = cfg.learning_rate
    n = len(data)
    trace: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        acc = [0.0] * len(vec)
        for ex in data:
            g = _example_gradient(vec, ex)
            for i in range(len(vec)):
                acc[i] += g[i]
        mean_g = [g / n for g in acc]
        if cfg.grad_clip is not None:
            norm = math.sqrt(sum(g * g for g in mean_g))
            if norm > cfg.grad_clip > 0.0:
                scale = cfg.grad_clip / norm
                mean_g = [g * scale for g in mean_g]
        vec = _clamp_vector([v - alpha * g for v, g in zip(vec, mean_g)])
        loss = mse_loss(LwcModel.from_vector(vec), data)
        if not math.isfinite(loss):
            raise TrainingError(f"training diverged at epoch {epoch} (loss {loss!r})")
        trace.append(loss)
    return LwcModel.from_vector(vec), trace


def synth_dataset(gt: LwcModel, n: int, noise_sigma: float,
                  len_range: tuple[int, int] = (1, 6),
                  seed: int = 0) -> list[TrainingExample]:
    """Random feature triples scored by a ground-truth model plus clipped noise."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if noise_sigma < 0.0:
        raise UsageError("noise_sigma must be >= 0")
    lo, hi = int(len_range[0]), int(len_range[1])
    if lo < 1 or hi < lo:
        raise UsageError(f"invalid length range {len_range!r}")
    rng = np.random.default_rng(seed)
    out: list[TrainingExample] = []
    for _ in range(n):
        length = int(rng.integers(lo, hi + 1))
        steps = tuple(tuple(rng.uniform(0.0, 1.0, 3).tolist()) for _ in range(length))
        seq = FeatureSequence(steps)
        target = sequence_score(gt, seq)
        if noise_sigma > 0.0:
            target += rng.normal(0.0, noise_sigma)
        out.append(TrainingExample(seq=seq, target=min(1.0, max(0.0, target))))
    return out


# ---------------------------------------------------------------------------
# File formats: ratings datasets and loss traces.

def load_ratings(path, materials=None, incentive: float = 0.1) -> list[TrainingExample]:
    """Load a ratings dataset; raw [0, 4] ratings are normalized to [0, 1].

    Records either carry explicit "steps" triples or an "order" of material
    ids, in which case `materials` (a MaterialSet) is required to derive the
    features.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != RATINGS_FORMAT:
        raise LoadError(f"{path}: missing or unsupported format tag (want {RATINGS_FORMAT})")
    records = doc.get("examples")
    if not isinstance(records, list) or not records:
        raise LoadError(f"{path}: examples: expected a non-empty array")
    bound = 1.0 + incentive
    out: list[TrainingExample] = []
    for i, rec in enumerate(records):
        where = f"{path}: examples[{i}]"
        if not isinstance(rec, dict):
            raise LoadError(f"{where}: expected an object")
        rating = rec.get("rating")
        if not isinstance(rating, (int, float)) or not (0.0 <= float(rating) <= RAW_RATING_MAX):
            raise LoadError(f"{where}.rating: expected a number in [0, {RAW_RATING_MAX}]")
        if "steps" in rec:
            steps = rec["steps"]
            if not isinstance(steps, list) or not steps:
                raise LoadError(f"{where}.steps: expected a non-empty array of triples")
            for j, step in enumerate(steps):
                if (not isinstance(step, list) or len(step) != 3
                        or not all(isinstance(c, (int, float)) for c in step)):
                    raise LoadError(f"{where}.steps[{j}]: expected [s_d, s_a, s_e]")
                if not all(0.0 <= float(c) <= bound for c in step):
                    raise LoadError(f"{where}.steps[{j}]: components must lie in [0, {bound}]")
            seq = FeatureSequence(tuple(tuple(float(c) for c in s) for s in steps))
        elif "order" in rec:
            if materials is None:
                raise LoadError(f"{where}.order: a manifest is required to resolve material ids")
            from .features import sequence_features  # late import; avoids a cycle
            seq = sequence_features(list(rec["order"]), materials, incentive)
        else:
            raise LoadError(f"{where}: record needs either 'steps' or 'order'")
        out.append(TrainingExample(seq=seq, target=float(rating) / RAW_RATING_MAX))
    return out


def save_ratings(data: list[TrainingExample], path) -> None:
    """Write examples with explicit step triples and raw [0, 4] ratings."""
    doc = {
        "format": RATINGS_FORMAT,
        "examples": [
            {"steps": [list(step) for step in ex.seq.steps],
             "rating": ex.target * RAW_RATING_MAX}
            for ex in data
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_loss_trace(trace: list[float], path) -> None:
    """Loss trace as CSV rows (epoch, loss), 1-based epochs."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(trace, start=1):
            writer.writerow([epoch, repr(loss)])


# ---------------------------------------------------------------------------
# Gradient verification.

@dataclass
class GradCheckReport:
    passed: bool
    draws: int
    worst_param: str = ""
    worst_rel: float = 0.0
    worst_abs: float = 0.0
    failures: list[str] = field(default_factory=list)


def random_case(rng: np.random.Generator) -> tuple[LwcModel, TrainingExample]:
    """One random (model, example) draw for gradient verification.

    Decays are kept off the [0, 1] boundary so the central stencil has room.
    """
    vec = [
        rng.uniform(0.1, 2.0), rng.uniform(0.2, 3.0), rng.uniform(-1.0, 3.0),
        rng.uniform(0.1, 2.0), rng.uniform(0.2, 3.0), rng.uniform(-1.0, 3.0),
        rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
        rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
    ]
    model = LwcModel.from_vector(vec)
    length = int(rng.integers(1, 7))
    steps = tuple(tuple(rng.uniform(0.0, 1.0, 3).tolist()) for _ in range(length))
    ex = TrainingExample(seq=FeatureSequence(steps), target=float(rng.uniform(0.0, 1.0)))
    return model, ex


def gradient_check(draws: int = 200, seed: int = 0, h: float = 1e-5,
                   rel_tol: float = 1e-5, abs_tol: float = 1e-8,
                   model: LwcModel | None = None,
                   corrupt_param: str | None = None) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    A component passes if its absolute disagreement is within abs_tol or its
    relative disagreement within rel_tol.  `corrupt_param` perturbs one
    analytic component before comparison (negative-control hook).
    """
    if draws < 1:
        raise UsageError("draws must be >= 1")
    if corrupt_param is not None and corrupt_param not in PARAM_NAMES:
        raise UsageError(f"unknown parameter {corrupt_param!r}")
    rng = np.random.default_rng(seed)
    report = GradCheckReport(passed=True, draws=draws)
    for draw in range(draws):
        m, ex = random_case(rng)
        if model is not None:
            m = model
        ana = analytic_gradients(m, ex)
        if corrupt_param is not None:
            idx = PARAM_NAMES.index(corrupt_param)
            ana[idx] = ana[idx] + 0.5
        fd = finite_difference_gradients(m, ex, h)
        for i, name in enumerate(PARAM_NAMES):
            abs_err = abs(ana[i] - fd[i])
            scale = max(abs(ana[i]), abs(fd[i]))
            rel_err = abs_err / scale if scale > 0.0 else 0.0
            if rel_err > report.worst_rel:
                report.worst_rel = rel_err
                report.worst_abs = abs_err
                report.worst_param = name
            if abs_err > abs_tol and rel_err > rel_tol:
                report.passed = False
                report.failures.append(
                    f"draw {draw}: {name}: analytic {ana[i]!r} vs fd {fd[i]!r} "
                    f"(abs {abs_err:.3e}, rel {rel_err:.3e})")
    return report
