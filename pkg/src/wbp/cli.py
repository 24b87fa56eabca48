"""Command-line surface: train, storyline, score, gradcheck, oracle.

Exit codes are a stable contract: 0 success, 1 verification failure
(including training divergence), 2 input or usage error.  Every command is
deterministic given its inputs, the config file, and --seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import training
from .clustering import choose_k
from .errors import UsageError, WbpError
from .features import DEFAULT_INCENTIVE, load_manifest, sequence_features
from .model import (
    PARAM_NAMES,
    accumulate_channel,
    load_model,
    save_model,
    sequence_score,
    stimulus_intensity,
    wundt_eval,
)
from .oracle import baseline_greedy, baseline_random, brute_force_storyline
from .seeds import sub_seed
from .sequencer import (
    BEAM_WIDTH_DEFAULT,
    EXHAUSTIVE_THRESHOLD_DEFAULT,
    SolverConfig,
    generate_storyline,
    render_storyline,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2

ORACLE_TOLERANCE = 1e-9


@dataclass
class RunConfig:
    """Static configuration; flags beat file values, file values beat defaults."""

    category_k: dict[str, int] = field(default_factory=dict)
    n_max: int = 8
    seed: int = 0
    exhaustive_threshold: int = EXHAUSTIVE_THRESHOLD_DEFAULT
    beam_width: int = BEAM_WIDTH_DEFAULT
    incentive: float | None = None
    learning_rate: float = 0.01
    epochs: int = 5000
    threads: int = 0    # 0: available parallelism

    @staticmethod
    def from_file(path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"{path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError(f"{path}: expected a JSON object")
        cfg = RunConfig()
        known = {
            "category_k": dict, "n_max": int, "seed": int,
            "exhaustive_threshold": int, "beam_width": int,
            "incentive": (int, float), "learning_rate": (int, float),
            "epochs": int, "threads": int,
        }
        for key, value in doc.items():
            if key not in known:
                raise UsageError(f"{path}: unknown config key {key!r}")
            if not isinstance(value, known[key]) or isinstance(value, bool):
                raise UsageError(f"{path}: {key}: unexpected type")
            setattr(cfg, key, value)
        return cfg

    def resolved_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    overrides = {}
    for flag, key in (("n_max", "n_max"), ("seed", "seed"),
                      ("exhaustive_threshold", "exhaustive_threshold"),
                      ("beam_width", "beam_width"), ("incentive", "incentive"),
                      ("lr", "learning_rate"), ("epochs", "epochs"),
                      ("threads", "threads")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return replace(cfg, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbp",
        description="Learn a bell-shaped persuasiveness curve from rated "
                    "sequences and assemble length-constrained storylines "
                    "from visual materials.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "config" in names:
            p.add_argument("--config", help="JSON config file [default: none]")
        if "manifest" in names:
            p.add_argument("--manifest", help="material manifest (wbp-manifest-v1)")
        if "model" in names:
            p.add_argument("--model", help="model file (lwc-v1)")
        if "seed" in names:
            p.add_argument("--seed", type=int, help="top-level random seed [default: 0]")
        if "n_max" in names:
            p.add_argument("--n-max", dest="n_max", type=int,
                           help="total material budget [default: 8]")
        if "threads" in names:
            p.add_argument("--threads", type=int,
                           help="worker threads [default: available parallelism]")
        if "out" in names:
            p.add_argument("--out", help="output path [default: stdout]")

    p = sub.add_parser("train", help="fit a model to a ratings dataset")
    common(p, "config", "manifest", "seed", "threads")
    p.add_argument("--ratings", required=True, help="ratings dataset (wbp-ratings-v1)")
    p.add_argument("--out", required=True, help="where to write the lwc-v1 model")
    p.add_argument("--loss-csv", help="loss trace CSV [default: <out>.loss.csv]")
    p.add_argument("--lr", type=float, help="fixed learning rate [default: 0.01]")
    p.add_argument("--epochs", type=int, help="training epochs [default: 5000]")
    p.add_argument("--init", choices=training.INIT_PRESETS, default="canonical",
                   help="initialization preset [default: canonical]")
    p.add_argument("--incentive", type=float,
                   help="video aesthetics bonus used when ratings reference "
                        "material ids [default: 0.1]")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("storyline", help="generate a storyline from a manifest")
    common(p, "config", "manifest", "model", "seed", "n_max", "threads", "out")
    p.add_argument("--k", type=int, help="cluster count [default: from category table]")
    p.add_argument("--category", help="product category for the k table [default: none]")
    p.add_argument("--exhaustive-threshold", dest="exhaustive_threshold", type=int,
                   help="max cluster size for exhaustive search [default: 8]")
    p.add_argument("--beam-width", dest="beam_width", type=int,
                   help="beam width above the threshold [default: 50]")
    p.add_argument("--incentive", type=float,
                   help="video aesthetics bonus [default: manifest value or 0.1]")
    p.set_defaults(func=cmd_storyline, manifest_required=True, model_required=True)

    p = sub.add_parser("score", help="score an explicit ordering of material ids")
    common(p, "config", "manifest", "model", "threads")
    p.add_argument("--order", required=True,
                   help="comma-separated material ids, in presentation order")
    p.add_argument("--incentive", type=float,
                   help="video aesthetics bonus [default: manifest value or 0.1]")
    p.set_defaults(func=cmd_score, manifest_required=True, model_required=True)

    p = sub.add_parser("gradcheck",
                       help="verify analytic gradients against finite differences")
    common(p, "config", "model", "seed")
    p.add_argument("--draws", type=int, default=200,
                   help="number of random draws [default: 200]")
    p.add_argument("--corrupt", choices=PARAM_NAMES, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("oracle",
                       help="compare the solver against brute force and baselines")
    common(p, "config", "manifest", "model", "seed", "n_max", "threads")
    p.add_argument("--k", type=int, help="cluster count [default: from category table]")
    p.add_argument("--category", help="product category for the k table [default: none]")
    p.add_argument("--incentive", type=float,
                   help="video aesthetics bonus [default: manifest value or 0.1]")
    p.set_defaults(func=cmd_oracle, manifest_required=True, model_required=True)

    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    return _apply_flags(cfg, args)


def _require(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"--{name} is required for this command")
    return value


def _resolve_k(args, cfg: RunConfig, set_size: int) -> int:
    if getattr(args, "k", None) is not None:
        return args.k
    k = choose_k(getattr(args, "category", None), cfg.category_k)
    if k > set_size:
        log.info("clamping k from %d to the set size %d", k, set_size)
        k = set_size
    return k


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    mset = None
    incentive = cfg.incentive if cfg.incentive is not None else DEFAULT_INCENTIVE
    if args.manifest:
        mset = load_manifest(args.manifest, threads=cfg.resolved_threads())
        if cfg.incentive is None and mset.incentive is not None:
            incentive = mset.incentive
    data = training.load_ratings(args.ratings, materials=mset, incentive=incentive)
    tcfg = training.TrainConfig(learning_rate=cfg.learning_rate, epochs=cfg.epochs,
                                seed=cfg.seed, init=args.init)
    init = training.initial_model(args.init, seed=sub_seed(cfg.seed, "init"))
    model, trace = training.train(init, data, tcfg)
    save_model(model, args.out)
    loss_path = args.loss_csv or f"{args.out}.loss.csv"
    training.save_loss_trace(trace, loss_path)
    print(f"final_mse={trace[-1]!r}")
    print(f"model={args.out}")
    print(f"loss_csv={loss_path}")
    return EXIT_OK


def cmd_storyline(args) -> int:
    cfg = _load_config(args)
    mset = load_manifest(_require(args, "manifest"), threads=cfg.resolved_threads())
    model = load_model(_require(args, "model"))
    k = _resolve_k(args, cfg, len(mset))
    solver = SolverConfig(
        n_max=cfg.n_max, seed=cfg.seed,
        exhaustive_threshold=cfg.exhaustive_threshold,
        beam_width=cfg.beam_width, incentive=cfg.incentive,
        threads=cfg.resolved_threads())
    story = generate_storyline(mset, model, k, cfg.n_max, solver)
    _emit(render_storyline(story), getattr(args, "out", None))
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _load_config(args)
    mset = load_manifest(_require(args, "manifest"), threads=cfg.resolved_threads())
    model = load_model(_require(args, "model"))
    incentive = cfg.incentive
    if incentive is None:
        incentive = mset.incentive if mset.incentive is not None else DEFAULT_INCENTIVE
    order = [part.strip() for part in args.order.split(",") if part.strip()]
    seq = sequence_features(order, mset, incentive)
    acc = model.accum
    report = {
        "order": order,
        "steps": [{"id": mid, "s_d": s[0], "s_a": s[1], "s_e": s[2]}
                  for mid, s in zip(order, seq.steps)],
        "accumulations": {
            "S_d": accumulate_channel(acc.lambda_d, seq.column(0)),
            "S_a": accumulate_channel(acc.lambda_a, seq.column(1)),
            "S_e": accumulate_channel(acc.lambda_e, seq.column(2)),
        },
        "x": stimulus_intensity(acc, seq),
        "score": sequence_score(model, seq),
    }
    assert report["score"] == wundt_eval(model.wundt, report["x"])
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _load_config(args)
    model = load_model(args.model) if args.model else None
    report = training.gradient_check(
        draws=args.draws, seed=cfg.seed, model=model, corrupt_param=args.corrupt)
    doc = {
        "pass": report.passed,
        "draws": report.draws,
        "worst": {"param": report.worst_param, "rel_err": report.worst_rel,
                  "abs_err": report.worst_abs},
        "failures": report.failures[:10],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    mset = load_manifest(_require(args, "manifest"), threads=cfg.resolved_threads())
    model = load_model(_require(args, "model"))
    k = _resolve_k(args, cfg, len(mset))
    solver = SolverConfig(
        n_max=cfg.n_max, seed=cfg.seed,
        exhaustive_threshold=cfg.exhaustive_threshold,
        beam_width=cfg.beam_width, incentive=cfg.incentive,
        threads=cfg.resolved_threads())
    story = generate_storyline(mset, model, k, cfg.n_max, solver)

    from .clustering import cluster_materials
    assignment = cluster_materials(mset, k, seed=sub_seed(cfg.seed, "clustering"))
    exact = brute_force_storyline(mset, model, assignment, cfg.n_max,
                                  incentive=cfg.incentive)
    greedy = baseline_greedy(mset, model, cfg.n_max, incentive=cfg.incentive)
    rand = baseline_random(mset, cfg.n_max, seed=sub_seed(cfg.seed, "baselines"),
                           model=model, incentive=cfg.incentive)

    all_exact = all(mode == "exact"
                    for mode in story.metadata["solver_per_cluster"].values())
    gap = abs(story.total_objective - exact.total_objective)
    matches = gap <= ORACLE_TOLERANCE
    if all_exact:
        verdict = "WBP == oracle" if matches else "WBP != oracle"
    else:
        verdict = "WBP <= oracle (beam search in use)"
    doc = {
        "objectives": {
            "oracle": exact.total_objective,
            "wbp": story.total_objective,
            "greedy": greedy.total_objective,
            "random": rand.total_objective,
        },
        "exact_search": all_exact,
        "oracle_states": exact.metadata["states"],
        "verdict": verdict,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if all_exact and not matches:
        return EXIT_VERIFICATION
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WbpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


def entry() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(main())


if __name__ == "__main__":
    entry()
