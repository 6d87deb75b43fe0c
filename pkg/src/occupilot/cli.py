"""Command-line entry point: generate -> preprocess -> train -> evaluate ->
embed -> simulate. Subcommands compose only through files on disk.

Exit codes: 0 success, 1 I/O or missing-artifact error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .autoencoder import AeConfig
from .dimred import TsneConfig
from .errors import ArtifactMissing, ConfigError, OccupilotError
from .powersim import ShutoffPolicy
from .svm import KernelSpec
from .synthgen import CohortConfig
from . import pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occupilot",
        description="Occupancy detection and power management for smart-building telemetry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic cohort of telemetry + PV CSVs")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--households", type=int, default=50)
    g.add_argument("--days", type=int, default=7)
    g.add_argument("--pv-peak-kw", type=float, default=0.4)
    g.add_argument("--cloud-noise", type=float, default=0.3)
    g.add_argument("--ts-format", choices=("epoch", "iso"), default="epoch")
    g.add_argument("--out", required=True)

    p = sub.add_parser("preprocess", help="resample, label, standardize, split 80/20")
    p.add_argument("--data", required=True, help="directory written by generate")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rooms", choices=("room1_living", "room2_bedroom", "both"), default="both")
    p.add_argument("--split-scope", choices=("pooled", "per-household"), default="pooled")
    p.add_argument("--hold-bins", type=int, default=2)
    p.add_argument("--ts-format", choices=("epoch", "iso"), default="epoch")

    t = sub.add_parser("train", help="train the svm or autoencoder detector")
    t.add_argument("--features", required=True, help="directory written by preprocess")
    t.add_argument("--out", required=True)
    t.add_argument("--model", choices=("svm", "ae"), default="svm")
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--C", type=float, default=10.0)
    t.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    t.add_argument("--gamma", type=float, default=None)
    t.add_argument("--tol", type=float, default=1e-3)
    t.add_argument("--max-passes", type=int, default=100)
    t.add_argument("--max-train-rows", type=int, default=1500)
    t.add_argument("--epochs", type=int, default=500)
    t.add_argument("--learning-rate", type=float, default=0.01)
    t.add_argument("--train-class", type=int, choices=(0, 1), default=1)

    e = sub.add_parser("evaluate", help="metrics of a trained model on the validation split")
    e.add_argument("--features", required=True)
    e.add_argument("--model-file", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--location", default="room 1 & 2")

    m = sub.add_parser("embed", help="2-D PCA or t-SNE embedding CSV")
    m.add_argument("--features", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--embed", choices=("pca", "tsne"), default="tsne")
    m.add_argument("--seed", type=int, default=42)
    m.add_argument("--max-rows", type=int, default=1000)
    m.add_argument("--perplexity", type=float, default=30.0)
    m.add_argument("--iterations", type=int, default=1000)

    s = sub.add_parser("simulate", help="occupancy-driven shutoff savings report")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--model-file", default=None)
    s.add_argument("--features", default=None)
    s.add_argument("--predictions", default=None, help="directory of pred_h<id>_<room>.csv files")
    s.add_argument("--policy-file", default=None, help="JSON with controllable/protected/absence_delay_bins")
    s.add_argument("--hold-bins", type=int, default=2)
    return parser


def _load_policy(path) -> ShutoffPolicy:
    if path is None:
        return ShutoffPolicy()
    with open(path) as fh:
        raw = json.load(fh)
    return ShutoffPolicy(
        controllable=tuple(raw.get("controllable", ShutoffPolicy.controllable)),
        protected=tuple(raw.get("protected", ShutoffPolicy.protected)),
        absence_delay_bins=int(raw.get("absence_delay_bins", 1)),
    )


def _dispatch(args) -> None:
    if args.command == "generate":
        config = CohortConfig(
            n_households=args.households,
            days=args.days,
            seed=args.seed,
            pv_peak_kw=args.pv_peak_kw,
            cloud_noise=args.cloud_noise,
        )
        pipeline.run_generate(config, args.out, ts_format=args.ts_format)
    elif args.command == "preprocess":
        rooms = ("room1_living", "room2_bedroom") if args.rooms == "both" else (args.rooms,)
        pipeline.run_preprocess(
            args.data,
            args.out,
            rooms=rooms,
            seed=args.seed,
            split_scope=args.split_scope,
            hold_bins=args.hold_bins,
            ts_format=args.ts_format,
        )
    elif args.command == "train":
        kernel = KernelSpec(kind=args.kernel, gamma=args.gamma)
        ae_config = None
        if args.model == "ae":
            fm = pipeline.load_features(args.features)
            ae_config = AeConfig.default_for(
                fm.values.shape[1],
                seed=args.seed,
                epochs=args.epochs,
                learning_rate=args.learning_rate,
            )
        pipeline.run_train(
            args.features,
            args.out,
            model=args.model,
            seed=args.seed,
            C=args.C,
            kernel=kernel,
            tol=args.tol,
            max_passes=args.max_passes,
            max_train_rows=args.max_train_rows,
            ae_config=ae_config,
            train_class=args.train_class,
        )
    elif args.command == "evaluate":
        report = pipeline.run_evaluate(args.features, args.model_file, args.out, args.location)
        with open(f"{args.out}/metrics.txt") as fh:
            sys.stdout.write(fh.read())
    elif args.command == "embed":
        tsne_config = TsneConfig(
            perplexity=args.perplexity, iterations=args.iterations, seed=args.seed
        )
        pipeline.run_embed(
            args.features,
            args.out,
            method=args.embed,
            max_rows=args.max_rows,
            seed=args.seed,
            tsne_config=tsne_config,
        )
    elif args.command == "simulate":
        report = pipeline.run_simulate(
            args.data,
            args.out,
            policy=_load_policy(args.policy_file),
            model_path=args.model_file,
            features_dir=args.features,
            predictions_dir=args.predictions,
            hold_bins=args.hold_bins,
        )
        with open(f"{args.out}/savings_report.txt") as fh:
            sys.stdout.write(fh.read())


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        _dispatch(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArtifactMissing, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OccupilotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
