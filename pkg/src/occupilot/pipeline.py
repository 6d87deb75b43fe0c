"""File-based pipeline steps shared by the command-line tool and the tests.

Every step reads its inputs from disk, writes its artifact atomically
(temp file + rename), and drops a ``run_manifest.json`` with the fully
resolved configuration so any artifact can be reproduced from its manifest.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .autoencoder import (
    AeConfig,
    AutoencoderModel,
    calibrate_threshold,
    predict_ae,
    train_ae,
)
from .dimred import TsneConfig, pca_2d, save_embedding, tsne_2d
from .errors import ArtifactMissing, ConfigError
from .evalmetrics import evaluate, render_table
from .powersim import (
    HouseholdResult,
    ShutoffPolicy,
    cohort_report,
    load_profiles,
    net_energy,
    render_savings_table,
)
from .preprocess import (
    FeatureMatrix,
    bins_to_raw_matrix,
    fit_scaler,
    load_feature_matrix,
    save_feature_matrix,
    split_80_20,
    SplitIndices,
)
from .svm import KernelSpec, SvmModel, predict, train_svc
from .synthgen import CohortConfig, generate_household, read_pv_csv, write_pv_csv
from .telemetry import (
    ROOM_IDS,
    TimeZonePolicy,
    label_occupancy,
    parse_csv,
    resample_15min,
    write_csv,
)


def _max_threads() -> int:
    raw = os.environ.get("OCCUPILOT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir, step: str, config: dict) -> None:
    import datetime

    manifest = {
        "schema_version": 1,
        "tool_version": __version__,
        "step": step,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config,
    }
    write_json(Path(out_dir) / "run_manifest.json", manifest)


def telemetry_path(data_dir, household_id: int, room_id: str) -> Path:
    return Path(data_dir) / f"telemetry_h{household_id:02d}_{room_id}.csv"


def pv_path(data_dir, household_id: int) -> Path:
    return Path(data_dir) / f"pv_h{household_id:02d}.csv"


def run_generate(config: CohortConfig, out_dir, ts_format: str = "epoch") -> list:
    """Write the cohort CSVs; returns the list of written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def emit(h):
        data = generate_household(h, config)
        paths = []
        for room_id, series in data.rooms.items():
            p = telemetry_path(out_dir, h, room_id)
            write_csv(series, p, ts_format=ts_format)
            paths.append(p)
        p = pv_path(out_dir, h)
        write_pv_csv(data, p)
        paths.append(p)
        return paths

    threads = _max_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            written = [p for paths in pool.map(emit, range(config.n_households)) for p in paths]
    else:
        written = [p for h in range(config.n_households) for p in emit(h)]

    write_manifest(
        out_dir,
        "generate",
        {
            "n_households": config.n_households,
            "days": config.days,
            "seed": config.seed,
            "native_period": config.native_period,
            "archetype_weights": config.archetype_weights,
            "pv_peak_kw": config.pv_peak_kw,
            "cloud_noise": config.cloud_noise,
            "start_epoch": config.start_epoch,
            "ts_format": ts_format,
        },
    )
    return written


def load_labeled_bins(
    data_dir,
    rooms=ROOM_IDS,
    policy: TimeZonePolicy = None,
    hold_bins: int = 2,
    ts_format: str = "epoch",
):
    """Parse, resample and label every telemetry file present.

    Returns {household_id: {room_id: [BinnedRecord]}}.
    """
    data_dir = Path(data_dir)
    result = {}
    h = 0
    while True:
        per_room = {}
        for room_id in rooms:
            p = telemetry_path(data_dir, h, room_id)
            if not p.exists():
                continue
            series = parse_csv(p, ts_format=ts_format, household_id=h, room_id=room_id)
            bins = label_occupancy(resample_15min(series), policy, hold_bins)
            per_room[room_id] = bins
        if not per_room:
            break
        result[h] = per_room
        h += 1
    if not result:
        raise ArtifactMissing(telemetry_path(data_dir, 0, rooms[0]))
    return result


def run_preprocess(
    data_dir,
    out_dir,
    rooms=ROOM_IDS,
    seed: int = 42,
    split_scope: str = "pooled",
    hold_bins: int = 2,
    ts_format: str = "epoch",
) -> FeatureMatrix:
    """Build the standardized feature matrix + 80/20 split and save it."""
    if split_scope not in ("pooled", "per-household"):
        raise ConfigError(f"unknown split scope: {split_scope}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labeled = load_labeled_bins(data_dir, rooms=rooms, hold_bins=hold_bins, ts_format=ts_format)

    all_bins, block_sizes = [], []
    for h in sorted(labeled):
        for room_id in rooms:
            if room_id in labeled[h]:
                bins = labeled[h][room_id]
                all_bins.extend(bins)
                block_sizes.append(len(bins))
    raw, labels = bins_to_raw_matrix(all_bins)

    if split_scope == "pooled":
        split = split_80_20(len(all_bins), seed, labels)
    else:
        train_parts, valid_parts = [], []
        offset = 0
        for size in block_sizes:
            block_labels = labels[offset : offset + size]
            sub = split_80_20(size, seed, block_labels)
            train_parts.append(sub.train_rows + offset)
            valid_parts.append(sub.valid_rows + offset)
            offset += size
        split = SplitIndices(
            train_rows=np.sort(np.concatenate(train_parts)),
            valid_rows=np.sort(np.concatenate(valid_parts)),
            seed=seed,
        )

    scaler = fit_scaler(raw, split.train_rows)
    from .preprocess import FEATURE_NAMES

    fm = FeatureMatrix(
        values=scaler.transform(raw),
        labels=labels,
        scaler=scaler,
        channel_names=[FEATURE_NAMES[i] for i in scaler.kept],
        split=split,
    )
    save_feature_matrix(fm, out_dir / "features.csv", out_dir / "features.json")
    write_manifest(
        out_dir,
        "preprocess",
        {
            "data_dir": str(data_dir),
            "rooms": list(rooms),
            "seed": seed,
            "split_scope": split_scope,
            "hold_bins": hold_bins,
            "ts_format": ts_format,
        },
    )
    return fm


def _require(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise ArtifactMissing(path)
    return path


def load_features(features_dir) -> FeatureMatrix:
    features_dir = Path(features_dir)
    return load_feature_matrix(
        _require(features_dir / "features.csv"), _require(features_dir / "features.json")
    )


def _subsample(rows: np.ndarray, labels: np.ndarray, limit: int, seed: int) -> np.ndarray:
    if limit <= 0 or len(rows) <= limit:
        return rows
    rng = np.random.default_rng(seed)
    # keep class balance roughly intact
    keep = []
    for cls in np.unique(labels[rows]):
        cls_rows = rows[labels[rows] == cls]
        n_keep = max(1, int(round(limit * len(cls_rows) / len(rows))))
        keep.append(rng.choice(cls_rows, size=min(n_keep, len(cls_rows)), replace=False))
    return np.sort(np.concatenate(keep))


def run_train(
    features_dir,
    out_dir,
    model: str = "svm",
    seed: int = 42,
    C: float = 10.0,
    kernel: KernelSpec = KernelSpec(),
    tol: float = 1e-3,
    max_passes: int = 100,
    max_train_rows: int = 1500,
    ae_config: AeConfig = None,
    train_class: int = 1,
):
    """Train the requested detector on the training split and save it."""
    if model not in ("svm", "ae"):
        raise ConfigError(f"unknown model: {model}")
    fm = load_features(features_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_rows = fm.split.train_rows

    if model == "svm":
        rows = _subsample(train_rows, fm.labels, max_train_rows, seed)
        fitted = train_svc(
            fm.values[rows], fm.labels[rows], C=C, kernel=kernel,
            tol=tol, max_passes=max_passes, seed=seed,
        )
        payload = fitted.to_json()
        out = out_dir / "model_svm.json"
    else:
        if ae_config is None:
            ae_config = AeConfig.default_for(fm.values.shape[1], seed=seed)
        class_rows = train_rows[fm.labels[train_rows] == train_class]
        class_rows = _subsample(class_rows, fm.labels, max_train_rows, seed)
        fitted = train_ae(fm.values[class_rows], ae_config)
        fitted.train_class = train_class
        calibrate_threshold(
            fitted, fm.values[fm.split.valid_rows], fm.labels[fm.split.valid_rows]
        )
        payload = fitted.to_json()
        out = out_dir / "model_ae.json"

    payload["features_dir"] = str(features_dir)
    write_json(out, payload)
    write_manifest(
        out_dir,
        "train",
        {
            "model": model,
            "seed": seed,
            "C": C,
            "kernel": {"kind": kernel.kind, "gamma": kernel.gamma},
            "tol": tol,
            "max_passes": max_passes,
            "max_train_rows": max_train_rows,
            "train_class": train_class,
            "features_dir": str(features_dir),
        },
    )
    return fitted


def load_model(model_path):
    with open(_require(model_path)) as fh:
        payload = json.load(fh)
    if payload["model_type"] == "svc":
        return SvmModel.from_json(payload)
    return AutoencoderModel.from_json(payload)


def model_predictions(model, values: np.ndarray) -> np.ndarray:
    if isinstance(model, AutoencoderModel):
        return predict_ae(model, values)
    return predict(model, values)


def run_evaluate(features_dir, model_path, out_dir, location: str = "room 1 & 2"):
    """Metrics of a trained model on the validation split."""
    fm = load_features(features_dir)
    model = load_model(model_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    valid = fm.split.valid_rows
    preds = model_predictions(model, fm.values[valid])
    report = evaluate(preds, fm.labels[valid], positive_class=1)

    algo = "SVM" if isinstance(model, SvmModel) else "Autoencoder"
    write_json(
        out_dir / "metrics.json",
        {
            "schema_version": 1,
            "algorithm": algo,
            "location": location,
            "metrics": report.as_dict(),
            "n_validation_rows": int(len(valid)),
        },
    )
    atomic_write_text(out_dir / "metrics.txt", render_table([(algo, location, report)]))
    write_manifest(
        out_dir,
        "evaluate",
        {"features_dir": str(features_dir), "model_path": str(model_path), "location": location},
    )
    return report


def run_embed(
    features_dir,
    out_dir,
    method: str = "tsne",
    max_rows: int = 1000,
    seed: int = 42,
    tsne_config: TsneConfig = None,
):
    """2-D embedding of (a subsample of) the feature matrix."""
    if method not in ("pca", "tsne"):
        raise ConfigError(f"unknown embedding method: {method}")
    fm = load_features(features_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = np.arange(len(fm.labels))
    rows = _subsample(rows, fm.labels, max_rows, seed)
    X, y = fm.values[rows], fm.labels[rows]
    if method == "pca":
        emb = pca_2d(X, labels=y)
    else:
        if tsne_config is None:
            tsne_config = TsneConfig(seed=seed)
        emb = tsne_2d(X, tsne_config, labels=y)

    save_embedding(emb, out_dir / f"embedding_{method}.csv")
    write_json(
        out_dir / f"embedding_{method}_diagnostics.json",
        {"schema_version": 1, "method": method, **emb.diagnostics},
    )
    write_manifest(
        out_dir,
        "embed",
        {"features_dir": str(features_dir), "method": method, "max_rows": max_rows, "seed": seed},
    )
    return emb


def _predictions_for_room(bins, values_scaler, model):
    from .preprocess import bins_to_raw_matrix

    raw, _ = bins_to_raw_matrix(bins)
    return model_predictions(model, values_scaler.transform(raw))


def run_simulate(
    data_dir,
    out_dir,
    policy: ShutoffPolicy = None,
    model_path=None,
    features_dir=None,
    predictions_dir=None,
    hold_bins: int = 2,
    ts_format: str = "epoch",
):
    """Power-savings simulation over the whole cohort.

    Occupancy timelines come from, in order of precedence: a predictions
    directory (``pred_h<id>_<room>.csv`` with bin_start,label), a trained
    model (requires ``features_dir`` for the scaler), or the ground-truth
    labels.
    """
    if policy is None:
        policy = ShutoffPolicy()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labeled = load_labeled_bins(data_dir, hold_bins=hold_bins, ts_format=ts_format)

    model = scaler = None
    if model_path is not None:
        if features_dir is None:
            raise ConfigError("model predictions need --features for the scaler")
        model = load_model(model_path)
        scaler = load_features(features_dir).scaler

    results = []
    for h in sorted(labeled):
        base_total = prop_total = None
        bin_starts = None
        for room_id, bins in labeled[h].items():
            if predictions_dir is not None:
                occ = _read_predictions(Path(predictions_dir) / f"pred_h{h:02d}_{room_id}.csv", bins)
            elif model is not None:
                occ = _predictions_for_room(bins, scaler, model)
            else:
                occ = np.array([b.occupancy_label for b in bins])
            base_kw, prop_kw = load_profiles(bins, occ, policy)
            if base_total is None:
                base_total, prop_total = base_kw, prop_kw
                bin_starts = np.array([b.bin_start for b in bins])
            else:
                base_total = base_total + base_kw
                prop_total = prop_total + prop_kw

        pv_file = pv_path(data_dir, h)
        if pv_file.exists():
            pv_starts, pv_kw = read_pv_csv(pv_file)
            idx = {int(t): k for k, t in enumerate(pv_starts)}
            pv = np.array([pv_kw[idx[int(t)]] if int(t) in idx else 0.0 for t in bin_starts])
        else:
            pv = None
        energy = net_energy(base_total, prop_total, pv)
        results.append(HouseholdResult(household_id=h, **energy))

    report = cohort_report(results)
    write_json(out_dir / "savings_report.json", report.as_dict())
    atomic_write_text(out_dir / "savings_report.txt", render_savings_table(report))
    write_manifest(
        out_dir,
        "simulate",
        {
            "data_dir": str(data_dir),
            "policy": {
                "controllable": list(policy.controllable),
                "protected": list(policy.protected),
                "absence_delay_bins": policy.absence_delay_bins,
            },
            "model_path": None if model_path is None else str(model_path),
            "predictions_dir": None if predictions_dir is None else str(predictions_dir),
            "hold_bins": hold_bins,
        },
    )
    return report


def _read_predictions(path, bins) -> np.ndarray:
    raw = np.loadtxt(_require(path), delimiter=",", skiprows=1, ndmin=2)
    by_start = {int(t): int(v) for t, v in raw}
    return np.array([by_start[b.bin_start] for b in bins])
