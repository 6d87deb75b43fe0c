"""Feature-matrix construction: column standardization and the 80/20 split.

The feature vector per 15-minute bin is the seven environmental sensor means
plus, for each appliance channel, its switch on-fraction and mean power
(7 + 10 + 10 = 27 columns). The presence channel is excluded: it is the
source of the occupancy label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SingleClass
from .telemetry import APPLIANCE_CHANNELS, SENSOR_CHANNELS

FEATURE_NAMES = (
    SENSOR_CHANNELS
    + tuple(f"switch_{c}" for c in APPLIANCE_CHANNELS)
    + tuple(f"power_{c}" for c in APPLIANCE_CHANNELS)
)


@dataclass
class Scaler:
    """Per-column affine standardization fitted on training rows only.

    Zero-variance columns are dropped and their names recorded in
    ``dropped``; ``transform`` returns only the retained columns.
    """

    mean: np.ndarray
    std: np.ndarray
    kept: np.ndarray  # indices of retained columns
    dropped: list = field(default_factory=list)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, float)[:, self.kept] - self.mean) / self.std

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, float) * self.std + self.mean

    def as_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "kept": self.kept.tolist(),
            "dropped": list(self.dropped),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(
            mean=np.array(d["mean"], float),
            std=np.array(d["std"], float),
            kept=np.array(d["kept"], int),
            dropped=list(d["dropped"]),
        )


@dataclass
class SplitIndices:
    train_rows: np.ndarray
    valid_rows: np.ndarray
    seed: int


@dataclass
class FeatureMatrix:
    """Standardized bins with binary occupancy labels."""

    values: np.ndarray  # n x d, standardized
    labels: np.ndarray  # {0,1}^n
    scaler: Scaler
    channel_names: list
    split: SplitIndices | None = None


def bins_to_raw_matrix(bins) -> tuple[np.ndarray, np.ndarray]:
    """Stack labeled BinnedRecords into an unscaled matrix + label vector."""
    rows = np.empty((len(bins), len(FEATURE_NAMES)))
    labels = np.empty(len(bins), int)
    for i, rec in enumerate(bins):
        if rec.occupancy_label is None:
            raise ValueError("bin has no occupancy label; run label_occupancy first")
        rows[i, : len(SENSOR_CHANNELS)] = [rec.sensor_means[c] for c in SENSOR_CHANNELS]
        off = len(SENSOR_CHANNELS)
        rows[i, off : off + len(APPLIANCE_CHANNELS)] = [
            rec.switch_fractions[c] for c in APPLIANCE_CHANNELS
        ]
        off += len(APPLIANCE_CHANNELS)
        rows[i, off:] = [rec.power_means[c] for c in APPLIANCE_CHANNELS]
        labels[i] = rec.occupancy_label
    return rows, labels


def fit_scaler(matrix: np.ndarray, train_rows) -> Scaler:
    """Fit per-column mean/std (sample std, ddof=1) on the training rows.

    Columns with zero variance on the training rows are dropped and reported
    through ``Scaler.dropped``.
    """
    X = np.asarray(matrix, float)[np.asarray(train_rows, int)]
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows to fit a scaler")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    kept = np.flatnonzero(std > 0)
    dropped = [FEATURE_NAMES[i] if i < len(FEATURE_NAMES) else f"col_{i}"
               for i in np.flatnonzero(std == 0)]
    return Scaler(mean=mean[kept], std=std[kept], kept=kept, dropped=dropped)


def split_80_20(n_rows: int, seed: int, stratify) -> SplitIndices:
    """Seeded stratified split: 80% train / 20% validation per class.

    Raises :class:`SingleClass` when only one label value is present.
    """
    if n_rows < 10:
        raise ValueError(f"need at least 10 rows, got {n_rows}")
    labels = np.asarray(stratify)
    if len(labels) != n_rows:
        raise ValueError("stratify length must equal n_rows")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClass()

    rng = np.random.default_rng(seed)
    train, valid = [], []
    for cls in classes:
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_train = int(round(0.8 * len(idx)))
        train.append(idx[:n_train])
        valid.append(idx[n_train:])
    train = np.sort(np.concatenate(train))
    valid = np.sort(np.concatenate(valid))
    return SplitIndices(train_rows=train, valid_rows=valid, seed=seed)


def build_feature_matrix(bins, seed: int) -> FeatureMatrix:
    """Raw bins -> split -> scaler fit on train rows -> standardized matrix."""
    raw, labels = bins_to_raw_matrix(bins)
    split = split_80_20(len(bins), seed, labels)
    scaler = fit_scaler(raw, split.train_rows)
    values = scaler.transform(raw)
    names = [FEATURE_NAMES[i] for i in scaler.kept]
    return FeatureMatrix(values=values, labels=labels, scaler=scaler,
                         channel_names=names, split=split)


def save_feature_matrix(fm: FeatureMatrix, csv_path, sidecar_path) -> None:
    """CSV of standardized values + label; JSON sidecar with scaler and split."""
    with open(csv_path, "w") as fh:
        fh.write(",".join(list(fm.channel_names) + ["label"]) + "\n")
        for row, y in zip(fm.values, fm.labels):
            fh.write(",".join(f"{v:.9f}" for v in row) + f",{int(y)}\n")
    sidecar = {
        "schema_version": 1,
        "channel_names": list(fm.channel_names),
        "scaler": fm.scaler.as_dict(),
        "seed": None if fm.split is None else int(fm.split.seed),
        "train_rows": None if fm.split is None else fm.split.train_rows.tolist(),
        "valid_rows": None if fm.split is None else fm.split.valid_rows.tolist(),
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_feature_matrix(csv_path, sidecar_path) -> FeatureMatrix:
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    values, labels = data[:, :-1], data[:, -1].astype(int)
    split = None
    if sidecar.get("train_rows") is not None:
        split = SplitIndices(
            train_rows=np.array(sidecar["train_rows"], int),
            valid_rows=np.array(sidecar["valid_rows"], int),
            seed=int(sidecar["seed"]),
        )
    return FeatureMatrix(
        values=values,
        labels=labels,
        scaler=Scaler.from_dict(sidecar["scaler"]),
        channel_names=list(sidecar["channel_names"]),
        split=split,
    )
