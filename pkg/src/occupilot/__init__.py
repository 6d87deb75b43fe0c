"""Occupancy detection and power-management toolkit for smart-building telemetry."""

__version__ = "0.1.0"

from .autoencoder import (  # noqa: F401
    AeConfig,
    AutoencoderModel,
    calibrate_threshold,
    predict_ae,
    reconstruction_error,
    train_ae,
)
from .dimred import Embedding2D, TsneConfig, pca_2d, tsne_2d  # noqa: F401
from .evalmetrics import ConfusionCounts, MetricReport, confusion, metrics  # noqa: F401
from .powersim import (  # noqa: F401
    SavingsReport,
    ShutoffPolicy,
    cohort_report,
    simulate_household,
)
from .preprocess import FeatureMatrix, build_feature_matrix, fit_scaler, split_80_20  # noqa: F401
from .svm import KernelSpec, SvmModel, SvrModel, predict, train_svc, train_svr  # noqa: F401
from .synthgen import CohortConfig, generate_cohort, generate_pv  # noqa: F401
from .telemetry import (  # noqa: F401
    BinnedRecord,
    HouseholdSeries,
    TelemetryFrame,
    TimeZonePolicy,
    label_occupancy,
    parse_csv,
    resample_15min,
    write_csv,
)
