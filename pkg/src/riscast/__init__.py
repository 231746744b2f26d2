"""Reproducible RIS-assisted link simulation with learned CSI forecasting.

The package covers the full loop: time-correlated Rayleigh channel
generation, windowed forecasting datasets, three from-scratch neural
predictors (feed-forward, LSTM, transformer encoder) with verified
gradients, closed-form reflection phase optimization, and Monte Carlo
outage and rate sweeps driven either from Python or the ``riscast`` CLI.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .channel import (
    ChannelSeries,
    CorrelationFilter,
    DatasetMeta,
    LinkGeometry,
    NormStats,
    WindowedDataset,
    build_correlation_filter,
    compute_norm_stats,
    correlate,
    denormalize,
    feature_names,
    features_to_channels,
    generate_channel_series,
    normalize,
    path_loss_db,
    path_loss_linear,
    prepare_dataset,
    read_dataset_csv,
    read_dataset_meta,
    sample_uncorrelated,
    to_feature_matrix,
    windowize,
    write_dataset_csv,
    write_dataset_meta,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DegenerateFeatureError,
    DivergenceError,
    InsufficientDataError,
    InvalidGeometryError,
    RiscastError,
)
from .experiments import (
    ScenarioConfig,
    SweepRow,
    collect_gains_sq,
    read_sweep_csv,
    run_element_sweep,
    run_power_sweep,
    wilson_interval,
    write_sweep_csv,
)
from .link import (
    SCHEMES,
    RadioConfig,
    achievable_rate,
    dbm_to_watts,
    dbw_to_watts,
    effective_gain,
    optimal_phases,
    outage_probability,
    rayleigh_outage_closed_form,
    scheme_phases,
    snr,
    wrap_phase,
)
from .models import (
    VARIANTS,
    ModelConfig,
    TrainConfig,
    TrainedModel,
    analytic_param_count,
    build_model,
    load_checkpoint,
    param_count,
    predict_next,
    save_checkpoint,
    test_rmse,
    train_model,
)
from .seeding import derive_rng

__all__ = [
    "__version__",
    "ChannelSeries",
    "CorrelationFilter",
    "DatasetMeta",
    "LinkGeometry",
    "NormStats",
    "WindowedDataset",
    "build_correlation_filter",
    "compute_norm_stats",
    "correlate",
    "denormalize",
    "feature_names",
    "features_to_channels",
    "generate_channel_series",
    "normalize",
    "path_loss_db",
    "path_loss_linear",
    "prepare_dataset",
    "read_dataset_csv",
    "read_dataset_meta",
    "sample_uncorrelated",
    "to_feature_matrix",
    "windowize",
    "write_dataset_csv",
    "write_dataset_meta",
    "CheckpointError",
    "ConfigError",
    "DegenerateFeatureError",
    "DivergenceError",
    "InsufficientDataError",
    "InvalidGeometryError",
    "RiscastError",
    "ScenarioConfig",
    "SweepRow",
    "collect_gains_sq",
    "read_sweep_csv",
    "run_element_sweep",
    "run_power_sweep",
    "wilson_interval",
    "write_sweep_csv",
    "SCHEMES",
    "RadioConfig",
    "achievable_rate",
    "dbm_to_watts",
    "dbw_to_watts",
    "effective_gain",
    "optimal_phases",
    "outage_probability",
    "rayleigh_outage_closed_form",
    "scheme_phases",
    "snr",
    "wrap_phase",
    "VARIANTS",
    "ModelConfig",
    "TrainConfig",
    "TrainedModel",
    "analytic_param_count",
    "build_model",
    "load_checkpoint",
    "param_count",
    "predict_next",
    "save_checkpoint",
    "test_rmse",
    "train_model",
    "derive_rng",
]
