"""Deterministic 5-DoF drill-positioning guidance engine.

Core pieces: pose/error geometry (`compute_error`), the four guidance
widget conditions rendered as frame objects (`build_frame`), a synthetic
operator closing the loop (`run_trial`), the counterbalanced experiment
harness (`run_experiment`), and a nonparametric statistics pipeline
(`analyze`). Everything is reproducible from a master seed.
"""
from .agent import AgentParams, ConditionProfile, run_trial
from .geometry import GuidanceError, Pose, UnitQuat, Vec3, compute_error, swing_twist
from .harness import (
    ConfigError,
    ExperimentConfig,
    ReplayMismatchError,
    balanced_latin_square,
    replay_trial,
    run_experiment,
)
from .records import Dataset, IngestError, TrialRecord, read_dataset_csv, write_dataset_csv
from .seeds import stream_seed
from .stats import StatsReport, analyze, friedman, pearson, wilcoxon_signed_rank
from .widget import (
    Area,
    Channel,
    Condition,
    RenderFrame,
    WidgetConfig,
    build_frame,
    classify_area,
    duo_separation,
    frame_to_canonical_json,
    loupe_geometry,
)

__version__ = "0.1.0"

__all__ = [
    "AgentParams",
    "Area",
    "Channel",
    "Condition",
    "ConditionProfile",
    "ConfigError",
    "Dataset",
    "ExperimentConfig",
    "GuidanceError",
    "IngestError",
    "Pose",
    "RenderFrame",
    "ReplayMismatchError",
    "StatsReport",
    "TrialRecord",
    "UnitQuat",
    "Vec3",
    "WidgetConfig",
    "analyze",
    "balanced_latin_square",
    "build_frame",
    "classify_area",
    "compute_error",
    "duo_separation",
    "frame_to_canonical_json",
    "friedman",
    "loupe_geometry",
    "pearson",
    "read_dataset_csv",
    "replay_trial",
    "run_experiment",
    "run_trial",
    "stream_seed",
    "swing_twist",
    "wilcoxon_signed_rank",
    "write_dataset_csv",
    "__version__",
]
