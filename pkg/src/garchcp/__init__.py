"""Change-point detection in GARCH panels and regime-aware stressed VaR.

The pipeline fits a GARCH(p, q) model to every series, maps the panel to
``N(N+1)/2`` bounded residual rows, segments them with Double CUSUM binary
segmentation under parametric bootstrap thresholds, and stresses rolling
VaR windows with the covariance of each detected period.
"""

from .bootstrap import BootstrapEnsemble, order_statistic_threshold
from .dcbs import ChangePoint, ChangePointSet, cusum_matrix, dc_scan, dcbs_run
from .detect import Detection, detect, fit_panel
from .garch_core import GarchFit, GarchParams, ReturnsSeries, filter_condvar, fit_garch, simulate_garch_path
from .io import ParseError, ReturnsPanel, ingest_csv
from .risk import (
    BacktestResult,
    empirical_var,
    kupiec_pof,
    kupiec_tff,
    rolling_svar_backtest,
    segment_covariances,
    stress_transform,
    traffic_light,
)
from .simlab import ScenarioSpec, generate
from .transform import TransformConfig, TransformedPanel, build_panel

__version__ = "0.1.0"

__all__ = [
    "BacktestResult", "BootstrapEnsemble", "ChangePoint", "ChangePointSet", "Detection",
    "GarchFit", "GarchParams", "ParseError", "ReturnsPanel", "ReturnsSeries", "ScenarioSpec",
    "TransformConfig", "TransformedPanel", "build_panel", "cusum_matrix", "dc_scan", "dcbs_run",
    "detect", "empirical_var", "filter_condvar", "fit_garch", "fit_panel", "generate", "ingest_csv",
    "kupiec_pof", "kupiec_tff", "order_statistic_threshold", "rolling_svar_backtest",
    "segment_covariances", "simulate_garch_path", "stress_transform", "traffic_light",
]
