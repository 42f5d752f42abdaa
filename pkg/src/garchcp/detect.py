"""Two-stage change-point detection for GARCH panels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import DEFAULT_ALPHA, DEFAULT_REPS, BootstrapEnsemble
from .dcbs import DEFAULT_MIN_SEG, ChangePointSet, dcbs_run
from .garch_core import GarchFit, fit_garch
from .transform import DEFAULT_EPSILON, TransformConfig, TransformedPanel, build_panel


@dataclass
class Detection:
    change_points: ChangePointSet
    fits: list[GarchFit]
    panel: TransformedPanel
    config: TransformConfig
    ensemble: BootstrapEnsemble

    @property
    def locations(self) -> list[int]:
        return self.change_points.locations

    def segments(self) -> list[tuple[int, int]]:
        return self.change_points.segments(self.panel.T)


def fit_panel(returns, order: tuple[int, int] = (1, 1)) -> list[GarchFit]:
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    return [fit_garch(returns[:, i], order) for i in range(returns.shape[1])]


def detect(returns, order: tuple[int, int] = (1, 1), epsilon: float = DEFAULT_EPSILON,
           alpha: float = DEFAULT_ALPHA, n_reps: int = DEFAULT_REPS, seed: int = 0,
           min_seg: int = DEFAULT_MIN_SEG, standardize: bool = False, threads: int = 1,
           fits: list[GarchFit] | None = None) -> Detection:
    """Fit, transform, and segment a T x N return panel.

    Thresholds come from a parametric bootstrap of the fitted panel,
    recomputed for every segment the binary segmentation examines.
    """
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    if fits is None:
        fits = fit_panel(returns, order)
    panel, config = build_panel(returns, fits, epsilon)
    ensemble = BootstrapEnsemble(returns, fits, config, n_reps=n_reps, seed=seed, alpha=alpha,
                                 standardize=standardize, threads=threads)
    cps = dcbs_run(panel, ensemble, min_seg=min_seg, standardize=standardize, threads=threads)
    return Detection(cps, fits, panel, config, ensemble)
