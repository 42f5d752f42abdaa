"""Parametric bootstrap thresholds for the double CUSUM test.

Residual vectors ``r_t / sqrt(hhat_t)`` are resampled as whole columns,
fed through the fitted GARCH recursions and transformed with the
coefficients and signs of the original data. The threshold for an
examined segment is an upper order statistic of the replicate test
statistics on that segment.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .dcbs import segment_scan
from .garch_core import DEFAULT_BURN_IN, GarchFit, GarchParams, _garch_recursion, filter_condvar_batch
from .transform import TransformConfig, check_h, panel_from_roots

DEFAULT_REPS = 200
DEFAULT_ALPHA = 0.05
MIN_REPS = 20
_CHUNK = 25


def _params(fits) -> list[GarchParams]:
    return [f.params if isinstance(f, GarchFit) else f for f in fits]


def residual_matrix(returns, fits) -> np.ndarray:
    """N x T matrix of ``r_{i,t} / sqrt(hhat_{i,t})``."""
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    condvar = np.array([f.fitted_condvar for f in fits])
    return returns.T / np.sqrt(condvar)


def resample_vectors(residuals, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw ``size`` (default T) columns of ``residuals`` uniformly with replacement."""
    residuals = np.asarray(residuals, dtype=float)
    T = residuals.shape[1]
    idx = rng.integers(0, T, size=T if size is None else size)
    return residuals[:, idx]


def replicate_rng(seed: int, ell: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(ell)])


def _simulate_batch(params: list[GarchParams], eps: np.ndarray, burn: np.ndarray | None = None) -> np.ndarray:
    """Returns for innovations of shape (R, N, T); output has the same shape.

    ``burn`` (R, N, B) drives B warm-up steps whose output is discarded.
    """
    n_out = eps.shape[2]
    if burn is not None and burn.shape[2]:
        eps = np.concatenate([burn, eps], axis=2)
    R, N, T = eps.shape
    omega = np.array([prm.omega for prm in params])
    alpha = np.array([prm.alpha for prm in params])
    beta = np.array([prm.beta for prm in params])
    h0 = np.array([prm.unconditional_variance for prm in params])
    M = R * N
    flat = eps.reshape(M, T).T
    r, h = _garch_recursion(
        flat,
        np.broadcast_to(np.tile(omega, R), (T, M)),
        np.broadcast_to(np.tile(alpha, (R, 1)), (T, M, alpha.shape[1])),
        np.broadcast_to(np.tile(beta, (R, 1)), (T, M, beta.shape[1])),
        np.tile(h0, R),
    )
    if not np.all(np.isfinite(h)):
        bad = int(np.argmax(~np.all(np.isfinite(h), axis=1)))
        raise FloatingPointError(f"bootstrap recursion exploded at index {bad}")
    return r.T.reshape(R, N, T)[:, :, T - n_out :]


def simulate_replicate(fits, resampled, burn=None) -> np.ndarray:
    """One bootstrap panel (T x N) driven by resampled innovations (N x T).

    Each series starts from its fitted unconditional variance; the optional
    ``burn`` innovations (N x B) are run through first and dropped, so the
    kept path does not carry the transient from that starting value.
    """
    eps = np.asarray(resampled, dtype=float)[None]
    burn = None if burn is None else np.asarray(burn, dtype=float)[None]
    return _simulate_batch(_params(fits), eps, burn)[0].T


def _roots_batch(returns: np.ndarray, params: list[GarchParams], config: TransformConfig) -> np.ndarray:
    """Signed roots for replicate returns of shape (R, N, T)."""
    omega = np.array([prm.omega for prm in params])
    alpha = np.array([prm.alpha for prm in params])
    beta = np.array([prm.beta for prm in params])
    hhat = filter_condvar_batch(returns, omega, alpha, beta)
    hc = check_h(returns, config.coefs[None], hhat, config.epsilon, config.p, config.q)
    return returns / np.sqrt(hc)


class BootstrapEnsemble:
    """Bootstrap replicates of a fitted panel and their segment thresholds.

    Replicate ``ell`` depends only on ``(seed, ell)``. The object is a
    threshold provider: ``ensemble(start, end)`` returns the threshold for
    the half-open segment at the ensemble's ``alpha``.

    Parameters
    ----------
    returns : array (T x N)
    fits : list of GarchFit
    config : TransformConfig
        Coefficients and signs of the original-data transform; reused for
        every replicate.
    n_reps : int
    seed : int
    alpha : float
    standardize : bool
        Apply the same row standardisation as the detector.
    threads : int
        Worker threads for the per-replicate scans.
    burn_in : int
        Warm-up steps simulated from the fitted unconditional variance and
        discarded before each replicate.
    """

    def __init__(self, returns, fits, config: TransformConfig, n_reps: int = DEFAULT_REPS,
                 seed: int = 0, alpha: float = DEFAULT_ALPHA, standardize: bool = False,
                 threads: int = 1, burn_in: int = DEFAULT_BURN_IN):
        if n_reps < MIN_REPS:
            raise ValueError(f"need at least {MIN_REPS} bootstrap replicates, got {n_reps}")
        self.returns = np.asarray(returns, dtype=float)
        if self.returns.ndim == 1:
            self.returns = self.returns[:, None]
        self.fits = list(fits)
        self.params = _params(fits)
        self.config = config
        self.n_reps = int(n_reps)
        self.seed = int(seed)
        self.alpha = float(alpha)
        self.standardize = standardize
        self.threads = max(1, int(threads))
        if burn_in < 0:
            raise ValueError(f"burn_in must be non-negative, got {burn_in}")
        self.burn_in = int(burn_in)
        self.residuals = residual_matrix(self.returns, self.fits)
        self._roots = None
        self._stats: dict[tuple[int, int], np.ndarray] = {}

    @property
    def T(self) -> int:
        return self.returns.shape[0]

    def draws(self, ell: int) -> tuple[np.ndarray, np.ndarray]:
        """Resampled innovations of replicate ``ell``: (kept N x T, burn-in N x B)."""
        rng = replicate_rng(self.seed, ell)
        kept = resample_vectors(self.residuals, rng)
        return kept, resample_vectors(self.residuals, rng, self.burn_in)

    def innovations(self, ell: int) -> np.ndarray:
        return self.draws(ell)[0]

    def replicate_returns(self, ell: int) -> np.ndarray:
        return simulate_replicate(self.params, *self.draws(ell))

    @property
    def roots(self) -> np.ndarray:
        """Signed roots of every replicate, shape (R, N, T)."""
        if self._roots is None:
            blocks = []
            for lo in range(0, self.n_reps, _CHUNK):
                ells = range(lo, min(lo + _CHUNK, self.n_reps))
                kept, burn = zip(*(self.draws(ell) for ell in ells))
                rets = _simulate_batch(self.params, np.stack(kept), np.stack(burn))
                blocks.append(_roots_batch(rets, self.params, self.config))
            self._roots = np.concatenate(blocks)
        return self._roots

    def replicate_panel(self, ell: int, start: int = 0, end: int | None = None) -> np.ndarray:
        end = self.T if end is None else end
        return panel_from_roots(self.roots[ell][:, start:end], self.config.signs)

    def segment_stats(self, start: int, end: int) -> np.ndarray:
        """Replicate test statistics on ``[start, end)``."""
        key = (int(start), int(end))
        if key not in self._stats:
            roots = self.roots

            def stat(ell):
                x = panel_from_roots(roots[ell][:, start:end], self.config.signs)
                return segment_scan(x, 0, end - start, self.standardize).stat

            if self.threads > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    vals = list(pool.map(stat, range(self.n_reps)))
            else:
                vals = [stat(ell) for ell in range(self.n_reps)]
            self._stats[key] = np.array(vals)
        return self._stats[key]

    def threshold_for_segment(self, segment: tuple[int, int], alpha: float | None = None) -> float:
        alpha = self.alpha if alpha is None else alpha
        return order_statistic_threshold(self.segment_stats(*segment), alpha)

    def __call__(self, start: int, end: int) -> float:
        return self.threshold_for_segment((start, end))


def order_statistic_threshold(stats, alpha: float) -> float:
    """The ``ceil((1 - alpha) R)``-th smallest of ``stats``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    stats = np.sort(np.asarray(stats, dtype=float))
    R = stats.size
    if R < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replicate statistics, got {R}")
    k = math.ceil(round((1.0 - alpha) * R, 9))
    return float(stats[max(k, 1) - 1])


def threshold_for_segment(ensemble: BootstrapEnsemble, segment: tuple[int, int],
                          alpha: float = DEFAULT_ALPHA) -> float:
    return ensemble.threshold_for_segment(segment, alpha)
