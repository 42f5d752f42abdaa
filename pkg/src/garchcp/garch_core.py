"""Univariate GARCH(p, q) simulation, filtering and Gaussian QMLE.

The conditional variance recursion is

    h_t = omega + sum_j alpha_j r_{t-j}^2 + sum_k beta_k h_{t-k}

Pre-sample values of r^2 and h used by :func:`filter_condvar` are set to
the sample variance of the series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, signal

OMEGA_MIN = 1e-6
PERSISTENCE_MAX = 0.999
DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class GarchParams:
    """GARCH(p, q) coefficients ``(omega, alpha_1..alpha_p, beta_1..beta_q)``."""

    omega: float
    alpha: tuple[float, ...] = (0.0,)
    beta: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", tuple(float(a) for a in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        if not np.isfinite(self.omega) or self.omega < OMEGA_MIN:
            raise ValueError(f"omega must be >= {OMEGA_MIN}, got {self.omega}")
        if any(not np.isfinite(c) or c < 0 for c in self.alpha + self.beta):
            raise ValueError(f"alpha and beta must be non-negative, got {self.alpha}, {self.beta}")
        if self.persistence > PERSISTENCE_MAX + 1e-12:
            raise ValueError(
                f"sum(alpha) + sum(beta) must be <= {PERSISTENCE_MAX}, got {self.persistence}"
            )

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def q(self) -> int:
        return len(self.beta)

    @property
    def persistence(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    def as_array(self) -> np.ndarray:
        return np.array((self.omega,) + self.alpha + self.beta)

    @classmethod
    def from_array(cls, values, p: int = 1, q: int = 1) -> "GarchParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (1 + p + q,):
            raise ValueError(f"expected {1 + p + q} values, got shape {values.shape}")
        return cls(values[0], tuple(values[1 : 1 + p]), tuple(values[1 + p :]))

    def clipped(self) -> "GarchParams":
        """Project arbitrary coefficients onto the admissible box."""
        omega = max(self.omega, OMEGA_MIN)
        coefs = np.clip(np.array(self.alpha + self.beta), 0.0, None)
        total = coefs.sum()
        if total > PERSISTENCE_MAX:
            coefs = coefs * (PERSISTENCE_MAX / total)
        return GarchParams(omega, tuple(coefs[: self.p]), tuple(coefs[self.p :]))


@dataclass
class ReturnsSeries:
    """A single return series, optionally with the true conditional variances."""

    values: np.ndarray
    condvar: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("returns must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("returns contain non-finite values")

    def __len__(self):
        return self.values.size


@dataclass
class GarchFit:
    params: GarchParams
    fitted_condvar: np.ndarray
    residuals: np.ndarray
    loglik: float
    converged: bool = True
    n_evals: int = 0
    starts: list = field(default_factory=list, repr=False)


def _as_values(series) -> np.ndarray:
    if isinstance(series, ReturnsSeries):
        return series.values
    values = np.asarray(series, dtype=float)
    if values.ndim != 1:
        raise ValueError("expected a 1-d return series")
    return values


def _garch_recursion(eps, omega, alpha, beta, h0):
    """Simulate ``r_t = sqrt(h_t) eps_t`` for a batch of series.

    ``eps`` has shape (T, M); ``omega`` (T, M); ``alpha`` (T, M, p);
    ``beta`` (T, M, q); ``h0`` (M,) initialises both pre-sample r^2 and h.
    Returns ``(r, h)`` of shape (T, M).
    """
    T, M = eps.shape
    p, q = alpha.shape[2], beta.shape[2]
    r2_lags = np.repeat(h0[None, :], max(p, 1), axis=0)
    h_lags = np.repeat(h0[None, :], max(q, 1), axis=0)
    r = np.empty((T, M))
    h = np.empty((T, M))
    for t in range(T):
        ht = omega[t].copy()
        for j in range(p):
            ht += alpha[t, :, j] * r2_lags[j]
        for k in range(q):
            ht += beta[t, :, k] * h_lags[k]
        rt = np.sqrt(ht) * eps[t]
        h[t] = ht
        r[t] = rt
        if p:
            r2_lags = np.roll(r2_lags, 1, axis=0)
            r2_lags[0] = rt * rt
        if q:
            h_lags = np.roll(h_lags, 1, axis=0)
            h_lags[0] = ht
    return r, h


def piecewise_schedule(params: Sequence[GarchParams], breaks: Sequence[int], T: int) -> list:
    """Expand regime parameters into a per-time schedule.

    Regime ``b`` applies to times ``breaks[b-1] < t <= breaks[b]`` (1-based),
    so ``breaks`` are the last indices of each regime but the final one.
    """
    if len(params) != len(breaks) + 1:
        raise ValueError("need one parameter set per regime")
    bounds = [0, *breaks, T]
    if any(b1 >= b2 for b1, b2 in zip(bounds[:-1], bounds[1:])):
        raise ValueError(f"breaks must be strictly increasing inside (0, {T}): {breaks}")
    schedule = []
    for prm, lo, hi in zip(params, bounds[:-1], bounds[1:]):
        schedule.extend([prm] * (hi - lo))
    return schedule


def simulate_garch_path(params_schedule, innovations, burn_in: int = DEFAULT_BURN_IN) -> ReturnsSeries:
    """Simulate a (piecewise-stationary) GARCH path.

    Parameters
    ----------
    params_schedule : GarchParams or sequence of GarchParams
        Either constant parameters or one parameter set per retained time
        point. The burn-in runs with the first entry.
    innovations : array of length ``T + burn_in``
        Unit-variance innovations.
    burn_in : int
        Number of leading samples to discard.
    """
    eps = np.asarray(innovations, dtype=float)
    T = eps.size - burn_in
    if T < 1:
        raise ValueError("innovations must be longer than burn_in")
    if isinstance(params_schedule, GarchParams):
        schedule = [params_schedule] * T
    else:
        schedule = list(params_schedule)
        if len(schedule) != T:
            raise ValueError(f"schedule has {len(schedule)} entries, expected {T}")
    p, q = schedule[0].p, schedule[0].q
    if any(prm.p != p or prm.q != q for prm in schedule):
        raise ValueError("all parameter sets in a schedule must share the order (p, q)")

    full = [schedule[0]] * burn_in + schedule
    omega = np.array([prm.omega for prm in full])[:, None]
    alpha = np.array([prm.alpha for prm in full])[:, None, :]
    beta = np.array([prm.beta for prm in full])[:, None, :]
    h0 = np.array([schedule[0].unconditional_variance])
    r, h = _garch_recursion(eps[:, None], omega, alpha, beta, h0)
    bad = np.flatnonzero(~np.isfinite(h[:, 0]))
    if bad.size:
        raise FloatingPointError(f"conditional variance not finite at index {bad[0] - burn_in}")
    return ReturnsSeries(r[burn_in:, 0], condvar=h[burn_in:, 0])


def filter_condvar(series, params: GarchParams, presample: float | None = None) -> np.ndarray:
    """Fitted conditional variances of ``series`` under ``params``."""
    r = _as_values(series)
    v = float(np.var(r)) if presample is None else float(presample)
    r2 = r * r
    p, q = params.p, params.q
    padded = np.concatenate([np.full(p, v), r2])
    T = r.size
    w = np.full(T, params.omega)
    for j, a in enumerate(params.alpha, start=1):
        if a:
            w += a * padded[p - j : p - j + T]
    if q == 0 or not any(params.beta):
        return w
    a_coefs = np.concatenate([[1.0], -np.array(params.beta)])
    zi = signal.lfiltic([1.0], a_coefs, np.full(q, v))
    h, _ = signal.lfilter([1.0], a_coefs, w, zi=zi)
    return h


def filter_condvar_batch(r: np.ndarray, omega, alpha, beta, presample=None) -> np.ndarray:
    """Fitted conditional variances for many series at once.

    ``r`` has shape (..., T); ``omega`` broadcasts against ``r[..., 0]``;
    ``alpha`` and ``beta`` have shapes (..., p) and (..., q).
    """
    r = np.asarray(r, dtype=float)
    T = r.shape[-1]
    omega = np.broadcast_to(np.asarray(omega, float), r.shape[:-1])
    alpha = np.broadcast_to(np.asarray(alpha, float), r.shape[:-1] + np.shape(alpha)[-1:])
    beta = np.broadcast_to(np.asarray(beta, float), r.shape[:-1] + np.shape(beta)[-1:])
    p, q = alpha.shape[-1], beta.shape[-1]
    v = np.var(r, axis=-1) if presample is None else np.broadcast_to(presample, r.shape[:-1])
    r2 = r * r
    w = np.repeat(omega[..., None], T, axis=-1).copy()
    padded = np.concatenate([np.repeat(v[..., None], p, axis=-1), r2], axis=-1)
    for j in range(1, p + 1):
        w += alpha[..., j - 1 : j] * padded[..., p - j : p - j + T]
    if q == 0:
        return w
    h = np.empty_like(w)
    lags = [np.array(v, dtype=float) for _ in range(q)]
    for t in range(T):
        ht = w[..., t].copy()
        for k in range(q):
            ht += beta[..., k] * lags[k]
        h[..., t] = ht
        lags = [ht] + lags[:-1]
    return h


def qmle_loglik(series, params: GarchParams) -> float:
    """Gaussian quasi log-likelihood ``-0.5 * sum(log h_t + r_t^2 / h_t)``."""
    r = _as_values(series)
    h = filter_condvar(r, params)
    return float(-0.5 * np.sum(np.log(h) + r * r / h))


def _initial_points(p: int, q: int) -> list[tuple[float, float, float]]:
    # (omega as a fraction of the sample variance, total alpha, total beta)
    return [(0.1, 0.1, 0.8), (0.5, 0.1, 0.4), (0.9, 0.05, 0.05)]


def _to_unconstrained(omega_frac: float, coefs: np.ndarray) -> np.ndarray:
    coefs = np.clip(coefs, 1e-8, None) / PERSISTENCE_MAX
    slack = 1.0 - coefs.sum()
    return np.concatenate([[np.log(omega_frac)], np.log(coefs / slack)])


def _from_unconstrained(theta: np.ndarray, scale: float, p: int, q: int) -> GarchParams:
    z = theta[1:]
    zmax = max(0.0, float(z.max()))
    ez = np.exp(z - zmax)
    coefs = PERSISTENCE_MAX * ez / (np.exp(-zmax) + ez.sum())
    omega = max(scale * float(np.exp(theta[0])), OMEGA_MIN)
    return GarchParams(omega, tuple(coefs[:p]), tuple(coefs[p:]))


def fit_garch(series, order: tuple[int, int] = (1, 1), maxiter: int = 500) -> GarchFit:
    """Gaussian QMLE of a GARCH(p, q) model.

    The search runs over ``omega = var(r) * exp(a)`` and a softmax map of
    the ARCH/GARCH coefficients with a slack component, which keeps every
    iterate inside ``sum(alpha) + sum(beta) <= 0.999``. Three fixed starting
    points are tried and the best optimum is kept.

    Raises
    ------
    ValueError
        If the series is too short for the order or has zero variance.
    """
    r = _as_values(series)
    p, q = order
    if p < 1 or q < 0:
        raise ValueError(f"invalid GARCH order {order}")
    if r.size < 20 * (p + q + 1):
        raise ValueError(f"need at least {20 * (p + q + 1)} observations for order {order}, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("series contains non-finite values")
    scale = float(np.var(r))
    if not scale > 0:
        raise ValueError("series has zero variance; GARCH fit is degenerate")

    n = r.size
    r2 = r * r

    def objective(theta):
        prm = _from_unconstrained(theta, scale, p, q)
        h = filter_condvar(r, prm, presample=scale)
        if not np.all(h > 0):
            return 1e10
        val = 0.5 * np.sum(np.log(h / scale) + r2 / h) / n
        return val if np.isfinite(val) else 1e10

    best = None
    n_evals = 0
    starts = []
    for w_frac, a_tot, b_tot in _initial_points(p, q):
        coefs = np.concatenate([np.full(p, a_tot / p), np.full(q, b_tot / q) if q else []])
        theta0 = _to_unconstrained(w_frac, coefs)
        res = optimize.minimize(
            objective, theta0, method="L-BFGS-B", options={"maxiter": maxiter, "gtol": 1e-7}
        )
        n_evals += res.nfev
        starts.append((float(res.fun), bool(res.success)))
        if best is None or res.fun < best.fun:
            best = res

    params = _from_unconstrained(best.x, scale, p, q)
    # The softmax map never reaches alpha = beta = 0, where the likelihood
    # is flat in beta; compare against that boundary point explicitly.
    flat = GarchParams(max(float(np.mean(r2)), OMEGA_MIN), (0.0,) * p, (0.0,) * q)
    h_flat = filter_condvar(r, flat, presample=scale)
    if 0.5 * np.sum(np.log(h_flat / scale) + r2 / h_flat) / n <= best.fun:
        params = flat
    h = filter_condvar(r, params)
    return GarchFit(
        params=params,
        fitted_condvar=h,
        residuals=r / np.sqrt(h),
        loglik=qmle_loglik(r, params),
        converged=bool(best.success),
        n_evals=n_evals,
        starts=starts,
    )
