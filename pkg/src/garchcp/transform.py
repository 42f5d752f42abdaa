"""Residual-based transformation of an N-variate return panel.

Each series ``r_i`` is mapped to ``U_i = r_i^2 / hcheck_i`` and each pair
``i < i'`` to ``U_ii' = (U_i^{1/2} - s_ii' U_i'^{1/2})^2``, where ``hcheck``
is a dampened GARCH filter with an added ``eps * r_t^2`` term that bounds
every entry. The resulting ``d = N(N+1)/2`` rows carry all parameter and
correlation changes as changes in their means.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .garch_core import GarchFit, GarchParams, filter_condvar

DEFAULT_EPSILON = 1e-3


def n_rows(N: int) -> int:
    return N * (N + 1) // 2


def pair_index(i: int, i2: int, N: int) -> int:
    """1-based row of the pair ``(i, i2)``, ``1 <= i <= i2 <= N``."""
    if not 1 <= i <= i2 <= N:
        raise ValueError(f"need 1 <= i <= i2 <= N, got ({i}, {i2}) with N={N}")
    # (N - i/2)(i - 1) + i2, kept in integer arithmetic
    return ((2 * N - i) * (i - 1)) // 2 + i2


def index_pairs(N: int) -> list[tuple[int, int]]:
    """The pairs ``(i, i2)`` (1-based) in row order."""
    return [(i, i2) for i in range(1, N + 1) for i2 in range(i, N + 1)]


def dampening_factor(alpha_beta_sum: float) -> float:
    """Divisor for the fitted ARCH/GARCH coefficients, bounded to [1, 99]."""
    s = float(alpha_beta_sum)
    if not np.isfinite(s):
        raise ValueError("persistence must be finite")
    return max(1.0, min(0.99, s) / max(0.01, 1.0 - s))


@dataclass(frozen=True)
class TransformConfig:
    """Coefficients of the transform for all N series.

    ``coefs`` has shape (N, 1+p+q) holding ``(C_0, C_1..C_p, C_{p+1}..C_{p+q})``
    per series; ``signs`` is an N x N matrix of +-1 (only ``i < i'`` is used).
    """

    coefs: np.ndarray
    dampening: np.ndarray
    epsilon: float
    signs: np.ndarray
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if np.any(self.coefs[:, 0] <= 0) or np.any(self.coefs < 0):
            raise ValueError("transform coefficients must be non-negative with C_0 > 0")
        if np.any((self.dampening < 1) | (self.dampening > 99)):
            raise ValueError("dampening factors must lie in [1, 99]")


@dataclass
class TransformedPanel:
    data: np.ndarray  # d x T
    N: int

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return index_pairs(self.N)

    def row(self, i: int, i2: int) -> np.ndarray:
        return self.data[pair_index(i, i2, self.N) - 1]

    def to_csv(self, path) -> None:
        """Write one line per row ``j`` with its ``(i, i')`` labels."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j", "i", "i_prime"] + [str(t) for t in range(1, self.T + 1)])
            for j, (i, i2) in enumerate(self.pairs, start=1):
                writer.writerow([j, i, i2] + [repr(float(v)) for v in self.data[j - 1]])


def check_h(series, coefs, fitted_condvar, epsilon: float = DEFAULT_EPSILON, p: int = 1, q: int = 1):
    """Bounded variance proxy ``hcheck_t``.

    ``C_0 + sum_j C_j r_{t-j}^2 + sum_k C_{p+k} hhat_{t-k} + eps r_t^2`` with
    pre-sample ``r^2`` and ``hhat`` set to the sample variance of ``series``.
    Works along the last axis; ``coefs`` has shape (..., 1+p+q).
    """
    r = np.asarray(series, dtype=float)
    hhat = np.asarray(fitted_condvar, dtype=float)
    coefs = np.asarray(coefs, dtype=float)
    T = r.shape[-1]
    v = np.var(r, axis=-1, keepdims=True)
    r2 = r * r
    out = coefs[..., 0:1] + epsilon * r2
    lag = max(p, q)
    if lag:
        pad = np.broadcast_to(v, r.shape[:-1] + (lag,))
        r2_pad = np.concatenate([pad, r2], axis=-1)
        h_pad = np.concatenate([pad, hhat], axis=-1)
    for j in range(1, p + 1):
        out = out + coefs[..., j : j + 1] * r2_pad[..., lag - j : lag - j + T]
    for k in range(1, q + 1):
        out = out + coefs[..., p + k : p + k + 1] * h_pad[..., lag - k : lag - k + T]
    return out


def u_single(series, hcheck) -> np.ndarray:
    r = np.asarray(series, dtype=float)
    return r * r / np.asarray(hcheck, dtype=float)


def u_signed_root(series, hcheck) -> np.ndarray:
    return np.asarray(series, dtype=float) / np.sqrt(np.asarray(hcheck, dtype=float))


def choose_sign(u_root_a, u_root_b) -> int:
    """Sign of the sample correlation; +1 on zero or undefined correlation."""
    a = np.asarray(u_root_a, dtype=float)
    b = np.asarray(u_root_b, dtype=float)
    a = a - a.mean()
    b = b - b.mean()
    if not (np.any(a) and np.any(b)):
        warnings.warn("constant input to choose_sign; using +1", RuntimeWarning, stacklevel=2)
        return 1
    return -1 if float(a @ b) < 0 else 1


def sign_matrix(roots: np.ndarray) -> np.ndarray:
    """All pairwise signs for an N x T matrix of signed roots."""
    N = roots.shape[0]
    centred = roots - roots.mean(axis=1, keepdims=True)
    cross = centred @ centred.T
    signs = np.where(cross < 0, -1, 1)
    const = ~np.any(centred, axis=1)
    if const.any() and N > 1:
        warnings.warn("constant series in sign selection; using +1", RuntimeWarning, stacklevel=2)
        signs[const, :] = 1
        signs[:, const] = 1
    return signs


def u_pair(u_root_a, u_root_b, s: int) -> np.ndarray:
    if s not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {s}")
    diff = np.asarray(u_root_a, dtype=float) - s * np.asarray(u_root_b, dtype=float)
    return diff * diff


def panel_from_roots(roots: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Stack ``U_i`` and ``U_ii'`` rows in index-map order.

    ``roots`` may carry leading batch axes: shape (..., N, T).
    """
    N = roots.shape[-2]
    iu, ju = np.triu_indices(N)
    s = signs[iu, ju].astype(float)[:, None]
    diff = roots[..., iu, :] - s * roots[..., ju, :]
    out = diff * diff
    diag = iu == ju
    out[..., diag, :] = roots[..., iu[diag], :] ** 2
    return out


def transform_config(fits: list[GarchFit], epsilon: float, signs: np.ndarray) -> TransformConfig:
    params = [f.params if isinstance(f, GarchFit) else f for f in fits]
    p, q = params[0].p, params[0].q
    damp = np.array([dampening_factor(prm.persistence) for prm in params])
    coefs = np.array([prm.as_array() for prm in params])
    coefs[:, 1:] /= damp[:, None]
    return TransformConfig(coefs=coefs, dampening=damp, epsilon=epsilon, signs=signs, p=p, q=q)


def signed_roots(returns: np.ndarray, params: list[GarchParams], coefs: np.ndarray,
                 epsilon: float, condvars=None) -> np.ndarray:
    """``U_i^{1/2}`` for every series of a T x N panel, returned as N x T."""
    T, N = returns.shape
    roots = np.empty((N, T))
    for i in range(N):
        r = returns[:, i]
        hhat = filter_condvar(r, params[i]) if condvars is None else condvars[i]
        hc = check_h(r, coefs[i], hhat, epsilon, params[i].p, params[i].q)
        roots[i] = u_signed_root(r, hc)
    return roots


def build_panel(returns, fits: list[GarchFit], epsilon: float = DEFAULT_EPSILON, signs=None):
    """Transform a T x N return panel into the d x T panel.

    The coefficients are ``C_0 = omega``, ``C_j = alpha_j / F``,
    ``C_{p+k} = beta_k / F`` with ``F`` the dampening factor of each fit;
    ``hhat`` inside ``hcheck`` is the undampened fitted filter. Signs default
    to the full-sample correlation signs of the signed roots.

    Returns
    -------
    (TransformedPanel, TransformConfig)
    """
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    T, N = returns.shape
    if N < 1 or len(fits) != N:
        raise ValueError(f"need one fit per series: {len(fits)} fits for {N} series")
    params = [f.params if isinstance(f, GarchFit) else f for f in fits]
    provisional = transform_config(fits, epsilon, np.ones((N, N), dtype=int))
    condvars = [f.fitted_condvar if isinstance(f, GarchFit) else None for f in fits]
    if any(c is None for c in condvars):
        condvars = None
    roots = signed_roots(returns, params, provisional.coefs, epsilon, condvars)
    if signs is None:
        signs = sign_matrix(roots)
    config = transform_config(fits, epsilon, np.asarray(signs))
    panel = TransformedPanel(panel_from_roots(roots, config.signs), N)
    return panel, config
