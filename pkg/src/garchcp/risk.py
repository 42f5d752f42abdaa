"""Regime-aware stressed VaR and its backtests.

A detected segment ``b`` supplies a covariance ``Sigma_b = L_b L_b'``. A
window of returns with Cholesky factor ``L`` is mapped to
``r (L_b L^{-1})'`` so that its covariance becomes ``Sigma_b``; the
empirical quantile of the mapped portfolio returns is the stressed VaR.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, special, stats

from .garch_core import fit_garch

DEFAULT_WINDOW = 250
DEFAULT_LEVELS = (0.95, 0.99)
MIN_WINDOW = 20
SUPPORTED_LEVELS = (0.95, 0.99)


@dataclass
class SegmentCovariance:
    index: int
    start: int
    end: int
    cov: np.ndarray
    chol: np.ndarray


@dataclass
class BacktestResult:
    period: str
    level: float
    n_days: int
    violations: int
    t_first: int | None
    lr_pof: float
    p_pof: float
    lr_tff: float | None
    p_tff: float | None
    zone: str
    svar_0: float
    violation_days: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("violation_days")
        return out


def chi2_1_sf(lr: float) -> float:
    """Survival function of the chi-square(1) law, ``erfc(sqrt(lr / 2))``."""
    return float(special.erfc(math.sqrt(max(lr, 0.0) / 2.0)))


def _cholesky(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"Cholesky factorisation failed for {what}") from exc


def segment_covariances(returns, change_points, kind: str = "returns",
                        order: tuple[int, int] = (1, 1), short: str = "raise") -> list[SegmentCovariance]:
    """Covariance and Cholesky factor of every segment between change-points.

    Parameters
    ----------
    returns : array (T x N)
    change_points : sequence of int or ChangePointSet
        Locations ``k``; segment boundaries are ``[0, k_1), [k_1, k_2), ...``.
    kind : {"returns", "standardized"}
        ``"returns"`` uses the sample covariance of the segment returns
        (the scale the stressed VaR needs); ``"standardized"`` re-fits a
        GARCH model per series and segment and uses the sample covariance of
        the standardized residuals.
    short : {"raise", "skip"}
        What to do with a segment of at most N observations. Skipped
        segments are left out of the result; the others keep their index.
    """
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    T, N = returns.shape
    if short not in ("raise", "skip"):
        raise ValueError(f"short must be 'raise' or 'skip', got {short!r}")
    locs = list(getattr(change_points, "locations", change_points))
    bounds = [0, *locs, T]
    out = []
    for b, (s, e) in enumerate(zip(bounds[:-1], bounds[1:]), start=1):
        seg = returns[s:e]
        if e - s <= N:
            if short == "skip":
                continue
            raise ValueError(f"segment {b} has {e - s} observations; need more than N={N}")
        if kind == "standardized":
            seg = np.column_stack([fit_garch(seg[:, i], order).residuals for i in range(N)])
        elif kind != "returns":
            raise ValueError(f"unknown covariance kind {kind!r}")
        cov = np.atleast_2d(np.cov(seg, rowvar=False))
        out.append(SegmentCovariance(b, s, e, cov, _cholesky(cov, f"segment {b}")))
    return out


def stress_transform(window, L_b, L_current) -> np.ndarray:
    """Map each row ``r`` of ``window`` to ``r (L_b L_current^{-1})'``."""
    window = np.asarray(window, dtype=float)
    L_b = np.atleast_2d(L_b)
    L_current = np.atleast_2d(L_current)
    diag = np.abs(np.diag(L_current))
    if np.any(diag <= np.finfo(float).tiny) or not np.all(np.isfinite(diag)):
        raise np.linalg.LinAlgError("current Cholesky factor is singular")
    # (L_b L_c^{-1})' = L_c^{-T} L_b'
    mapping = linalg.solve_triangular(L_current.T, L_b.T, lower=False)
    return window.reshape(len(window), -1) @ mapping


def empirical_var(returns, level: float) -> float:
    """VaR as minus the ``ceil((1 - level) W)``-th smallest return."""
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    x = np.sort(np.asarray(returns, dtype=float))
    if x.size < MIN_WINDOW:
        raise ValueError(f"need at least {MIN_WINDOW} returns, got {x.size}")
    k = max(1, math.ceil(round((1.0 - level) * x.size, 9)))
    return float(-x[k - 1])


def kupiec_pof(n_days: int, violations: int, level: float) -> tuple[float, float]:
    """Proportion-of-failures likelihood ratio and its chi-square(1) p-value."""
    T, x = int(n_days), int(violations)
    if not 0 <= x <= T or T < 1:
        raise ValueError(f"need 0 <= violations <= n_days, got {x} of {T}")
    rate = x / T
    log_null = special.xlogy(T - x, level) + special.xlogy(x, 1.0 - level)
    log_alt = special.xlogy(T - x, 1.0 - rate) + special.xlogy(x, rate)
    lr = float(-2.0 * (log_null - log_alt))
    if lr < 1e-12:
        lr = 0.0
    return lr, chi2_1_sf(lr)


def kupiec_tff(t_first: int | None, level: float) -> tuple[float, float] | None:
    """Time-until-first-failure likelihood ratio; ``None`` without a failure."""
    if t_first is None:
        return None
    t = int(t_first)
    if t < 1:
        raise ValueError(f"t_first must be >= 1, got {t}")
    log_null = math.log(1.0 - level) + (t - 1) * math.log(level)
    log_alt = -math.log(t) + float(special.xlogy(t - 1, 1.0 - 1.0 / t))
    lr = -2.0 * (log_null - log_alt)
    if lr < 1e-12:
        lr = 0.0
    return lr, chi2_1_sf(lr)


def zone_cutoffs(level: float, n_days: int = DEFAULT_WINDOW) -> tuple[int, int]:
    """Largest green and yellow violation counts.

    Counts whose binomial cumulative probability stays below 95% are green,
    below 99.99% yellow; over 250 days this gives 4/9 at 99% and 17/26 at 95%.
    """
    if not any(math.isclose(level, lv) for lv in SUPPORTED_LEVELS):
        raise ValueError(f"traffic-light zones are defined for levels {SUPPORTED_LEVELS}, got {level}")
    cdf = stats.binom.cdf(np.arange(n_days + 1), n_days, 1.0 - level)
    green = int(np.argmax(cdf >= 0.95)) - 1
    yellow = int(np.argmax(cdf >= 0.9999)) - 1
    return green, yellow


def traffic_light(violations: int, level: float, n_days: int = DEFAULT_WINDOW,
                  green_max: int | None = None, yellow_max: int | None = None) -> str:
    green, yellow = zone_cutoffs(level, n_days)
    green = green if green_max is None else green_max
    yellow = yellow if yellow_max is None else yellow_max
    if violations <= green:
        return "green"
    if violations <= yellow:
        return "yellow"
    return "red"


def portfolio_returns(returns, weights=None) -> np.ndarray:
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        return returns
    if weights is None:
        return returns.mean(axis=1)
    return returns @ np.asarray(weights, dtype=float)


def rolling_svar_backtest(returns, periods: list[SegmentCovariance], window: int = DEFAULT_WINDOW,
                          levels=DEFAULT_LEVELS, weights=None, include_current: bool = False):
    """One-day-ahead stressed VaR backtest over an evaluation sample.

    For day ``i`` the window ``returns[i:i+window]`` is stressed with each
    period's covariance, the empirical VaR of the mapped portfolio returns
    is compared with the realised portfolio return on day ``i + window``,
    and violations (realised < -VaR) are aggregated per period and level.

    Returns
    -------
    results : list of BacktestResult
    daily : dict
        ``portfolio_return`` (realised) and ``svar[(period, level)]``
        arrays, one entry per forecast day (sVaR is the negative quantile).
    """
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    n_obs, N = returns.shape
    if window < MIN_WINDOW:
        raise ValueError(f"window must be at least {MIN_WINDOW} days, got {window}")
    n_days = n_obs - window
    if n_days < 1:
        raise ValueError(f"evaluation sample of {n_obs} days leaves no day after a {window}-day window")
    w = np.full(N, 1.0 / N) if weights is None else np.asarray(weights, dtype=float)

    names = [f"period_{p.index}" for p in periods]
    factors = [np.atleast_2d(p.chol) for p in periods]
    if include_current:
        names.append("current")
        factors.append(None)

    realised = returns[window:] @ w
    svar = {(name, lv): np.empty(n_days) for name in names for lv in levels}
    for i in range(n_days):
        win = returns[i : i + window]
        L_cur = _cholesky(np.atleast_2d(np.cov(win, rowvar=False)), f"window starting at day {i}")
        for name, L_b in zip(names, factors):
            port = win @ w if L_b is None else stress_transform(win, L_b, L_cur) @ w
            for lv in levels:
                svar[(name, lv)][i] = -empirical_var(port, lv)

    results = []
    for name in names:
        for lv in levels:
            line = svar[(name, lv)]
            hits = np.flatnonzero(realised < line)
            x_f = int(hits.size)
            t_first = int(hits[0]) + 1 if x_f else None
            lr_pof, p_pof = kupiec_pof(n_days, x_f, lv)
            tff = kupiec_tff(t_first, lv)
            results.append(BacktestResult(
                period=name, level=lv, n_days=n_days, violations=x_f, t_first=t_first,
                lr_pof=lr_pof, p_pof=p_pof,
                lr_tff=None if tff is None else tff[0], p_tff=None if tff is None else tff[1],
                zone=traffic_light(x_f, lv, n_days), svar_0=float(line[0]),
                violation_days=[int(h) + 1 for h in hits],
            ))
    return results, {"portfolio_return": realised, "svar": svar}


def backtest_records(results: list[BacktestResult]) -> list[dict]:
    return [r.to_dict() for r in results]


def write_daily_csv(path, daily: dict, dates=None) -> None:
    """Per-day plotting data: realised portfolio return and every sVaR line."""
    keys = sorted(daily["svar"], key=lambda k: (k[1], k[0]))
    n = len(daily["portfolio_return"])
    if dates is not None and len(dates) != n:
        raise ValueError(f"got {len(dates)} dates for {n} forecast days")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "date", "portfolio_return"]
                        + [f"svar_{name}_{lv:g}" for name, lv in keys])
        for i in range(n):
            writer.writerow([i + 1, "" if dates is None else dates[i],
                             repr(float(daily["portfolio_return"][i]))]
                            + [repr(float(daily["svar"][k][i])) for k in keys])
