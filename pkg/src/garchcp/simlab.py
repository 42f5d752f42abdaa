"""Simulated GARCH panels with known change-points.

Model ids follow the simulation design of the method:

* ``M0.x``  stationary CCC-GARCH(1,1) panels;
* ``M1.x``  one change in the GARCH parameters of a subset ``S1``;
* ``M2.x``  a GARCH change at ``[T/4]`` and a correlation change at
  ``[3T/5]`` (rows and columns of the innovation correlation indexed by
  ``S2`` are permuted);
* ``M3.1.x`` the M2.1/M2.2 data meant to be analysed with order (2, 2);
* ``M3.2.x`` GARCH(2,2) data with the M2 break structure;
* ``M4.x``  full-factor GARCH: ``r_t = W f_t`` with a factor-parameter
  change and a swap of rows of ``W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .garch_core import DEFAULT_BURN_IN, OMEGA_MIN, PERSISTENCE_MAX, GarchParams, _garch_recursion

DEFAULT_JITTER = 0.01
DEFAULT_RHO = -0.75

# (before, after) parameter vectors (omega, alpha_1..alpha_p, beta_1..beta_q)
REGIMES = {
    "M0.1": ((0.4, 0.1, 0.5), None),
    "M0.2": ((0.1, 0.1, 0.8), None),
    "M1.1": ((0.4, 0.1, 0.5), (0.4, 0.1, 0.6)),
    "M1.2": ((0.4, 0.1, 0.5), (0.4, 0.1, 0.8)),
    "M1.3": ((0.1, 0.1, 0.8), (0.1, 0.1, 0.7)),
    "M1.4": ((0.1, 0.1, 0.8), (0.1, 0.1, 0.4)),
    "M1.5": ((0.4, 0.1, 0.5), (0.5, 0.1, 0.5)),
    "M1.6": ((0.4, 0.1, 0.5), (0.8, 0.1, 0.5)),
    "M1.7": ((0.1, 0.1, 0.8), (0.3, 0.1, 0.8)),
    "M1.8": ((0.1, 0.1, 0.8), (0.5, 0.1, 0.8)),
    "M2.1": ((0.1, 0.3, 0.3), (0.15, 0.25, 0.65)),
    "M2.2": ((0.1, 0.3, 0.3), (0.125, 0.1, 0.6)),
    "M2.3": ((0.1, 0.3, 0.3), (0.15, 0.15, 0.25)),
    "M3.1.1": ((0.1, 0.3, 0.3), (0.15, 0.25, 0.65)),
    "M3.1.2": ((0.1, 0.3, 0.3), (0.125, 0.1, 0.6)),
    "M3.2.1": ((0.1, 0.1, 0.2, 0.1, 0.2), (0.15, 0.15, 0.1, 0.35, 0.3)),
    "M3.2.2": ((0.1, 0.1, 0.2, 0.1, 0.2), (0.125, 0.1, 0.0, 0.3, 0.3)),
    "M4.1": ((0.1, 0.3, 0.3), (0.15, 0.25, 0.65)),
    "M4.2": ((0.1, 0.3, 0.3), (0.125, 0.1, 0.6)),
}

MODELS = tuple(REGIMES)


@dataclass
class ScenarioSpec:
    model: str
    N: int = 50
    T: int | None = None
    sparsity: float = 1.0
    eta: tuple[float, ...] | None = None
    innovation: str = "gaussian"
    jitter: float = DEFAULT_JITTER
    rho: float = DEFAULT_RHO
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    count_noop_breaks: bool = False

    def __post_init__(self):
        if self.model not in REGIMES:
            raise ValueError(f"unknown model id {self.model!r}; choose from {', '.join(MODELS)}")
        if not 0 < self.sparsity <= 1:
            raise ValueError(f"sparsity must lie in (0, 1], got {self.sparsity}")
        if self.innovation not in ("gaussian", "t10"):
            raise ValueError(f"innovation must be 'gaussian' or 't10', got {self.innovation!r}")
        if self.T is None:
            self.T = 1000 if self.family in ("M0", "M1") else 500
        if self.N < 1 or self.T < 2:
            raise ValueError("need N >= 1 and T >= 2")
        if self.eta is not None:
            eta = tuple(float(e) for e in self.eta)
            if any(not 0 < e < 1 for e in eta) or list(eta) != sorted(set(eta)):
                raise ValueError(f"eta fractions must be strictly increasing in (0, 1): {eta}")
            self.eta = eta

    @property
    def family(self) -> str:
        return self.model.split(".")[0]

    @property
    def order(self) -> tuple[int, int]:
        return (2, 2) if self.model.startswith("M3.2") else (1, 1)

    @property
    def detector_order(self) -> tuple[int, int]:
        """GARCH order the detector is meant to use on this scenario."""
        return (2, 2) if self.model.startswith("M3.1") else (1, 1)

    @property
    def n_affected(self) -> int:
        return math.floor(round(self.sparsity * self.N, 9))

    def break_locations(self) -> tuple[int, ...]:
        T = self.T
        if self.family == "M0":
            return ()
        if self.eta is not None:
            return tuple(math.floor(round(e * T, 9)) for e in self.eta)
        if self.family == "M1":
            return (T // 2,)
        return (T // 4, (3 * T) // 5)


@dataclass
class LabeledPanel:
    returns: np.ndarray  # T x N
    truth: tuple[int, ...]
    affected: tuple[tuple[int, ...], tuple[int, ...]] = ((), ())
    params: list = field(default_factory=list, repr=False)
    condvar: np.ndarray | None = field(default=None, repr=False)
    spec: ScenarioSpec | None = None


def ar1_corr(rho: float, N: int) -> np.ndarray:
    """Correlation matrix with entries ``rho ** |i - j|``."""
    if not abs(rho) < 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    idx = np.arange(N)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def cyclic_swap(indices, rng: np.random.Generator, N: int) -> np.ndarray:
    """A permutation of ``range(N)`` moving every index in ``indices``.

    The chosen indices are put in random order and shifted by one position
    along that order, so no selected index stays in place when there are
    at least two of them.
    """
    perm = np.arange(N)
    order = rng.permutation(np.asarray(indices, dtype=int))
    if order.size >= 2:
        perm[order] = np.roll(order, 1)
    return perm


def _jittered(base, delta) -> GarchParams:
    vals = np.asarray(base, dtype=float) + delta
    p = q = (vals.size - 1) // 2
    omega = max(vals[0], OMEGA_MIN)
    coefs = np.clip(vals[1:], 0.0, None)
    if coefs.sum() > PERSISTENCE_MAX:
        coefs *= PERSISTENCE_MAX / coefs.sum()
    return GarchParams(omega, tuple(coefs[:p]), tuple(coefs[p:]))


def _regime_params(spec: ScenarioSpec, rng: np.random.Generator):
    before, after = REGIMES[spec.model]
    k = len(before)
    delta = rng.uniform(-spec.jitter, spec.jitter, size=(spec.N, k)) if spec.jitter > 0 else np.zeros((spec.N, k))
    s1 = np.sort(rng.choice(spec.N, size=spec.n_affected, replace=False)) if after is not None else np.array([], int)
    pre = [_jittered(before, delta[i]) for i in range(spec.N)]
    post = list(pre)
    for i in s1:
        post[i] = _jittered(after, delta[i])
    return pre, post, s1


def _simulate(pre, post, eta1, eps):
    """GARCH recursion for N series; ``post`` applies from 0-based ``eta1`` on."""
    n_total, N = eps.shape
    p, q = pre[0].p, pre[0].q
    pre_arr = np.array([prm.as_array() for prm in pre])
    post_arr = np.array([prm.as_array() for prm in post])
    coefs = np.repeat(pre_arr[None], n_total, axis=0)
    if eta1 is not None:
        coefs[eta1:] = post_arr
    h0 = np.array([prm.unconditional_variance for prm in pre])
    r, h = _garch_recursion(eps, coefs[:, :, 0], coefs[:, :, 1 : 1 + p], coefs[:, :, 1 + p :], h0)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("simulated panel contains non-finite values")
    return r, h


def _innovations(spec: ScenarioSpec, rng, n_total, corr_before, corr_after=None, switch=None):
    N = spec.N
    if spec.innovation == "t10":
        if corr_after is not None:
            raise ValueError("t10 innovations are i.i.d. across series; correlation breaks need gaussian")
        return rng.standard_t(10, size=(n_total, N)) * math.sqrt(8.0 / 10.0)
    z = rng.standard_normal((n_total, N))
    eps = z @ np.linalg.cholesky(corr_before).T
    if corr_after is not None:
        eps[switch:] = z[switch:] @ np.linalg.cholesky(corr_after).T
    return eps


def gen_m0(spec: ScenarioSpec) -> LabeledPanel:
    return _gen_garch(spec)


def gen_m1(spec: ScenarioSpec) -> LabeledPanel:
    return _gen_garch(spec)


def _gen_garch(spec: ScenarioSpec) -> LabeledPanel:
    if spec.family not in ("M0", "M1"):
        raise ValueError(f"{spec.model} is not an M0/M1 model")
    rng = np.random.default_rng(spec.seed)
    pre, post, s1 = _regime_params(spec, rng)
    breaks = spec.break_locations()
    eta1 = breaks[0] if breaks else None
    n_total = spec.T + spec.burn_in
    eps = _innovations(spec, rng, n_total, ar1_corr(spec.rho, spec.N))
    r, h = _simulate(pre, post, None if eta1 is None else spec.burn_in + eta1, eps)
    truth = (eta1,) if eta1 is not None and (s1.size or spec.count_noop_breaks) else ()
    return LabeledPanel(r[spec.burn_in :], truth, (tuple(int(i) for i in s1), ()),
                        [pre, post], h[spec.burn_in :], spec)


def gen_m2(spec: ScenarioSpec) -> LabeledPanel:
    """Two breaks: GARCH parameters at the first, correlations at the second.

    Also serves the M3 models, whose data share this structure.
    """
    if spec.family not in ("M2", "M3"):
        raise ValueError(f"{spec.model} is not an M2/M3 model")
    rng = np.random.default_rng(spec.seed)
    pre, post, s1 = _regime_params(spec, rng)
    s2 = np.sort(rng.choice(spec.N, size=spec.n_affected, replace=False))
    eta1, eta2 = spec.break_locations()
    corr = ar1_corr(spec.rho, spec.N)
    perm = cyclic_swap(s2, rng, spec.N)
    corr_after = corr[np.ix_(perm, perm)]
    n_total = spec.T + spec.burn_in
    eps = _innovations(spec, rng, n_total, corr, corr_after, spec.burn_in + eta2)
    r, h = _simulate(pre, post, spec.burn_in + eta1, eps)
    truth = []
    if s1.size or spec.count_noop_breaks:
        truth.append(eta1)
    if not np.array_equal(corr, corr_after) or spec.count_noop_breaks:
        truth.append(eta2)
    return LabeledPanel(r[spec.burn_in :], tuple(truth), (tuple(int(i) for i in s1), tuple(int(i) for i in s2)),
                        [pre, post, corr, corr_after], h[spec.burn_in :], spec)


def gen_m3(spec: ScenarioSpec) -> LabeledPanel:
    if spec.family != "M3":
        raise ValueError(f"{spec.model} is not an M3 model")
    return gen_m2(spec)


def gen_m4(spec: ScenarioSpec, loadings: np.ndarray | None = None) -> LabeledPanel:
    """Full-factor GARCH panel ``r_t = W_t f_t``.

    ``loadings`` overrides the random ``W`` (entries i.i.d. N(1, 1)).
    """
    if spec.family != "M4":
        raise ValueError(f"{spec.model} is not an M4 model")
    rng = np.random.default_rng(spec.seed)
    pre, post, s1 = _regime_params(spec, rng)
    s2 = np.sort(rng.choice(spec.N, size=spec.n_affected, replace=False))
    W = rng.normal(1.0, 1.0, size=(spec.N, spec.N)) if loadings is None else np.asarray(loadings, float)
    perm = cyclic_swap(s2, rng, spec.N)
    W_after = W[perm]
    eta1, eta2 = spec.break_locations()
    n_total = spec.T + spec.burn_in
    z = rng.standard_normal((n_total, spec.N))
    f, h = _simulate(pre, post, spec.burn_in + eta1, z)
    f = f[spec.burn_in :]
    r = f @ W.T
    r[eta2:] = f[eta2:] @ W_after.T
    truth = []
    if s1.size or spec.count_noop_breaks:
        truth.append(eta1)
    if not np.array_equal(W, W_after) or spec.count_noop_breaks:
        truth.append(eta2)
    return LabeledPanel(r, tuple(truth), (tuple(int(i) for i in s1), tuple(int(i) for i in s2)),
                        [pre, post, W, W_after], h[spec.burn_in :], spec)


def generate(spec: ScenarioSpec) -> LabeledPanel:
    family = spec.family
    if family in ("M0", "M1"):
        return _gen_garch(spec)
    if family in ("M2", "M3"):
        return gen_m2(spec)
    return gen_m4(spec)
