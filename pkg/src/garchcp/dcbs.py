"""Double CUSUM binary segmentation over a d x T panel.

Segments are half-open, 0-based ``[start, end)``. A change-point at
``k`` splits ``[start, end)`` into ``[start, k)`` and ``[k, end)``, so ``k``
equals the 1-based index of the last observation before the change.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_MIN_SEG = 30


@dataclass
class CusumMatrix:
    values: np.ndarray  # d x (end - start - 1); column c-start holds the split after c
    start: int
    end: int


@dataclass
class DcScanResult:
    stat: float
    argmax_c: int  # change-point location k, start < k < end
    argmax_n: int  # 1..d


@dataclass
class ChangePoint:
    location: int
    stat: float
    threshold: float
    n_hat: int
    level: int
    segment: tuple[int, int]


@dataclass
class ChangePointSet:
    points: list[ChangePoint] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def locations(self) -> list[int]:
        return [cp.location for cp in self.points]

    def segments(self, T: int) -> list[tuple[int, int]]:
        bounds = [0, *self.locations, T]
        return list(zip(bounds[:-1], bounds[1:]))


def cusum_row(x, start: int = 0, end: int | None = None) -> np.ndarray:
    """CUSUM statistics of ``x[start:end]`` at every split.

    Entry ``k - start - 1`` is
    ``sqrt(m_l m_r / m) (mean(x[start:k]) - mean(x[k:end]))`` for
    ``k = start+1 .. end-1``, computed from prefix sums.
    """
    x = np.asarray(x, dtype=float)
    return cusum_matrix(x[None, :], start, end).values[0]


def cusum_matrix(panel, start: int = 0, end: int | None = None) -> CusumMatrix:
    panel = np.asarray(panel, dtype=float)
    if panel.ndim == 1:
        panel = panel[None, :]
    end = panel.shape[1] if end is None else end
    m = end - start
    if m < 2:
        raise ValueError(f"segment [{start}, {end}) is too short for a CUSUM")
    seg = panel[:, start:end]
    seg = seg - seg.mean(axis=1, keepdims=True)
    cs = np.cumsum(seg, axis=1)[:, :-1]
    total = seg.sum(axis=1, keepdims=True)
    left = np.arange(1, m, dtype=float)
    right = m - left
    mean_diff = cs / left - (total - cs) / right
    values = np.sqrt(left * right / m) * mean_diff
    values[np.ptp(panel[:, start:end], axis=1) == 0] = 0.0
    return CusumMatrix(values, start, end)


def dc_surface(cusums: CusumMatrix | np.ndarray) -> np.ndarray:
    """The double CUSUM array ``D(n)`` of shape (d, n_candidates)."""
    X = cusums.values if isinstance(cusums, CusumMatrix) else np.asarray(cusums)
    d = X.shape[0]
    ordered = -np.sort(-np.abs(X), axis=0)
    head = np.cumsum(ordered, axis=0)
    rest = np.cumsum(ordered[::-1], axis=0)[::-1]
    tail = np.zeros_like(ordered)
    tail[:-1] = rest[1:]
    n = np.arange(1, d + 1, dtype=float)[:, None]
    scale = np.sqrt(n * (2 * d - n) / (2 * d))
    return scale * (head / n - tail / (2 * d - n))


def dc_scan(cusums: CusumMatrix) -> DcScanResult:
    """Maximise the double CUSUM over candidates and cross-sectional counts.

    Ties go to the smallest candidate, then the smallest count.
    """
    D = dc_surface(cusums)
    flat = int(np.argmax(D.T))
    c_idx, n_idx = divmod(flat, D.shape[0])
    stat = float(D[n_idx, c_idx])
    return DcScanResult(stat=max(stat, 0.0), argmax_c=cusums.start + c_idx + 1, argmax_n=n_idx + 1)


def mad_scale(panel: np.ndarray, start: int, end: int) -> np.ndarray:
    seg = panel[..., start:end]
    med = np.median(seg, axis=-1, keepdims=True)
    mad = np.median(np.abs(seg - med), axis=-1, keepdims=True)
    return np.where(mad > 0, mad, 1.0)


def segment_scan(panel: np.ndarray, start: int, end: int, standardize: bool = False) -> DcScanResult:
    """DC scan on ``panel[:, start:end]``, optionally MAD-standardising rows."""
    seg = np.asarray(panel)[:, start:end]
    if standardize:
        seg = seg / mad_scale(seg, 0, end - start)
    cus = cusum_matrix(seg)
    res = dc_scan(cus)
    res.argmax_c += start
    return res


ThresholdProvider = Callable[[int, int], float]


def dcbs_run(panel, thresholds: ThresholdProvider | float, min_seg: int = DEFAULT_MIN_SEG,
             standardize: bool = False, threads: int = 1) -> ChangePointSet:
    """Binary segmentation with the double CUSUM test.

    Parameters
    ----------
    panel : TransformedPanel or array (d x T)
    thresholds : callable ``(start, end) -> float`` or a constant
        Queried once for every examined segment.
    min_seg : int
        Segments with fewer observations are not examined.
    standardize : bool
        Divide each row by its MAD over the examined segment.
    threads : int
        Segments of the same level are scanned concurrently; the result does
        not depend on this value.
    """
    data = np.asarray(getattr(panel, "data", panel), dtype=float)
    if data.ndim == 1:
        data = data[None, :]
    T = data.shape[1]
    if T < min_seg:
        raise ValueError(f"series length {T} is shorter than min_seg={min_seg}")
    provider = thresholds if callable(thresholds) else (lambda s, e, _v=float(thresholds): _v)

    def examine(seg):
        s, e = seg
        res = segment_scan(data, s, e, standardize)
        pi = float(provider(s, e)) if res.stat > 0 else np.inf
        return res, pi

    found: list[ChangePoint] = []
    level_segments = [(0, T)]
    level = 1
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while level_segments:
            todo = [seg for seg in level_segments if seg[1] - seg[0] >= max(min_seg, 2)]
            results = list(pool.map(examine, todo)) if threads > 1 else [examine(s) for s in todo]
            next_segments = []
            for (s, e), (res, pi) in zip(todo, results):
                if res.stat > pi:
                    k = res.argmax_c
                    found.append(ChangePoint(k, res.stat, pi, res.argmax_n, level, (s, e)))
                    next_segments.extend([(s, k), (k, e)])
            level_segments = next_segments
            level += 1
    found.sort(key=lambda cp: cp.location)
    return ChangePointSet(found)
