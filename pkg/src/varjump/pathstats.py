"""Exact functionals of a sampled path ``t -> F_t(x)``.

Every supremum over continuous scales is taken over the sampled scales only,
so each quantity here is computed exactly for the finite path and
approximates the continuum operator from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import ScaleGrid

MAX_PATH_LENGTH = 20_000


@dataclass(frozen=True, eq=False)
class Path:
    """Values ``a_t`` on a strictly decreasing scale grid."""

    scales: ScaleGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        scales = self.scales if isinstance(self.scales, ScaleGrid) else ScaleGrid(self.scales)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size != len(scales):
            raise ValueError(f"path has {len(scales)} scales but {values.size} values")
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def from_values(cls, values, scales=None) -> "Path":
        """Path on the default index grid ``M, M-1, ..., 1`` when no scales are given."""
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValueError("path must be nonempty")
        if scales is None:
            scales = np.arange(values.size, 0, -1, dtype=float)
        return cls(ScaleGrid(scales), values)

    def restrict(self, mask) -> "Path":
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise ValueError("restriction selects no scales")
        return Path(ScaleGrid(self.scales.scales[mask]), self.values[mask])


@dataclass(frozen=True, eq=False)
class BlockSequence:
    """Strictly decreasing boundaries ``t_1 > t_2 > ...``; block i is ``[t_{i+1}, t_i]``."""

    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float).reshape(-1)
        if b.size == 0:
            raise ValueError("block sequence must be nonempty")
        if np.any(b <= 0) or not np.all(np.isfinite(b)):
            raise ValueError("block boundaries must be finite and positive")
        if np.any(np.diff(b) >= 0):
            raise ValueError("block boundaries must be strictly decreasing")
        object.__setattr__(self, "boundaries", b)

    @classmethod
    def reciprocals(cls, n: int) -> "BlockSequence":
        """Boundaries ``1, 1/2, ..., 1/n``."""
        if n < 1:
            raise ValueError("need at least one boundary")
        return cls(1.0 / np.arange(1, n + 1))

    def __len__(self) -> int:
        return self.boundaries.size

    def intervals(self):
        b = self.boundaries
        return list(zip(b[1:], b[:-1]))


@dataclass(frozen=True)
class PathReport:
    v_rho: float
    oscillation: float
    jump_count: int
    maximal: float
    s2: float
    dyadic_jump: int
    rho: float
    lam: float
    blocks: BlockSequence | None = field(default=None, repr=False)


def _as_path(path) -> Path:
    if isinstance(path, Path):
        return path
    return Path.from_values(path)


def _check_rho(rho: float) -> None:
    if not rho >= 1:
        raise ValueError(f"rho must be >= 1, got {rho}")


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")


def turning_points(values: np.ndarray) -> np.ndarray:
    """Endpoints and strict local extrema after collapsing repeated values.

    For rho >= 1 the variation supremum is attained on these points.
    """
    v = np.asarray(values, dtype=float)
    if v.size <= 2:
        return v
    keep = np.ones(v.size, dtype=bool)
    keep[1:] = v[1:] != v[:-1]
    v = v[keep]
    if v.size <= 2:
        return v
    d = np.sign(np.diff(v))
    turn = np.ones(v.size, dtype=bool)
    turn[1:-1] = d[1:] != d[:-1]
    return v[turn]


def _variation_power(values: np.ndarray, rho: float) -> float:
    """max over subsequences of sum |a_k - a_{k-1}|**rho (rho-th power of v_rho)."""
    v = turning_points(values)
    m = v.size
    if m < 2:
        return 0.0
    best = np.zeros(m)
    for i in range(1, m):
        best[i] = np.max(best[:i] + np.abs(v[i] - v[:i]) ** rho)
    return float(best.max())


def variation_norm(path, rho: float) -> float:
    """rho-variation norm, exact over all subsequences of the sampled scales."""
    _check_rho(rho)
    path = _as_path(path)
    if len(path) > MAX_PATH_LENGTH:
        raise ValueError(f"path longer than {MAX_PATH_LENGTH} scales")
    return _variation_power(path.values, rho) ** (1.0 / rho)


def _block_slices(scales_desc: np.ndarray, blocks: BlockSequence):
    # scales are decreasing; work on negated values so searchsorted sees ascending data
    neg = -scales_desc
    out = []
    for lo, hi in blocks.intervals():
        start = np.searchsorted(neg, -hi, side="left")
        stop = np.searchsorted(neg, -lo, side="right")
        out.append((int(start), int(stop)))
    return out


def _oscillation_columns(scales: np.ndarray, values: np.ndarray, blocks: BlockSequence) -> np.ndarray:
    # values: (M, n) -> oscillation for each of n columns
    total = np.zeros(values.shape[1])
    for start, stop in _block_slices(scales, blocks):
        if stop - start >= 2:
            chunk = values[start:stop]
            total += (chunk.max(axis=0) - chunk.min(axis=0)) ** 2
    return np.sqrt(total)


def oscillation(path, blocks: BlockSequence) -> float:
    """l2 sum over blocks of the largest in-block difference."""
    path = _as_path(path)
    if not isinstance(blocks, BlockSequence):
        blocks = BlockSequence(blocks)
    return float(_oscillation_columns(path.scales.scales, path.values[:, None], blocks)[0])


def _jump_columns(values: np.ndarray, lam: float) -> np.ndarray:
    # greedy earliest completion, vectorised over columns
    lo = values[0].copy()
    hi = values[0].copy()
    count = np.zeros(values.shape[1], dtype=np.int64)
    for row in values[1:]:
        hit = (row - lo > lam) | (hi - row > lam)
        count += hit
        lo = np.where(hit, row, np.minimum(lo, row))
        hi = np.where(hit, row, np.maximum(hi, row))
    return count


def jump_count(path, lam: float) -> int:
    """Maximal number of disjoint scale pairs whose values differ by more than ``lam``.

    A pair may start where the previous one ended.  Scanning along the path,
    a jump is closed as soon as the current value leaves the band spanned by
    the values seen since the last closing point; closing as early as
    possible is optimal.
    """
    _check_lambda(lam)
    path = _as_path(path)
    return int(_jump_columns(path.values[:, None], lam)[0])


def maximal_value(path) -> float:
    path = _as_path(path)
    return float(np.max(np.abs(path.values)))


def dyadic_block_index(scales: np.ndarray) -> np.ndarray:
    """Index ``j`` with ``2**j < t <= 2**(j+1)``, computed exactly."""
    mantissa, exponent = np.frexp(np.asarray(scales, dtype=float))
    return np.where(mantissa == 0.5, exponent - 2, exponent - 1)


def short_variation_s2(path) -> float:
    """l2 combination of the 2-variation over dyadic blocks ``(2**j, 2**(j+1)]``."""
    path = _as_path(path)
    j = dyadic_block_index(path.scales.scales)
    total = 0.0
    # scales decrease, so each block is a contiguous run
    edges = np.flatnonzero(np.diff(j)) + 1
    for chunk in np.split(path.values, edges):
        total += _variation_power(chunk, 2.0)
    return math.sqrt(total)


def dyadic_subpath(path) -> Path:
    path = _as_path(path)
    mask = path.scales.dyadic_mask()
    if not mask.any():
        raise ValueError("path has no dyadic scales 2**k")
    return path.restrict(mask)


def dyadic_jump_count(path, lam: float) -> int:
    """Jump count of the subpath at scales ``2**k``."""
    return jump_count(dyadic_subpath(path), lam)


def jump_reduction_ratio(path, lam: float, floor: float = 1e-12) -> float:
    """``lam*sqrt(N_lam) / (S_2 + lam*sqrt(N^d_{lam/3}))``; NaN when the denominator is tiny."""
    path = _as_path(path)
    num = lam * math.sqrt(jump_count(path, lam))
    den = short_variation_s2(path) + lam * math.sqrt(dyadic_jump_count(path, lam / 3.0))
    if den <= floor:
        return float("nan")
    return num / den


def path_report(path, rho: float, lam: float, blocks: BlockSequence | None = None) -> PathReport:
    """All statistics at one point.  Without blocks the oscillation is NaN;
    without dyadic scales the dyadic jump count is -1."""
    path = _as_path(path)
    osc = oscillation(path, blocks) if blocks is not None else float("nan")
    try:
        nd = dyadic_jump_count(path, lam)
    except ValueError:
        nd = -1
    return PathReport(
        v_rho=variation_norm(path, rho),
        oscillation=osc,
        jump_count=jump_count(path, lam),
        maximal=maximal_value(path),
        s2=short_variation_s2(path),
        dyadic_jump=nd,
        rho=rho,
        lam=lam,
        blocks=blocks,
    )


def family_statistics(scales, values: np.ndarray, rho: float, lam: float,
                      blocks: BlockSequence | None = None) -> dict[str, np.ndarray]:
    """Column-wise statistics for a value matrix of shape (M scales, n points)."""
    _check_rho(rho)
    _check_lambda(lam)
    scales = scales if isinstance(scales, ScaleGrid) else ScaleGrid(scales)
    values = np.asarray(values, dtype=float)
    s = scales.scales
    n = values.shape[1]
    dmask = scales.dyadic_mask()
    j = dyadic_block_index(s)
    edges = np.flatnonzero(np.diff(j)) + 1
    v_rho = np.empty(n)
    s2 = np.empty(n)
    for i in range(n):
        col = values[:, i]
        v_rho[i] = _variation_power(col, rho) ** (1.0 / rho)
        s2[i] = math.sqrt(sum(_variation_power(c, 2.0) for c in np.split(col, edges)))
    out = {
        "v_rho": v_rho,
        "osc": (_oscillation_columns(s, values, blocks) if blocks is not None
                else np.full(n, np.nan)),
        "n_lambda": _jump_columns(values, lam),
        "maximal": np.max(np.abs(values), axis=0),
        "s2": s2,
        "nd_lambda": (_jump_columns(values[dmask], lam) if dmask.any()
                      else np.full(n, -1, dtype=np.int64)),
    }
    return out
