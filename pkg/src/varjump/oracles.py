"""Reference values: Gaussian closed forms and exhaustive path searches.

The Gaussian case is ``f(x) = exp(-x**2)`` convolved with the unit-integral
kernel ``pi**-0.5 * exp(-x**2)``.  The brute-force searches share no code
with :mod:`varjump.pathstats` and are meant to check it.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

BRUTEFORCE_LIMIT = 20

SQRT2_HALF = math.sqrt(2.0) / 2.0
INV_SQRT_2E = 1.0 / math.sqrt(2.0 * math.e)


def gaussian_family(t, x):
    """``(phi_t * f)(x) = (t**2 + 1)**-0.5 * exp(-x**2 / (1 + t**2))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("scale t must be positive")
    x = np.asarray(x, dtype=float)
    s2 = 1.0 + t * t
    out = np.exp(-x * x / s2) / np.sqrt(s2)
    return float(out) if out.ndim == 0 else out


def gaussian_maximal(x):
    """``sup_t |phi_t * f|(x)``: ``exp(-x**2)`` near 0, ``1/(sqrt(2e)|x|)`` beyond ``sqrt(2)/2``."""
    ax = np.abs(np.asarray(x, dtype=float))
    inner = ax <= SQRT2_HALF
    safe = np.where(inner, 1.0, ax)
    out = np.where(inner, np.exp(-ax * ax), INV_SQRT_2E / safe)
    return float(out) if out.ndim == 0 else out


def gaussian_oscillation_bound(x):
    """Upper bound for the oscillation with blocks ``t_n = 1/n``, three branches in ``|x|``."""
    ax = np.abs(np.asarray(x, dtype=float))
    e1 = np.exp(-ax * ax)
    e2 = SQRT2_HALF * np.exp(-ax * ax / 2.0)
    safe = np.where(ax > 0, ax, 1.0)
    middle = math.sqrt(2.0 / math.e) / safe - e1 - e2
    out = np.where(ax <= SQRT2_HALF, e1 - e2, np.where(ax < 1.0, middle, e2 - e1))
    return float(out) if out.ndim == 0 else out


def gaussian_jump_bound(lam: float, x):
    """Shape of the upper bound for ``N_lam`` (constant taken as 1), exact zero region included."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    ax = np.abs(np.asarray(x, dtype=float))
    e1 = np.exp(-ax * ax)
    if lam >= 1.0:
        out = np.zeros_like(ax)
    elif lam >= 1.0 / math.sqrt(math.e):
        out = np.where(ax <= math.sqrt(-math.log(lam)), e1 / lam, 0.0)
    else:
        cutoff = 1.0 / (lam * math.sqrt(2.0 * math.e))
        safe = np.where(ax > 0, ax, 1.0)
        middle = math.sqrt(2.0 / math.e) / (lam * safe) - e1 / lam
        out = np.where(ax <= SQRT2_HALF, e1 / lam,
                       np.where(ax < cutoff, middle, 0.0))
    return float(out) if out.ndim == 0 else out


def gaussian_peak_scale(x: float) -> float:
    """Scale maximising ``t -> (phi_t * f)(x)``; 0 when the path is monotone."""
    return math.sqrt(max(2.0 * x * x - 1.0, 0.0))


def gaussian_total_variation(x: float, t_min: float = 0.0, t_max: float = math.inf) -> float:
    """v_1 of ``t -> (phi_t * f)(x)`` over ``[t_min, t_max]`` from the unimodal shape."""
    def value(t):
        if t == 0.0:
            return math.exp(-x * x)
        if math.isinf(t):
            return 0.0
        return gaussian_family(t, x)

    peak = gaussian_peak_scale(x)
    a, b = value(t_min), value(t_max)
    if t_min < peak < t_max:
        p = value(peak)
        return (p - a) + (p - b)
    return abs(a - b)


def _check_length(values: np.ndarray) -> None:
    if values.size == 0:
        raise ValueError("path must be nonempty")
    if values.size > BRUTEFORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTEFORCE_LIMIT} points")


def _values(path) -> np.ndarray:
    return np.asarray(getattr(path, "values", path), dtype=float).reshape(-1)


def variation_bruteforce(path, rho: float) -> float:
    """Maximum over every subsequence (2**M of them) of ``(sum |diff|**rho)**(1/rho)``."""
    if not rho >= 1:
        raise ValueError("rho must be >= 1")
    v = _values(path)
    _check_length(v)
    m = v.size
    masks = np.arange(1 << m, dtype=np.int64)
    total = np.zeros(masks.size)
    last = np.full(masks.size, np.nan)
    for i in range(m):
        on = ((masks >> i) & 1).astype(bool)
        step = np.abs(v[i] - last) ** rho
        total = np.where(on & ~np.isnan(last), total + step, total)
        last = np.where(on, v[i], last)
    return float(total.max() ** (1.0 / rho))


def jump_bruteforce(path, lam: float) -> int:
    """Largest ``N`` with ``s_1 < e_1 <= s_2 < e_2 <= ... <= s_N < e_N`` and every pair
    differing by more than ``lam``; exhaustive over all qualifying pairs."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    v = _values(path).tolist()
    _check_length(np.asarray(v))
    m = len(v)
    pairs = [(s, e) for s in range(m) for e in range(s + 1, m) if abs(v[e] - v[s]) > lam]

    @lru_cache(maxsize=None)
    def most(start: int) -> int:
        best = 0
        for s, e in pairs:
            if s >= start:
                best = max(best, 1 + most(e))
        return best

    return most(0)
