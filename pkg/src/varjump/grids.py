"""Sampling grids for scales ``t`` and space ``x``, and sampled functions on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# relative slack when checking that a step divides an interval
_DIVIDE_RTOL = 1e-9


def _is_integer(value: float, rtol: float = _DIVIDE_RTOL) -> bool:
    return abs(value - round(value)) <= rtol * max(1.0, abs(value))


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    """A finite, strictly decreasing set of positive scales ``t_1 > ... > t_M``."""

    scales: np.ndarray

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=float).reshape(-1)
        if scales.size == 0:
            raise ValueError("ScaleGrid must contain at least one scale")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise ValueError("scales must be finite and positive")
        if np.any(np.diff(scales) >= 0):
            raise ValueError("scales must be strictly decreasing")
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)

    def __len__(self) -> int:
        return self.scales.size

    def __iter__(self):
        return iter(self.scales.tolist())

    @classmethod
    def from_values(cls, values) -> "ScaleGrid":
        """Build a grid from unordered positive values (duplicates dropped)."""
        values = np.unique(np.asarray(values, dtype=float))
        return cls(values[::-1])

    @classmethod
    def geometric(cls, t_min: float, t_max: float, per_octave: int = 64) -> "ScaleGrid":
        """Scales ``2**(k/per_octave)`` lying in ``[t_min, t_max]``.

        The lattice is anchored at powers of two, so every dyadic scale
        ``2**j`` inside the range is present exactly.
        """
        if not (0 < t_min <= t_max):
            raise ValueError("need 0 < t_min <= t_max")
        if per_octave < 1:
            raise ValueError("per_octave must be a positive integer")
        per_octave = int(per_octave)
        k_lo = math.ceil(math.log2(t_min) * per_octave - 1e-9)
        k_hi = math.floor(math.log2(t_max) * per_octave + 1e-9)
        k = np.arange(k_hi, k_lo - 1, -1)
        scales = np.exp2(k / per_octave)
        scales = scales[(scales >= t_min * (1 - 1e-12)) & (scales <= t_max * (1 + 1e-12))]
        return cls(scales)

    @classmethod
    def logspace(cls, t_min: float, t_max: float, num: int) -> "ScaleGrid":
        if not (0 < t_min < t_max) or num < 2:
            raise ValueError("need 0 < t_min < t_max and num >= 2")
        return cls(np.geomspace(t_max, t_min, int(num)))

    def union(self, other) -> "ScaleGrid":
        """Refinement containing the scales of both grids."""
        other = other.scales if isinstance(other, ScaleGrid) else np.asarray(other, float)
        return ScaleGrid.from_values(np.concatenate([self.scales, other]))

    def scaled(self, factor: float) -> "ScaleGrid":
        return ScaleGrid(self.scales * factor)

    def dyadic_mask(self) -> np.ndarray:
        """Boolean mask of scales that are exact powers of two."""
        mantissa, _ = np.frexp(self.scales)
        return mantissa == 0.5


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform nodes ``x_min, x_min + h, ..., x_max``; ``h`` must divide the span."""

    x_min: float
    x_max: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError("need x_min < x_max")
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not _is_integer((self.x_max - self.x_min) / self.h):
            raise ValueError(
                f"step h={self.h} does not divide [{self.x_min}, {self.x_max}]"
            )

    @property
    def n_nodes(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h)) + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n_nodes)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def contains(self, x: float) -> bool:
        slack = 1e-12 * max(1.0, abs(self.x_min), abs(self.x_max))
        return self.x_min - slack <= x <= self.x_max + slack

    def lattice_index(self) -> int | None:
        """Integer ``m`` with ``x_min == m * h`` or None if the grid is off-lattice."""
        m = self.x_min / self.h
        return int(round(m)) if _is_integer(m) else None

    def offset_in(self, other: "SpaceGrid") -> int | None:
        """Node offset of this grid inside ``other`` when they share a lattice."""
        if not math.isclose(self.h, other.h, rel_tol=1e-12):
            return None
        shift = (self.x_min - other.x_min) / other.h
        if not _is_integer(shift):
            return None
        shift = int(round(shift))
        if shift < 0 or shift + self.n_nodes > other.n_nodes:
            return None
        return shift

    def scaled(self, factor: float, center: float = 0.0) -> "SpaceGrid":
        return SpaceGrid(
            center + (self.x_min - center) * factor,
            center + (self.x_max - center) * factor,
            self.h * factor,
        )


def hull(*grids: SpaceGrid) -> SpaceGrid:
    """Smallest grid containing all ``grids``; they must share step and lattice."""
    h = grids[0].h
    x_min = min(g.x_min for g in grids)
    x_max = max(g.x_max for g in grids)
    out = SpaceGrid(x_min, x_min + h * round((x_max - x_min) / h), h)
    for g in grids:
        if g.offset_in(out) is None:
            raise ValueError("grids do not share a lattice")
    return out


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function on the nodes of a :class:`SpaceGrid`.

    Outside the grid the function is taken to be zero.
    """

    grid: SpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != self.grid.n_nodes:
            raise ValueError(
                f"expected {self.grid.n_nodes} values, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: SpaceGrid, func) -> "SampledFunction":
        return cls(grid, func(grid.nodes))

    @classmethod
    def zeros(cls, grid: SpaceGrid) -> "SampledFunction":
        return cls(grid, np.zeros(grid.n_nodes))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def embed(self, grid: SpaceGrid) -> "SampledFunction":
        """Zero-pad onto a larger grid sharing this grid's lattice."""
        offset = self.grid.offset_in(grid)
        if offset is None:
            raise ValueError("target grid does not contain this grid on a shared lattice")
        values = np.zeros(grid.n_nodes)
        values[offset:offset + self.values.size] = self.values
        return SampledFunction(grid, values)

    def integral(self) -> float:
        """Composite trapezoid rule over the grid."""
        return float(np.sum(self.grid.trapezoid_weights() * self.values))

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        if other.grid != self.grid:
            raise ValueError("grids differ")
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        if other.grid != self.grid:
            raise ValueError("grids differ")
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values)

    __rmul__ = __mul__
