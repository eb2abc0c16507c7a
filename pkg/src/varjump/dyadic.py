"""Dyadic cubes, conditional expectations, Calderon-Zygmund decomposition,
the square function and long oscillations over dyadic scales.

Sampled functions are read as step functions: node ``x_i`` carries the cell
``(x_i - h, x_i]``, which matches the half-open cubes ``(m 2**j, (m+1) 2**j]``.
Integrals in this module are therefore ``h * sum(values)``; for functions
vanishing at both grid ends this equals the trapezoid rule.  Outside its grid
a function is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import SampledFunction, ScaleGrid, SpaceGrid
from .kernels import build_family, get_kernel
from .pathstats import BlockSequence, Path, _oscillation_columns, dyadic_subpath, oscillation

DEFAULT_LEVELS = range(-10, 11)


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The interval ``(m * 2**level, (m + 1) * 2**level]``."""

    level: int
    index: int

    @property
    def length(self) -> float:
        return math.ldexp(1.0, self.level)

    @property
    def left(self) -> float:
        return self.index * self.length

    @property
    def right(self) -> float:
        return (self.index + 1) * self.length

    def contains(self, x) -> np.ndarray | bool:
        return (np.asarray(x) > self.left) & (np.asarray(x) <= self.right)

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level + 1, self.index // 2)

    def children(self) -> tuple["DyadicCube", "DyadicCube"]:
        return DyadicCube(self.level - 1, 2 * self.index), DyadicCube(self.level - 1, 2 * self.index + 1)


def cell_integral(f: SampledFunction) -> float:
    return float(f.grid.h * np.sum(f.values))


def _lattice(grid: SpaceGrid) -> int:
    m0 = grid.lattice_index()
    if m0 is None:
        raise ValueError(
            f"grid start x_min={grid.x_min} is not a multiple of h={grid.h}; "
            "dyadic operations need nodes on the lattice h*Z"
        )
    return m0


def _cube_size(grid: SpaceGrid, j: int) -> int:
    ratio = math.ldexp(1.0, j) / grid.h
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise ValueError(
            f"grid step h={grid.h} must divide the cube length 2**{j}={math.ldexp(1.0, j)}"
        )
    return int(k)


def _cube_ids(grid: SpaceGrid, j: int) -> tuple[np.ndarray, int]:
    m0 = _lattice(grid)
    size = _cube_size(grid, j)
    n = m0 + np.arange(grid.n_nodes)
    # node n*h lies in cube floor((n - 1) / size) because cubes are right-closed
    return (n - 1) // size, size


def conditional_expectation(f: SampledFunction, j: int) -> SampledFunction:
    """Average of ``f`` over each level-``j`` dyadic cube, as a step function."""
    ids, size = _cube_ids(f.grid, j)
    first = ids[0]
    sums = np.bincount(ids - first, weights=f.values)
    return SampledFunction(f.grid, sums[ids - first] / size)


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    """``f = good + sum(bad)`` at height ``alpha``."""

    good: SampledFunction
    bad_parts: list = field(repr=False)
    height: float
    source: SampledFunction = field(repr=False)

    @property
    def cubes(self) -> list[DyadicCube]:
        return [cube for cube, _ in self.bad_parts]

    def bad_on_grid(self) -> np.ndarray:
        """Sum of the bad parts restricted to the nodes of ``f``'s grid."""
        total = np.zeros(self.source.grid.n_nodes)
        xs = self.source.grid.nodes
        h = self.source.grid.h
        for _, part in self.bad_parts:
            start = int(round((part.grid.x_min - xs[0]) / h))
            lo, hi = max(start, 0), min(start + part.grid.n_nodes, xs.size)
            if lo < hi:
                total[lo:hi] += part.values[lo - start:hi - start]
        return total

    def check(self) -> dict:
        """Measured quantities for the four decomposition invariants."""
        f = self.source
        alpha = self.height
        recon = float(np.max(np.abs(f.values - self.good.values - self.bad_on_grid()), initial=0.0))
        sup_good = float(np.max(np.abs(self.good.values), initial=0.0))
        support_leak = 0.0
        mean_ratio = 0.0
        for cube, part in self.bad_parts:
            outside = ~cube.contains(part.grid.nodes)
            support_leak = max(support_leak, float(np.max(np.abs(part.values[outside]), initial=0.0)))
            mean_ratio = max(mean_ratio, abs(cell_integral(part)) / cube.length)
        total_measure = float(sum(c.length for c in self.cubes))
        l1 = float(f.grid.h * np.sum(np.abs(f.values)))
        return {
            "reconstruction_error": recon,
            "reconstruction_ok": recon <= 1e-10,
            "sup_good": sup_good,
            "sup_good_ok": sup_good <= 2.0 * alpha * (1 + 1e-12),
            "bad_support_leak": support_leak,
            "bad_mean_ratio": mean_ratio,
            "bad_parts_ok": support_leak == 0.0 and mean_ratio <= 1e-8,
            "cube_measure": total_measure,
            "cube_measure_bound": l1 / alpha,
            "cube_measure_ok": total_measure <= l1 / alpha * (1 + 1e-12),
        }


def cz_decompose(f: SampledFunction, alpha: float) -> CZDecomposition:
    """Calderon-Zygmund decomposition by dyadic stopping time.

    Start from the level-J cubes around the support of ``f``, with J the
    smallest level whose cubes all have ``avg|f| <= alpha`` (the root is
    enlarged as needed).  Descend to the grid resolution and keep the maximal
    cubes with ``avg|f| > alpha``.  The grid step must be a power of two so
    the finest cubes are single cells.
    """
    if not alpha > 0:
        raise ValueError(f"height alpha must be positive, got {alpha}")
    grid = f.grid
    mantissa, exponent = math.frexp(grid.h)
    if mantissa != 0.5:
        raise ValueError(f"Calderon-Zygmund decomposition needs h = 2**j, got h={grid.h}")
    j0 = exponent - 1
    m0 = _lattice(grid)
    n_nodes = grid.n_nodes
    absf = np.abs(f.values)
    prefix = np.concatenate([[0.0], np.cumsum(absf)])
    plain = np.concatenate([[0.0], np.cumsum(f.values)])

    def cube_sum(table, level, idx):
        size = 1 << (level - j0)
        # lattice nodes in (idx*size, (idx+1)*size] -> array positions
        lo = np.clip(idx * size + 1 - m0, 0, n_nodes)
        hi = np.clip((idx + 1) * size + 1 - m0, 0, n_nodes)
        return table[hi] - table[lo]

    support = np.flatnonzero(absf > 0)
    good = f.values.copy()
    parts = []
    if support.size:
        n_lo, n_hi = m0 + support[0], m0 + support[-1]
        level = j0
        while True:
            size = 1 << (level - j0)
            ids = np.arange((n_lo - 1) // size, (n_hi - 1) // size + 1)
            avg = cube_sum(prefix, level, ids) / size
            if ids.size <= 2 and np.all(avg <= alpha):
                break
            level += 1
        active = ids[cube_sum(prefix, level, ids) > 0]
        selected = []
        while level > j0 and active.size:
            level -= 1
            kids = np.concatenate([2 * active, 2 * active + 1])
            kids.sort()
            size = 1 << (level - j0)
            mass = cube_sum(prefix, level, kids)
            hit = mass / size > alpha
            selected.extend((level, int(i)) for i in kids[hit])
            active = kids[~hit & (mass > 0)]
        for level, idx in sorted(selected):
            cube = DyadicCube(level, idx)
            size = 1 << (level - j0)
            avg = float(cube_sum(plain, level, np.array([idx]))[0]) / size
            lo = idx * size + 1 - m0
            hi = (idx + 1) * size + 1 - m0
            # bad part lives on [left, right]; the left node is outside the cube
            local = np.zeros(size + 1)
            a, b = max(lo, 0), min(hi, n_nodes)
            local[1 + a - lo:1 + b - lo] = f.values[a:b]
            local[1:] -= avg
            part_grid = SpaceGrid(cube.left, cube.right, grid.h)
            parts.append((cube, SampledFunction(part_grid, local)))
            good[a:b] = avg
    return CZDecomposition(SampledFunction(grid, good), parts, float(alpha), f)


def _levels(levels) -> list[int]:
    levels = sorted({int(k) for k in levels})
    if not levels:
        raise ValueError("need at least one level")
    return levels


def square_function(f: SampledFunction, kernel, levels=DEFAULT_LEVELS,
                    method: str = "auto") -> SampledFunction:
    """``(sum_k |phi_{2^k} * f - E_k f|**2)**0.5`` at the nodes of ``f``."""
    kernel = get_kernel(kernel)
    ks = _levels(levels)
    scales = ScaleGrid(np.ldexp(1.0, np.array(ks[::-1])))
    fam = build_family(f, kernel, scales, f.grid, method=method)
    total = np.zeros(f.grid.n_nodes)
    for row, k in zip(fam.values, ks[::-1]):
        total += (row - conditional_expectation(f, k).values) ** 2
    return SampledFunction(f.grid, np.sqrt(total))


def snap_blocks(blocks: BlockSequence) -> BlockSequence:
    """Replace each boundary ``t_i`` by ``2**k_i`` with ``k_i`` the least integer having ``2**k_i >= t_i``."""
    mantissa, exponent = np.frexp(blocks.boundaries)
    k = np.where(mantissa == 0.5, exponent - 1, exponent)
    k = np.unique(k)[::-1]
    return BlockSequence(np.ldexp(1.0, k))


def long_oscillation(path, blocks: BlockSequence) -> float:
    """Oscillation of the dyadic subpath over the snapped blocks."""
    if not isinstance(blocks, BlockSequence):
        blocks = BlockSequence(blocks)
    sub = dyadic_subpath(path)
    snapped = snap_blocks(blocks)
    if len(snapped) < 2:
        return 0.0
    return oscillation(sub, snapped)


def martingale_family(f: SampledFunction, levels=DEFAULT_LEVELS) -> tuple[ScaleGrid, np.ndarray]:
    """Scales ``2**k`` (decreasing) and the matrix of ``E_k f`` at every node."""
    ks = _levels(levels)[::-1]
    values = np.vstack([conditional_expectation(f, k).values for k in ks])
    return ScaleGrid(np.ldexp(1.0, np.array(ks))), values


def martingale_long_oscillation(f: SampledFunction, blocks: BlockSequence,
                                levels=DEFAULT_LEVELS) -> SampledFunction:
    """Pointwise long oscillation of ``k -> E_k f(x)``."""
    if not isinstance(blocks, BlockSequence):
        blocks = BlockSequence(blocks)
    scales, values = martingale_family(f, levels)
    snapped = snap_blocks(blocks)
    if len(snapped) < 2:
        return SampledFunction.zeros(f.grid)
    return SampledFunction(f.grid, _oscillation_columns(scales.scales, values, snapped))

