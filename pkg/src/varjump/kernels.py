"""Approximate-identity kernels, dilation, and quadrature convolution.

The family ``{phi_t * f}`` is evaluated on a :class:`ScaleGrid` times a
:class:`SpaceGrid` and stored as a :class:`SampledFamily`.  Convolutions use
the composite trapezoid rule on the grid of ``f``; an FFT evaluation of the
same discrete sum is available when the output nodes sit on the input lattice.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, signal

from .grids import SampledFunction, ScaleGrid, SpaceGrid

# a kernel dilated below this many grid steps is flagged as undersampled
UNDERSAMPLING_RATIO = 4.0

# row chunk for the direct trapezoid path (bounds the temporary matrix)
_CHUNK_ELEMENTS = 4_000_000


class UndersampledKernelWarning(UserWarning):
    """The dilated kernel is narrower than the quadrature grid resolves."""


@dataclass(frozen=True)
class Kernel:
    name: str
    profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    integral: float = 1.0
    decay_note: str = ""
    # profile is negligible (or zero) outside [-half_width, half_width]
    half_width: float = 12.0

    def __call__(self, x):
        return self.profile(np.asarray(x, dtype=float))


def _gauss_profile(x):
    return np.exp(-x * x) / math.sqrt(math.pi)


def _bump_shape(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


# symmetric, so integrate one half; the full interval trips quad's roundoff check
_BUMP_MASS = 2.0 * integrate.quad(lambda s: math.exp(-1.0 / (1.0 - s * s)), 0.0, 1.0,
                                  epsabs=1e-14, epsrel=1e-13)[0]


def _bump_profile(x):
    return _bump_shape(x) / _BUMP_MASS


GAUSS = Kernel(
    name="gauss",
    profile=_gauss_profile,
    integral=1.0,
    decay_note="pi^{-1/2} exp(-x^2); Schwartz, tail mass beyond |x|=12 below 1e-60",
    half_width=12.0,
)

BUMP = Kernel(
    name="bump",
    profile=_bump_profile,
    integral=1.0,
    decay_note="c exp(-1/(1-x^2)) on (-1, 1); smooth, compactly supported",
    half_width=1.0,
)

KERNELS = {k.name: k for k in (GAUSS, BUMP)}


def get_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    try:
        return KERNELS[kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}") from None


def _check_dimension(n: int) -> None:
    if n != 1:
        raise NotImplementedError(f"dimension n={n} is unimplemented; only n=1 is supported")


def dilated_eval(kernel, t: float, x, n: int = 1):
    """Evaluate ``phi_t(x) = t**-n * phi(x / t)``."""
    _check_dimension(n)
    if not t > 0:
        raise ValueError(f"scale t must be positive, got {t}")
    kernel = get_kernel(kernel)
    out = kernel(np.asarray(x, dtype=float) / t) / t
    return float(out) if np.ndim(out) == 0 else out


def is_undersampled(t: float, h: float) -> bool:
    return t < UNDERSAMPLING_RATIO * h


def _warn_undersampled(t: float, h: float) -> None:
    warnings.warn(
        f"kernel at scale t={t:g} is undersampled by grid step h={h:g}",
        UndersampledKernelWarning,
        stacklevel=3,
    )


def _trapezoid_rows(f: SampledFunction, kernel: Kernel, t: float, xs: np.ndarray) -> np.ndarray:
    wf = f.grid.trapezoid_weights() * f.values
    y = f.grid.nodes
    out = np.empty(xs.size)
    step = max(1, _CHUNK_ELEMENTS // y.size)
    for start in range(0, xs.size, step):
        xc = xs[start:start + step]
        k = kernel((xc[:, None] - y[None, :]) / t) / t
        out[start:start + step] = np.sum(k * wf, axis=1)
    return out


def _fft_row(f: SampledFunction, kernel: Kernel, t: float, space: SpaceGrid, offset: int) -> np.ndarray:
    # same discrete sum as the trapezoid rule, evaluated as a linear convolution
    wf = f.grid.trapezoid_weights() * f.values
    n_in = wf.size
    d_min = offset - (n_in - 1)
    d_max = offset + space.n_nodes - 1
    d = np.arange(d_min, d_max + 1)
    ker = kernel(d * f.grid.h / t) / t
    full = signal.fftconvolve(wf, ker, mode="full")
    start = offset - d_min
    return full[start:start + space.n_nodes]


def convolve_at(f: SampledFunction, kernel, t: float, x: float) -> float:
    """Trapezoid quadrature of ``y -> phi_t(x - y) f(y)`` over the grid of ``f``."""
    if not t > 0:
        raise ValueError(f"scale t must be positive, got {t}")
    if not f.grid.contains(x):
        raise ValueError(f"x={x} lies outside the grid span [{f.grid.x_min}, {f.grid.x_max}]")
    kernel = get_kernel(kernel)
    if is_undersampled(t, f.grid.h):
        _warn_undersampled(t, f.grid.h)
    return float(_trapezoid_rows(f, kernel, t, np.array([float(x)]))[0])


@dataclass(frozen=True, eq=False)
class SampledFamily:
    """Values ``F_t(x) = (phi_t * f)(x)`` indexed by (scale, node)."""

    scale_grid: ScaleGrid
    space_grid: SpaceGrid
    values: np.ndarray = field(repr=False)
    undersampled: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        shape = (len(self.scale_grid), self.space_grid.n_nodes)
        if values.shape != shape:
            raise ValueError(f"values shape {values.shape} does not match grids {shape}")
        flags = self.undersampled
        if flags is None:
            flags = np.zeros(shape[0], dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "undersampled", np.asarray(flags, dtype=bool))

    @property
    def scales(self) -> np.ndarray:
        return self.scale_grid.scales

    def path_values(self, i: int) -> np.ndarray:
        """Column ``t -> F_t(x_i)`` (scales decreasing)."""
        return self.values[:, i]

    def __add__(self, other: "SampledFamily") -> "SampledFamily":
        if not (np.array_equal(self.scales, other.scales) and self.space_grid == other.space_grid):
            raise ValueError("families live on different grids")
        return SampledFamily(self.scale_grid, self.space_grid, self.values + other.values,
                             self.undersampled | other.undersampled)

    def __mul__(self, c: float) -> "SampledFamily":
        return SampledFamily(self.scale_grid, self.space_grid, c * self.values, self.undersampled)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        """Long format ``t,x,value`` with 17 significant digits."""
        with open(path, "w") as fh:
            fh.write("t,x,value\n")
            xs = self.space_grid.nodes
            for j, t in enumerate(self.scales):
                for x, v in zip(xs, self.values[j]):
                    fh.write(f"{t:.17g},{x:.17g},{v:.17g}\n")


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("VARJUMP_THREADS", "1")))
    except ValueError:
        return 1


def build_family(
    f: SampledFunction,
    kernel,
    scales: ScaleGrid,
    space: SpaceGrid,
    method: str = "trapezoid",
    threads: int | None = None,
) -> SampledFamily:
    """Evaluate ``phi_t * f`` at every (scale, node) pair.

    ``method="fft"`` evaluates the identical trapezoid sum by FFT; it requires
    ``space`` to share the lattice of ``f.grid``.  ``"auto"`` picks FFT when
    possible.  Rows are independent, so the result does not depend on the
    number of worker threads.
    """
    kernel = get_kernel(kernel)
    if not isinstance(scales, ScaleGrid):
        scales = ScaleGrid(scales)
    if not (f.grid.contains(space.x_min) and f.grid.contains(space.x_max)):
        raise ValueError("space grid must lie within the span of f's grid")
    offset = space.offset_in(f.grid)
    if method == "auto":
        method = "fft" if offset is not None else "trapezoid"
    if method == "fft" and offset is None:
        raise ValueError("fft method needs the space grid on the lattice of f's grid")
    if method not in ("fft", "trapezoid"):
        raise ValueError(f"unknown method {method!r}")

    xs = space.nodes
    flags = np.array([is_undersampled(t, f.grid.h) for t in scales.scales])
    if flags.any():
        _warn_undersampled(float(scales.scales[flags].max()), f.grid.h)

    def row(t):
        if method == "fft":
            return _fft_row(f, kernel, t, space, offset)
        return _trapezoid_rows(f, kernel, t, xs)

    threads = default_threads() if threads is None else max(1, int(threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, scales.scales))
    else:
        rows = [row(t) for t in scales.scales]
    return SampledFamily(scales, space, np.vstack(rows), flags)


def kernel_centered_difference_variation(kernel, x: float, y: float, x0: float,
                                         scales: ScaleGrid) -> float:
    """v_1 norm of ``t -> phi_t(x - y) - phi_t(x - x0)`` over the sampled scales."""
    from .pathstats import Path, variation_norm

    if not isinstance(scales, ScaleGrid):
        scales = ScaleGrid(scales)
    t = scales.scales
    vals = dilated_eval(kernel, 1.0, (x - y) / t) / t - dilated_eval(kernel, 1.0, (x - x0) / t) / t
    return variation_norm(Path(scales, vals), 1.0)
