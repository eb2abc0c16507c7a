"""(p, q)-atoms, finite atomic sums, and L^p / atomic quasi-norms (n = 1)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev

from .grids import SampledFunction, ScaleGrid, SpaceGrid, hull
from .kernels import SampledFamily, build_family

CANCELLATION_TOL = 1e-8
# float slack on the size condition, so an atom saturating it still passes
SIZE_RTOL = 1e-12


def _check_p(p: float) -> None:
    if not (0.5 < p <= 1.0):
        raise ValueError(f"p must lie in (1/2, 1], got {p}")


@dataclass(frozen=True, eq=False)
class Atom:
    """Candidate (p, q)-atom centred at ``center`` with support radius ``radius``.

    Construction checks the parameters only; use :func:`validate_atom` for
    the support, size and cancellation conditions.
    """

    p: float
    q: float
    center: float
    radius: float
    profile: SampledFunction = field(repr=False)

    def __post_init__(self):
        _check_p(self.p)
        if not self.q >= 1 or self.q == self.p:
            raise ValueError(f"q must satisfy q >= 1 and q != p, got q={self.q}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def ball_measure(self) -> float:
        return 2.0 * self.radius

    def size_bound(self) -> float:
        inv_q = 0.0 if math.isinf(self.q) else 1.0 / self.q
        return self.ball_measure ** (inv_q - 1.0 / self.p)

    def dilate(self, factor: float) -> "Atom":
        """``a(x) -> factor**(-1/p) a(x / factor)`` with the grid scaled alike."""
        grid = self.profile.grid.scaled(factor)
        values = factor ** (-1.0 / self.p) * self.profile.values
        return Atom(self.p, self.q, self.center * factor, self.radius * factor,
                    SampledFunction(grid, values))


@dataclass(frozen=True)
class AtomReport:
    support_ok: bool
    support_leak: float
    size_ok: bool
    size_norm: float
    size_bound: float
    cancellation_ok: bool
    integral: float
    cancellation_bound: float

    @property
    def passed(self) -> bool:
        return self.support_ok and self.size_ok and self.cancellation_ok

    @property
    def size_ratio(self) -> float:
        return self.size_norm / self.size_bound

    @property
    def cancellation_ratio(self) -> float:
        return abs(self.integral) / self.cancellation_bound * CANCELLATION_TOL


def _lq_norm(f: SampledFunction, q: float) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(f.values)))
    w = f.grid.trapezoid_weights()
    return float(np.sum(w * np.abs(f.values) ** q) ** (1.0 / q))


def validate_atom(candidate: Atom) -> AtomReport:
    """Check the three atom conditions by quadrature; failures are reported, not raised."""
    a = candidate.profile
    dist = np.abs(a.nodes - candidate.center)
    outside = dist > candidate.radius * (1 + 1e-12)
    leak = float(np.max(np.abs(a.values[outside]), initial=0.0))
    norm = _lq_norm(a, candidate.q)
    bound = candidate.size_bound()
    integral = a.integral()
    cancel = CANCELLATION_TOL * candidate.ball_measure ** (1.0 - 1.0 / candidate.p)
    return AtomReport(
        support_ok=leak == 0.0,
        support_leak=leak,
        size_ok=norm <= bound * (1 + SIZE_RTOL),
        size_norm=norm,
        size_bound=bound,
        cancellation_ok=abs(integral) <= cancel,
        integral=integral,
        cancellation_bound=cancel,
    )


def _window(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def random_atom(p: float, q: float, x0: float, r: float, seed: int,
                nodes_per_radius: int = 128, degree: int = 7) -> Atom:
    """Random smooth, odd-symmetric atom on ``[x0 - r, x0 + r]`` using 90% of the size bound."""
    _check_p(p)
    if q not in (2, 2.0) and not math.isinf(q):
        raise ValueError(f"random atoms are generated for q in {{2, inf}}, got {q}")
    if not r > 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    grid = SpaceGrid(x0 - r, x0 + r, r / nodes_per_radius)
    u = np.linspace(-1.0, 1.0, grid.n_nodes)
    w = _window(u)
    while True:
        coef = rng.standard_normal(degree + 1)
        g = chebyshev.chebval(u, coef)
        shape = 0.5 * (g - g[::-1]) * w
        if np.max(np.abs(shape)) > 1e-8:
            break
    shape = SampledFunction(grid, shape)
    # remove residual mean with the window so support and smoothness survive
    win = SampledFunction(grid, w)
    shape = shape - (shape.integral() / win.integral()) * win
    atom = Atom(p, q, x0, r, shape)
    scale = 0.9 * atom.size_bound() / _lq_norm(shape, q)
    return Atom(p, q, x0, r, scale * shape)


def sign_atom(p: float, q: float, x0: float, r: float, nodes_per_radius: int = 128) -> Atom:
    """``(2r)**(-1/p) * sign(x - x0)`` on the open ball: saturates the sup-norm size bound."""
    grid = SpaceGrid(x0 - r, x0 + r, r / nodes_per_radius)
    x = grid.nodes
    inside = np.abs(x - x0) < r * (1 - 1e-12)
    values = np.where(inside, (2 * r) ** (-1.0 / p) * np.sign(x - x0), 0.0)
    return Atom(p, q, x0, r, SampledFunction(grid, values))


def lp_quasinorm(f: SampledFunction, p: float) -> float:
    """``(integral |f|**p)**(1/p)`` by the trapezoid rule; a quasi-norm for p < 1."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    w = f.grid.trapezoid_weights()
    return float(np.sum(w * np.abs(f.values) ** p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class AtomicFunction:
    """Finite sum ``sum_k coef_k * atom_k``."""

    terms: list

    def __post_init__(self):
        terms = [(float(c), a) for c, a in self.terms]
        if not terms:
            raise ValueError("atomic function needs at least one term")
        ps = {a.p for _, a in terms}
        if len(ps) != 1:
            raise ValueError("all atoms must share the same p")
        object.__setattr__(self, "terms", terms)

    @property
    def p(self) -> float:
        return self.terms[0][1].p

    def grid(self) -> SpaceGrid:
        return hull(*(a.profile.grid for _, a in self.terms))

    def to_sampled(self, grid: SpaceGrid | None = None) -> SampledFunction:
        grid = grid or self.grid()
        total = np.zeros(grid.n_nodes)
        for c, a in self.terms:
            total += c * a.profile.embed(grid).values
        return SampledFunction(grid, total)


def hp_surrogate_quasinorm(f: AtomicFunction) -> float:
    """``(sum_k |coef_k|**p)**(1/p)``, the atomic quasi-norm used to normalise experiments."""
    if not isinstance(f, AtomicFunction):
        f = AtomicFunction(f)
    p = f.p
    return float(sum(abs(c) ** p for c, _ in f.terms) ** (1.0 / p))


def atomic_family(f: AtomicFunction, kernel, scales: ScaleGrid, space: SpaceGrid,
                  method: str = "auto") -> SampledFamily:
    """Family of ``phi_t * f`` built atom by atom and summed."""
    family = None
    for c, a in f.terms:
        grid = hull(space, a.profile.grid)
        fam = c * build_family(a.profile.embed(grid), kernel, scales, space, method=method)
        family = fam if family is None else family + fam
    return family


def maximal_function_field(f, kernel, scales: ScaleGrid, space: SpaceGrid,
                           method: str = "auto") -> SampledFunction:
    """``sup_t |phi_t * f|`` over the sampled scales, at every node of ``space``."""
    if isinstance(f, AtomicFunction):
        family = atomic_family(f, kernel, scales, space, method=method)
    else:
        family = build_family(f, kernel, scales, space, method=method)
    return SampledFunction(space, np.max(np.abs(family.values), axis=0))


_ATOM_FIELDS = ["center", "radius", "p", "q", "x", "value"]


def write_atom_csv(atom: Atom, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_ATOM_FIELDS)
        head = [f"{atom.center:.17g}", f"{atom.radius:.17g}", f"{atom.p:.17g}", f"{atom.q:.17g}"]
        for x, v in zip(atom.profile.nodes, atom.profile.values):
            writer.writerow(head + [f"{x:.17g}", f"{v:.17g}"])


def read_atom_csv(path) -> Atom:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) < 2:
        raise ValueError("atom CSV needs at least two nodes")
    first = rows[0]
    x = np.array([float(r["x"]) for r in rows])
    values = np.array([float(r["value"]) for r in rows])
    h = (x[-1] - x[0]) / (x.size - 1)
    grid = SpaceGrid(x[0], x[-1], h)
    return Atom(float(first["p"]), float(first["q"]), float(first["center"]),
                float(first["radius"]), SampledFunction(grid, values))
