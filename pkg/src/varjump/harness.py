"""Verification checks shared by the CLI (``verify-gaussian``, ``selftest``) and the test-suite.

Each check returns a :class:`CheckResult` with the measured quantities, so a
failing run says by how much it failed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .dyadic import cz_decompose
from .grids import SampledFunction, ScaleGrid, SpaceGrid
from .hardy import Atom, random_atom
from .kernels import GAUSS, build_family, kernel_centered_difference_variation
from .pathstats import (
    BlockSequence,
    Path,
    _jump_columns,
    _oscillation_columns,
    _variation_power,
    dyadic_block_index,
    dyadic_jump_count,
    jump_count,
    maximal_value,
    oscillation,
    short_variation_s2,
    variation_norm,
)

DEFAULT_T_MIN = 2.0 ** -10
DEFAULT_T_MAX = 2.0 ** 10
DEFAULT_PER_OCTAVE = 64
DEFAULT_BLOCKS = 200
JUMP_REDUCTION_CEILING = 50.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.name}: {shown}"

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "seconds": round(self.seconds, 3), **{k: _jsonable(v) for k, v in self.measured.items()}}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _timed(func):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def default_scales() -> ScaleGrid:
    return ScaleGrid.geometric(DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_PER_OCTAVE)


def default_lambda_grid(num: int = 40, lo: float = 0.05, hi: float = 2.0) -> np.ndarray:
    return np.geomspace(lo, hi, num)


def gaussian_test_function(x_min=-12.0, x_max=12.0, h=0.005) -> SampledFunction:
    return SampledFunction.from_callable(SpaceGrid(x_min, x_max, h), lambda x: np.exp(-x * x))


# 1 -------------------------------------------------------------------------

@_timed
def check_gaussian_closed_form(tol: float = 1e-6, max_seconds: float = 60.0) -> CheckResult:
    """Trapezoid convolution against the closed form on t in [0.1, 10] x x in [-3, 3]."""
    f = gaussian_test_function()
    scales = ScaleGrid.geometric(0.1, 10.0, 64)
    space = SpaceGrid(-3.0, 3.0, 0.05)
    start = time.perf_counter()
    fam = build_family(f, GAUSS, scales, space, method="trapezoid", threads=1)
    elapsed = time.perf_counter() - start
    exact = oracles.gaussian_family(scales.scales[:, None], space.nodes[None, :])
    err = float(np.max(np.abs(fam.values - exact)))
    return CheckResult("1 gaussian closed form", err <= tol and elapsed < max_seconds,
                       {"max_error": err, "tol": tol, "n_scales": len(scales),
                        "build_seconds": elapsed})


# 2 -------------------------------------------------------------------------

@_timed
def check_maximal_formula(tol: float = 1e-3) -> CheckResult:
    """Sampled sup over 2000 log-spaced scales in [1e-3, 1e3] vs the piecewise maximal function."""
    t = np.geomspace(1e-3, 1e3, 2000)
    x = np.linspace(-6.0, 6.0, 1201)
    sup = np.max(oracles.gaussian_family(t[:, None], x[None, :]), axis=0)
    err = float(np.max(np.abs(sup - oracles.gaussian_maximal(x))))
    return CheckResult("2 maximal piecewise formula", err <= tol, {"max_error": err, "tol": tol})


# 3, 4 ----------------------------------------------------------------------

def random_path_corpus(n: int = 1000, seed: int = 0, min_len: int = 2, max_len: int = 12):
    rng = np.random.default_rng(seed)
    return [rng.uniform(-1.0, 1.0, rng.integers(min_len, max_len + 1)) for _ in range(n)]


@_timed
def check_variation_vs_bruteforce(rtol: float = 1e-12, max_seconds: float = 10.0) -> CheckResult:
    corpus = random_path_corpus()
    worst = 0.0
    for v in corpus:
        for rho in (1.0, 2.0, 2.5, 3.0):
            dp = variation_norm(v, rho)
            bf = oracles.variation_bruteforce(v, rho)
            worst = max(worst, abs(dp - bf) / max(abs(bf), 1e-300))
    result = CheckResult("3 DP variation == brute force", worst <= rtol,
                         {"max_rel_diff": worst, "rtol": rtol, "paths": len(corpus)})
    return result


@_timed
def check_jump_vs_bruteforce() -> CheckResult:
    corpus = random_path_corpus()
    mismatches = 0
    for v in corpus:
        for lam in (0.1, 0.5, 1.0):
            mismatches += jump_count(v, lam) != oracles.jump_bruteforce(v, lam)
    return CheckResult("4 greedy jump == brute force", mismatches == 0,
                       {"mismatches": mismatches, "paths": len(corpus)})


# 5 -------------------------------------------------------------------------

@_timed
def check_contraction(n: int = 10_000, seed: int = 5, rtol: float = 1e-12) -> CheckResult:
    """lam * N_lam**(1/rho) <= v_rho on random triples."""
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(n):
        v = rng.normal(size=rng.integers(2, 40)) * rng.uniform(0.1, 3.0)
        lam = float(rng.uniform(0.01, 2.0))
        rho = float(rng.uniform(1.0, 4.0))
        lhs = lam * jump_count(v, lam) ** (1.0 / rho)
        rhs = variation_norm(v, rho)
        worst = max(worst, lhs - rhs)
        violations += lhs > rhs * (1 + rtol)
    return CheckResult("5 contraction lam*N^(1/rho) <= v_rho", violations == 0,
                       {"violations": violations, "triples": n, "max_excess": worst})


# 6 -------------------------------------------------------------------------

def _random_scaled_path(rng, dyadic: bool = False) -> Path:
    m = int(rng.integers(3, 30))
    scales = np.exp(rng.uniform(-4.0, 4.0, m))
    if dyadic:
        scales = np.concatenate([scales, np.ldexp(1.0, np.arange(-5, 6))])
    scales = np.unique(scales)[::-1]
    return Path(ScaleGrid(scales), rng.normal(size=scales.size))


def _random_blocks(rng) -> BlockSequence:
    b = np.unique(np.exp(rng.uniform(-4.5, 4.5, int(rng.integers(2, 10)))))[::-1]
    return BlockSequence(b)


@_timed
def check_pointwise_suite(n: int = 1000, seed: int = 6, rtol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    counts = dict.fromkeys(
        ["rho_monotone", "osc_le_v2", "maximal_bound", "dyadic_jump_le_jump", "refinement"], 0)
    for _ in range(n):
        path = _random_scaled_path(rng, dyadic=True)
        r1, r2 = sorted(rng.uniform(1.0, 5.0, 2))
        if variation_norm(path, r2) > variation_norm(path, r1) * (1 + rtol):
            counts["rho_monotone"] += 1

        blocks = _random_blocks(rng)
        if oscillation(path, blocks) > variation_norm(path, 2.0) * (1 + rtol):
            counts["osc_le_v2"] += 1

        rho = float(rng.uniform(1.0, 4.0))
        v = variation_norm(path, rho)
        if np.any(maximal_value(path) > (np.abs(path.values) + v) * (1 + rtol)):
            counts["maximal_bound"] += 1

        lam = float(rng.uniform(0.05, 2.0))
        if dyadic_jump_count(path, lam) > jump_count(path, lam):
            counts["dyadic_jump_le_jump"] += 1

        keep = rng.random(len(path)) < 0.5
        keep[rng.integers(len(path))] = True
        sub = path.restrict(keep)
        coarse = (variation_norm(sub, rho), jump_count(sub, lam), maximal_value(sub),
                  oscillation(sub, blocks))
        fine = (v, jump_count(path, lam), maximal_value(path), oscillation(path, blocks))
        if any(c > f_ * (1 + rtol) + 1e-15 for c, f_ in zip(coarse, fine)):
            counts["refinement"] += 1
    total = sum(counts.values())
    return CheckResult("6 pointwise inequality suite", total == 0,
                       {**{f"violations_{k}": c for k, c in counts.items()}, "instances": n})


# 7 -------------------------------------------------------------------------

def gaussian_scan_columns(x: np.ndarray, scales: ScaleGrid, blocks: BlockSequence,
                          lambdas: np.ndarray, chunk: int = 2048) -> dict[str, np.ndarray]:
    """Maximal function, oscillation and jump counts of the closed-form family at each x."""
    t = scales.scales
    out = {"maximal": np.empty(x.size), "osc": np.empty(x.size),
           "jumps": np.empty((lambdas.size, x.size), dtype=np.int64)}
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk]
        fam = oracles.gaussian_family(t[:, None], xs[None, :])
        sl = slice(start, start + xs.size)
        out["maximal"][sl] = np.max(np.abs(fam), axis=0)
        out["osc"][sl] = _oscillation_columns(t, fam, blocks)
        for i, lam in enumerate(lambdas):
            out["jumps"][i, sl] = _jump_columns(fam, float(lam))
    return out


def _trapz(values: np.ndarray, h: float) -> float:
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])))


def counterexample_scan(r_sweep=(10.0, 20.0, 40.0, 80.0), p: float = 1.0, rho: float = 2.0,
                        h: float = 0.005, lambdas=None, n_blocks: int = DEFAULT_BLOCKS,
                        scales: ScaleGrid | None = None) -> dict:
    """L^p norms on [-R, R] of M f, O f and sup_lam lam*N_lam^(1/rho) for the Gaussian case."""
    lambdas = default_lambda_grid() if lambdas is None else np.asarray(lambdas, dtype=float)
    blocks = BlockSequence.reciprocals(n_blocks)
    scales = (scales or default_scales()).union(blocks.boundaries)
    r_max = max(r_sweep)
    x = SpaceGrid(-r_max, r_max, h).nodes
    cols = gaussian_scan_columns(x, scales, blocks, lambdas)
    rows = []
    for r in r_sweep:
        sel = np.abs(x) <= r * (1 + 1e-12)
        norm = lambda v: _trapz(np.abs(v[sel]) ** p, h) ** (1.0 / p)
        jump_norms = [norm(lam * cols["jumps"][i] ** (1.0 / rho)) for i, lam in enumerate(lambdas)]
        rows.append({"R": r, "maximal_norm": norm(cols["maximal"]), "osc_norm": norm(cols["osc"]),
                     "jump_norm_sup": max(jump_norms),
                     "jump_norm_argmax_lambda": float(lambdas[int(np.argmax(jump_norms))])})
    big = lambdas >= 1.0
    return {"rows": rows,
            "big_lambda_nonzero": int(np.count_nonzero(cols["jumps"][big])),
            "big_lambda_count": int(big.sum())}


@_timed
def check_counterexample_scan(h: float = 0.005) -> CheckResult:
    scan = counterexample_scan(h=h, lambdas=np.concatenate([default_lambda_grid(), [1.0, 1.5]]))
    rows = scan["rows"]
    m = [r["maximal_norm"] for r in rows]
    o = [r["osc_norm"] for r in rows]
    j = [r["jump_norm_sup"] for r in rows]
    increments = np.diff(m)
    ok = (bool(np.all(increments >= 0.5)) and abs(o[-1] - o[-2]) < 1e-6
          and abs(j[-1] - j[-2]) < 1e-3 and scan["big_lambda_nonzero"] == 0)
    return CheckResult("7 counterexample scan", ok, {
        "maximal_increments": [float(d) for d in increments],
        "osc_change_40_80": abs(o[-1] - o[-2]),
        "jump_change_40_80": abs(j[-1] - j[-2]),
        "jump_nonzero_for_lambda_ge_1": scan["big_lambda_nonzero"],
        "maximal_norms": m, "osc_norms": o, "jump_norms": j,
    })


# 8 -------------------------------------------------------------------------

def atom_family(atom: Atom, span: float = 16.0, t_lo: float = 2.0 ** -5, t_hi: float = 2.0 ** 7,
                per_octave: int = 16):
    """Family of ``Phi * a`` on ``|x - x0| <= span * r`` with grids proportional to ``r``."""
    r, x0, h = atom.radius, atom.center, atom.profile.grid.h
    n_half = int(round(span * r / h))
    space = SpaceGrid(x0 - n_half * h, x0 + n_half * h, h)
    scales = ScaleGrid.geometric(t_lo, t_hi, per_octave).scaled(r)
    return build_family(atom.profile.embed(space), GAUSS, scales, space, method="fft")


def atom_variation_integral(atom: Atom, rho: float = 3.0, **grid) -> float:
    """``integral V_rho(Phi * a)**p dx`` on the proportional grids of :func:`atom_family`."""
    fam = atom_family(atom, **grid)
    v = np.array([_variation_power(fam.values[:, i], rho) for i in range(fam.values.shape[1])])
    return _trapz((v ** (1.0 / rho)) ** atom.p, fam.space_grid.h)


def atom_jump_norm(atom: Atom, lambdas, rho: float = 2.0, **grid) -> tuple[float, float]:
    """``sup_lam ||lam * N_lam**(1/rho)||_{L^p}`` for one atom, with the maximising lambda."""
    fam = atom_family(atom, **grid)
    h = fam.space_grid.h
    norms = [_trapz((lam * _jump_columns(fam.values, float(lam)) ** (1.0 / rho)) ** atom.p, h)
             ** (1.0 / atom.p) for lam in lambdas]
    k = int(np.argmax(norms))
    return float(norms[k]), float(lambdas[k])


@_timed
def check_atom_dilation(p: float = 0.9, rho: float = 3.0, max_ratio: float = 1.10) -> CheckResult:
    base = random_atom(p, 2.0, 0.0, 1.0, seed=0)
    radii = [2.0 ** k for k in range(-3, 4)]
    values = [atom_variation_integral(base.dilate(r), rho) for r in radii]
    ratio = max(values) / min(values)
    return CheckResult("8 atom dilation invariance", ratio <= max_ratio,
                       {"ratio": ratio, "max_ratio": max_ratio, "values": values})


# 9 -------------------------------------------------------------------------

def random_step_function(rng, x_half: float = 8.0, h: float = 2.0 ** -4) -> SampledFunction:
    grid = SpaceGrid(-x_half, x_half, h)
    n = grid.n_nodes
    cuts = np.sort(rng.choice(np.arange(8, n - 8), size=int(rng.integers(2, 12)), replace=False))
    values = np.zeros(n)
    scale = 10.0 ** rng.uniform(-1.0, 1.5)
    for a, b in zip(cuts[:-1], cuts[1:]):
        values[a:b] = rng.normal() * scale * (rng.random() < 0.8)
    return SampledFunction(grid, values)


@_timed
def check_cz_invariants(n: int = 1000, seed: int = 9) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = dict.fromkeys(["reconstruction", "sup_good", "bad_parts", "cube_measure"], 0)
    for _ in range(n):
        f = random_step_function(rng)
        alpha = float(rng.uniform(0.1, 10.0))
        c = cz_decompose(f, alpha).check()
        failures["reconstruction"] += not c["reconstruction_ok"]
        failures["sup_good"] += not c["sup_good_ok"]
        failures["bad_parts"] += not c["bad_parts_ok"]
        failures["cube_measure"] += not c["cube_measure_ok"]
    return CheckResult("9 Calderon-Zygmund invariants", sum(failures.values()) == 0,
                       {**{f"violations_{k}": v for k, v in failures.items()}, "functions": n})


# 10 ------------------------------------------------------------------------

def kernel_decay_slope(y: float = 0.1, xs=None, scales: ScaleGrid | None = None) -> tuple[float, np.ndarray]:
    xs = np.geomspace(8.0, 512.0, 13) if xs is None else np.asarray(xs, dtype=float)
    scales = scales or ScaleGrid.geometric(1e-3, 1e6, 64)
    v1 = np.array([kernel_centered_difference_variation(GAUSS, x, y, 0.0, scales) for x in xs])
    slope = float(np.polyfit(np.log(xs), np.log(v1), 1)[0])
    return slope, v1


@_timed
def check_kernel_decay(lo: float = -2.3, hi: float = -1.8) -> CheckResult:
    slope, v1 = kernel_decay_slope()
    return CheckResult("10 kernel-difference v1 decay slope", lo <= slope <= hi,
                       {"slope": slope, "range": [lo, hi], "v1_at_8": float(v1[0])})


# 11 ------------------------------------------------------------------------

@_timed
def check_oscillation_bound(tol: float = 1e-6, h: float = 0.005) -> CheckResult:
    blocks = BlockSequence.reciprocals(DEFAULT_BLOCKS)
    scales = default_scales().union(blocks.boundaries)
    x = SpaceGrid(-6.0, 6.0, h).nodes
    fam = oracles.gaussian_family(scales.scales[:, None], x[None, :])
    osc = _oscillation_columns(scales.scales, fam, blocks)
    excess = float(np.max(osc - oracles.gaussian_oscillation_bound(x)))
    return CheckResult("11 oscillation bound regression", excess <= tol,
                       {"max_excess": excess, "tol": tol, "osc_at_0": float(osc[x.size // 2])})


# 12 ------------------------------------------------------------------------

def jump_reduction_ratios(x=None, lambdas=None, scales: ScaleGrid | None = None,
                   floor: float = 1e-12) -> np.ndarray:
    """Ratio matrix (lambda, x) on the Gaussian test set; NaN where the denominator is tiny."""
    x = np.linspace(-6.0, 6.0, 241) if x is None else np.asarray(x, dtype=float)
    lambdas = default_lambda_grid() if lambdas is None else np.asarray(lambdas, dtype=float)
    scales = scales or default_scales()
    t = scales.scales
    fam = oracles.gaussian_family(t[:, None], x[None, :])
    j = dyadic_block_index(t)
    edges = np.flatnonzero(np.diff(j)) + 1
    s2 = np.array([math.sqrt(sum(_variation_power(c, 2.0) for c in np.split(fam[:, i], edges)))
                   for i in range(x.size)])
    dmask = scales.dyadic_mask()
    out = np.full((lambdas.size, x.size), np.nan)
    for k, lam in enumerate(lambdas):
        num = lam * np.sqrt(_jump_columns(fam, lam))
        den = s2 + lam * np.sqrt(_jump_columns(fam[dmask], lam / 3.0))
        ok = den > floor
        out[k, ok] = num[ok] / den[ok]
    return out


@_timed
def check_jump_reduction(ceiling: float = JUMP_REDUCTION_CEILING) -> CheckResult:
    ratios = jump_reduction_ratios()
    finite = ratios[~np.isnan(ratios)]
    worst = float(finite.max()) if finite.size else 0.0
    ok = bool(np.all(np.isfinite(finite))) and worst <= ceiling
    return CheckResult("12 jump reduction diagnostic", ok,
                       {"max_ratio": worst, "ceiling": ceiling, "evaluated": int(finite.size)})


ALL_CHECKS = {
    1: check_gaussian_closed_form,
    2: check_maximal_formula,
    3: check_variation_vs_bruteforce,
    4: check_jump_vs_bruteforce,
    5: check_contraction,
    6: check_pointwise_suite,
    7: check_counterexample_scan,
    8: check_atom_dilation,
    9: check_cz_invariants,
    10: check_kernel_decay,
    11: check_oscillation_bound,
    12: check_jump_reduction,
}
