import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from varjump import (GAUSS, BlockSequence, DyadicCube, Path, SampledFunction, ScaleGrid, SpaceGrid,
                     UndersampledKernelWarning, build_family, conditional_expectation, cz_decompose,
                     long_oscillation, martingale_long_oscillation, oscillation, short_variation_s2,
                     snap_blocks, square_function, variation_norm)
from varjump.dyadic import cell_integral, martingale_family
from varjump.harness import random_step_function

# frozen regression: square function of exp(-x^2) at x = 0, levels -5..5, h = 2^-8 on [-16, 16]
SQUARE_GAUSS_X0 = 0.05744045541777278

H = 2.0 ** -6
GRID = SpaceGrid(-8.0, 8.0, H)


def indicator():
    # node x carries the cell (x - h, x], so (0, 1] is sampled at 0 < x <= 1
    x = GRID.nodes
    return SampledFunction(GRID, ((x > 0) & (x <= 1)).astype(float))


def at(f, x):
    return f.values[int(round((x - f.grid.x_min) / f.grid.h))]


def test_cube_geometry():
    q = DyadicCube(1, 0)
    assert (q.left, q.right, q.length) == (0.0, 2.0, 2.0)
    assert q.contains(2.0) and not q.contains(0.0)
    assert q.parent() == DyadicCube(2, 0)
    assert q.children() == (DyadicCube(0, 0), DyadicCube(0, 1))
    assert DyadicCube(0, -1).parent() == DyadicCube(1, -1)


def test_conditional_expectation_examples():
    f = indicator()
    assert np.array_equal(conditional_expectation(f, 0).values, f.values)
    e1 = conditional_expectation(f, 1)
    x = GRID.nodes
    assert np.allclose(e1.values[(x > 0) & (x <= 2)], 0.5)
    assert np.all(e1.values[(x <= 0) | (x > 2)] == 0)
    for j in (0, 1, 2):
        assert cell_integral(conditional_expectation(f, j)) == pytest.approx(cell_integral(f), abs=1e-10)


def test_conditional_expectation_alignment():
    with pytest.raises(ValueError, match="divide"):
        conditional_expectation(SampledFunction.zeros(SpaceGrid(0.0, 3.0, 0.3)), 0)
    with pytest.raises(ValueError, match="lattice"):
        conditional_expectation(SampledFunction.zeros(SpaceGrid(0.1, 1.1, 0.25)), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(-4, 3), st.integers(0, 3))
def test_tower_and_idempotence(seed, j, dj):
    f = random_step_function(np.random.default_rng(seed), x_half=8.0, h=2.0 ** -4)
    e = conditional_expectation(f, j)
    assert np.max(np.abs(conditional_expectation(e, j).values - e.values)) <= 1e-10
    coarse = conditional_expectation(f, j + dj)
    assert np.max(np.abs(conditional_expectation(e, j + dj).values - coarse.values)) <= 1e-10


def test_cz_single_cube_example():
    f = 4.0 * indicator()
    dec = cz_decompose(f, 1.0)
    assert dec.cubes == [DyadicCube(1, 0)]
    x = GRID.nodes
    inside = (x > 0) & (x <= 2)
    assert np.allclose(dec.good.values[inside], 2.0)
    assert np.all(dec.good.values[~inside] == 0)
    part = dec.bad_parts[0][1]
    expected = np.where(part.nodes <= 1, 2.0, -2.0)
    expected[0] = 0.0
    assert np.allclose(part.values, expected)
    c = dec.check()
    assert c["cube_measure"] == 2.0 and c["cube_measure_bound"] == pytest.approx(4.0)
    assert all(c[k] for k in ("reconstruction_ok", "sup_good_ok", "bad_parts_ok", "cube_measure_ok"))


def test_cz_small_function_has_no_cubes():
    f = 0.5 * indicator()
    dec = cz_decompose(f, 1.0)
    assert dec.cubes == []
    assert np.array_equal(dec.good.values, f.values)


def test_cz_errors():
    with pytest.raises(ValueError):
        cz_decompose(indicator(), 0.0)
    with pytest.raises(ValueError, match="2\\*\\*j"):
        cz_decompose(SampledFunction.zeros(SpaceGrid(0.0, 3.0, 0.3)), 1.0)


def test_cz_root_enlarges_for_large_mass():
    x = GRID.nodes
    f = SampledFunction(GRID, np.where(np.abs(x) <= 4, 3.0, 0.0))
    c = cz_decompose(f, 1.0).check()
    assert c["reconstruction_ok"] and c["cube_measure_ok"] and c["sup_good_ok"]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.1, 10.0))
def test_cz_invariants_random(seed, alpha):
    f = random_step_function(np.random.default_rng(seed))
    c = cz_decompose(f, alpha).check()
    assert c["reconstruction_error"] <= 1e-10
    assert c["sup_good_ok"] and c["bad_parts_ok"] and c["cube_measure_ok"]


def test_square_function_examples():
    assert np.all(square_function(SampledFunction.zeros(GRID), GAUSS, [0]).values == 0)
    f = indicator()
    sq = square_function(f, GAUSS, [0])
    conv = build_family(f, GAUSS, ScaleGrid([1.0]), SpaceGrid(0.5, 0.5 + H, H)).values[0, 0]
    assert at(sq, 0.5) == pytest.approx(abs(conv - 1.0), abs=1e-14)


def test_square_function_gaussian_regression():
    grid = SpaceGrid(-16.0, 16.0, 2.0 ** -8)
    f = SampledFunction.from_callable(grid, lambda x: np.exp(-x * x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndersampledKernelWarning)
        value = at(square_function(f, GAUSS, range(-5, 6)), 0.0)
    assert value == pytest.approx(SQUARE_GAUSS_X0, abs=1e-10)
    # exact averages over (-2^k, 0]; the step-function reading is first order in h
    exact = math.sqrt(sum(((4.0 ** k + 1) ** -0.5 - math.sqrt(math.pi) / 2 * erf(2.0 ** k) / 2.0 ** k) ** 2
                          for k in range(-5, 6)))
    assert value == pytest.approx(exact, abs=2e-3)


def test_snap_blocks():
    snapped = snap_blocks(BlockSequence([3.0, 2.0, 1.5, 0.3]))
    assert snapped.boundaries.tolist() == [4.0, 2.0, 0.5]


def test_long_oscillation_examples():
    assert long_oscillation(Path(ScaleGrid([4, 2, 1]), [5, 5, 5]), BlockSequence([4, 1])) == 0.0
    assert long_oscillation(Path(ScaleGrid([4, 2, 1]), [0, 1, 3]), BlockSequence([4, 1])) == 3.0
    with pytest.raises(ValueError):
        long_oscillation(Path(ScaleGrid([3, 1.5]), [0, 1]), BlockSequence([3, 1.5]))


def test_martingale_long_oscillation_examples():
    f = indicator()
    out = martingale_long_oscillation(f, BlockSequence([4.0, 1.0]), levels=range(0, 3))
    assert at(out, 0.5) == pytest.approx(0.75)
    const = SampledFunction(SpaceGrid(0.0, 4.0, H), np.r_[0.0, np.full(int(4 / H), 2.0)])
    flat = martingale_long_oscillation(const, BlockSequence([4.0, 1.0]), levels=range(-2, 3))
    assert np.all(flat.values[1:] == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_martingale_oscillation_below_v1(seed):
    f = random_step_function(np.random.default_rng(seed), h=2.0 ** -4)
    levels = range(-3, 4)
    blocks = BlockSequence([8.0, 2.0, 0.5, 0.125])
    osc = martingale_long_oscillation(f, blocks, levels)
    scales, values = martingale_family(f, levels)
    v1 = np.array([variation_norm(values[:, i], 1.0) for i in range(values.shape[1])])
    assert np.all(osc.values <= v1 * (1 + 1e-12) + 1e-12)


def _difference_paths(seed):
    rng = np.random.default_rng(seed)
    f = random_step_function(rng, x_half=8.0, h=2.0 ** -5)
    levels = list(range(-3, 4))
    scales = ScaleGrid(np.ldexp(1.0, np.array(levels[::-1])))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndersampledKernelWarning)
        fam = build_family(f, GAUSS, scales, f.grid, method="fft").values
    _, expect = martingale_family(f, levels)
    sq = square_function(f, GAUSS, levels, method="fft")
    return scales, fam, expect, sq.values


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_long_oscillation_splitting(seed):
    scales, fam, expect, sq = _difference_paths(seed)
    blocks = BlockSequence([8.0, 2.0, 1.0, 0.25])
    for i in range(0, fam.shape[1], 37):
        whole = long_oscillation(Path(scales, fam[:, i]), blocks)
        diff = long_oscillation(Path(scales, fam[:, i] - expect[:, i]), blocks)
        mart = long_oscillation(Path(scales, expect[:, i]), blocks)
        assert whole <= diff + mart + 1e-12
        # each block sup is at most |d_l| + |d_m| and every level sits in at most two blocks
        assert diff <= 2.0 * sq[i] + 1e-12


def test_difference_bound_needs_constant_two():
    # d = (1, -1, 1) at levels 2, 1, 0: blocks [2, 4] and [1, 2] share level 1
    d = Path(ScaleGrid([4.0, 2.0, 1.0]), [1.0, -1.0, 1.0])
    value = long_oscillation(d, BlockSequence([4.0, 2.0, 1.0]))
    square = math.sqrt(3.0)
    assert value == pytest.approx(math.sqrt(8.0))
    assert value > math.sqrt(2.0) * square
    assert value <= 2.0 * square


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 1_000_000))
def test_oscillation_splits_into_long_and_short(seed):
    rng = np.random.default_rng(seed)
    extra = np.exp(rng.uniform(math.log(0.125), math.log(8.0), rng.integers(1, 8)))
    scales = np.unique(np.concatenate([2.0 ** np.arange(-3, 4), extra]))[::-1]
    b = np.unique(np.exp(rng.uniform(math.log(0.125), math.log(8.0), rng.integers(2, 6))))[::-1]
    if b.size < 2:
        return
    blocks = BlockSequence(b)
    path = Path(ScaleGrid(scales), rng.uniform(-1, 1, scales.size))
    lhs = oscillation(path, blocks)
    rhs = long_oscillation(path, blocks) + (2 + math.sqrt(2)) * short_variation_s2(path)
    assert lhs <= rhs + 1e-12


def test_short_constant_sqrt2_is_too_small():
    scales = ScaleGrid([8, 4, 3.5, 2.5, 2, 1.5, 1, 0.5, 0.25, 0.125])
    path = Path(scales, [0, 0, -1, -1, 0, 0.5, 0.25, 2, 0, 0.75])
    blocks = BlockSequence([5, 3, 2.75, 1.25])
    osc, osc_long, s2 = oscillation(path, blocks), long_oscillation(path, blocks), short_variation_s2(path)
    assert osc == pytest.approx(math.sqrt(3.25))
    assert osc_long == 0.0
    assert s2 == pytest.approx(math.sqrt(1.25))
    assert osc > osc_long + math.sqrt(2) * s2
    assert osc <= osc_long + (2 + math.sqrt(2)) * s2
