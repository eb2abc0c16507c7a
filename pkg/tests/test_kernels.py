import math
import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings
from hypothesis import strategies as st

from varjump import (BUMP, GAUSS, SampledFunction, ScaleGrid, SpaceGrid, UndersampledKernelWarning,
                     build_family, convolve_at, dilated_eval, kernel_centered_difference_variation)
from varjump import oracles
from varjump.kernels import get_kernel


def test_dilated_eval_values():
    assert dilated_eval(GAUSS, 1.0, 0.0) == pytest.approx(0.5641895835, abs=1e-10)
    assert dilated_eval(GAUSS, 2.0, 0.0) == pytest.approx(0.2820947918, abs=1e-10)
    with pytest.raises(ValueError):
        dilated_eval(GAUSS, 0.0, 0.0)
    with pytest.raises(NotImplementedError):
        dilated_eval(GAUSS, 1.0, 0.0, n=2)
    with pytest.raises(ValueError):
        get_kernel("nope")


@pytest.mark.parametrize("kernel", [GAUSS, BUMP])
@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 4.0])
def test_unit_integral(kernel, t):
    x = np.linspace(-12 * t, 12 * t, 240001)
    y = dilated_eval(kernel, t, x)
    assert trapezoid(y, x) == pytest.approx(1.0, abs=1e-8)


def test_bump_is_compactly_supported():
    assert BUMP(np.array([-1.0, 1.0, 1.5])).tolist() == [0.0, 0.0, 0.0]
    assert BUMP(0.0) > 0


def test_convolve_at_closed_form(gauss_f):
    assert convolve_at(gauss_f, GAUSS, 1.0, 0.0) == pytest.approx(2 ** -0.5, abs=1e-6)
    assert convolve_at(gauss_f, GAUSS, 1.0, 1.0) == pytest.approx(2 ** -0.5 * math.exp(-0.5), abs=1e-6)
    zero = SampledFunction.zeros(gauss_f.grid)
    assert convolve_at(zero, GAUSS, 0.7, 0.3) == 0.0


def test_convolve_at_errors(gauss_f):
    with pytest.raises(ValueError):
        convolve_at(gauss_f, GAUSS, 1.0, 13.0)
    with pytest.raises(ValueError):
        convolve_at(gauss_f, GAUSS, -1.0, 0.0)
    with pytest.warns(UndersampledKernelWarning):
        convolve_at(gauss_f, GAUSS, 0.01, 0.0)


def test_build_family_three_nodes(gauss_f):
    fam = build_family(gauss_f, GAUSS, ScaleGrid([1.0]), SpaceGrid(-1.0, 1.0, 1.0))
    assert fam.values.shape == (1, 3)
    assert np.allclose(fam.values[0], [0.42888194, 0.70710678, 0.42888194], atol=1e-6)
    assert not fam.undersampled.any()


def test_build_family_flags_undersampled(gauss_f):
    with pytest.warns(UndersampledKernelWarning):
        fam = build_family(gauss_f, GAUSS, ScaleGrid([1.0, 0.01]), SpaceGrid(-1.0, 1.0, 0.5))
    assert fam.undersampled.tolist() == [False, True]


def test_fft_matches_trapezoid(gauss_f):
    scales = ScaleGrid.geometric(0.05, 20.0, 8)
    space = SpaceGrid(-3.0, 3.0, 0.005)
    a = build_family(gauss_f, GAUSS, scales, space, method="trapezoid")
    b = build_family(gauss_f, GAUSS, scales, space, method="fft")
    assert np.max(np.abs(a.values - b.values)) < 1e-8
    with pytest.raises(ValueError):
        build_family(gauss_f, GAUSS, scales, SpaceGrid(-3.0, 3.0, 0.006), method="fft")


def test_refinement_and_threads_bit_identical(gauss_f):
    coarse = ScaleGrid.geometric(0.1, 10.0, 4)
    fine = coarse.union(ScaleGrid.geometric(0.1, 10.0, 16))
    space = SpaceGrid(-2.0, 2.0, 0.05)
    a = build_family(gauss_f, GAUSS, coarse, space, threads=1)
    b = build_family(gauss_f, GAUSS, fine, space, threads=4)
    rows = [int(np.flatnonzero(fine.scales == t)[0]) for t in coarse.scales]
    assert np.array_equal(a.values, b.values[rows])


def test_closed_form_agreement_small(gauss_f):
    scales = ScaleGrid.geometric(0.1, 10.0, 16)
    space = SpaceGrid(-3.0, 3.0, 0.05)
    fam = build_family(gauss_f, GAUSS, scales, space, method="auto")
    exact = oracles.gaussian_family(scales.scales[:, None], space.nodes[None, :])
    assert np.max(np.abs(fam.values - exact)) < 1e-6


def test_family_csv_roundtrip(tmp_path, gauss_f):
    fam = build_family(gauss_f, GAUSS, ScaleGrid([2.0, 1.0]), SpaceGrid(-0.5, 0.5, 0.5))
    path = tmp_path / "fam.csv"
    fam.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().startswith("t,x,value\n")
    assert np.array_equal(data[:, 2], fam.values.reshape(-1))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-2.0, 2.0), st.integers(0, 10_000))
def test_convolution_bound(t, x, seed):
    rng = np.random.default_rng(seed)
    f = SampledFunction(SpaceGrid(-4.0, 4.0, 0.01), rng.uniform(-1, 1, 801))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndersampledKernelWarning)
        value = convolve_at(f, GAUSS, t, x)
    y = f.grid.nodes
    mass = np.sum(f.grid.trapezoid_weights() * np.abs(dilated_eval(GAUSS, t, x - y)))
    assert abs(value) <= np.max(np.abs(f.values)) * mass * (1 + 1e-12)


def test_kernel_difference_variation():
    scales = ScaleGrid.geometric(1e-3, 1e3, 64)
    assert kernel_centered_difference_variation(GAUSS, 3.0, 0.2, 0.2, scales) == 0.0
    v8 = kernel_centered_difference_variation(GAUSS, 8.0, 0.1, 0.0, scales)
    v16 = kernel_centered_difference_variation(GAUSS, 16.0, 0.1, 0.0, scales)
    assert v8 <= 0.015625
    assert 3.0 <= v8 / v16 <= 5.0
