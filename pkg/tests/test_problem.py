import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from tikhoscale import (
    InputError,
    KernelSpec,
    SourceSpec,
    UnsupportedOperationError,
    element_integral_exact,
    exact_element_matrix,
    kernel_eval,
    kernel_norm_sq,
    make_grid,
    source_eval,
)

mpmath.mp.dps = 40


def mp_kernel(d, s, t):
    d, s, t = mpmath.mpf(d), mpmath.mpf(s), mpmath.mpf(t)
    return d / (d**2 + (s - t) ** 2) ** mpmath.mpf(1.5)


class TestKernelEval:
    def test_diagonal(self):
        assert kernel_eval(KernelSpec.gravity(0.5), 0.3, 0.3) == pytest.approx(4.0, rel=1e-15)

    def test_corner(self):
        assert kernel_eval(KernelSpec.gravity(1.0), 0.0, 1.0) == pytest.approx(2.0**-1.5, rel=1e-15)

    def test_against_mpmath(self):
        expected = float(mp_kernel(0.25, 0.3, 0.7))
        assert kernel_eval(KernelSpec.gravity(0.25), 0.3, 0.7) == pytest.approx(expected, rel=1e-14)

    @given(
        d=st.floats(0.05, 2.0),
        s=st.floats(0.0, 1.0),
        t=st.floats(0.0, 1.0),
    )
    def test_matches_mpmath(self, d, s, t):
        expected = float(mp_kernel(d, s, t))
        assert kernel_eval(KernelSpec.gravity(d), s, t) == pytest.approx(expected, rel=1e-13)

    def test_max_on_diagonal(self):
        spec = KernelSpec.gravity(0.25)
        m = make_grid(40).midpoints
        H = kernel_eval(spec, m[:, None], m[None, :])
        assert np.max(H) == pytest.approx(1 / 0.25**2, rel=1e-15)
        assert np.all(np.argmax(H, axis=1) == np.arange(40))

    def test_tabulated(self):
        spec = KernelSpec.tabulated(lambda s, t: s * t + 1.0)
        assert kernel_eval(spec, 0.5, 0.5) == 1.25

    @pytest.mark.parametrize("s,t", [(-0.1, 0.5), (0.5, 1.01), (math.nan, 0.2)])
    def test_domain(self, s, t):
        with pytest.raises(InputError):
            kernel_eval(KernelSpec.gravity(0.5), s, t)

    @pytest.mark.parametrize("d", [0.0, -1.0, math.inf, math.nan])
    def test_bad_depth(self, d):
        with pytest.raises(InputError):
            KernelSpec.gravity(d)

    def test_tabulated_needs_callable(self):
        with pytest.raises(InputError):
            KernelSpec.tabulated(3.0)


class TestNorm:
    @pytest.mark.parametrize("d,expected", [(0.25, 67.404), (0.5, 7.443)])
    def test_reported_values(self, d, expected):
        assert abs(kernel_norm_sq(KernelSpec.gravity(d)) - expected) < 1e-3

    def test_unit_depth(self):
        expected = float((3 * mpmath.pi / 4 + mpmath.mpf("0.5")) / 4)
        assert kernel_norm_sq(KernelSpec.gravity(1.0)) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("d", [0.25, 0.5, 1.0])
    def test_against_quadrature(self, d):
        with mpmath.workdps(20):
            val = mpmath.quad(lambda s, t: mp_kernel(d, s, t) ** 2, [0, 0.5, 1], [0, 0.5, 1])
        assert kernel_norm_sq(KernelSpec.gravity(d)) == pytest.approx(float(val), rel=1e-12)

    def test_decreasing_in_depth(self):
        vals = [kernel_norm_sq(KernelSpec.gravity(d)) for d in (0.25, 0.5, 1.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_tabulated_unsupported(self):
        with pytest.raises(UnsupportedOperationError):
            kernel_norm_sq(KernelSpec.tabulated(lambda s, t: s + t))


def quad_entry(d, n, i, j):
    h = 1.0 / n
    val, _ = integrate.dblquad(
        lambda t, s: d / (d * d + (s - t) ** 2) ** 1.5,
        i * h, (i + 1) * h, j * h, (j + 1) * h,
        epsabs=0, epsrel=1e-13,
    )
    return val / h


class TestElementIntegral:
    @pytest.mark.parametrize("d", [0.25, 0.5])
    def test_against_dblquad_5x5(self, d):
        g = make_grid(5)
        for i in range(5):
            for j in range(5):
                got = element_integral_exact(KernelSpec.gravity(d), g, g, i, j)
                assert got == pytest.approx(quad_entry(d, 5, i, j), rel=1e-8)

    @pytest.mark.parametrize("n", [7, 50, 1000])
    def test_diagonal_against_dblquad(self, n):
        g = make_grid(n)
        got = element_integral_exact(KernelSpec.gravity(0.25), g, g, 3, 3)
        assert got == pytest.approx(quad_entry(0.25, n, 3, 3), rel=1e-9)

    def test_fine_grid_against_mpmath(self):
        # The cancellation-free form keeps full accuracy where the textbook
        # second difference loses about eight digits.
        n, d = 3000, 0.25
        h = mpmath.mpf(1) / n
        F = lambda u: mpmath.sqrt(u * u + mpmath.mpf(d) ** 2)
        g = make_grid(n)
        for i, j in [(0, 0), (10, 11), (5, 2900)]:
            u = (i - j) * h
            expected = (F(u + h) + F(u - h) - 2 * F(u)) / (mpmath.mpf(d) * h)
            got = element_integral_exact(KernelSpec.gravity(d), g, g, i, j)
            assert got == pytest.approx(float(expected), rel=1e-11)

    def test_symmetry(self):
        g = make_grid(30)
        A = exact_element_matrix(KernelSpec.gravity(0.5), g, g)
        assert np.array_equal(A, A.T)
        assert element_integral_exact(KernelSpec.gravity(0.5), g, g, 3, 17) == A[3, 17]

    def test_frobenius_approaches_norm_from_below(self):
        spec = KernelSpec.gravity(0.25)
        prev = 0.0
        for n in (100, 200, 400):
            g = make_grid(n)
            fro = float(np.sum(exact_element_matrix(spec, g, g) ** 2))
            assert prev < fro < kernel_norm_sq(spec)
            prev = fro

    def test_unequal_spacing_unsupported(self):
        with pytest.raises(UnsupportedOperationError):
            element_integral_exact(KernelSpec.gravity(0.5), make_grid(4), make_grid(5), 0, 0)

    def test_tabulated_unsupported(self):
        g = make_grid(4)
        with pytest.raises(UnsupportedOperationError):
            element_integral_exact(KernelSpec.tabulated(lambda s, t: s), g, g, 0, 0)

    def test_index_range(self):
        g = make_grid(4)
        with pytest.raises(InputError):
            element_integral_exact(KernelSpec.gravity(0.5), g, g, 4, 0)


class TestSource:
    def test_smooth_sine(self):
        spec = SourceSpec.smooth_sine()
        assert source_eval(spec, 0.0) == 0.0
        assert source_eval(spec, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_piecewise(self):
        spec = SourceSpec.piecewise_constant([0.4], [1.0, 2.0])
        assert source_eval(spec, 0.2) == 1.0
        assert source_eval(spec, 0.9) == 2.0

    def test_breakpoint_takes_left_level(self):
        spec = SourceSpec.piecewise_constant([0.4], [1.0, 2.0])
        assert source_eval(spec, 0.4) == 1.0

    def test_default_shape(self):
        spec = SourceSpec.piecewise_constant()
        np.testing.assert_array_equal(source_eval(spec, np.array([0.1, 0.5, 0.9])), [0.5, 1.5, 0.75])

    @pytest.mark.parametrize(
        "bp,lv",
        [([0.6, 0.4], [1, 2, 3]), ([0.5], [1.0]), ([1.0], [1, 2]), ([0.0], [1, 2])],
    )
    def test_invalid_piecewise(self, bp, lv):
        with pytest.raises(InputError):
            SourceSpec.piecewise_constant(bp, lv)

    def test_domain(self):
        with pytest.raises(InputError):
            source_eval(SourceSpec.smooth_sine(), 1.5)
