import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksforced import Grid2D
from ksforced.errors import ParameterError
from ksforced.inequalities import (
    FieldSampler,
    biler_check,
    biler_ratio,
    biler_terms,
    malpha_audit,
    malpha_bound,
    malpha_fixed_point,
    refinement_change,
    tm_ratio,
    trudinger_moser_check,
    young_audit,
    young_bound,
    young_constant,
)


class TestYoung:
    def test_equality_case(self):
        assert young_bound(1.0, 1.0, 0.5, 2.0) == pytest.approx((1.0, 1.0), rel=1e-15)

    def test_zero_a(self):
        lhs, rhs = young_bound(0.0, 3.0, 0.2, 3.0)
        assert lhs == 0.0 and rhs > 0.0

    @pytest.mark.parametrize("kw", [dict(p=1.0), dict(p=0.5), dict(eps=0.0), dict(a=-1.0)])
    def test_bad_args(self, kw):
        args = dict(a=1.0, b=1.0, eps=1.0, p=2.0)
        args.update(kw)
        with pytest.raises(ParameterError):
            young_bound(**args)

    @given(
        st.floats(1e-3, 1e3),
        st.floats(1e-2, 1e2),
        st.floats(1.05, 10.0),
    )
    def test_sharp_at_minimizer(self, b, eps, p):
        # eps a^p + C b^q - a b is minimized at a* = (b / (eps p))^(1/(p-1)) with value 0
        a = (b / (eps * p)) ** (1 / (p - 1))
        lhs, rhs = young_bound(a, b, eps, p)
        assert rhs == pytest.approx(lhs, rel=1e-10)
        lhs2, rhs2 = young_bound(1.3 * a, b, eps, p)
        assert lhs2 < rhs2

    def test_constant(self):
        assert young_constant(0.5, 2.0) == pytest.approx(0.5)
        assert young_constant(1.0, 3.0) == pytest.approx(3.0 ** (-0.5) / 1.5)

    def test_vectorized(self):
        lhs, rhs = young_bound(np.array([1.0, 2.0]), np.array([1.0, 0.5]), 0.5, 2.0)
        assert lhs.shape == (2,) and np.all(lhs <= rhs)

    def test_audit(self):
        rep = young_audit(100_000, seed=3)
        assert rep.samples == 100_000 and not rep.violated
        assert rep.worst_ratio <= 1.0 + 1e-14
        assert set(rep.witness) == {"a", "b", "eps", "p"}
        assert young_audit(1000, seed=3).worst_ratio == young_audit(1000, seed=3).worst_ratio


class TestMalpha:
    def test_example(self):
        assert malpha_bound(1.0, 2.0, 0.5) == pytest.approx(6.0, rel=1e-15)
        assert malpha_fixed_point(1.0, 2.0, 0.5) == pytest.approx((1 + math.sqrt(2)) ** 2, rel=1e-14)

    def test_small_c2_limit(self):
        assert malpha_bound(1.0, 1e-12, 0.5) == pytest.approx(2.0, rel=1e-9)
        assert malpha_fixed_point(1.0, 1e-12, 0.5) == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5])
    def test_beta_range(self, beta):
        with pytest.raises(ParameterError):
            malpha_bound(1.0, 1.0, beta)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0.05, 0.95))
    def test_fixed_point_solves(self, c1, c2, beta):
        m = malpha_fixed_point(c1, c2, beta)
        assert m == pytest.approx(c1 + c2 * m**beta, rel=1e-12)
        assert m <= malpha_bound(c1, c2, beta) * (1 + 1e-14)

    def test_audit(self):
        rep = malpha_audit(10_000, seed=3)
        assert rep.samples == 10_000 and not rep.violated
        assert 0 < rep.worst_ratio <= 1.0


class TestFieldSampler:
    def test_reproducible_across_grids(self):
        a = FieldSampler(Grid2D(64, 64), seed=5)
        b = FieldSampler(Grid2D(128, 128), seed=5)
        va = next(a.samples(1))
        vb = next(b.samples(1))
        # same function: the coarse cell centers are averages of fine neighbours up to O(h^2)
        coarse = 0.25 * (vb[::2, ::2] + vb[1::2, ::2] + vb[::2, 1::2] + vb[1::2, 1::2])
        assert np.max(np.abs(coarse - va)) < 0.05 * np.max(np.abs(va))

    def test_amplitude_bound(self):
        s = FieldSampler(Grid2D(64, 64), seed=1, amplitude=3.0)
        for v in s.samples(20):
            assert np.max(np.abs(v)) <= 3.0 + 1e-12

    def test_band_too_large(self):
        with pytest.raises(ParameterError):
            FieldSampler(Grid2D(32, 32), band=16)


class TestTrudingerMoser:
    def test_constants(self, grid32):
        assert tm_ratio(np.zeros(grid32.shape), grid32) == pytest.approx(1.0, rel=1e-14)
        assert tm_ratio(np.full(grid32.shape, 3.0), grid32) == pytest.approx(1.0, rel=1e-14)

    def test_no_overflow(self, grid32):
        assert math.isfinite(tm_ratio(np.full(grid32.shape, 800.0), grid32))

    def test_check(self):
        rep = trudinger_moser_check(FieldSampler(Grid2D(64, 64), seed=2), count=50)
        assert not rep.violated and rep.samples + rep.rejected == 50
        assert math.isfinite(rep.worst_ratio) and rep.worst_ratio > 0


class TestBiler:
    def test_unit_constant(self, grid32):
        v = np.ones(grid32.shape)
        vp, first, bracket = biler_terms(v, grid32, 3.0)
        assert (vp, first, bracket) == pytest.approx((1.0, 0.0, 2.0))
        assert biler_ratio(v, grid32, 3.0, 0.1) == pytest.approx(0.5)

    def test_zero_field(self, grid32):
        assert biler_ratio(np.zeros(grid32.shape), grid32, 2.0, 1.0) is None

    def test_bad_args(self):
        s = FieldSampler(Grid2D(64, 64))
        with pytest.raises(ParameterError):
            biler_check(s, 1.5, 0.1)
        with pytest.raises(ParameterError):
            biler_check(s, 2.0, 0.0)

    def test_refinement_stable(self):
        c64 = biler_check(FieldSampler(Grid2D(64, 64), seed=4), 3.0, 0.1, count=100)
        c128 = biler_check(FieldSampler(Grid2D(128, 128), seed=4), 3.0, 0.1, count=100)
        assert c64.name == "biler[p=3,eps=0.1]"
        assert refinement_change(c64, c128) < 0.2

    def test_scaling_bounded_not_invariant(self):
        # the fitted constant is an empirical lower bound for the true one: the
        # doubled family yields a larger fit, but it stays the same order
        s = FieldSampler(Grid2D(64, 64), seed=0)
        base = biler_check(s, 3.0, 0.1, count=100)
        scaled = biler_check(s, 3.0, 0.1, count=100, scale=2.0)
        assert math.isfinite(scaled.worst_ratio)
        assert scaled.worst_ratio > base.worst_ratio
        assert scaled.worst_ratio < 2.0 * abs(base.worst_ratio)

    @pytest.mark.xfail(strict=True, reason="a fitted constant is only a lower bound for the true one")
    def test_scaled_family_within_unscaled_fit(self):
        # literal form of the scaling claim: the doubled family obeys the inequality
        # with the constant fitted on the original family. It does not at p = 3.
        s = FieldSampler(Grid2D(64, 64), seed=0)
        base = biler_check(s, 3.0, 0.1, count=500)
        scaled = biler_check(s, 3.0, 0.1, count=500, scale=2.0)
        assert scaled.worst_ratio <= base.worst_ratio
