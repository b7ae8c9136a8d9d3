import math

import numpy as np
import pytest
from scipy.integrate import quad

from ksforced import ForcingSpec, Grid2D, Modulation, ScalarField, SolverConfig, State, run
from ksforced.diagnostics import (
    CSV_FIELDS,
    DecayCheckParams,
    bounds_ledger,
    decay_check_u,
    decay_check_v,
    dissipation,
    energy_monotone,
    energy_w,
    linear_v_flow,
    plateau_flags,
    theta_upper_bound,
    v_l1_exact,
)
from ksforced.errors import DomainError, InsufficientDataError, ParameterError
from ksforced.grid import w1p_seminorm
from ksforced.semigroup import eigenvalues, mode_field

from conftest import FOUR_PI, gaussian


def const(g, c):
    return ScalarField.constant(g, c)


class TestEnergy:
    def test_examples(self, grid32):
        assert energy_w(const(grid32, 1.0), const(grid32, 0.0), const(grid32, 0.0)) == pytest.approx(0.0, abs=1e-15)
        assert energy_w(const(grid32, math.e), const(grid32, 1.0)) == pytest.approx(0.5, rel=1e-13)
        assert energy_w(const(grid32, 1.0), const(grid32, 1.0), const(grid32, 2.0)) == pytest.approx(-2.5, rel=1e-13)

    def test_zero_density(self, grid32):
        assert energy_w(const(grid32, 0.0), const(grid32, 0.0)) == 0.0

    def test_negative_density(self, grid32):
        with pytest.raises(DomainError):
            energy_w(const(grid32, -1e-3), const(grid32, 0.0))

    def test_gradient_term(self):
        # v = x on [0,1]: face differences are exactly 1 between interior cells
        g = Grid2D(50, 10)
        v = ScalarField.from_function(g, lambda X, Y: X)
        w = energy_w(const(g, 1.0), v)
        vv = v.values
        expected = (-np.sum(vv) + 0.5 * np.sum(vv * vv)) * g.cell_area + 0.5 * (g.nx - 1) / g.nx
        assert w == pytest.approx(expected, rel=1e-13)


class TestDissipation:
    def test_steady_state(self, grid32):
        assert dissipation(const(grid32, 2.0), const(grid32, 2.0), const(grid32, 2.0), 0.1, 1.0) == 0.0

    def test_grad_v_only(self):
        g = Grid2D(40, 40)
        v = mode_field(g, 1, 0)
        d = dissipation(const(g, 1.0), v, v, 0.1, 1.0)
        # u = 1 so the first term is the face sum of |grad v|^2, i.e. mu_10 ||v||_2^2
        assert d == pytest.approx(eigenvalues(g)[1, 0] * np.sum(v.values**2) * g.cell_area, rel=1e-12)

    def test_time_derivative_term(self, grid32):
        d = dissipation(const(grid32, 1.0), const(grid32, 1.5), const(grid32, 1.0), 0.5, 2.0)
        assert d == pytest.approx(2.0 * 1.0, rel=1e-14)

    def test_zero_cells_skipped(self):
        g = Grid2D(16, 16)
        u = np.ones(g.shape)
        u[:8] = 0.0
        d = dissipation(ScalarField(g, u), const(g, 0.0), const(g, 0.0), 0.1, 1.0)
        assert math.isfinite(d) and d == 0.0

    def test_bad_dt(self, grid32):
        with pytest.raises(ParameterError):
            dissipation(const(grid32, 1.0), const(grid32, 1.0), const(grid32, 1.0), 0.0, 1.0)


class TestVL1Law:
    def test_ln2(self):
        assert v_l1_exact(math.log(2), 2.0, 1.0, None, 1.0) == pytest.approx(1.5, rel=1e-15)

    def test_initial(self, grid32):
        f = ForcingSpec.constant(const(grid32, 3.0))
        assert v_l1_exact(0.0, 2.5, 1.0, f, 0.7) == 2.5

    def test_limit(self, grid32):
        f = ForcingSpec.constant(const(grid32, 3.0))
        assert v_l1_exact(20 * 0.7, 2.5, 1.0, f, 0.7) == pytest.approx(4.0, abs=1e-8)

    def test_time_dependent_against_quadrature(self, grid32):
        mod = Modulation("sinusoidal", amplitude=0.5, period=0.7)
        f = ForcingSpec.time_dependent(const(grid32, 2.0), mod)
        t, tau = 3.0, 1.5
        forced = quad(lambda s: 2.0 * mod(s) * math.exp((s - t) / tau), 0, t, limit=200, epsabs=0, epsrel=1e-13)[0]
        expected = math.exp(-t / tau) * 0.5 + 1.2 * (1 - math.exp(-t / tau)) + forced / tau
        assert v_l1_exact(t, 0.5, 1.2, f, tau) == pytest.approx(expected, rel=1e-11)

    def test_negative_time(self):
        with pytest.raises(ParameterError):
            v_l1_exact(-1.0, 1.0, 1.0, None, 1.0)


class TestDecayParams:
    def test_accepted(self):
        p = DecayCheckParams(theta=3.0, delta0=0.5, n=2)
        assert theta_upper_bound(2, 0.5) == pytest.approx(6.0)
        assert p.q0 == 1.5

    @pytest.mark.parametrize(
        "kw,field",
        [
            (dict(theta=6.0), "theta"),
            (dict(theta=2.0), "theta"),
            (dict(delta0=1.0), "delta0"),
            (dict(r=1.0), "r"),
            (dict(n=1), "n"),
            (dict(epsilon=-1.0), "epsilon"),
        ],
    )
    def test_rejected(self, kw, field):
        with pytest.raises(ParameterError) as ei:
            DecayCheckParams(**kw)
        assert ei.value.field == field


def _linear_run(u0, v0, t_end=3.0, tau=1.0):
    cfg = SolverConfig(tau=tau, dt_init=0.01, t_end=t_end, snapshot_interval=0.5, chemotaxis=False)
    return run(State(u0, v0), cfg, ForcingSpec.zero())


class TestDecayChecks:
    def test_u_without_chemotaxis(self):
        g = Grid2D(32, 32)
        u0 = ScalarField.from_function(g, lambda X, Y: 1 + 0.5 * np.cos(np.pi * X))
        traj = _linear_run(u0, const(g, 0.0))
        fit = decay_check_u(traj, DecayCheckParams(epsilon=0.1))
        # implicit Euler vs exact semigroup only
        assert fit.c_envelope < 0.5
        assert all(t > 1 for t in fit.times)

    def test_v_single_mode(self):
        g = Grid2D(32, 32)
        v0 = mode_field(g, 1, 0) + 1.0
        tau = 0.5
        lin = linear_v_flow(const(g, 0.0), v0, 2.0, tau)
        mu = eigenvalues(g)[1, 0]
        expected = math.exp(-2.0 / tau) * (1.0 + math.exp(-mu * 2.0 / tau) * mode_field(g, 1, 0).values)
        np.testing.assert_allclose(lin.values, expected, atol=1e-14)

    def test_linear_flow_matches_quadrature(self):
        g = Grid2D(8, 8)
        u0 = mode_field(g, 1, 1) + 1.0
        tau, t = 0.7, 1.3
        mu = eigenvalues(g)[1, 1]
        lin = linear_v_flow(u0, const(g, 0.0), t, tau)
        w = quad(lambda s: math.exp(-(t - s) * (1 + mu) / tau) * math.exp(-mu * s), 0, t, epsabs=0, epsrel=1e-13)[0]
        w0 = quad(lambda s: math.exp(-(t - s) / tau), 0, t, epsabs=0, epsrel=1e-13)[0]
        expected = (w0 + w * mode_field(g, 1, 1).values) / tau
        np.testing.assert_allclose(lin.values, expected, rtol=1e-12)

    def test_linear_flow_degenerate_rate(self):
        # tau = 1 makes the (0,0) exponents coincide
        g = Grid2D(8, 8)
        lin = linear_v_flow(const(g, 1.0), const(g, 0.0), 2.0, 1.0)
        np.testing.assert_allclose(lin.values, 1 - math.exp(-2.0), rtol=1e-14)

    def test_v_without_chemotaxis_u_zero(self):
        g = Grid2D(32, 32)
        v0 = ScalarField.from_function(g, lambda X, Y: 1 + 0.4 * np.cos(np.pi * Y))
        traj = _linear_run(const(g, 0.0), v0)
        fit = decay_check_v(traj, DecayCheckParams(epsilon=0.1), 1.0)
        assert fit.c_envelope < 0.1

    def test_zero_epsilon_and_zero_data(self):
        g = Grid2D(16, 16)
        traj = _linear_run(const(g, 0.0), const(g, 0.0))
        p = DecayCheckParams(epsilon=0.0)
        assert tuple(decay_check_u(traj, p)) == (0.0, 0.0)
        assert tuple(decay_check_v(traj, p, 1.0)) == (0.0, 0.0)

    def test_short_trajectory(self):
        g = Grid2D(16, 16)
        traj = _linear_run(const(g, 1.0), const(g, 1.0), t_end=0.5)
        with pytest.raises(InsufficientDataError):
            decay_check_u(traj, DecayCheckParams())


class TestLedger:
    def test_homogeneous(self):
        g = Grid2D(16, 16)
        traj = run(State(const(g, 1.0), const(g, 1.0)), SolverConfig(dt_init=0.05, t_end=2.0), ForcingSpec.zero())
        rep = bounds_ledger(traj)
        assert rep.all_plateau and rep.failed() == []
        assert rep.entry("u_linf").max_at_end == pytest.approx(1.0)
        ok, worst = energy_monotone(traj)
        assert ok and worst <= 1e-14

    def test_supercritical_u_linf_fails(self):
        g = Grid2D(64, 64)
        s = State(gaussian(g, 3.0 * FOUR_PI, 0.05), const(g, 0.0))
        traj = run(s, SolverConfig(t_end=1.0, blowup_sup_threshold=1e4), ForcingSpec.zero())
        assert traj.blew_up
        assert "u_linf" in bounds_ledger(traj).failed()

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            bounds_ledger([])

    def test_plateau_flags(self):
        t = np.linspace(0, 1, 11)
        assert plateau_flags(np.ones(11), t)
        assert plateau_flags(np.exp(-t), t)
        assert not plateau_flags(t, t)
        assert plateau_flags(1 - 0.01 * np.exp(-t), t)

    def test_csv_fields(self):
        assert CSV_FIELDS[0] == "t" and len(CSV_FIELDS) == 13


class TestAlongTrajectory:
    def test_energy_residual_first_order(self):
        g = Grid2D(32, 32)
        u0 = ScalarField.from_function(g, lambda X, Y: 1 + 0.5 * np.cos(np.pi * X) * np.cos(np.pi * Y))
        v0 = ScalarField.from_function(g, lambda X, Y: 1 + 0.3 * np.cos(2 * np.pi * X))
        f = ForcingSpec.constant(const(g, 0.5))
        worst = []
        for dt in (2e-3, 1e-3):
            traj = run(State(u0, v0), SolverConfig(dt_init=dt, t_end=0.2, snapshot_interval=0.2), f)
            assert energy_monotone(traj)[0]
            worst.append(max(abs(r.energy_residual) for r in traj.records))
        assert 1.5 <= worst[0] / worst[1] <= 3.0

    def test_vt_accum_monotone(self):
        g = Grid2D(32, 32)
        traj = run(State(gaussian(g, 5.0, 0.1), const(g, 0.0)), SolverConfig(t_end=0.1), ForcingSpec.zero())
        acc = [r.vt_l2_accum for r in traj.records]
        assert all(b >= a for a, b in zip(acc, acc[1:]))
        assert all(r.is_finite() for r in traj.records)
        assert traj.records[-1].grad_v_theta == pytest.approx(w1p_seminorm(traj.final.v, 3.0))
