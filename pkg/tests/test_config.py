import math
from pathlib import Path

import numpy as np
import pytest

from ksforced import Grid2D, integrate
from ksforced.config import ExperimentConfig, ProfileSpec, parse_config, parse_text
from ksforced.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def key_of(text):
    with pytest.raises(ConfigError) as ei:
        parse_text(text)
    return ei.value.key


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_text("kind = run\n")
        assert cfg.kind == "run"
        assert cfg.grid == Grid2D(128, 128)
        assert cfg.solver.tau == 1.0 and cfg.solver.blowup_sup_threshold == 1e9
        assert cfg.forcing.mode == "zero"
        assert cfg.initial.u0.kind == "gaussian"
        assert cfg.initial.u0.mass == pytest.approx(0.9 * 4 * math.pi)
        assert cfg.seed == 0 and cfg.threads == 1
        assert cfg.output_dir == Path("out")

    def test_empty_is_default(self):
        assert parse_text("") == ExperimentConfig()

    def test_full_example(self):
        cfg = parse_text(
            """
            # comment
            kind = small-data
            grid.nx = 64   # trailing comment
            grid.ny = 32
            solver.tau = 0.5
            solver.chemotaxis = false
            forcing.mode = time-dependent
            forcing.base = mode-perturbed
            forcing.base.mode = 2, 1
            forcing.modulation = sinusoidal
            forcing.amplitude = 0.5
            forcing.period = 2
            initial.v0 = constant
            initial.v0.value = 0.25
            decay.epsilon = 1e-3
            semigroup.conv_rates = 2:1, 1:3
            ineq.biler_p = 2, 5
            seed = 18446744073709551615
            """
        )
        assert cfg.grid.shape == (64, 32)
        assert cfg.solver.tau == 0.5 and cfg.solver.chemotaxis is False
        assert cfg.forcing.base.mode == (2, 1)
        assert cfg.forcing.modulation.period == 2.0
        assert cfg.decay.params.epsilon == 1e-3
        assert cfg.decay.params.theta == cfg.solver.theta
        assert cfg.semigroup.conv_rates == ((2.0, 1.0), (1.0, 3.0))
        assert cfg.ineq.biler_p == (2.0, 5.0)
        assert cfg.seed == 2**64 - 1
        f = cfg.forcing.build(cfg.grid)
        assert f.mode == "time-dependent"
        assert np.allclose(cfg.initial.v0.build(cfg.grid).values, 0.25)

    def test_theta_condition_example(self):
        p = parse_text("decay.theta = 3\ndecay.delta0 = 0.5\ndecay.n = 2\n").decay.params
        assert (p.theta, p.delta0, p.n) == (3.0, 0.5, 2)

    @pytest.mark.parametrize(
        "text,key",
        [
            ("solver.tau = -1", "solver.tau"),
            ("solver.dt_min = 1\nsolver.dt_init = 0.1", "solver.dt_min"),
            ("grid.nx = 1", "grid.nx"),
            ("decay.theta = 6", "decay.theta"),
            ("initial.u0.width = 0", "initial.u0.width"),
            ("forcing.modulation = sinusoidal\nforcing.amplitude = 1.5", "forcing.amplitude"),
            ("forcing.mode = time-dependent", "forcing.modulation"),
            ("forcing.mode = constant-in-time\nforcing.modulation = sinusoidal", "forcing.modulation"),
            ("sweep.masses = 1, -2", "sweep.masses"),
            ("ineq.biler_p = 1.5", "ineq.biler_p"),
            ("ineq.grids = 32", "ineq.grids"),
            ("threads = 0", "threads"),
            ("seed = -1", "seed"),
        ],
    )
    def test_invariant_violations(self, text, key):
        assert key_of(text) == key

    @pytest.mark.parametrize(
        "text,key",
        [
            ("grid.nx = abc", "grid.nx"),
            ("grid.nx = 1.5", "grid.nx"),
            ("solver.tau = nan", "solver.tau"),
            ("solver.chemotaxis = maybe", "solver.chemotaxis"),
            ("kind = nonsense", "kind"),
            ("initial.u0.mode = 1", "initial.u0.mode"),
            ("semigroup.conv_rates = 2", "semigroup.conv_rates"),
        ],
    )
    def test_type_mismatch(self, text, key):
        assert key_of(text) == key

    def test_unknown_key(self):
        assert key_of("solver.tua = 1") == "solver.tua"

    def test_duplicate(self):
        assert key_of("seed = 1\nseed = 2") == "seed"

    def test_malformed_line(self):
        assert key_of("kind run") == "<string>:1"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as ei:
            parse_config(tmp_path / "nope.cfg")
        assert "nope.cfg" in ei.value.key

    @pytest.mark.parametrize("name", ["run", "sweep", "smalldata", "ineq", "semigroup"])
    def test_shipped_configs_parse(self, name):
        assert parse_config(ROOT / "configs" / f"{name}.cfg").kind is not None


class TestProfiles:
    def test_gaussian_mass_exact(self):
        g = Grid2D(50, 70, 1.0, 2.0)
        u = ProfileSpec("gaussian", center=(0.2, 0.3), width=0.1, mass=7.5).build(g)
        assert integrate(u) == pytest.approx(7.5, rel=1e-14)

    def test_default_center(self):
        g = Grid2D(64, 64)
        u = ProfileSpec("gaussian", width=0.1, mass=1.0).build(g)
        assert np.allclose(u.values, u.values[::-1, ::-1])

    def test_mode_perturbed_nonnegative(self):
        g = Grid2D(32, 32)
        u = ProfileSpec("mode-perturbed", base=2.0, mode=(3, 1), amplitude=1.0).build(g)
        assert u.values.min() >= 0 and integrate(u) == pytest.approx(2.0)
