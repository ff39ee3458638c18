"""Density-based reference optimizer: config, update rule, small run."""
import numpy as np
import pytest

from cpdtopo.baseline import BisectionFailure, SimpConfig, _oc_update, simp_run
from cpdtopo.benchmarks import BenchmarkSpec, generate_benchmark


class TestSimpConfig:
    def test_defaults(self):
        cfg = SimpConfig()
        assert cfg.penal == 3.0 and cfg.move == 0.2

    @pytest.mark.parametrize("kw", [dict(penal=0.5), dict(move=0.0), dict(move=1.5)])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SimpConfig(**kw)


class TestOcUpdate:
    def test_volume_met_and_bounds_respected(self):
        rng = np.random.default_rng(0)
        n = 100
        rho = np.full(n, 0.4)
        dc = -rng.uniform(0.1, 2.0, n)
        out = _oc_update(rho, dc, 40.0, 1e-3, 1.0, 0.2, 1e-6)
        assert abs(out.sum() - 40.0) <= 1e-6
        assert np.all(out >= 1e-3 - 1e-15)
        assert np.all(out <= 1.0 + 1e-15)
        assert np.max(np.abs(out - rho)) <= 0.2 + 1e-15

    def test_stronger_sensitivity_gets_more_material(self):
        n = 10
        rho = np.full(n, 0.5)
        dc = -np.linspace(0.1, 2.0, n)
        out = _oc_update(rho, dc, 5.0, 1e-3, 1.0, 0.5, 1e-6)
        assert np.all(np.diff(out) >= -1e-12)

    def test_infeasible_target_raises(self):
        # lower bound alone exceeds the target volume
        rho = np.full(4, 0.5)
        dc = -np.ones(4)
        with pytest.raises(BisectionFailure):
            _oc_update(rho, dc, 0.1, 0.4, 1.0, 0.2, 1e-9)


@pytest.fixture(scope="module")
def result():
    spec = BenchmarkSpec(name="cantilever-distributed", dims=(16, 6, 2), vc=0.4)
    problem = generate_benchmark(spec)
    return simp_run(problem, SimpConfig(max_iters=200))


class TestSimpRun:
    def test_converged(self, result):
        assert result.converged
        assert result.record.converged
        assert len(result.record) <= 200

    def test_volume_constraint_every_iterate(self, result):
        assert np.all(np.abs(np.array(result.record.volume) - 0.4) <= 1e-6)

    def test_densities_in_bounds(self, result):
        cfg = SimpConfig()
        assert np.all(result.rho >= cfg.rho_min - 1e-15)
        assert np.all(result.rho <= 1.0 + 1e-15)

    def test_compliance_decreases_overall(self, result):
        hist = result.record.compliance
        assert hist[-1] < hist[0]
        assert result.compliance == pytest.approx(hist[-1])
