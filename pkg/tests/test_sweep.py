import numpy as np
import pytest

from zenotherm.bath import SpectralDensity, ThermalSpectrum, beta_from_alpha, gibbs_excited
from zenotherm.master_eq import MEOptions, SystemState, propagate
from zenotherm.rates import golden_rule
from zenotherm.schedule import MeasurementSchedule
from zenotherm.sweep import (CellResult, IntervalModel, PhaseMapSpec, ScheduleFamily, SweepParams,
                             critical_alpha, objective_value, optimize_schedule, phase_map)

W0 = 1.0 / 0.7
SD = SpectralDensity("lorentzian", W0, 0.1, 0.1, W0 - 0.8, W0 + 0.8)
FAST = SweepParams(SD, resolution=0.02, relax_time=300.0)
FAM = ScheduleFamily(k_max=3, dt_min=0.2, dt_max=8.0, dt_step=0.2)


@pytest.fixture(scope="module")
def model():
    return IntervalModel.build(FAST, 0.5, 8.0)


class TestFamily:
    def test_grid(self):
        g = ScheduleFamily(dt_min=0.1, dt_max=10.0, dt_step=0.05).grid
        assert g[0] == 0.1 and g[-1] == 10.0 and len(g) == 199

    def test_rejects(self):
        with pytest.raises(ValueError):
            ScheduleFamily(k_max=-1)
        with pytest.raises(ValueError):
            ScheduleFamily(dt_min=2.0, dt_max=1.0)
        with pytest.raises(ValueError):
            PhaseMapSpec((0.1,), (0.2,), diagonal=True)
        with pytest.raises(ValueError):
            PhaseMapSpec((0.1,), (0.2,), objective="fastest")


class TestIntervalModel:
    def test_composition_matches_propagation(self, model):
        dts = (0.6, 3.4, 7.8)
        rho0 = gibbs_excited(beta_from_alpha(0.3))
        final, hi, lo = model.run(rho0, dts)
        ts = ThermalSpectrum(SD, beta_from_alpha(0.5))
        sch = MeasurementSchedule.from_intervals(dts)
        tr = propagate(SystemState(rho0), ts, 1.0, sch, sum(dts), MEOptions(dt_out=0.02))
        assert final == pytest.approx(tr.rho_ee[-1], abs=1e-6)
        assert hi == pytest.approx(tr.rho_ee.max(), abs=1e-6)
        assert lo == pytest.approx(tr.rho_ee.min(), abs=1e-6)

    def test_equal_scan_matches_run(self, model):
        grid = FAM.grid
        heat, cool = model.equal_scan(0.1, grid, 3)
        for k in (1, 3):
            for j in (0, 17, len(grid) - 1):
                _, hi, lo = model.run(0.1, (grid[j],) * k)
                assert heat[k - 1, j] == pytest.approx(hi - 0.1, abs=1e-15)
                assert cool[k - 1, j] == pytest.approx(0.1 - lo, abs=1e-15)

    def test_relaxed_map(self, model):
        # fixed point is the Gibbs population; contraction follows the Markov decay rate
        a, b = model.relax
        assert a / (1 - b) == pytest.approx(gibbs_excited(beta_from_alpha(0.5)), abs=2e-4)
        gr = golden_rule(ThermalSpectrum(SD, 2.0), 1.0)
        assert b == pytest.approx(np.exp(-(gr.r_e + gr.r_g) * FAST.relax_time), rel=0.15)

    def test_index_range(self, model):
        with pytest.raises(ValueError):
            model.index(9.0)


class TestObjectives:
    def test_values(self):
        r = (0.2, 0.3, 0.05)
        assert objective_value("max_heating", 0.1, r) == pytest.approx(0.2)
        assert objective_value("max_cooling", 0.1, r) == pytest.approx(0.05)
        assert objective_value("final_spin_beta", 0.1, r) == pytest.approx(np.log(4.0))
        with pytest.raises(ValueError):
            objective_value("nope", 0.1, r)

    def test_optimizer_returns_best_evaluated(self, model):
        fam = ScheduleFamily(k_max=2, dt_min=0.2, dt_max=8.0, dt_step=0.02, individual=True)
        rho0 = gibbs_excited(2.0)
        res = optimize_schedule(model, rho0, "final_spin_beta", fam, seed=4, restarts=2)
        assert res.value == max(v for _, v in res.evaluated)
        assert len(res.schedule) == 2
        # beats the best equal-interval schedule on the same grid
        eq = max(objective_value("final_spin_beta", rho0, model.run(rho0, (d, d)))
                 for d in fam.grid)
        assert res.value >= eq - 1e-12
        again = optimize_schedule(model, rho0, "final_spin_beta", fam, seed=4, restarts=2)
        assert again.schedule == res.schedule

    def test_cooling_optimum_sits_at_trough(self, model):
        # oracle: dense scan of the single-interval response
        rho0 = gibbs_excited(2.0)
        fam = ScheduleFamily(k_max=1, dt_min=0.2, dt_max=8.0, dt_step=0.02)
        res = optimize_schedule(model, rho0, "max_cooling", fam)
        seg = model.a + model.b * rho0
        trough = model.s[int(np.argmin(seg))]
        assert res.value == pytest.approx(rho0 - seg.min(), abs=1e-12)
        assert 1.0 < trough < 8.0 and res.schedule[0] >= trough - 1e-9

    def test_empty_family(self, model):
        res = optimize_schedule(model, 0.1, "max_heating", ScheduleFamily(k_max=0))
        assert res.schedule == () and res.value == 0.0


class TestPhaseMap:
    def test_cooling_from_hotter_bath(self):
        spec = PhaseMapSpec((0.3,), (0.35,), ScheduleFamily(k_max=2, dt_step=0.1))
        res = phase_map(spec, FAST)
        c = res.cells[0]
        assert c.alpha_b > c.alpha_s and c.max_cooling > 0 and not c.error
        assert len(c.best_cooling) >= 1

    def test_shapes_and_workers(self, tmp_path):
        spec = PhaseMapSpec((0.1, 0.4, 0.6), (0.2, 0.5), FAM)
        one = phase_map(spec, FAST)
        two = phase_map(spec, FAST, workers=2)
        assert one.grid("max_heating").shape == (2, 3)
        assert [(c.alpha_s, c.alpha_b) for c in one.cells][:3] == [(0.1, 0.2), (0.4, 0.2), (0.6, 0.2)]
        one.to_csv(tmp_path / "a.csv")
        two.to_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert np.all(one.grid("max_heating") >= 0) and np.all(one.grid("max_cooling") >= 0)

    def test_failed_cells_are_recorded(self):
        bad = SweepParams(SpectralDensity("lorentzian", 1.0, 0.1, 0.07, 0.0, 1.8))
        res = phase_map(PhaseMapSpec((0.2,), (0.3,), FAM), bad)
        assert res.cells[0].error and "omega_min" in res.cells[0].error

    def test_diagonal_and_critical(self):
        spec = PhaseMapSpec((0.1, 0.4), (0.1, 0.4), FAM, diagonal=True)
        res = phase_map(spec, FAST)
        cool = res.grid("max_cooling")
        assert cool.shape == (2,) and cool[0] == 0.0 and cool[1] > 0
        a_c = critical_alpha(FAST, 0.1, 0.4, FAM, tol=0.05)
        assert 0.1 < a_c < 0.4
        with pytest.raises(ValueError):
            critical_alpha(FAST, 0.4, 0.5, FAM)

    def test_uncoupled_bath_gives_empty_map(self):
        flat = SweepParams(SpectralDensity("lorentzian", W0, 0.1, 0.0, W0 - 0.8, W0 + 0.8),
                           resolution=0.05, relax_time=10.0)
        res = phase_map(PhaseMapSpec((0.2, 0.5), (0.3,), FAM), flat)
        assert np.all(res.grid("max_heating") == 0) and np.all(res.grid("max_cooling") == 0)
        assert all(c.best_cooling == () for c in res.cells)

    def test_relaxed_column_tracks_bath(self):
        res = phase_map(PhaseMapSpec((0.1, 0.3, 0.7), (0.5,), FAM), FAST)
        target = gibbs_excited(beta_from_alpha(0.5))
        for c in res.cells:
            start = gibbs_excited(beta_from_alpha(c.alpha_s))
            assert abs(c.relaxed - target) < 0.02 * abs(start - target) + 2e-4

    def test_cell_defaults(self):
        c = CellResult(0.1, 0.2)
        assert c.best_cooling == () and np.isnan(c.relaxed)
