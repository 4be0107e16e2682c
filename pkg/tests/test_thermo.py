import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zenotherm.bath import INF, ThermalSpectrum, gibbs_excited
from zenotherm.master_eq import MEOptions, SystemState, propagate
from zenotherm.schedule import MeasurementEvent, MeasurementSchedule
from zenotherm.thermo import (attach_entropy, centered_derivative, entropy_records, interval_minima,
                              reference_population, relative_entropy, sigma, sigma_from,
                              sign_law_violations, spin_temperature)
from zenotherm.trajectory import Trajectory

pop = st.floats(0.001, 0.999)


class TestRelativeEntropy:
    @given(pop, pop)
    def test_nonnegative(self, p, q):
        assert relative_entropy(p, q) >= -1e-15

    @given(pop)
    def test_zero_on_reference(self, p):
        assert relative_entropy(p, p) == pytest.approx(0.0, abs=1e-15)

    def test_boundaries(self):
        assert relative_entropy(0.0, 0.3) == pytest.approx(-math.log(0.7))
        assert relative_entropy(0.2, 0.0) == INF
        with pytest.raises(ValueError):
            relative_entropy(1.1, 0.5)


class TestSpinTemperature:
    @given(st.floats(0.05, 20.0))
    def test_inverts_gibbs(self, beta):
        assert spin_temperature(gibbs_excited(beta)) == pytest.approx(beta, rel=1e-9)

    def test_special_values(self):
        assert spin_temperature(0.0) == INF
        assert spin_temperature(1.0) == -INF
        assert spin_temperature(0.5) == 0.0
        assert spin_temperature(0.8) < 0


class TestSigma:
    def test_is_minus_entropy_derivative(self):
        # oracle: finite difference of S along an explicit curve
        t = np.linspace(0.0, 4.0, 4001)
        rho = 0.3 + 0.2 * np.sin(t)
        s_num = -np.gradient([relative_entropy(r, 0.25) for r in rho], t)
        s = sigma_from(rho, 0.2 * np.cos(t), 0.25)
        assert np.allclose(s[5:-5], s_num[5:-5], atol=1e-6)

    @given(pop, pop, st.floats(-1.0, 1.0))
    @settings(max_examples=200)
    def test_sign_law(self, r, r0, rd):
        s = float(sigma_from(np.array([r]), np.array([rd]), r0)[0])
        approaching = math.copysign(1.0, r - r0) * rd < 0
        if abs(rd) > 1e-8 and abs(r - r0) > 1e-9:
            assert (s > 0) == approaching

    def test_boundary_warns(self, caplog):
        s = sigma_from(np.array([0.0]), np.array([0.1]), 0.3)
        assert not np.isfinite(s[0]) and "infinite" in caplog.text

    def test_centered_derivative_uses_forward_stencil_at_events(self):
        t = np.linspace(0, 2, 21)
        rho = np.where(t < 1.0, 0.1 + 0.0 * t, 0.1 + (t - 1.0) ** 2)
        tr = Trajectory("x", t, rho, events=[MeasurementEvent(1.0)])
        d = centered_derivative(tr)
        i = int(np.flatnonzero(tr.event_mask())[0])
        assert d[i] == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(d[i + 1:-1], 2 * (t[i + 1:-1] - 1.0), atol=1e-12)

    def test_references(self):
        assert reference_population("gibbs", 2.0) == pytest.approx(gibbs_excited(2.0))
        assert reference_population("pre_measurement", rho_pre=0.04) == 0.04
        assert reference_population(0.2) == 0.2
        for bad in ("other", 1.5):
            with pytest.raises(ValueError):
                reference_population(bad)
        with pytest.raises(ValueError):
            reference_population("pre_measurement")


class TestAlongTrajectory:
    @pytest.fixture
    def measured(self, sd_resonant):
        ts = ThermalSpectrum(sd_resonant, 1 / 0.3)
        sch = MeasurementSchedule.from_times([20.0, 22.0, 24.0])
        return propagate(SystemState(gibbs_excited(ts.beta)), ts, 1.0, sch, 26.0,
                         MEOptions(dt_out=0.02))

    def test_sign_law_holds(self, measured):
        rho0 = gibbs_excited(1 / 0.3)
        assert sign_law_violations(measured, rho0).size == 0
        # same result from the finite-difference path
        fd = Trajectory("x", measured.t, measured.rho_ee, events=measured.events)
        assert np.allclose(sigma(fd, rho0)[10:-10], sigma(measured, rho0)[10:-10], atol=1e-5)

    def test_records_and_minima(self, measured):
        rho0 = gibbs_excited(1 / 0.3)
        attach_entropy(measured, rho0)
        recs = entropy_records(measured, rho0)
        assert len(recs) == len(measured)
        assert recs[0].rel_entropy == pytest.approx(0.0, abs=1e-15)
        mins = interval_minima(measured)
        assert len(mins) == 4
        assert mins[3] < mins[2] < mins[1] < 0

    def test_minima_need_sigma(self):
        with pytest.raises(ValueError):
            interval_minima(Trajectory("x", [0.0, 1.0], [0.0, 0.1]))


class TestRegimes:
    def test_markov_regime_obeys_second_law(self, sd_resonant):
        ts = ThermalSpectrum(sd_resonant, 2.0)
        rho0 = gibbs_excited(2.0)
        tr = propagate(SystemState(0.6), ts, 1.0, MeasurementSchedule(), 400.0, MEOptions(dt_out=0.5))
        s = sigma(tr, rho0)
        assert np.min(s[tr.t > 100.0]) >= -1e-6

    def test_negative_sigma_in_oscillatory_window(self, sd_offset):
        ts = ThermalSpectrum(sd_offset, 2.0)
        rho0 = gibbs_excited(2.0)
        tr = propagate(SystemState(rho0), ts, 1.0, MeasurementSchedule.from_times([0.5, 8.24]), 12.0,
                       MEOptions(dt_out=0.01))
        s = sigma(tr, rho0)
        window = (tr.t > 0.5) & (tr.t < 8.24)
        assert np.min(s[window]) < 0 and np.max(s[window]) > 0
