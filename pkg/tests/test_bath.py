import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from zenotherm.bath import (INF, DiscreteBath, SpectralDensity, ThermalSpectrum, beta_from_alpha,
                            bose_occupation, discretize, eval_g0, eval_gt, gibbs_excited)


class TestSpectralDensity:
    def test_untruncated_lorentzian_weight(self):
        sd = SpectralDensity("lorentzian", 1.0, 0.1, 0.07, 0.0, INF)
        # mass left of the origin is cut; add it back analytically
        inside, _ = quad(sd, 0, 1, points=[1.0], limit=400)
        inside += quad(sd, 1, INF, limit=400)[0]
        cut = 0.07 ** 2 * (0.5 - math.atan(1.0 / 0.1) / math.pi)
        assert inside + cut == pytest.approx(0.07 ** 2, rel=1e-8)

    def test_gaussian_weight(self):
        sd = SpectralDensity("gaussian", 5.0, 0.3, 0.2)
        v, _ = quad(sd, 0, 10, points=[5.0])
        assert v == pytest.approx(0.04, rel=1e-9)

    def test_zero_outside_band(self, sd_resonant):
        w = np.array([-1.0, 0.0, 0.1, 0.2, 1.81, 5.0])
        assert np.all(eval_g0(sd_resonant, w) == 0)
        assert eval_g0(sd_resonant, 1.8) > 0

    def test_peak(self, sd_resonant):
        assert sd_resonant.peak_value() == pytest.approx(0.07 ** 2 / (math.pi * 0.1))

    @pytest.mark.parametrize("kw", [dict(shape="cauchy"), dict(width=0.0), dict(strength=-1.0),
                                    dict(omega_min=2.0, omega_max=1.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SpectralDensity(**kw)

    def test_from_correlation_time(self):
        assert SpectralDensity.from_correlation_time(10.0).width == pytest.approx(0.1)


class TestThermal:
    def test_bose(self):
        assert bose_occupation(1.0, 2.0) == pytest.approx(1 / (math.e ** 2 - 1))
        assert bose_occupation(1.0, INF) == 0.0
        with pytest.raises(ValueError):
            bose_occupation(0.0, 1.0)

    def test_zero_temperature_is_g0(self, sd_resonant):
        ts = ThermalSpectrum(sd_resonant)
        w = np.linspace(-2, 2, 41)
        assert np.allclose(eval_gt(ts, w), eval_g0(sd_resonant, w))

    @given(st.floats(0.25, 1.75), st.floats(0.1, 5.0))
    @settings(max_examples=50, deadline=None)
    def test_detailed_balance(self, w, beta):
        ts = ThermalSpectrum(SpectralDensity("lorentzian", 1.0, 0.1, 0.07, 0.2, 1.8), beta)
        assert eval_gt(ts, -w) == pytest.approx(math.exp(-beta * w) * eval_gt(ts, w), rel=1e-12)

    def test_needs_band_edge_at_finite_temperature(self):
        with pytest.raises(ValueError, match="omega_min"):
            ThermalSpectrum(SpectralDensity(omega_min=0.0), 1.0)
        # a Gaussian far from the origin is fine
        ThermalSpectrum(SpectralDensity("gaussian", 5.0, 0.1, 0.1), 1.0)

    def test_support(self, sd_resonant):
        assert ThermalSpectrum(sd_resonant).support_intervals() == [(0.2, 1.8)]
        assert ThermalSpectrum(sd_resonant, 2.0).support_intervals() == [(-1.8, -0.2), (0.2, 1.8)]
        assert ThermalSpectrum(sd_resonant, 2.0).alpha == 0.5


class TestDiscretize:
    @pytest.mark.parametrize("rule,n,tol", [("midpoint", 400, 1e-4), ("gauss", 60, 1e-6)])
    def test_weight_converges(self, sd_resonant, rule, n, tol):
        bath = discretize(sd_resonant, n, 0.2, 1.8, rule)
        ref, _ = quad(sd_resonant, 0.2, 1.8, points=[1.0], limit=200)
        assert bath.total_weight() == pytest.approx(ref, rel=tol)

    def test_thermal_weight(self, sd_resonant):
        bath = discretize(sd_resonant, 40, 0.2, 1.8)
        assert bath.thermal_weight(INF) == pytest.approx(bath.total_weight())
        assert bath.thermal_weight(1.0) > bath.total_weight()

    def test_midpoint_grid(self, sd_resonant):
        bath = discretize(sd_resonant, 4, 0.6, 1.4)
        assert np.allclose(bath.omegas, [0.7, 0.9, 1.1, 1.3])
        assert bath.d_omega == pytest.approx(0.2)

    def test_rejects(self, sd_resonant):
        with pytest.raises(ValueError):
            discretize(sd_resonant, 4, 0.0, 1.0)
        with pytest.raises(ValueError):
            discretize(sd_resonant, 0, 0.5, 1.0)
        with pytest.raises(ValueError):
            discretize(sd_resonant, 4, 0.5, 1.0, rule="simpson")
        with pytest.raises(ValueError):
            DiscreteBath(np.array([1.0, -1.0]), np.array([0.1, 0.1]))


class TestTemperatureHelpers:
    @given(st.floats(0.01, 10.0))
    def test_alpha_roundtrip(self, alpha):
        b = beta_from_alpha(alpha)
        assert 1.0 / b == pytest.approx(alpha)
        p = gibbs_excited(b)
        assert math.log((1 - p) / p) == pytest.approx(b, rel=1e-9)

    def test_zero_temperature(self):
        assert beta_from_alpha(0.0) == INF
        assert gibbs_excited(INF) == 0.0
        with pytest.raises(ValueError):
            beta_from_alpha(-0.1)
