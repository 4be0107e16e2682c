import numpy as np
import pytest

from zenotherm.bath import INF, DiscreteBath, SpectralDensity, discretize
from zenotherm.errors import CapacityError
from zenotherm.exact_small import TruncatedHilbert, build_hamiltonian, build_parts, product_state, run_exact
from zenotherm.schedule import MeasurementEvent, MeasurementSchedule
from zenotherm.two_quanta import (TwoQuantaBasis, TwoQuantaOptions, TwoQuantaState, _merge,
                                  mode_excitations, projected_hamiltonian, propagate_two_quanta)


@pytest.fixture(scope="module")
def small_bath():
    sd = SpectralDensity("lorentzian", 1.0, 0.1, 0.07, 0.2, 1.8)
    return discretize(sd, 4, 0.6, 1.4)


class TestBasis:
    def test_layout(self):
        b = TwoQuantaBasis(5)
        assert b.dim == 1 + 5 + 5 + 10
        m = b.pair_index()
        assert m[1, 3] == m[3, 1] and m[2, 2] == -1
        assert sorted(m[m >= 0].ravel().tolist()) == sorted(list(range(b.g11.start, b.dim)) * 2)

    def test_projection_of_exact_hamiltonian(self):
        # two modes, cutoff 2: exact index = s*9 + n1*3 + n2
        bath = DiscreteBath(np.array([0.8, 1.3]), np.array([0.11, 0.07]))
        full = build_hamiltonian(bath, 1.0, TruncatedHilbert(2, 2))
        keep = [0, 12, 10, 6, 2, 4]  # g00, e10, e01, g20, g02, g11
        h = projected_hamiltonian(bath, 1.0, TwoQuantaBasis(2)).toarray()
        assert np.allclose(h, full[np.ix_(keep, keep)], atol=1e-15)

    def test_excitations(self):
        s = TwoQuantaState.ground_vacuum(3)
        assert np.all(mode_excitations(s) == 0) and s.norm == 1.0 and s.rho_ee == 0.0
        s.psi[0, :] = 0.0
        s.psi[0, s.basis.g2.start + 1] = 1.0
        assert np.allclose(mode_excitations(s), [0, 2, 0])
        s.psi[0, :] = 0.0
        s.psi[0, s.basis.pair_index()[0, 2]] = 1.0
        assert np.allclose(mode_excitations(s), [1, 0, 1])
        assert s.alpha_g11[0, 0, 2] == 1.0

    def test_merge_preserves_mixture(self):
        rng = np.random.default_rng(1)
        psi = rng.normal(size=(8, 6)) + 1j * rng.normal(size=(8, 6))
        psi[4:] = psi[:4] * 0.5  # rank 4
        m = _merge(psi)
        assert m.shape[0] == 4
        assert np.allclose(m.conj().T @ m, psi.conj().T @ psi)


class TestAgainstExact:
    @pytest.mark.parametrize("tau", [0.0, 0.11])
    def test_rho_ee(self, small_bath, tau):
        sched = MeasurementSchedule.from_times([20.0, 24.0], tau=tau)
        tq = propagate_two_quanta(small_bath, 1.0, sched, 30.0, TwoQuantaOptions(dt_out=0.5))
        parts = build_parts(small_bath, 1.0, TruncatedHilbert(4, 2))
        ex = run_exact(parts, product_state(parts, 0.0, INF), sched, 30.0, 0.5)
        assert np.allclose(tq.t, ex.t)
        assert np.max(np.abs(tq.rho_ee - ex.rho_ee)) < 1e-4
        assert tq.metadata["norm_drift"] < 1e-9


class TestBranches:
    def test_impulsive_event_keeps_population(self, small_bath):
        sched = MeasurementSchedule.from_times([10.0])
        a = propagate_two_quanta(small_bath, 1.0, sched, 12.0, TwoQuantaOptions(dt_out=0.25))
        b = propagate_two_quanta(small_bath, 1.0, MeasurementSchedule(), 10.0,
                                 TwoQuantaOptions(dt_out=0.25))
        i = int(np.flatnonzero(a.event_mask())[0])
        assert a.rho_ee[i] == pytest.approx(b.rho_ee[-1], abs=1e-12)
        assert a.metadata["branches"] == 2

    def test_capacity_and_merging(self, small_bath):
        sched = MeasurementSchedule.from_times([2.0, 3.0, 4.0, 5.0, 6.0, 8.0])
        with pytest.raises(CapacityError):
            propagate_two_quanta(small_bath, 1.0, sched, 9.0, TwoQuantaOptions(max_detectors=2))
        ref = propagate_two_quanta(small_bath, 1.0, sched, 9.0, TwoQuantaOptions(dt_out=0.5))
        merged = propagate_two_quanta(small_bath, 1.0, sched, 9.0,
                                      TwoQuantaOptions(dt_out=0.5, max_detectors=2, merge=True))
        assert np.allclose(ref.rho_ee, merged.rho_ee, atol=1e-12)
        # merging is exact: the mixture rank is bounded by the sector dimension (15)
        assert ref.metadata["branches"] == 64
        assert merged.metadata["branches"] <= 32

    def test_occupations_sampled(self, small_bath):
        tr = propagate_two_quanta(small_bath, 1.0, MeasurementSchedule(), 5.0,
                                  TwoQuantaOptions(dt_out=0.5, occupations_every=2))
        assert tr.occupations.shape == (6, 4)
        assert tr.occupation_t[1] == pytest.approx(1.0)

    def test_rejects(self, small_bath):
        with pytest.raises(ValueError):
            propagate_two_quanta(small_bath, 1.0, MeasurementSchedule(), 0.0)
        with pytest.raises(ValueError):
            propagate_two_quanta(small_bath, 1.0, MeasurementSchedule.from_times([0.5], tau=0.1), 3.0)
        with pytest.raises(ValueError):
            overlap = MeasurementSchedule((MeasurementEvent(2.0, 0.1), MeasurementEvent(2.3)))
            propagate_two_quanta(small_bath, 1.0, overlap, 4.0)
