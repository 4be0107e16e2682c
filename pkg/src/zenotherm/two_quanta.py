"""Two-quanta wavefunction hierarchy with detector-branch bookkeeping.

Each detector branch l carries a state in the sector spanned by

    |g,0>,  |e,1_k>,  |g,2_k>,  |g,1_k 1_k'> (k < k'),

which is closed under the full (non-RWA) Hamiltonian up to the dropped
three-quanta states.  Branch amplitudes are stored as rows of an
(n_branches, dim) array; detector k is bit k of the row index.  Free
evolution uses the exact eigendecomposition of the projected Hamiltonian;
pulse windows are integrated with an explicit Runge-Kutta method, the
coupling h_k(t) P_e (1 - X_k) mixing row l with row l ^ (1 << k).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .bath import DiscreteBath
from .errors import CapacityError, NumericalError, UnitarityError
from .schedule import MeasurementPulse, MeasurementSchedule, output_grid, pulse_profile, pulse_windows
from .trajectory import Trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TwoQuantaOptions:
    dt_out: float = 0.05
    rtol: float = 1e-9
    norm_tol: float = 1e-6
    max_detectors: int = 12
    merge: bool = False
    occupations_every: int = 20


class TwoQuantaBasis:
    """Index layout: [g0 | e_k (N) | g2_k (N) | g11_{k<k'} (N(N-1)/2)]."""

    def __init__(self, n_modes: int):
        n = n_modes
        self.n = n
        self.e = slice(1, 1 + n)
        self.g2 = slice(1 + n, 1 + 2 * n)
        iu, ju = np.triu_indices(n, k=1)
        self.pairs = (iu, ju)
        self.g11 = slice(1 + 2 * n, 1 + 2 * n + len(iu))
        self.dim = 1 + 2 * n + len(iu)

    def pair_index(self):
        """(N, N) map from mode pair to g11 position, -1 on the diagonal."""
        m = -np.ones((self.n, self.n), dtype=int)
        iu, ju = self.pairs
        pos = np.arange(len(iu)) + self.g11.start
        m[iu, ju] = pos
        m[ju, iu] = pos
        return m


@dataclass
class TwoQuantaState:
    """Branch amplitudes; the view properties follow the basis layout."""

    psi: np.ndarray
    basis: TwoQuantaBasis

    @property
    def alpha_g0(self):
        return self.psi[:, 0]

    @property
    def alpha_e(self):
        return self.psi[:, self.basis.e]

    @property
    def alpha_g2(self):
        return self.psi[:, self.basis.g2]

    @property
    def alpha_g11(self):
        """(n_branches, N, N) strictly upper triangular."""
        n = self.basis.n
        out = np.zeros((self.psi.shape[0], n, n), dtype=complex)
        iu, ju = self.basis.pairs
        out[:, iu, ju] = self.psi[:, self.basis.g11]
        return out

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2))

    @property
    def rho_ee(self) -> float:
        return float(np.sum(np.abs(self.alpha_e) ** 2))

    @classmethod
    def ground_vacuum(cls, n_modes: int) -> "TwoQuantaState":
        b = TwoQuantaBasis(n_modes)
        psi = np.zeros((1, b.dim), dtype=complex)
        psi[0, 0] = 1.0
        return cls(psi, b)


def mode_excitations(state: TwoQuantaState) -> np.ndarray:
    """Expected quanta per mode, summed over branches."""
    b = state.basis
    p = np.abs(state.psi) ** 2
    occ = p[:, b.e].sum(0) + 2.0 * p[:, b.g2].sum(0)
    iu, ju = b.pairs
    w = p[:, b.g11].sum(0)
    occ += np.bincount(iu, w, minlength=b.n) + np.bincount(ju, w, minlength=b.n)
    return occ


def projected_hamiltonian(bath: DiscreteBath, omega_a: float, basis: TwoQuantaBasis) -> sp.csr_matrix:
    n = basis.n
    w, k = bath.omegas, bath.kappas
    iu, ju = basis.pairs
    diag = np.concatenate([[0.0], omega_a + w, 2 * w, w[iu] + w[ju]])
    rows, cols, vals = [], [], []

    def link(r, c, v):
        rows.extend([r, c])
        cols.extend([c, r])
        vals.extend([v, v])

    e0, g20 = basis.e.start, basis.g2.start
    for lam in range(n):
        link(e0 + lam, 0, k[lam])
        link(g20 + lam, e0 + lam, np.sqrt(2.0) * k[lam])
    for p, (a, b) in enumerate(zip(iu, ju)):
        q = basis.g11.start + p
        link(q, e0 + a, k[b])
        link(q, e0 + b, k[a])
    off = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
    return (off + sp.diags(diag)).tocsr()


def _merge(psi: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Smallest set of rows with the same sum_l |psi_l><psi_l|."""
    u, s, vh = np.linalg.svd(psi, full_matrices=False)
    keep = s > tol * max(s[0], 1e-300)
    return s[keep, None] * vh[keep]


def propagate_two_quanta(bath: DiscreteBath, omega_a: float, schedule: MeasurementSchedule,
                         t_end: float, opts: TwoQuantaOptions = TwoQuantaOptions(),
                         state0: TwoQuantaState | None = None) -> Trajectory:
    """Evolve from the ground-vacuum product state (or ``state0``) through a schedule.

    Samples inside finite pulse windows are skipped; rho_ee is the
    branch-summed excited population.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if bath.n_modes < 1:
        raise ValueError("need at least one bath mode")
    sched = schedule.within(t_end)
    st = state0 or TwoQuantaState.ground_vacuum(bath.n_modes)
    basis = st.basis
    h = projected_hamiltonian(bath, omega_a, basis)
    evals, evecs = np.linalg.eigh(h.toarray())
    ve = evecs[basis.e]

    windows = pulse_windows(sched.events)
    for a, b, _ in windows:
        if a < 0 or b > t_end:
            raise ValueError("finite pulse window must lie inside [0, t_end]")
    # stops: (start, end, [events]); impulsive events are zero-length stops
    stops = [(a, b, evs) for a, b, evs in windows]
    stops += [(e.t, e.t, [e]) for e in sched.events if e.tau == 0]
    stops.sort(key=lambda s: s[0])
    for (_, b0, _), (a1, _, _) in zip(stops, stops[1:]):
        if a1 < b0:
            raise ValueError("impulsive event falls inside a finite pulse window")

    extra = sorted({x for a, b, _ in stops for x in (a, b) if 0 < x < t_end})
    grid = output_grid(t_end, opts.dt_out, extra)
    for a, b, _ in stops:
        if b > a:
            grid = grid[(grid <= a) | (grid >= b)]

    psi = st.psi.astype(complex)
    n_det = 0
    coeff = psi @ evecs  # eigen-coefficients at time t_ref
    t_ref = 0.0
    out, occ, occ_t = [], [], []
    k = 0

    def at(t):
        return (coeff * np.exp(-1j * evals * (t - t_ref))) @ evecs.T

    def add_detector(psi, n_det):
        if n_det + 1 > opts.max_detectors:
            if not opts.merge:
                raise CapacityError(
                    f"more than {opts.max_detectors} detector qubits; enable branch merging")
            psi = _merge(psi)
            n_det = max(0, int(np.ceil(np.log2(psi.shape[0]))))
            pad = (1 << n_det) - psi.shape[0]
            psi = np.vstack([psi, np.zeros((pad, psi.shape[1]), complex)])
        return np.vstack([psi, np.zeros_like(psi)]), n_det + 1

    for i, t in enumerate(grid):
        while k < len(stops) and stops[k][1] <= t + 1e-12:
            a, b, evs = stops[k]
            psi = at(a)
            if b == a:
                psi, n_det = add_detector(psi, n_det)
                half = psi.shape[0] // 2
                # branch l -> (P_g psi_l, P_e psi_l) with the new bit marking the outcome
                psi[half:, basis.e] = psi[:half, basis.e]
                psi[:half, basis.e] = 0.0
            else:
                bits = []
                for ev in evs:
                    psi, n_det = add_detector(psi, n_det)
                    bits.append((n_det - 1, MeasurementPulse(ev.t, ev.tau)))
                psi = _pulse_window(psi, h, basis, bits, a, b, opts.rtol)
            coeff, t_ref = psi @ evecs, b
            k += 1
        c = coeff * np.exp(-1j * evals * (t - t_ref))
        amp_e = c @ ve.T
        out.append(float(np.sum(np.abs(amp_e) ** 2)))
        if opts.occupations_every and i % opts.occupations_every == 0:
            s = TwoQuantaState(c @ evecs.T, basis)
            occ.append(mode_excitations(s))
            occ_t.append(t)
    final = TwoQuantaState(at(grid[-1]), basis)
    drift = abs(final.norm - 1.0)
    if drift > opts.norm_tol:
        raise UnitarityError(f"norm drifted by {drift:.3e}")
    return Trajectory(
        backend="two_quanta",
        t=grid,
        rho_ee=np.array(out),
        occupations=np.array(occ) if occ else None,
        occupation_t=np.array(occ_t) if occ else None,
        events=list(sched.events),
        metadata={"omega_a": omega_a, "n_modes": bath.n_modes, "branches": final.psi.shape[0],
                  "norm_drift": drift},
    )


def _pulse_window(psi, h, basis, bits, a, b, rtol):
    shape = psi.shape
    e = basis.e

    def rhs(t, y):
        p = y.reshape(shape)
        d = (h @ p.T).T
        for bit, pulse in bits:
            hk = pulse_profile(pulse, t)
            if hk == 0.0:
                continue
            flip = np.arange(shape[0]) ^ (1 << bit)
            d[:, e] += hk * (p[:, e] - p[flip][:, e])
        return (-1j * d).ravel()

    sol = solve_ivp(rhs, (a, b), psi.ravel(), method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise NumericalError(f"pulse window integration failed: {sol.message}")
    return sol.y[:, -1].reshape(shape)
