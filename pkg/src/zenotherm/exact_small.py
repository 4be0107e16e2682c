"""Exact propagation of qubit + few bath modes on a truncated Fock space.

Basis ordering (stable): system qubit slowest with g = 0, e = 1; then bath
modes in ascending frequency, each with occupations 0..cutoff; detector
qubits fastest.  Operators are dense; the oracle is meant for dimensions of a
few hundred.

A finite-duration measurement couples a fresh detector qubit through
h(t) P_e (1 - X_D).  In the X_D eigenbasis the detector is frozen, so the
system+bath evolves with H_tot on the |+> branch and with H_tot + 2 h(t) O on
the |-> branch.  Tracing out the detector (started in |0>) leaves the Kraus
pair A = (U_+ + U_-)/2, B = (U_+ - U_-)/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from .bath import INF, DiscreteBath
from .errors import CapacityError, NumericalError
from .schedule import PULSE_WINDOW, MeasurementPulse, MeasurementSchedule, output_grid, pulse_profile
from .trajectory import Trajectory

DEFAULT_CAP = 4096


@dataclass(frozen=True)
class TruncatedHilbert:
    n_modes: int
    fock_cutoff: int = 2
    include_detectors: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.n_modes < 0 or self.fock_cutoff < 1 or self.include_detectors < 0:
            raise ValueError("invalid truncated space")
        if self.dim > self.cap:
            raise CapacityError(f"Hilbert dimension {self.dim} exceeds cap {self.cap}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) + (self.fock_cutoff + 1,) * self.n_modes + (2,) * self.include_detectors

    @property
    def dim(self) -> int:
        return 2 * (self.fock_cutoff + 1) ** self.n_modes * 2 ** self.include_detectors

    @property
    def bath_dim(self) -> int:
        return self.dim // 2


@dataclass(frozen=True)
class EnergyBreakdown:
    h_s: float
    h_b: float
    h_sb: float
    h_tot: float


def _embed(op: np.ndarray, slot: int, dims) -> np.ndarray:
    out = np.ones((1, 1))
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == slot else np.eye(d))
    return out


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


@dataclass
class HamiltonianParts:
    space: TruncatedHilbert
    omega_a: float
    h_s: np.ndarray
    h_b: np.ndarray
    h_sb: np.ndarray
    p_e: np.ndarray
    number_ops: list = field(default_factory=list)

    @property
    def h_tot(self) -> np.ndarray:
        return self.h_s + self.h_b + self.h_sb

    @property
    def h_0(self) -> np.ndarray:
        return self.h_s + self.h_b

    @cached_property
    def eig(self):
        return np.linalg.eigh(self.h_tot)


def build_parts(bath: DiscreteBath, omega_a: float, space: TruncatedHilbert) -> HamiltonianParts:
    if space.n_modes != bath.n_modes:
        raise ValueError("space and bath disagree on the number of modes")
    dims = space.dims
    order = np.argsort(bath.omegas, kind="stable")
    omegas, kappas = bath.omegas[order], bath.kappas[order]
    p_e = _embed(np.diag([0.0, 1.0]), 0, dims)
    sx = _embed(np.array([[0.0, 1.0], [1.0, 0.0]]), 0, dims)
    a = annihilation(space.fock_cutoff)
    h_b = np.zeros((space.dim, space.dim))
    coup = np.zeros_like(h_b)
    nums = []
    for m in range(space.n_modes):
        am = _embed(a, 1 + m, dims)
        n = am.T @ am
        nums.append(n)
        h_b += omegas[m] * n
        coup += kappas[m] * (am + am.T)
    return HamiltonianParts(space, omega_a, omega_a * p_e, h_b, sx @ coup, p_e, nums)


def build_hamiltonian(bath: DiscreteBath, omega_a: float, space: TruncatedHilbert) -> np.ndarray:
    """Full H_tot without the rotating-wave approximation."""
    h = build_parts(bath, omega_a, space).h_tot
    if not np.array_equal(h, h.T):
        raise NumericalError("Hamiltonian is not Hermitian")
    return h


def gibbs_state(h: np.ndarray, beta: float, degeneracy_tol: float = 1e-10) -> np.ndarray:
    """exp(-beta H)/Z; beta = inf gives the equal mixture over the ground space."""
    e, v = np.linalg.eigh(h)
    if beta == INF:
        w = (e - e[0] <= degeneracy_tol).astype(float)
    else:
        w = np.exp(-beta * (e - e[0]))
    w /= w.sum()
    return (v * w) @ v.conj().T


def product_state(parts: HamiltonianParts, rho_ee: float, beta_bath: float) -> np.ndarray:
    """diag(1 - rho_ee, rho_ee) (x) Gibbs(H_B, beta_bath)."""
    db = parts.space.bath_dim
    hb = parts.h_b[:db, :db]
    return np.kron(np.diag([1.0 - rho_ee, rho_ee]), gibbs_state(hb, beta_bath))


def propagate_exact(rho0: np.ndarray, h, t: float) -> np.ndarray:
    """exp(-iHt) rho0 exp(iHt); ``h`` may be a matrix or HamiltonianParts (cached eigh)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho0.copy()
    e, v = h.eig if isinstance(h, HamiltonianParts) else np.linalg.eigh(h)
    ph = np.exp(-1j * e * t)
    r = v.conj().T @ rho0 @ v
    r = ph[:, None] * r * ph.conj()[None, :]
    return v @ r @ v.conj().T


def _blocks(rho: np.ndarray, space: TruncatedHilbert):
    db = space.dim // 2
    return rho.reshape(2, db, 2, db)


def impulsive_measurement(rho: np.ndarray, space: TruncatedHilbert) -> np.ndarray:
    """Erase system coherences: rho -> P_g rho P_g + P_e rho P_e."""
    r = _blocks(rho, space).copy()
    r[0, :, 1, :] = 0.0
    r[1, :, 0, :] = 0.0
    return r.reshape(rho.shape)


def _pulse_propagators(parts: HamiltonianParts, pulse: MeasurementPulse, op: np.ndarray,
                       rtol: float):
    a, b = pulse.t_k - PULSE_WINDOW * pulse.tau_k, pulse.t_k + PULSE_WINDOW * pulse.tau_k
    h = parts.h_tot
    d = h.shape[0]
    e, v = parts.eig
    # interaction picture w.r.t. H_tot keeps the ODE non-stiff outside the pulse core
    op_e = v.conj().T @ op @ v

    def rhs(t, y):
        u = y.reshape(d, d)
        ph = np.exp(1j * e * (t - a))
        o_i = ph[:, None] * op_e * ph.conj()[None, :]
        return (-2j * pulse_profile(pulse, t) * (o_i @ u)).ravel()

    sol = solve_ivp(rhs, (a, b), np.eye(d, dtype=complex).ravel(), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise NumericalError(f"pulse propagation failed: {sol.message}")
    w = sol.y[:, -1].reshape(d, d)
    ph = np.exp(-1j * e * (b - a))
    u_plus = (v * ph) @ v.conj().T
    u_minus = u_plus @ (v @ w @ v.conj().T)
    return u_plus, u_minus, (a, b)


def finite_measurement(rho: np.ndarray, pulse: MeasurementPulse, parts: HamiltonianParts,
                       op: np.ndarray | None = None, rtol: float = 1e-10) -> np.ndarray:
    """Co-propagate with one fresh detector across the pulse window, then trace it out.

    ``rho`` is the state at the window start t_k - 8 tau; the result is the
    state at t_k + 8 tau.  ``op`` replaces the system factor P_e of the
    detector coupling (used for the commuting-generator null test).
    """
    if 2 * parts.space.dim > parts.space.cap:
        raise CapacityError("appending a detector qubit exceeds the dimension cap")
    o = parts.p_e if op is None else op
    u_p, u_m, _ = _pulse_propagators(parts, pulse, o, rtol)
    ka, kb = 0.5 * (u_p + u_m), 0.5 * (u_p - u_m)
    return ka @ rho @ ka.conj().T + kb @ rho @ kb.conj().T


def energies(rho: np.ndarray, parts: HamiltonianParts) -> EnergyBreakdown:
    def ev(o):
        return float(np.real(np.einsum("ij,ji->", o, rho)))
    hs, hb, hsb = ev(parts.h_s), ev(parts.h_b), ev(parts.h_sb)
    return EnergyBreakdown(hs, hb, hsb, hs + hb + hsb)


def excited_population(rho: np.ndarray, space: TruncatedHilbert) -> float:
    r = _blocks(rho, space)
    return float(np.real(np.trace(r[1, :, 1, :])))


def reduced_system(rho: np.ndarray, space: TruncatedHilbert) -> np.ndarray:
    return np.einsum("iaja->ij", _blocks(rho, space))


def mode_occupations(rho: np.ndarray, parts: HamiltonianParts) -> np.ndarray:
    return np.array([float(np.real(np.einsum("ij,ji->", n, rho))) for n in parts.number_ops])


def population_derivatives(rho: np.ndarray, parts: HamiltonianParts) -> tuple[float, float]:
    """(d/dt, d^2/dt^2) of rho_ee from commutators with H_tot."""
    h, p = parts.h_tot, parts.p_e
    c1 = 1j * (h @ p - p @ h)
    c2 = h @ (h @ p - p @ h) - (h @ p - p @ h) @ h
    d1 = float(np.real(np.einsum("ij,ji->", c1, rho)))
    d2 = -float(np.real(np.einsum("ij,ji->", c2, rho)))
    return d1, d2


def run_exact(parts: HamiltonianParts, rho0: np.ndarray, schedule: MeasurementSchedule,
              t_end: float, dt_out: float = 0.05, occupations_every: int = 0,
              pulse_rtol: float = 1e-10) -> Trajectory:
    """Sampled trajectory through a schedule of impulsive or finite measurements.

    Samples inside a finite pulse window are not produced; the window's end
    point is sampled instead.
    """
    space = parts.space
    sched = schedule.within(t_end)
    extra = []
    for ev in sched.events:
        extra += [ev.t] if ev.tau == 0 else [ev.t - PULSE_WINDOW * ev.tau, ev.t + PULSE_WINDOW * ev.tau]
    grid = output_grid(t_end, dt_out, [x for x in extra if 0 < x < t_end])
    for ev in sched.events:
        if ev.tau > 0:
            lo, hi = ev.window()
            if lo < 0 or hi > t_end:
                raise ValueError("finite pulse window must lie inside [0, t_end]")
            grid = grid[(grid <= lo) | (grid >= hi)]
    stops = []
    for ev in sched.events:
        stops.append((ev.t, ev.t, ev) if ev.tau == 0 else (*ev.window(), ev))
    for (_, b0, _), (a1, _, _) in zip(stops, stops[1:]):
        if a1 < b0:
            raise ValueError("finite measurement windows overlap")

    rho = rho0.astype(complex)
    t_now = 0.0
    rows, ens, occ, occ_t = [], [], [], []
    k = 0
    for i, t in enumerate(grid):
        while k < len(stops) and stops[k][1] <= t + 1e-12:
            a, b, ev = stops[k]
            rho = propagate_exact(rho, parts, a - t_now)
            if ev.tau == 0:
                rho = impulsive_measurement(rho, space)
            else:
                rho = finite_measurement(rho, MeasurementPulse(ev.t, ev.tau), parts, rtol=pulse_rtol)
            t_now = b
            k += 1
        rho_t = propagate_exact(rho, parts, t - t_now)
        rows.append(excited_population(rho_t, space))
        e = energies(rho_t, parts)
        ens.append((e.h_s, e.h_b, e.h_sb, e.h_tot))
        if occupations_every and i % occupations_every == 0:
            occ.append(mode_occupations(rho_t, parts))
            occ_t.append(t)
        rho, t_now = rho_t, t
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > 1e-8:
        raise NumericalError(f"trace drifted to {tr}")
    en = np.array(ens)
    return Trajectory(
        backend="exact",
        t=grid,
        rho_ee=np.array(rows),
        energies={"h_s": en[:, 0], "h_b": en[:, 1], "h_sb": en[:, 2], "h_tot": en[:, 3]},
        occupations=np.array(occ) if occ else None,
        occupation_t=np.array(occ_t) if occ else None,
        events=list(sched.events),
        metadata={"omega_a": parts.omega_a, "n_modes": space.n_modes,
                  "fock_cutoff": space.fock_cutoff, "dim": space.dim},
    )
