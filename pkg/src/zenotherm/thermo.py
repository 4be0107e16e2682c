"""Thermodynamic observables of the two-level system.

Relative entropy to a reference state, its negative time derivative sigma(t),
and the spin temperature.  All states are diagonal, so every quantity is a
function of the excited population alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bath import INF, gibbs_excited
from .trajectory import Trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyRecord:
    t: float
    rel_entropy: float
    sigma: float
    spin_beta: float


def _xlogy(x, y):
    # x*ln(x/y) with 0*ln(0/y) = 0 and x>0, y=0 -> +inf
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return INF
    return x * math.log(x / y)


def relative_entropy(rho_ee: float, rho0_ee: float) -> float:
    """S(rho||rho0) in nats for diagonal qubit states."""
    for v in (rho_ee, rho0_ee):
        if not 0.0 <= v <= 1.0:
            raise ValueError("populations must lie in [0, 1]")
    return _xlogy(rho_ee, rho0_ee) + _xlogy(1.0 - rho_ee, 1.0 - rho0_ee)


def spin_temperature(rho_ee: float, omega_a: float = 1.0) -> float:
    """Inverse spin temperature ln(rho_gg/rho_ee)/omega_a (may be negative or infinite)."""
    if not 0.0 <= rho_ee <= 1.0:
        raise ValueError("rho_ee must lie in [0, 1]")
    if rho_ee == 0.0:
        return INF
    if rho_ee == 1.0:
        return -INF
    return math.log((1.0 - rho_ee) / rho_ee) / omega_a


def _log_ratio(rho, rho0):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(rho * (1.0 - rho0)) - np.log(rho0 * (1.0 - rho))


def sigma_from(rho, rho_dot, rho0_ee: float) -> np.ndarray:
    """sigma = -rho_dot * ln[rho (1-rho0) / (rho0 (1-rho))]."""
    rho = np.asarray(rho, dtype=float)
    rho_dot = np.asarray(rho_dot, dtype=float)
    lr = _log_ratio(rho, rho0_ee)
    with np.errstate(invalid="ignore"):
        s = np.where(rho_dot == 0.0, 0.0, -rho_dot * lr)
    n_bad = int(np.count_nonzero(~np.isfinite(s)))
    if n_bad:
        log.warning("sigma is infinite at %d sample(s) on the population boundary", n_bad)
    return s


def centered_derivative(traj: Trajectory) -> np.ndarray:
    """Second-order finite differences, one-sided at ends and around events.

    A measurement puts a kink into rho_ee, so samples at an event time use the
    forward (post-measurement) stencil.
    """
    t, r = traj.t, traj.rho_ee
    d = np.gradient(r, t, edge_order=2) if len(t) > 2 else np.gradient(r, t)
    for i in np.flatnonzero(traj.event_mask()):
        if i + 2 < len(t):
            h1, h2 = t[i + 1] - t[i], t[i + 2] - t[i]
            d[i] = (-(h1 + h2) / (h1 * h2) * r[i] + h2 / (h1 * (h2 - h1)) * r[i + 1]
                    - h1 / (h2 * (h2 - h1)) * r[i + 2])
    return d


def reference_population(reference, beta_bath: float = INF, rho_pre: float | None = None,
                         omega_a: float = 1.0) -> float:
    """Resolve a reference option: 'gibbs', 'pre_measurement' or an explicit population."""
    if isinstance(reference, str):
        if reference == "gibbs":
            return gibbs_excited(beta_bath, omega_a)
        if reference == "pre_measurement":
            if rho_pre is None:
                raise ValueError("pre_measurement reference needs the pre-measurement population")
            return float(rho_pre)
        raise ValueError(f"unknown reference {reference!r}")
    v = float(reference)
    if not 0.0 <= v <= 1.0:
        raise ValueError("reference population must lie in [0, 1]")
    return v


def sigma(traj: Trajectory, rho0_ee: float) -> np.ndarray:
    """sigma(t) along a trajectory; uses the propagator's rho_dot when present."""
    rd = traj.rho_dot if traj.rho_dot is not None else centered_derivative(traj)
    return sigma_from(traj.rho_ee, rd, rho0_ee)


def attach_entropy(traj: Trajectory, rho0_ee: float) -> Trajectory:
    traj.sigma = sigma(traj, rho0_ee)
    traj.metadata["rho0_ee"] = rho0_ee
    return traj


def entropy_records(traj: Trajectory, rho0_ee: float, omega_a: float = 1.0) -> list[EntropyRecord]:
    s = sigma(traj, rho0_ee)
    return [EntropyRecord(float(t), relative_entropy(float(r), rho0_ee), float(si),
                          spin_temperature(float(r), omega_a))
            for t, r, si in zip(traj.t, traj.rho_ee, s)]


def sign_law_violations(traj: Trajectory, rho0_ee: float, tol: float = 1e-8) -> np.ndarray:
    """Indices where sign(sigma) disagrees with -sign(d|rho - rho0|/dt).

    Samples whose derivative magnitude is below ``tol`` (or that sit on the
    reference itself) are not tested.
    """
    rd = traj.rho_dot if traj.rho_dot is not None else centered_derivative(traj)
    dist_rate = np.sign(traj.rho_ee - rho0_ee) * rd
    s = sigma_from(traj.rho_ee, rd, rho0_ee)
    testable = (np.abs(rd) > tol) & (traj.rho_ee != rho0_ee)
    bad = testable & ((s > 0) != (dist_rate < 0))
    return np.flatnonzero(bad)


def interval_minima(traj: Trajectory, values=None) -> list[float]:
    """Minimum of ``values`` (default sigma) over each inter-measurement interval."""
    v = traj.sigma if values is None else np.asarray(values)
    if v is None:
        raise ValueError("trajectory has no sigma column; call attach_entropy first")
    edges = [traj.t[0]] + [e.t for e in traj.events] + [traj.t[-1] + 1.0]
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (traj.t >= a) & (traj.t < b)
        if sel.any():
            out.append(float(np.min(v[sel])))
    return out
