"""Second-order population rate equations under impulsive measurements.

    d rho_ee / dt = R_g(c) rho_gg - R_e(c) rho_ee

where ``c`` is the rate clock: time since the last correlation-erasing event
(a measurement, or the coupling switch-on for a product initial state).  A
measurement leaves the populations alone and resets the clock to zero, so the
non-Markovian rates restart from R(0) = 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .bath import ThermalSpectrum, gibbs_excited
from .errors import IntegrationBlowupError
from .rates import RateTable, tabulate_rates, zeno_slope
from .schedule import MeasurementSchedule, output_grid
from .trajectory import Trajectory

log = logging.getLogger(__name__)

BLOWUP_EPS = 1e-9


@dataclass(frozen=True)
class SystemState:
    rho_ee: float
    clock: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.rho_ee <= 1.0):
            raise ValueError(f"rho_ee={self.rho_ee} outside [0, 1]")
        if self.clock < 0:
            raise ValueError("clock must be non-negative")

    @property
    def rho_gg(self) -> float:
        return 1.0 - self.rho_ee

    @classmethod
    def gibbs(cls, beta: float, omega_a: float = 1.0) -> "SystemState":
        return cls(gibbs_excited(beta, omega_a))

    @classmethod
    def ground(cls) -> "SystemState":
        return cls(0.0)


@dataclass(frozen=True)
class MEOptions:
    tol: float = 1e-10
    dt_out: float = 0.05
    rate_tol: float = 1e-6
    method: str = "DOP853"


def apply_measurement(state: SystemState) -> SystemState:
    """Nonselective energy measurement: populations kept, rate clock reset."""
    return replace(state, clock=0.0)


def rhs(rho_ee, r_e, r_g):
    return r_g * (1.0 - rho_ee) - r_e * rho_ee


def _segments(schedule: MeasurementSchedule, t_end: float):
    times = [e.t for e in schedule.events]
    edges = [0.0] + times + [t_end]
    return list(zip(edges[:-1], edges[1:]))


def required_clock(state0: SystemState, schedule: MeasurementSchedule, t_end: float) -> float:
    sched = schedule.within(t_end)
    segs = _segments(sched, t_end)
    longest = max(b - a for a, b in segs[1:]) if len(segs) > 1 else 0.0
    return max(state0.clock + segs[0][1] - segs[0][0], longest)


def propagate(state0: SystemState, ts: ThermalSpectrum, omega_a: float,
              schedule: MeasurementSchedule, t_end: float, opts: MEOptions = MEOptions(),
              table: RateTable | None = None) -> Trajectory:
    """Integrate the rate equations on [0, t_end] through the measurement schedule.

    Output samples sit on the ``opts.dt_out`` grid plus every measurement time;
    a sample at a measurement time reports the post-measurement state (clock
    zero).  A supplied ``table`` is reused when it covers the needed clock range.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    late = [e for e in schedule.events if e.t > t_end or e.t <= 0]
    if late:
        log.warning("ignoring %d measurement(s) outside (0, t_end]", len(late))
    sched = schedule.within(t_end)
    if any(e.tau > 0 for e in sched.events):
        log.warning("master equation treats finite-duration measurements as impulsive")
    need = required_clock(state0, sched, t_end)
    if table is None or table.t_max < need:
        table = tabulate_rates(ts, omega_a, need, tol=opts.rate_tol)

    ev_times = [e.t for e in sched.events]
    grid = output_grid(t_end, opts.dt_out, ev_times)
    out_rho = np.empty(len(grid))
    out_clock = np.empty(len(grid))

    rho = state0.rho_ee
    clock0 = state0.clock
    for k, (a, b) in enumerate(_segments(sched, t_end)):
        if k > 0:
            clock0 = 0.0  # a measurement happened at a
        # segment end points are always on the grid; the shared boundary
        # sample is overwritten by the next segment (post-measurement)
        sel = (grid >= a) & (grid <= b)
        t_eval = grid[sel]

        def f(t, y, a=a, c0=clock0):
            re, rg = table.scalar(c0 + t - a)
            return [rhs(y[0], re, rg)]

        if b == a:
            vals = np.full(len(t_eval), rho)
        else:
            sol = solve_ivp(f, (a, b), [rho], method=opts.method, t_eval=t_eval,
                            rtol=opts.tol, atol=opts.tol * 1e-2)
            if not sol.success:
                raise IntegrationBlowupError(f"ODE solver failed on [{a}, {b}]: {sol.message}")
            vals = sol.y[0]
        bad = (vals < -BLOWUP_EPS) | (vals > 1 + BLOWUP_EPS)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise IntegrationBlowupError(
                f"rho_ee left [0, 1] at t={t_eval[i]:.6g} (value {vals[i]:.3e})")
        out_rho[sel] = vals
        out_clock[sel] = clock0 + t_eval - a
        rho = float(vals[-1])

    r_e, r_g = table(out_clock)
    r_e, r_g = np.asarray(r_e), np.asarray(r_g)
    meta = {
        "omega_a": omega_a,
        "beta_bath": ts.beta,
        "spectrum": ts.base,
        "rho_ee0": state0.rho_ee,
        "clock0": state0.clock,
        "rate_table_points": len(table.times),
        "tol": opts.tol,
    }
    return Trajectory(
        backend="master_eq",
        t=grid,
        rho_ee=out_rho,
        r_e=r_e,
        r_g=r_g,
        rho_dot=rhs(out_rho, r_e, r_g),
        events=list(sched.events),
        metadata=meta,
    )


def zeno_heating_check(state: SystemState, ts: ThermalSpectrum, dt_small: float,
                       omega_a: float = 1.0, rtol: float = 2e-2) -> float:
    """Finite-difference d(rho_ee - rho_gg)/dt at clock = dt_small after a measurement.

    The value is compared with the universal Zeno heating law
    4 * Rdot0 * dt_small * (rho_gg - rho_ee); a mismatch beyond ``rtol`` is
    logged rather than raised.
    """
    s = apply_measurement(state)
    table = tabulate_rates(ts, omega_a, 2 * dt_small, tol=1e-14, quad_tol=1e-16)
    traj = propagate(s, ts, omega_a, MeasurementSchedule(), 2 * dt_small,
                     MEOptions(tol=1e-13, dt_out=dt_small), table=table)
    w = 2 * traj.rho_ee - 1
    value = float((w[-1] - w[0]) / (traj.t[-1] - traj.t[0]))
    predicted = 4 * zeno_slope(ts) * dt_small * (s.rho_gg - s.rho_ee)
    scale = max(abs(predicted), 1e-300)
    if abs(value - predicted) > rtol * scale and abs(value - predicted) > 1e-14:
        log.warning("Zeno heating check: finite difference %.6e vs law %.6e", value, predicted)
    return value


def gibbs_target(ts: ThermalSpectrum, omega_a: float = 1.0) -> float:
    return gibbs_excited(ts.beta, omega_a)


def interval_response(ts: ThermalSpectrum, omega_a: float, horizon: float,
                      dt: float = 0.01, opts: MEOptions = MEOptions(),
                      table: RateTable | None = None):
    """Affine response of one measurement interval.

    The rate equation is linear in rho_ee and the clock restarts at every
    measurement, so after elapsed time s since a measurement
    ``rho_ee(s) = a(s) + b(s) * rho_start``.  Returns (s, a, b) from two
    propagations (rho_start = 0 and 1).
    """
    o = replace(opts, dt_out=dt)
    lo = propagate(SystemState(0.0), ts, omega_a, MeasurementSchedule(), horizon, o, table)
    hi = propagate(SystemState(1.0), ts, omega_a, MeasurementSchedule(), horizon, o, table)
    return lo.t, lo.rho_ee, hi.rho_ee - lo.rho_ee


def crossing_pairs(traj: Trajectory, min_gap: float = 0.5):
    """Pairs of times where one trajectory takes the same rho_ee with different slopes.

    Demonstrates that the reduced evolution is not generated by a time-local
    invertible map: the same population recurs with a different subsequent
    evolution.  Returns a list of (t1, t2, rho, slope1, slope2).
    """
    t, r = traj.t, traj.rho_ee
    d = traj.rho_dot if traj.rho_dot is not None else np.gradient(r, t)
    out = []
    for i in range(1, len(t)):
        for j in range(i + 1, len(t) - 1):
            if t[j] - t[i] < min_gap:
                continue
            lo, hi = min(r[j], r[j + 1]), max(r[j], r[j + 1])
            if lo <= r[i] <= hi and hi > lo:
                frac = (r[i] - r[j]) / (r[j + 1] - r[j])
                tj = t[j] + frac * (t[j + 1] - t[j])
                dj = d[j] + frac * (d[j + 1] - d[j])
                if not math.isclose(d[i], dj, rel_tol=1e-3, abs_tol=1e-12):
                    out.append((float(t[i]), float(tj), float(r[i]), float(d[i]), float(dj)))
                    break
        if len(out) >= 8:
            break
    return out
