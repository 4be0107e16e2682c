"""Measurement schedules and the smooth detector-coupling pulse."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

IMPULSIVE = "impulsive"
FINITE = "finite"

# half-width of a finite pulse window in units of tau; the neglected tail of
# the pulse area is 1 - tanh(8) ~ 2e-7 of the total
PULSE_WINDOW = 8.0


@dataclass(frozen=True)
class MeasurementEvent:
    t: float
    tau: float = 0.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("measurement duration must be >= 0")

    @property
    def kind(self) -> str:
        return IMPULSIVE if self.tau == 0 else FINITE

    def window(self, width: float = PULSE_WINDOW) -> tuple[float, float]:
        return self.t - width * self.tau, self.t + width * self.tau


@dataclass(frozen=True)
class MeasurementSchedule:
    events: tuple[MeasurementEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ev = tuple(self.events)
        object.__setattr__(self, "events", ev)
        times = [e.t for e in ev]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("measurement times must be strictly increasing")

    @classmethod
    def from_times(cls, times, tau: float = 0.0) -> "MeasurementSchedule":
        return cls(tuple(MeasurementEvent(float(t), tau) for t in times))

    @classmethod
    def from_intervals(cls, intervals, start: float = 0.0, tau: float = 0.0) -> "MeasurementSchedule":
        return cls.from_times(start + np.cumsum(np.asarray(intervals, dtype=float)), tau)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.t for e in self.events])

    def within(self, t_end: float) -> "MeasurementSchedule":
        return MeasurementSchedule(tuple(e for e in self.events if 0 < e.t <= t_end))

    def as_impulsive(self) -> "MeasurementSchedule":
        return MeasurementSchedule(tuple(MeasurementEvent(e.t) for e in self.events))


@dataclass(frozen=True)
class MeasurementPulse:
    t_k: float
    tau_k: float

    def __post_init__(self):
        if not self.tau_k > 0:
            raise ValueError("pulse duration must be positive")


def pulse_profile(p: MeasurementPulse, t):
    """h(t) = pi/(4 tau) (tanh^2((t - t_k)/tau) - 1); integrates to -pi/2."""
    x = (np.asarray(t, dtype=float) - p.t_k) / p.tau_k
    # tanh^2 - 1 = -sech^2, written so large |x| underflows cleanly to 0
    val = -(math.pi / (4.0 * p.tau_k)) / np.cosh(np.clip(x, -350, 350)) ** 2
    return float(val) if np.ndim(t) == 0 else val


def pulse_windows(events, width: float = PULSE_WINDOW):
    """Group finite events whose windows overlap; returns [(start, end, [events])]."""
    groups = []
    for e in sorted((e for e in events if e.tau > 0), key=lambda e: e.t):
        a, b = e.window(width)
        if groups and a < groups[-1][1]:
            g = groups[-1]
            groups[-1] = (g[0], max(g[1], b), g[2] + [e])
        else:
            groups.append((a, b, [e]))
    return groups


def output_grid(t_end: float, dt_out: float, extra=()) -> np.ndarray:
    """Uniform sample times on [0, t_end] merged with ``extra`` (deduplicated)."""
    n = int(math.floor(t_end / dt_out + 1e-9))
    base = np.round(np.arange(n + 1) * dt_out, 12)
    ex = np.asarray(list(extra), dtype=float)
    tol = 1e-9 * max(1.0, t_end)
    if ex.size:
        near = np.min(np.abs(base[:, None] - ex[None, :]), axis=1) < tol
        base = base[~near]
    if base.size and abs(base[-1] - t_end) < tol:
        base = base[:-1]
    pts = np.unique(np.concatenate([base, ex, [t_end]]))
    return pts[(pts >= 0) & (pts <= t_end)]
