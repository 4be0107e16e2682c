"""Time-dependent non-Markovian relaxation rates R_e(t), R_g(t).

With G_T normalised as a density of |kappa|^2 per unit frequency,

    R_{e(g)}(t) = 2 t \\int dw G_T(w) sinc[(w -+ omega_a) t],

which rises as 2 * Rdot0 * t at short times and settles on the Golden-Rule
values 2 pi G_T(+-omega_a) once t exceeds the bath correlation time.  The
integral is done by oscillation-aware adaptive Gauss-Kronrod quadrature:
panels are no wider than pi/t so each carries at most one sinc half-lobe.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bath import INF, ThermalSpectrum, eval_gt
from .quadrature import adaptive_integrate


@dataclass(frozen=True)
class RatePair:
    r_e: float
    r_g: float
    t: float = 0.0
    error: float = 0.0


def sinc(x):
    """sin(x)/x with a series branch near the origin."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sin(flat) / flat
    small = np.abs(flat) < 1e-4
    if small.any():
        x2 = flat[small] ** 2
        out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return out.reshape(x.shape)


def _window(ts: ThermalSpectrum, omega_a: float, t: float) -> float:
    sd = ts.base
    return max(sd.omega0 + 10.0 * sd.width, omega_a + 40.0 / t)


def _intervals(ts: ThermalSpectrum, omega_a: float, t: float):
    w = _window(ts, omega_a, t)
    out = []
    for lo, hi in ts.support_intervals():
        lo_c, hi_c = max(lo, -w), min(hi, w)
        if hi_c > lo_c:
            out.append((lo_c, hi_c))
    return out, w


def _edges(ts: ThermalSpectrum, omega_a: float, t: float, lo: float, hi: float):
    sd = ts.base
    pw = min(math.pi / t, hi - lo)
    n = max(1, int(math.ceil((hi - lo) / pw)))
    pts = [np.linspace(lo, hi, n + 1)]
    feats = [s * (sd.omega0 + k * sd.width) for s in (1, -1) for k in range(-4, 5)]
    feats += [omega_a, -omega_a]
    pts.append(np.array([f for f in feats if lo < f < hi]))
    return np.unique(np.concatenate(pts))


def _integrand(ts: ThermalSpectrum, omega_a: float, t: float):
    def f(x):
        g = eval_gt(ts, x)
        return 2.0 * t * g[None] * np.stack([sinc((x - omega_a) * t), sinc((x + omega_a) * t)])
    return f


def relaxation_rates(ts: ThermalSpectrum, omega_a: float, t: float, tol: float = 1e-8) -> RatePair:
    """R_e and R_g at elapsed time ``t`` since the last correlation-erasing event.

    The integration window is truncated at W = max(omega0 + 10*width,
    omega_a + 40/t); for unbounded spectra the last lobe past W is integrated
    as a tail-error estimate and added to the reported error.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return RatePair(0.0, 0.0, 0.0, 0.0)
    intervals, w = _intervals(ts, omega_a, t)
    f = _integrand(ts, omega_a, t)
    edges = [_edges(ts, omega_a, t, lo, hi) for lo, hi in intervals]
    # gaps between support pieces become zero-valued panels that converge at once
    total, err = adaptive_integrate(f, np.concatenate(edges), atol=tol)
    lo, hi = ts.base.support
    if hi > w:
        tail, _ = adaptive_integrate(f, [w, w + math.pi / t], atol=tol)
        err = err + np.abs(tail)
    return RatePair(float(total[0]), float(total[1]), float(t), float(err.max()))


def zeno_slope(ts: ThermalSpectrum, tol: float = 1e-12) -> float:
    """Rdot0 = \\int G_T(w) dw, i.e. <B^2> in the initial bath state."""
    sd = ts.base
    total = 0.0
    for lo, hi in ts.support_intervals():
        if math.isinf(hi) or math.isinf(lo):
            # map the unbounded piece onto (0, 1] via w = lo + s/(1-s)
            def g(s, lo=lo):
                w = lo + s / (1.0 - s)
                return eval_gt(ts, w) / (1.0 - s) ** 2
            s_feat = [(f - lo) / (1.0 + f - lo) for f in
                      (sd.omega0 + k * sd.width for k in range(-8, 9)) if f > lo]
            edges = np.unique(np.concatenate([np.linspace(0.0, 1.0, 65), s_feat]))
            v, _ = adaptive_integrate(g, edges[edges < 1.0].tolist() + [1.0 - 1e-15], atol=tol)
        else:
            feats = [s * (sd.omega0 + k * sd.width) for s in (1, -1) for k in range(-8, 9)]
            edges = np.unique(np.concatenate([np.linspace(lo, hi, 33), [x for x in feats if lo < x < hi]]))
            v, _ = adaptive_integrate(lambda x: eval_gt(ts, x), edges, atol=tol)
        total += float(v)
    return total


def golden_rule(ts: ThermalSpectrum, omega_a: float) -> RatePair:
    """Markovian long-time limits (2 pi G_T(omega_a), 2 pi G_T(-omega_a))."""
    return RatePair(2 * math.pi * eval_gt(ts, omega_a), 2 * math.pi * eval_gt(ts, -omega_a), INF)


class RateTable:
    """Rates tabulated on an adaptive grid and interpolated by monotone cubics."""

    def __init__(self, times, r_e, r_g, meta=None):
        self.times = np.asarray(times, dtype=float)
        self.r_e = np.asarray(r_e, dtype=float)
        self.r_g = np.asarray(r_g, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("rate table grid must be strictly increasing")
        self.meta = dict(meta or {})
        if len(self.times) > 1:
            self._ie = PchipInterpolator(self.times, self.r_e, extrapolate=False)
            self._ig = PchipInterpolator(self.times, self.r_g, extrapolate=False)
            # per-interval cubic coefficients for the scalar fast path
            self._knots = self.times.tolist()
            self._ce = self._ie.c.T.tolist()
            self._cg = self._ig.c.T.tolist()

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def pairs(self) -> list[RatePair]:
        return [RatePair(e, g, t) for t, e, g in zip(self.times, self.r_e, self.r_g)]

    def __call__(self, clock):
        c = np.asarray(clock, dtype=float)
        if np.any(c < 0) or np.any(c > self.t_max * (1 + 1e-12) + 1e-300):
            raise ValueError(f"clock outside tabulated range [0, {self.t_max}]")
        if len(self.times) == 1:
            z = np.zeros_like(c)
            return (float(z), float(z)) if c.ndim == 0 else (z, z)
        c = np.clip(c, 0.0, self.t_max)
        e, g = self._ie(c), self._ig(c)
        if c.ndim == 0:
            return float(e), float(g)
        return e, g

    def scalar(self, clock: float) -> tuple[float, float]:
        """Pure-python evaluation for use inside ODE right-hand sides."""
        if len(self.times) == 1:
            return 0.0, 0.0
        i = bisect.bisect_right(self._knots, clock) - 1
        i = min(max(i, 0), len(self._ce) - 1)
        x = clock - self._knots[i]
        a, b, c, d = self._ce[i]
        e = ((a * x + b) * x + c) * x + d
        a, b, c, d = self._cg[i]
        return e, ((a * x + b) * x + c) * x + d

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# schema: zenotherm-rates/1\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "R_e", "R_g"])
            for t, e, g in zip(self.times, self.r_e, self.r_g):
                w.writerow([f"{t:.12e}", f"{e:.12e}", f"{g:.12e}"])


def _oscillation_scale(ts: ThermalSpectrum, omega_a: float) -> float:
    """Largest detuning |w +- omega_a| that carries appreciable spectral weight."""
    sd = ts.base
    hi = min(sd.omega_max, sd.omega0 + 10 * sd.width)
    return hi + omega_a


def tabulate_rates(ts: ThermalSpectrum, omega_a: float, t_max: float, tol: float = 1e-6,
                   quad_tol: float | None = None, max_points: int = 400_000) -> RateTable:
    """Adaptive rate table on [0, t_max] validated by midpoint refinement.

    Every interval's midpoint is computed exactly and compared with the
    interpolant of the current nodes; intervals failing ``tol`` are split
    until all pass.
    """
    if t_max < 0 or tol <= 0:
        raise ValueError("need t_max >= 0 and tol > 0")
    if t_max == 0:
        return RateTable([0.0], [0.0], [0.0], {"tol": tol})
    qtol = tol * 1e-2 if quad_tol is None else quad_tol
    sd = ts.base
    h = math.pi / (4.0 * _oscillation_scale(ts, omega_a))
    t_mem = 25.0 / sd.width
    grid = [0.0]
    t = 0.0
    while t < t_max:
        step = h if t < t_mem else max(h, 0.5 * (t - t_mem) + h)
        t = min(t + step, t_max)
        grid.append(t)
    cache: dict[float, tuple[float, float]] = {}

    def rate(tt):
        if tt not in cache:
            p = relaxation_rates(ts, omega_a, tt, tol=qtol)
            cache[tt] = (p.r_e, p.r_g)
        return cache[tt]

    nodes = np.array(grid)
    pending = np.ones(len(nodes) - 1, dtype=bool)
    while True:
        vals = np.array([rate(x) for x in nodes])
        table = RateTable(nodes, vals[:, 0], vals[:, 1])
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        bad = np.zeros(len(mids), dtype=bool)
        for i in np.flatnonzero(pending):
            exact = rate(mids[i])
            approx = table(mids[i])
            bad[i] = max(abs(exact[0] - approx[0]), abs(exact[1] - approx[1])) > tol
        if not bad.any():
            break
        new = np.sort(np.concatenate([nodes, mids[bad]]))
        if len(new) > max_points:
            raise ValueError("rate table exceeded max_points; loosen tol")
        # pchip slopes are local: an insertion only perturbs intervals within
        # one node of it
        idx = np.searchsorted(new, mids[bad])
        pending = np.zeros(len(new) - 1, dtype=bool)
        for off in (-2, -1, 0, 1):
            j = idx + off
            pending[j[(j >= 0) & (j < len(pending))]] = True
        nodes = new
    return RateTable(table.times, table.r_e, table.r_g,
                     {"tol": tol, "quad_tol": qtol, "t_max": t_max, "n": len(nodes)})
