"""Heating/cooling phase maps and measurement-schedule search.

The rate equation is linear in rho_ee and every measurement restarts the
rate clock, so one interval of length s maps rho -> a(s) + b(s) rho
(``interval_response``).  A schedule of K intervals is then a composition
of K affine maps, and the excursion inside each interval is read off the
same (a, b) curves.  A full schedule costs O(K * n_s) array work with no
extra ODE solves; all propagation happens once per bath temperature.

Excursions are measured relative to the initial population over the whole
trajectory (not only at measurement times): ``max_heating`` is
max_t rho_ee(t) - rho_ee(0) and ``max_cooling`` is rho_ee(0) - min_t rho_ee(t),
both maximised over the schedule family and therefore >= 0.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import SpectralDensity, ThermalSpectrum, beta_from_alpha, gibbs_excited
from .errors import ZenothermError
from .master_eq import MEOptions, interval_response
from .rates import tabulate_rates
from .thermo import spin_temperature

log = logging.getLogger(__name__)

OBJECTIVES = ("max_heating", "max_cooling", "final_spin_beta")
PHASE_MAP_SCHEMA = "zenotherm-phasemap/1"


@dataclass(frozen=True)
class ScheduleFamily:
    """Up to ``k_max`` intervals, each on a uniform grid in [dt_min, dt_max]."""

    k_max: int = 8
    dt_min: float = 0.1
    dt_max: float = 10.0
    dt_step: float = 0.05
    individual: bool = False

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if not (0 < self.dt_min <= self.dt_max) or self.dt_step <= 0:
            raise ValueError("need 0 < dt_min <= dt_max and dt_step > 0")

    @property
    def grid(self) -> np.ndarray:
        n = int(math.floor((self.dt_max - self.dt_min) / self.dt_step + 1e-9))
        return np.round(self.dt_min + self.dt_step * np.arange(n + 1), 12)


@dataclass(frozen=True)
class PhaseMapSpec:
    alpha_s_grid: tuple
    alpha_b_grid: tuple
    family: ScheduleFamily = ScheduleFamily()
    objective: str = "max_cooling"
    diagonal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha_s_grid", tuple(float(a) for a in self.alpha_s_grid))
        object.__setattr__(self, "alpha_b_grid", tuple(float(a) for a in self.alpha_b_grid))
        if not self.alpha_s_grid or not self.alpha_b_grid:
            raise ValueError("temperature grids must be nonempty")
        if min(self.alpha_s_grid + self.alpha_b_grid) < 0:
            raise ValueError("alpha must be >= 0")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.diagonal and self.alpha_s_grid != self.alpha_b_grid:
            raise ValueError("a diagonal map needs identical alpha_s and alpha_b grids")


@dataclass(frozen=True)
class SweepParams:
    spectrum: SpectralDensity
    omega_a: float = 1.0
    resolution: float = 0.01
    me: MEOptions = MEOptions()
    relax_time: float = 1000.0


@dataclass
class CellResult:
    alpha_s: float
    alpha_b: float
    max_heating: float = 0.0
    max_cooling: float = 0.0
    best_heating: tuple = ()
    best_cooling: tuple = ()
    relaxed: float = float("nan")
    error: str = ""


@dataclass
class PhaseMapResult:
    spec: PhaseMapSpec
    cells: list = field(default_factory=list)

    def grid(self, attr: str) -> np.ndarray:
        if self.spec.diagonal:
            return np.array([getattr(c, attr) for c in self.cells])
        ns, nb = len(self.spec.alpha_s_grid), len(self.spec.alpha_b_grid)
        return np.array([getattr(c, attr) for c in self.cells]).reshape(nb, ns)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema = {PHASE_MAP_SCHEMA}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha_s", "alpha_b", "max_heating", "max_cooling",
                        "best_dt_heating", "best_dt_cooling", "relaxed", "error"])
            for c in self.cells:
                w.writerow([f"{c.alpha_s:.6g}", f"{c.alpha_b:.6g}", f"{c.max_heating:.12e}",
                            f"{c.max_cooling:.12e}", " ".join(f"{x:.6g}" for x in c.best_heating),
                            " ".join(f"{x:.6g}" for x in c.best_cooling), f"{c.relaxed:.12e}", c.error])


class IntervalModel:
    """Affine single-interval response rho(s) = a(s) + b(s) rho_start on a uniform s-grid."""

    def __init__(self, s, a, b, relax=(math.nan, math.nan)):
        self.s = np.asarray(s, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.ds = float(self.s[1] - self.s[0])
        # affine response of one long unmeasured stretch
        self.relax = relax

    @classmethod
    def build(cls, params: SweepParams, alpha_b: float, horizon: float) -> "IntervalModel":
        ts = ThermalSpectrum(params.spectrum, beta_from_alpha(alpha_b, params.omega_a))
        t_long = max(horizon, params.relax_time)
        table = tabulate_rates(ts, params.omega_a, t_long, tol=params.me.rate_tol)
        s, a, b = interval_response(ts, params.omega_a, horizon, params.resolution, params.me, table)
        relax = (math.nan, math.nan)
        if params.relax_time > 0:
            o = replace(params.me, dt_out=params.relax_time)
            _, ra, rb = interval_response(ts, params.omega_a, params.relax_time,
                                          params.relax_time, o, table)
            relax = (float(ra[-1]), float(rb[-1]))
        return cls(s, a, b, relax)

    def index(self, dt: float) -> int:
        i = int(round(dt / self.ds))
        if i < 0 or i >= len(self.s):
            raise ValueError(f"interval {dt} outside the response horizon")
        return i

    def run(self, rho0: float, dts) -> tuple[float, float, float]:
        """(final rho, max rho, min rho) over the continuous trajectory."""
        rho, hi, lo = rho0, rho0, rho0
        for dt in dts:
            i = self.index(dt)
            seg = self.a[: i + 1] + self.b[: i + 1] * rho
            hi, lo = max(hi, float(seg.max())), min(lo, float(seg.min()))
            rho = float(seg[-1])
        return rho, hi, lo

    def equal_scan(self, rho0: float, dt_grid, k_max: int):
        """Heating/cooling of k equal intervals for every (dt, k), vectorised over dt.

        Returns (heat, cool) arrays of shape (k_max, len(dt_grid)); row k-1 is k intervals.
        """
        idx = np.array([self.index(d) for d in dt_grid])
        n = len(idx)
        heat = np.zeros((k_max, n))
        cool = np.zeros((k_max, n))
        rho = np.full(n, rho0)
        hi = np.full(n, rho0)
        lo = np.full(n, rho0)
        # running extrema of a + b*rho over s <= s_i need the full segment per dt
        for k in range(k_max):
            for j, i in enumerate(idx):
                seg = self.a[: i + 1] + self.b[: i + 1] * rho[j]
                hi[j] = max(hi[j], seg.max())
                lo[j] = min(lo[j], seg.min())
                rho[j] = seg[-1]
            heat[k] = hi - rho0
            cool[k] = rho0 - lo
        return heat, cool


def objective_value(objective: str, rho0: float, result, omega_a: float = 1.0) -> float:
    final, hi, lo = result
    if objective == "max_heating":
        return hi - rho0
    if objective == "max_cooling":
        return rho0 - lo
    if objective == "final_spin_beta":
        return spin_temperature(min(max(final, 0.0), 1.0), omega_a)
    raise ValueError(f"unknown objective {objective!r}")


def _cell(model: IntervalModel, alpha_s: float, alpha_b: float, family: ScheduleFamily,
          omega_a: float) -> CellResult:
    rho0 = gibbs_excited(beta_from_alpha(alpha_s, omega_a), omega_a)
    cell = CellResult(alpha_s, alpha_b)
    if family.k_max == 0:
        return cell
    grid = family.grid
    heat, cool = model.equal_scan(rho0, grid, family.k_max)
    kh, jh = np.unravel_index(int(np.argmax(heat)), heat.shape)
    kc, jc = np.unravel_index(int(np.argmax(cool)), cool.shape)
    cell.max_heating = max(0.0, float(heat[kh, jh]))
    cell.max_cooling = max(0.0, float(cool[kc, jc]))
    # no schedule is reported when nothing beats the unmeasured start
    if cell.max_heating > 0:
        cell.best_heating = (float(grid[jh]),) * (kh + 1)
    if cell.max_cooling > 0:
        cell.best_cooling = (float(grid[jc]),) * (kc + 1)
    cell.relaxed = model.relax[0] + model.relax[1] * rho0
    return cell


def _row(args):
    params, fam, ab, alphas = args
    try:
        model = IntervalModel.build(params, ab, fam.dt_max)
    except (ZenothermError, ValueError) as exc:
        log.error("alpha_b=%g failed: %s", ab, exc)
        return [CellResult(a, ab, error=str(exc)) for a in alphas]
    row = []
    for a_s in alphas:
        try:
            row.append(_cell(model, a_s, ab, fam, params.omega_a))
        except (ZenothermError, ValueError) as exc:
            row.append(CellResult(a_s, ab, error=str(exc)))
    return row


def phase_map(spec: PhaseMapSpec, params: SweepParams, workers: int = 1) -> PhaseMapResult:
    """Heating/cooling map over (alpha_s, alpha_b); rows follow alpha_b.

    Each cell starts from the product of Gibbs(alpha_s) and the bath at
    alpha_b with the rate clock at zero.  ``relaxed`` is rho_ee after an
    unmeasured stretch of ``params.relax_time``.  Failures are stored per cell.
    With ``spec.diagonal`` only the cells alpha_s = alpha_b are evaluated.
    Rows are reduced in grid order whatever the worker count.
    """
    fam = spec.family
    if spec.diagonal:
        jobs = [(params, fam, a, (a,)) for a in spec.alpha_b_grid]
    else:
        jobs = [(params, fam, ab, spec.alpha_s_grid) for ab in spec.alpha_b_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, jobs))
    else:
        rows = [_row(j) for j in jobs]
    return PhaseMapResult(spec, [c for r in rows for c in r])


def diagonal_cooling(alpha: float, params: SweepParams, family: ScheduleFamily = ScheduleFamily()) -> float:
    model = IntervalModel.build(params, alpha, family.dt_max)
    return _cell(model, alpha, alpha, family, params.omega_a).max_cooling


def critical_alpha(params: SweepParams, lo: float, hi: float,
                   family: ScheduleFamily = ScheduleFamily(), tol: float = 1e-3,
                   threshold: float = 1e-10) -> float:
    """Bisection for the lowest common temperature that admits cooling.

    Requires no cooling at ``lo`` and cooling at ``hi``.
    """
    f_lo = diagonal_cooling(lo, params, family) > threshold
    f_hi = diagonal_cooling(hi, params, family) > threshold
    if f_lo or not f_hi:
        raise ValueError("bracket does not straddle the onset of cooling")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if diagonal_cooling(mid, params, family) > threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class ScheduleSearch:
    schedule: tuple
    value: float
    evaluated: list = field(default_factory=list)


def optimize_schedule(model: IntervalModel, rho0: float, objective: str,
                      family: ScheduleFamily = ScheduleFamily(), seed: int = 0,
                      restarts: int = 0, levels: int = 3, coarse: int = 8,
                      omega_a: float = 1.0) -> ScheduleSearch:
    """Coordinate descent over K individually varied intervals, coarse to fine.

    Each sweep tries every grid value for one interval with the others held
    fixed; the grid for the next level is the family grid restricted to a
    window around the incumbent, ``coarse`` times finer.  Restart points come
    from ``numpy.random.default_rng(seed)``.  The best schedule among *all*
    evaluated ones is returned, so the result dominates its own search grid.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    evaluated: list[tuple[tuple, float]] = []
    if family.k_max == 0:
        v = objective_value(objective, rho0, (rho0, rho0, rho0), omega_a)
        return ScheduleSearch((), v, [((), v)])
    full = family.grid
    cache: dict[tuple, float] = {}

    def score(sched):
        if sched not in cache:
            cache[sched] = objective_value(objective, rho0, model.run(rho0, sched), omega_a)
            evaluated.append((sched, cache[sched]))
        return cache[sched]

    rng = np.random.default_rng(seed)
    starts = [(float(full[len(full) // 2]),) * family.k_max]
    for _ in range(restarts):
        starts.append(tuple(float(x) for x in rng.choice(full, family.k_max)))

    for start in starts:
        current = start
        stride = max(1, len(full) // coarse)
        cand = full[::stride]
        for _ in range(levels):
            improved = True
            while improved:
                improved = False
                for k in range(family.k_max):
                    best_v, best_x = score(current), current[k]
                    for x in cand:
                        trial = current[:k] + (float(x),) + current[k + 1:]
                        if not family.individual:
                            trial = (float(x),) * family.k_max
                        v = score(trial)
                        if v > best_v:
                            best_v, best_x = v, float(x)
                    if best_x != current[k]:
                        current = (current[:k] + (best_x,) + current[k + 1:]
                                   if family.individual else (best_x,) * family.k_max)
                        improved = True
                    if not family.individual:
                        break
            if stride == 1:
                break
            # refine: neighbourhood of the incumbent values on a finer stride
            new_stride = max(1, stride // coarse)
            centres = np.searchsorted(full, np.unique(current))
            pick = set()
            for c in centres:
                lo_i, hi_i = max(0, c - stride), min(len(full), c + stride + 1)
                pick.update(range(lo_i, hi_i, new_stride))
            cand = full[sorted(pick)]
            stride = new_stride
    best = max(evaluated, key=lambda p: (p[1], -len(p[0])))
    return ScheduleSearch(best[0], best[1], evaluated)
