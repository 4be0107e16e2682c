"""Command-line front end.

    zenotherm run (--preset NAME | CONFIG) [--backend B] [--out-dir DIR] [--threads N]
    zenotherm validate (--preset NAME | CONFIG)

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 capacity exceeded, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bath import SpectralDensity, ThermalSpectrum, beta_from_alpha, discretize, gibbs_excited
from .config import (BACKENDS, PRESETS, RunConfig, dump_config, load_config, load_preset,
                     validate_config)
from .errors import ConfigError, ZenothermError
from .master_eq import MEOptions, SystemState, propagate
from .rates import tabulate_rates
from .schedule import MeasurementSchedule
from .thermo import attach_entropy, reference_population

log = logging.getLogger("zenotherm")


def _spectrum(cfg: RunConfig) -> SpectralDensity:
    b = cfg.bath
    return SpectralDensity(b.shape, b.omega0, 1.0 / b.t_c, b.gamma, b.omega_min, b.omega_max)


def _initial_rho(cfg: RunConfig) -> float:
    ini = cfg.initial
    if ini.rho_ee is not None:
        return float(ini.rho_ee)
    return gibbs_excited(beta_from_alpha(ini.alpha_s, cfg.system.omega_a), cfg.system.omega_a)


def _schedule(cfg: RunConfig) -> MeasurementSchedule:
    return MeasurementSchedule.from_times(cfg.schedule.times, tau=cfg.schedule.tau).within(cfg.schedule.t_end)


def _reference(cfg: RunConfig, traj) -> float:
    ref = cfg.thermo.reference
    beta_b = beta_from_alpha(cfg.bath.alpha_b, cfg.system.omega_a)
    if ref == "pre_measurement":
        first = traj.events[0]
        t0 = first.t - 8.0 * first.tau if first.tau > 0 else first.t
        return reference_population(ref, rho_pre=traj.at(t0))
    if ref == "gibbs":
        return reference_population(ref, beta_bath=beta_b, omega_a=cfg.system.omega_a)
    return reference_population(float(ref))


def _run_master_eq(cfg: RunConfig, sd: SpectralDensity, table_cache: dict):
    w = cfg.system.omega_a
    ts = ThermalSpectrum(sd, beta_from_alpha(cfg.bath.alpha_b, w))
    n = cfg.numerics
    opts = MEOptions(tol=n.tol, dt_out=n.dt_out, rate_tol=n.rate_tol)
    # one table over the whole run covers every rate clock and doubles as rates.csv
    table_cache["table"] = tabulate_rates(ts, w, cfg.schedule.t_end, tol=n.rate_tol)
    return propagate(SystemState(_initial_rho(cfg)), ts, w, _schedule(cfg), cfg.schedule.t_end,
                     opts, table_cache["table"])


def _run_two_quanta(cfg: RunConfig, sd: SpectralDensity):
    from .two_quanta import TwoQuantaOptions, propagate_two_quanta
    b, n = cfg.bath, cfg.numerics
    # a zero lower band edge is nudged off the origin; midpoint nodes never sit there anyway
    lo = b.omega_min if b.omega_min > 0 else 1e-9 * b.omega_max
    bath = discretize(sd, b.n_modes, lo, b.omega_max, b.rule)
    opts = TwoQuantaOptions(dt_out=n.dt_out, norm_tol=n.norm_tol, max_detectors=n.max_detectors,
                            merge=n.merge, occupations_every=20 if cfg.output.occupations else 0)
    return propagate_two_quanta(bath, cfg.system.omega_a, _schedule(cfg), cfg.schedule.t_end, opts)


def _run_exact(cfg: RunConfig, sd: SpectralDensity):
    from .exact_small import TruncatedHilbert, build_parts, product_state, run_exact
    e, n = cfg.exact, cfg.numerics
    bath = discretize(sd, e.n_modes, e.omega_min, e.omega_max, cfg.bath.rule)
    parts = build_parts(bath, cfg.system.omega_a, TruncatedHilbert(e.n_modes, e.fock_cutoff))
    rho0 = product_state(parts, _initial_rho(cfg), beta_from_alpha(cfg.bath.alpha_b, cfg.system.omega_a))
    return run_exact(parts, rho0, _schedule(cfg), cfg.schedule.t_end, n.dt_out,
                     occupations_every=20 if cfg.output.occupations else 0)


def _run_sweep(cfg: RunConfig, sd: SpectralDensity, out: Path, threads: int, written: list,
               notes: list):
    from .sweep import PhaseMapSpec, ScheduleFamily, SweepParams, critical_alpha, phase_map
    sw, n = cfg.sweep, cfg.numerics
    fam = ScheduleFamily(sw.k_max, sw.dt_min, sw.dt_max, sw.dt_step)
    spec = PhaseMapSpec(sw.alpha_s, sw.alpha_b, fam, sw.objective, sw.diagonal)
    params = SweepParams(sd, cfg.system.omega_a, me=MEOptions(tol=n.tol, rate_tol=n.rate_tol))
    res = phase_map(spec, params, workers=threads)
    path = out / "phase_map.csv"
    res.to_csv(path)
    written.append(path)
    bad = [c for c in res.cells if c.error]
    if bad:
        notes.append(f"phase_map_failed_cells = {len(bad)}")
    if sw.critical and sw.diagonal:
        cool = res.grid("max_cooling")
        alphas = np.array(sw.alpha_s)
        on = np.flatnonzero(cool > 1e-10)
        if on.size and on[0] > 0:
            a_c = critical_alpha(params, float(alphas[on[0] - 1]), float(alphas[on[0]]), fam)
            notes.append(f"critical_alpha = {a_c:.6g}")
        else:
            notes.append("critical_alpha = not bracketed by the grid")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: RunConfig, text: str, out_dir, threads: int = 1) -> int:
    diags = validate_config(cfg, text)
    errors = [d for d in diags if d.level == "error"]
    for d in diags:
        log.warning("%s", d) if d.level == "warning" else log.error("%s", d)
    if errors:
        raise ConfigError(f"{len(errors)} configuration error(s); first: {errors[0]}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        sd = _spectrum(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    written: list[Path] = []
    notes: list[str] = []
    cache: dict = {}
    for backend in cfg.backend_list:
        log.info("running backend %s", backend)
        if backend == "master_eq":
            traj = _run_master_eq(cfg, sd, cache)
        elif backend == "two_quanta":
            traj = _run_two_quanta(cfg, sd)
        else:
            traj = _run_exact(cfg, sd)
        rho0 = _reference(cfg, traj)
        attach_entropy(traj, rho0)
        traj.metadata["backend_version"] = __version__
        path = out / f"trajectory_{backend}.csv"
        traj.to_csv(path)
        written.append(path)
        if traj.occupations is not None and cfg.output.occupations:
            p = out / f"occupations_{backend}.csv"
            traj.occupations_to_csv(p)
            written.append(p)
    if cfg.output.rate_table and "master_eq" in cfg.backend_list:
        p = out / "rates.csv"
        cache["table"].to_csv(p)
        written.append(p)
    if cfg.sweep is not None:
        _run_sweep(cfg, sd, out, threads, written, notes)
    _manifest(out / "manifest.txt", cfg, written, notes)
    return 0


def _manifest(path: Path, cfg: RunConfig, written, notes):
    lines = [f"zenotherm {__version__}", "units: hbar = 1, omega_a = 1, alpha = 1/(beta omega_a)", ""]
    lines += ["[files]"] + [f"{p.name} sha256={_sha256(p)}" for p in written]
    if notes:
        lines += ["", "[results]"] + notes
    lines += ["", "[config]", dump_config(cfg)]
    path.write_text("\n".join(lines))


def _load(args) -> tuple[RunConfig, str]:
    if args.preset and args.config:
        raise ConfigError("give either --preset or a config file, not both")
    if args.preset:
        return load_preset(args.preset)
    if args.config:
        return load_config(args.config)
    raise ConfigError("no configuration: pass --preset NAME or a config file")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zenotherm", description="Measurement-induced heating and "
                                "cooling of a two-level system coupled to a bosonic bath.")
    p.add_argument("--version", action="version", version=f"zenotherm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        s = sub.add_parser(name)
        s.add_argument("config", nargs="?", help="configuration file")
        s.add_argument("--preset", choices=PRESETS)
        if name == "run":
            s.add_argument("--backend", choices=BACKENDS + ("all",),
                           help="override [backends] run")
            s.add_argument("--out-dir", default="zenotherm-out")
            s.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, text = _load(args)
        if args.command == "validate":
            diags = validate_config(cfg, text)
            for d in diags:
                print(d)
            return 2 if any(d.level == "error" for d in diags) else 0
        if args.backend:
            cfg.backends.run = [args.backend]
            text = ""  # line numbers refer to the file, which no longer matches
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return run(cfg, text, args.out_dir, args.threads)
    except ZenothermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
