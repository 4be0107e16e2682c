"""Run configuration: sectioned ``key = value`` text with a versioned header.

Units are fixed throughout: hbar = 1 and omega_a = 1 set the scale, times are
in 1/omega_a and temperatures are given as alpha = 1/(beta omega_a), with
alpha = 0 meaning zero temperature.

Layout::

    [meta]       schema = zenotherm-config/1
    [system]     omega_a
    [bath]       shape, omega0, t_c, gamma, omega_min, omega_max, alpha_b,
                 n_modes, rule
    [initial]    alpha_s | rho_ee
    [schedule]   times, tau, t_end
    [backends]   run (master_eq two_quanta exact | all)
    [exact]      n_modes, fock_cutoff, omega_min, omega_max
    [numerics]   tol, rate_tol, dt_out, norm_tol, max_detectors, merge
    [thermo]     reference (gibbs | pre_measurement | population)
    [output]     rate_table, occupations
    [sweep]      optional phase map: alpha_s, alpha_b, diagonal, k_max,
                 dt_min, dt_max, dt_step, objective, critical
    [run]        seed
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

from .errors import ConfigError

SCHEMA = "zenotherm-config/1"
BACKENDS = ("master_eq", "two_quanta", "exact")
PRESETS = ("fig1", "fig2", "fig2c")


@dataclass
class SystemCfg:
    omega_a: float = 1.0


@dataclass
class BathCfg:
    shape: str = "lorentzian"
    omega0: float = 1.0
    t_c: float = 10.0
    gamma: float = 0.07
    omega_min: float = 0.2
    omega_max: float = 1.8
    alpha_b: float = 0.0
    n_modes: int = 40
    rule: str = "midpoint"


@dataclass
class InitialCfg:
    alpha_s: float | None = 0.0
    rho_ee: float | None = None


@dataclass
class ScheduleCfg:
    times: list = field(default_factory=list)
    tau: float = 0.0
    t_end: float = 64.0


@dataclass
class BackendsCfg:
    run: list = field(default_factory=lambda: ["master_eq"])


@dataclass
class ExactCfg:
    n_modes: int = 4
    fock_cutoff: int = 2
    omega_min: float = 0.6
    omega_max: float = 1.4


@dataclass
class NumericsCfg:
    tol: float = 1e-10
    rate_tol: float = 1e-6
    dt_out: float = 0.05
    norm_tol: float = 1e-6
    max_detectors: int = 12
    merge: bool = False


@dataclass
class ThermoCfg:
    reference: str = "gibbs"


@dataclass
class OutputCfg:
    rate_table: bool = True
    occupations: bool = True


@dataclass
class SweepCfg:
    alpha_s: list = field(default_factory=list)
    alpha_b: list = field(default_factory=list)
    diagonal: bool = False
    k_max: int = 8
    dt_min: float = 0.1
    dt_max: float = 10.0
    dt_step: float = 0.05
    objective: str = "max_cooling"
    critical: bool = False


@dataclass
class RunCfg:
    seed: int = 0


_SECTIONS = {
    "system": SystemCfg, "bath": BathCfg, "initial": InitialCfg, "schedule": ScheduleCfg,
    "backends": BackendsCfg, "exact": ExactCfg, "numerics": NumericsCfg, "thermo": ThermoCfg,
    "output": OutputCfg, "sweep": SweepCfg, "run": RunCfg,
}


@dataclass
class RunConfig:
    system: SystemCfg = field(default_factory=SystemCfg)
    bath: BathCfg = field(default_factory=BathCfg)
    initial: InitialCfg = field(default_factory=InitialCfg)
    schedule: ScheduleCfg = field(default_factory=ScheduleCfg)
    backends: BackendsCfg = field(default_factory=BackendsCfg)
    exact: ExactCfg = field(default_factory=ExactCfg)
    numerics: NumericsCfg = field(default_factory=NumericsCfg)
    thermo: ThermoCfg = field(default_factory=ThermoCfg)
    output: OutputCfg = field(default_factory=OutputCfg)
    sweep: SweepCfg | None = None
    run: RunCfg = field(default_factory=RunCfg)

    @property
    def backend_list(self) -> list[str]:
        return list(BACKENDS) if "all" in self.backends.run else list(self.backends.run)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    field: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{self.level}: {where}{self.field}: {self.message}"


# ---------------------------------------------------------------- parsing

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(_fmt_value(x) for x in v)
    return str(v)


def _convert(name: str, typ, raw: str):
    raw = raw.strip()
    t = str(typ)
    if "list" in t:
        if not raw:
            return []
        items = raw.replace(",", " ").split()
        try:
            return [float(x) for x in items]
        except ValueError:
            return items
    if "None" in t and raw.lower() in ("", "none"):
        return None
    if "bool" in t:
        low = raw.lower()
        if low in ("yes", "true", "1", "on"):
            return True
        if low in ("no", "false", "0", "off"):
            return False
        raise ValueError(f"expected yes/no, got {raw!r}")
    if "int" in t and "float" not in t:
        return int(raw)
    if "float" in t:
        return float(raw)
    return raw


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    cur = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return n
        elif key is not None and cur == section and s.split("=", 1)[0].strip() == key:
            return n
    return None


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises ConfigError with a line reference."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    schema = cp.get("meta", "schema", fallback=None)
    if schema != SCHEMA:
        raise ConfigError(f"line {_line_of(text, 'meta') or 1}: [meta] schema must be {SCHEMA!r}, got {schema!r}")
    cfg = RunConfig()
    for sec in cp.sections():
        if sec == "meta":
            continue
        if sec not in _SECTIONS:
            raise ConfigError(f"line {_line_of(text, sec)}: unknown section [{sec}]")
        cls = _SECTIONS[sec]
        known = {f.name: f for f in fields(cls)}
        obj = cls()
        for key, raw in cp.items(sec):
            if key not in known:
                raise ConfigError(f"line {_line_of(text, sec, key)}: unknown key {sec}.{key}")
            try:
                setattr(obj, key, _convert(key, known[key].type, raw))
            except ValueError as exc:
                raise ConfigError(f"line {_line_of(text, sec, key)}: {sec}.{key}: {exc}") from exc
        setattr(cfg, sec, obj)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    """Serialise to the text format; parse(dump(cfg)) == cfg."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["meta"] = {"schema": SCHEMA}
    for sec in _SECTIONS:
        obj = getattr(cfg, sec)
        if obj is None:
            continue
        cp[sec] = {k: ("none" if v is None else _fmt_value(v)) for k, v in asdict(obj).items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path) -> tuple[RunConfig, str]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text), text


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("zenotherm.presets").joinpath(f"{name}.ini").read_text()


def load_preset(name: str) -> tuple[RunConfig, str]:
    text = preset_text(name)
    return parse_config(text), text


# ------------------------------------------------------------- validation

def validate_config(cfg: RunConfig, text: str = "") -> list[Diagnostic]:
    """Static checks; an empty list (or warnings only) means runnable."""
    out: list[Diagnostic] = []

    def err(sec, key, msg, level="error"):
        out.append(Diagnostic(level, f"{sec}.{key}", msg, _line_of(text, sec, key) if text else None))

    def positive(sec, key):
        v = getattr(getattr(cfg, sec), key)
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            err(sec, key, f"must be positive and finite, got {v!r}")

    positive("system", "omega_a")
    for k in ("omega0", "t_c", "omega_max"):
        positive("bath", k)
    b = cfg.bath
    if b.shape not in ("lorentzian", "gaussian"):
        err("bath", "shape", f"unknown shape {b.shape!r}")
    if not (isinstance(b.gamma, (int, float)) and b.gamma >= 0):
        err("bath", "gamma", "must be >= 0")
    if not (b.omega_min >= 0 and b.omega_max > b.omega_min):
        err("bath", "omega_min", "need 0 <= omega_min < omega_max")
    if b.alpha_b < 0:
        err("bath", "alpha_b", "must be >= 0")
    if b.alpha_b > 0 and b.omega_min == 0:
        err("bath", "omega_min", "finite bath temperature needs omega_min > 0 (thermal spectrum "
            "is not integrable at the origin otherwise)")
    if b.n_modes < 1:
        err("bath", "n_modes", "must be >= 1")
    if b.rule not in ("midpoint", "gauss"):
        err("bath", "rule", f"unknown rule {b.rule!r}")

    ini = cfg.initial
    if (ini.alpha_s is None) == (ini.rho_ee is None):
        err("initial", "alpha_s", "give exactly one of alpha_s or rho_ee")
    elif ini.alpha_s is not None and ini.alpha_s < 0:
        err("initial", "alpha_s", "must be >= 0")
    elif ini.rho_ee is not None and not 0 <= ini.rho_ee <= 1:
        err("initial", "rho_ee", "must lie in [0, 1]")

    sc = cfg.schedule
    positive("schedule", "t_end")
    if sc.tau < 0:
        err("schedule", "tau", "must be >= 0")
    times = sc.times
    if any(not isinstance(t, float) for t in times):
        err("schedule", "times", "must be numbers")
    else:
        if any(b2 <= a2 for a2, b2 in zip(times, times[1:])):
            err("schedule", "times", "must be strictly increasing")
        late = [t for t in times if t > sc.t_end or t <= 0]
        if late:
            err("schedule", "times", f"{len(late)} event(s) outside (0, t_end] will be ignored",
                level="warning")
        if sc.tau > 0:
            from .schedule import PULSE_WINDOW
            w = PULSE_WINDOW * sc.tau
            if any(b2 - a2 < 2 * w for a2, b2 in zip(times, times[1:])):
                err("schedule", "tau", "finite pulse windows overlap")

    bad = [x for x in cfg.backends.run if x not in BACKENDS + ("all",)]
    if bad or not cfg.backends.run:
        err("backends", "run", f"choose from {', '.join(BACKENDS)} or all")
    chosen = cfg.backend_list if not bad else []
    if "two_quanta" in chosen:
        if b.alpha_b != 0:
            err("bath", "alpha_b", "two_quanta backend supports a zero-temperature bath only")
        if not (ini.alpha_s == 0 or ini.rho_ee == 0):
            err("initial", "alpha_s", "two_quanta backend starts from the ground state only")
    if "exact" in chosen:
        e = cfg.exact
        if e.n_modes < 1 or e.fock_cutoff < 1:
            err("exact", "n_modes", "need n_modes >= 1 and fock_cutoff >= 1")
        elif 2 * (e.fock_cutoff + 1) ** e.n_modes * (2 if sc.tau > 0 else 1) > 4096:
            err("exact", "n_modes", "Hilbert dimension exceeds the cap of 4096")
        if not 0 < e.omega_min < e.omega_max:
            err("exact", "omega_min", "need 0 < omega_min < omega_max")

    n = cfg.numerics
    for k in ("tol", "rate_tol", "dt_out", "norm_tol"):
        positive("numerics", k)
    if n.max_detectors < 1:
        err("numerics", "max_detectors", "must be >= 1")
    ref = cfg.thermo.reference
    if ref not in ("gibbs", "pre_measurement"):
        try:
            v = float(ref)
            if not 0 < v < 1:
                raise ValueError
        except ValueError:
            err("thermo", "reference", "gibbs, pre_measurement or a population in (0, 1)")
    if ref == "pre_measurement" and not times:
        err("thermo", "reference", "pre_measurement needs at least one measurement")

    sw = cfg.sweep
    if sw is not None:
        if not sw.alpha_s or not sw.alpha_b:
            err("sweep", "alpha_s", "temperature grids must be nonempty")
        elif min(sw.alpha_s + sw.alpha_b) < 0:
            err("sweep", "alpha_s", "alpha must be >= 0")
        elif (min(sw.alpha_b) > 0 or sw.diagonal) and b.omega_min == 0:
            err("bath", "omega_min", "sweeps over finite bath temperature need omega_min > 0")
        if sw.diagonal and sw.alpha_s != sw.alpha_b:
            err("sweep", "diagonal", "diagonal map needs identical alpha_s and alpha_b")
        if sw.k_max < 0:
            err("sweep", "k_max", "must be >= 0")
        if not (0 < sw.dt_min <= sw.dt_max) or sw.dt_step <= 0:
            err("sweep", "dt_min", "need 0 < dt_min <= dt_max and dt_step > 0")
        from .sweep import OBJECTIVES
        if sw.objective not in OBJECTIVES:
            err("sweep", "objective", f"choose from {', '.join(OBJECTIVES)}")
    return out
