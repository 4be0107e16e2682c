"""Trajectory container shared by all propagation backends, plus CSV output.

CSV schema ``zenotherm-trajectory/1``: one ``# key = value`` metadata block,
then columns ``t, rho_ee, R_e, R_g, rho_dot, sigma`` followed by the optional
energy columns ``h_s, h_b, h_sb, h_tot`` and a final ``event`` column holding
the measurement duration at rows that coincide with a measurement (empty
otherwise).  Rates are ``nan`` for backends that do not define them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TRAJECTORY_SCHEMA = "zenotherm-trajectory/1"
OCCUPATION_SCHEMA = "zenotherm-occupations/1"


def _fmt(x) -> str:
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12e}"


@dataclass
class Trajectory:
    backend: str
    t: np.ndarray
    rho_ee: np.ndarray
    r_e: np.ndarray | None = None
    r_g: np.ndarray | None = None
    rho_dot: np.ndarray | None = None
    sigma: np.ndarray | None = None
    energies: dict | None = None
    occupations: np.ndarray | None = None
    occupation_t: np.ndarray | None = None
    events: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.rho_ee = np.asarray(self.rho_ee, dtype=float)
        if self.t.shape != self.rho_ee.shape:
            raise ValueError("t and rho_ee must have equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def rho_gg(self) -> np.ndarray:
        return 1.0 - self.rho_ee

    def event_mask(self, tol: float = 1e-9) -> np.ndarray:
        mask = np.zeros(len(self.t), dtype=bool)
        for e in self.events:
            mask |= np.abs(self.t - e.t) < tol
        return mask

    def at(self, time: float) -> float:
        """rho_ee linearly interpolated at ``time``."""
        return float(np.interp(time, self.t, self.rho_ee))

    def _column(self, arr):
        return np.full(len(self.t), np.nan) if arr is None else np.asarray(arr, dtype=float)

    def to_csv(self, path):
        cols = {
            "t": self.t,
            "rho_ee": self.rho_ee,
            "R_e": self._column(self.r_e),
            "R_g": self._column(self.r_g),
            "rho_dot": self._column(self.rho_dot),
            "sigma": self._column(self.sigma),
        }
        if self.energies:
            for k in ("h_s", "h_b", "h_sb", "h_tot"):
                cols[k] = np.asarray(self.energies[k], dtype=float)
        ev = [""] * len(self.t)
        for e in self.events:
            i = int(np.argmin(np.abs(self.t - e.t)))
            if abs(self.t[i] - e.t) < 1e-9:
                ev[i] = _fmt(e.tau)
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema = {TRAJECTORY_SCHEMA}\n")
            fh.write(f"# backend = {self.backend}\n")
            for k in sorted(self.metadata):
                fh.write(f"# {k} = {self.metadata[k]}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(cols) + ["event"])
            data = list(cols.values())
            for i in range(len(self.t)):
                w.writerow([_fmt(c[i]) for c in data] + [ev[i]])

    def occupations_to_csv(self, path):
        if self.occupations is None:
            raise ValueError("trajectory carries no mode occupations")
        n = self.occupations.shape[1]
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema = {OCCUPATION_SCHEMA}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"n_{i + 1}" for i in range(n)])
            for t, row in zip(self.occupation_t, self.occupations):
                w.writerow([_fmt(t)] + [_fmt(x) for x in row])


def read_trajectory_csv(path) -> dict:
    """Load a trajectory CSV into {column: ndarray} plus ``meta`` and ``event``."""
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
        else:
            body.append(line)
    rows = list(csv.reader(body))
    header, rows = rows[0], rows[1:]
    out = {"meta": meta}
    for j, name in enumerate(header):
        if name == "event":
            out[name] = [r[j] for r in rows]
        else:
            out[name] = np.array([float(r[j]) for r in rows])
    return out
