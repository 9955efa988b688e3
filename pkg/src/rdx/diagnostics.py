"""Time-series recording, invariant checks and output files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .discretization import BoundaryFlux, Grid, StateField, spatial_norm_lp
from .network import MassCondition, MassKind, ReactionNetwork, classify_mass_condition
from .theory import gronwall_mass_bound

GRONWALL_RTOL = 1e-6
PLATEAU_RTOL = 1e-3
EQUILIBRIUM_FACTOR = 10.0


class DiagnosticsLog:
    """Rows of per-species min/max/mass/L^p plus totals, one per output time."""

    def __init__(self, names: Sequence[str], grid: Grid, lp: float = 2.0):
        self.names = list(names)
        self.grid = grid
        self.lp = float(lp)
        self.rows: list[dict[str, float]] = []
        self.reaction_residual: list[float] = []  # max_j |R_j| over cells
        self.steady = False
        self.n_accepted = 0
        self.n_rejected = 0

    @property
    def columns(self) -> list[str]:
        cols = ["t"]
        for n in self.names:
            cols += [f"min_{n}", f"max_{n}", f"mass_{n}", f"lp_{n}"]
        return cols + ["total_mass", "mass_control_residual", "dt"]

    @property
    def times(self) -> list[float]:
        return [r["t"] for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def append(self, row: dict[str, float]) -> None:
        if self.rows and not row["t"] > self.rows[-1]["t"]:
            raise ValueError("log times must be strictly increasing")
        self.rows.append(row)

    @classmethod
    def from_csv(cls, path, grid: Grid, lp: float = 2.0) -> "DiagnosticsLog":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            names = [c[4:] for c in reader.fieldnames if c.startswith("min_")]
            out = cls(names, grid, lp)
            for r in reader:
                out.rows.append({k: float(v) for k, v in r.items()})
        return out


def record(log: DiagnosticsLog, state: StateField, network: ReactionNetwork,
           mass_condition: Optional[MassCondition] = None, dt: float = 0.0) -> DiagnosticsLog:
    """Append one row for ``state``. Values are recorded as-is, never clipped."""
    if mass_condition is None:
        mass_condition = classify_mass_condition(network)
    grid = state.grid
    v = state.values
    axes = tuple(range(1, v.ndim))
    mins = v.min(axis=axes)
    maxs = v.max(axis=axes)
    masses = grid.integrate(v)
    lps = spatial_norm_lp(v, grid, log.lp)

    row: dict[str, float] = {"t": float(state.time)}
    for i, n in enumerate(log.names):
        row[f"min_{n}"] = float(mins[i])
        row[f"max_{n}"] = float(maxs[i])
        row[f"mass_{n}"] = float(masses[i])
        row[f"lp_{n}"] = float(lps[i])
    row["total_mass"] = float(np.sum(masses))

    consts = mass_condition.constants()
    if consts is None:
        row["mass_control_residual"] = math.nan
    else:
        c1, c2 = consts
        flat = v.reshape(v.shape[0], -1)
        k = int(np.argmax(flat.sum(axis=0)))
        u = np.maximum(flat[:, k:k + 1], 0.0)
        row["mass_control_residual"] = float(network.source_field(u).sum() - (c1 * u.sum() + c2))
    row["dt"] = float(dt)
    log.append(row)

    if network.n_reactions:
        log.reaction_residual.append(float(np.max(np.abs(network.rates(np.maximum(v, 0.0))))))
    else:
        log.reaction_residual.append(0.0)
    return log


@dataclass
class Check:
    name: str
    passed: bool
    value: Optional[float]
    bound: Optional[float]
    tol: Optional[float]
    skipped: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        for k in ("value", "bound", "tol"):
            if isinstance(d[k], float) and not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


@dataclass
class CheckReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "SKIP" if c.skipped else ("PASS" if c.passed else "FAIL")
            out.append(f"{status:4} {c.name}: value={c.value} bound={c.bound} tol={c.tol} {c.note}".rstrip())
        return out


def spacetime_norm_from_log(log: DiagnosticsLog, name: str) -> float:
    """||u||_{p,(0,T) x Omega} from the per-row spatial norms (right-point rule)."""
    t = log.column("t")
    lp = log.column(f"lp_{name}")
    if len(t) < 2:
        return float(lp[0]) if len(lp) else 0.0
    p = log.lp
    return float(np.sum(lp[1:] ** p * np.diff(t)) ** (1.0 / p))


def verify_invariants(log: DiagnosticsLog, network: ReactionNetwork,
                      mass_condition: Optional[MassCondition], grid: Grid,
                      flux: BoundaryFlux, steady_tol: float = 1e-9) -> CheckReport:
    """Evaluate the runtime invariants on a finished log."""
    if len(log) == 0:
        raise ValueError("incomplete log: nothing recorded")
    if mass_condition is None:
        mass_condition = classify_mass_condition(network)
    rep = CheckReport()
    t = log.column("t")

    # positivity
    mins = np.array([log.column(f"min_{n}") for n in log.names])
    mn = float(mins.min())
    rep.checks.append(Check("positivity", mn >= 0.0, mn, 0.0, 0.0))

    # Gronwall envelope
    consts = mass_condition.constants()
    if consts is None:
        rep.checks.append(Check("gronwall_envelope", True, None, None, GRONWALL_RTOL, skipped=True,
                                note="mass condition not established"))
    else:
        c1, c2 = consts
        mass = log.column("total_mass")
        B = flux.inflow_rate(grid)
        bound = np.array([gronwall_mass_bound(c1, c2, mass[0], grid.volume, B, float(s)) for s in t])
        excess = mass / np.maximum(bound, np.finfo(float).tiny) - 1.0
        worst = int(np.argmax(excess))
        rep.checks.append(Check("gronwall_envelope", bool(np.all(mass <= bound * (1 + GRONWALL_RTOL))),
                                float(mass[worst]), float(bound[worst]), GRONWALL_RTOL,
                                note=f"worst at t={t[worst]:g}"))

    # uniform-in-time plateau
    maxs = np.array([log.column(f"max_{n}") for n in log.names]).max(axis=0)
    half = t[-1] / 2
    first, second = maxs[t <= half], maxs[t > half]
    if len(first) and len(second):
        a, b = float(second.max()), float(first.max())
        rep.checks.append(Check("uniform_plateau", a <= b * (1 + PLATEAU_RTOL), a, b, PLATEAU_RTOL))
    else:
        rep.checks.append(Check("uniform_plateau", True, None, None, PLATEAU_RTOL, skipped=True,
                                note="too few rows"))

    # space-time L^p finiteness, bound C(T) = max observed
    norms = [spacetime_norm_from_log(log, n) for n in log.names]
    cT = max(norms)
    rep.checks.append(Check("lp_spacetime_finite", bool(np.all(np.isfinite(norms))), cT, cT, None,
                            note=f"p={log.lp:g}"))

    # equilibrium residual
    reversible = network.n_reactions > 0 and all(r.reversible for r in network.reactions)
    if reversible and log.steady and log.reaction_residual:
        res = log.reaction_residual[-1]
        lim = steady_tol * EQUILIBRIUM_FACTOR
        rep.checks.append(Check("equilibrium_residual", res < lim, res, lim, None))
    else:
        why = "network not reversible" if not reversible else "run did not reach steady state"
        rep.checks.append(Check("equilibrium_residual", True, None, None, None, skipped=True, note=why))
    return rep


def _fmt(x: float) -> str:
    return repr(float(x))


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=os.path.dirname(__file__))
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def config_hash(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def write_outputs(log: DiagnosticsLog, report: Optional[CheckReport], out_dir,
                  snapshots: Iterable[StateField] = (), config_digest: str = "",
                  extra: Optional[dict] = None) -> list[Path]:
    """Write timeseries.csv, report.json and snapshot_<t>.csv files into ``out_dir``."""
    if len(log) == 0:
        raise ValueError("nothing recorded")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    ts = out / "timeseries.csv"
    with open(ts, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(log.columns)
        for row in log.rows:
            w.writerow([_fmt(row[c]) for c in log.columns])
    written.append(ts)

    payload = {
        "checks": [c.to_dict() for c in report.checks] if report is not None else [],
        "config_hash": config_digest,
        "git_describe": git_describe(),
    }
    if extra:
        payload.update(extra)
    rj = out / "report.json"
    rj.write_text(json.dumps(payload, indent=2) + "\n")
    written.append(rj)

    for snap in snapshots:
        path = out / f"snapshot_{snap.time:.6g}.csv"
        coords = snap.grid.coords()
        header = ["x"] if snap.grid.dim == 1 else ["x", "y"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header + log.names)
            cols = [c.ravel() for c in coords] + [v.ravel() for v in snap.values]
            for vals in zip(*cols):
                w.writerow([_fmt(v) for v in vals])
        written.append(path)
    return written
