"""Operator-split time stepping for the reaction-diffusion system.

Diffusion is treated with backward Euler (unconditionally stable, keeps
nonnegative fields nonnegative). Reactions are advanced with explicit Euler
on the clipped state [u]_+; a reaction step that would produce a negative
value is rejected and retried with half the step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .discretization import BoundaryFlux, Grid, StateField, diffusion_step_implicit
from .network import ReactionNetwork, classify_mass_condition

log = logging.getLogger(__name__)

GROWTH_FACTOR = 1.2
GROWTH_AFTER = 10
STEADY_STREAK = 3


class Scheme(str, Enum):
    LIE = "lie"
    STRANG = "strang"


class StepFailure(RuntimeError):
    """Reaction step could not be accepted before dt fell below dt_min."""

    def __init__(self, message: str, cell: Optional[tuple] = None, state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.cell = cell
        self.state = state


@dataclass
class IntegratorConfig:
    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    safety: float = 1.0
    scheme: Scheme = Scheme.LIE
    steady_tol: float = 1e-9

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.steady_tol > 0:
            raise ValueError("steady_tol must be positive")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")


def reaction_step(values: np.ndarray, network: ReactionNetwork, dt: float,
                  dt_min: float = 1e-12) -> tuple[np.ndarray, float]:
    """Explicit Euler step u + dt f([u]_+) with reject-and-halve.

    ``values`` has shape (I, ...cells). Returns the accepted state (>= 0
    exactly) and the step that was actually taken.
    """
    if network.n_reactions == 0:
        return np.array(values, dtype=float, copy=True), dt
    clipped = np.maximum(values, 0.0)
    f = network.source_field(clipped)
    while True:
        new = values + dt * f
        ok = np.all(new >= 0.0) and np.all(np.isfinite(new))
        if ok:
            return new, dt
        dt = dt / 2
        if dt < dt_min:
            bad = np.argwhere(~(new >= 0.0) | ~np.isfinite(new))[0]
            cell = tuple(int(i) for i in bad[1:])
            raise StepFailure(
                f"reaction step rejected down to dt={dt:.3g} < dt_min at cell {cell}",
                cell=cell, state=values[(slice(None),) + cell].copy(),
            )


def _reaction_substeps(values, network, h, dt_min):
    # advance exactly by h, sub-cycling on rejection
    t = 0.0
    while h - t > 1e-14 * h:
        values, used = reaction_step(values, network, h - t, dt_min)
        t += used
    return values


def step(state: StateField, network: ReactionNetwork, flux: BoundaryFlux,
         config: IntegratorConfig, dt: float) -> tuple[StateField, float]:
    """One split step; returns the new state and the dt actually used (<= dt)."""
    D = network.diffusion
    if config.scheme is Scheme.LIE:
        vals, used = reaction_step(state.values, network, dt, config.dt_min)
        vals = diffusion_step_implicit(vals, state.grid, D, flux, used)
    else:
        vals, half = reaction_step(state.values, network, dt / 2, config.dt_min)
        used = 2 * half
        vals = diffusion_step_implicit(vals, state.grid, D, flux, used)
        vals = _reaction_substeps(vals, network, half, config.dt_min)
    return StateField(state.grid, vals, state.time + used), used


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Initializer:
    """Per-species initial profile: constant, random or gaussian."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        n = len(self.params)
        if self.kind == "constant" and n != 1:
            raise ValueError("constant(c) takes one argument")
        if self.kind == "random" and n != 3:
            raise ValueError("random(min, max, seed) takes three arguments")
        if self.kind == "gaussian" and n not in (4, 5):
            raise ValueError("gaussian(x0[, y0], sigma, amp, base) takes 4 or 5 arguments")
        if self.kind not in ("constant", "random", "gaussian"):
            raise ValueError(f"unknown initializer {self.kind!r}")

    def evaluate(self, grid: Grid) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            out = np.full(grid.shape, float(p[0]))
        elif self.kind == "random":
            lo, hi, seed = p
            rng = np.random.default_rng(int(seed))
            out = lo + (hi - lo) * rng.random(grid.shape)
        else:
            if grid.dim == 1:
                if len(p) != 4:
                    raise ValueError("1D gaussian takes (x0, sigma, amp, base)")
                x0, sigma, amp, base = p
                r2 = (grid.x - x0) ** 2
            else:
                if len(p) != 5:
                    raise ValueError("2D gaussian takes (x0, y0, sigma, amp, base)")
                x0, y0, sigma, amp, base = p
                xx, yy = grid.coords()
                r2 = (xx - x0) ** 2 + (yy - y0) ** 2
            out = base + amp * np.exp(-r2 / (2 * sigma**2))
        if not np.all(np.isfinite(out)) or np.any(out < 0):
            raise ValueError(f"initial data from {self} must be finite and nonnegative")
        return out

    def __str__(self):
        return f"{self.kind}({', '.join(f'{v:g}' for v in self.params)})"


@dataclass
class OutputConfig:
    interval: float = 0.1
    lp: float = 2.0
    dir: str = "out"


@dataclass
class SimConfig:
    grid: Grid
    time: IntegratorConfig
    init: dict[str, Initializer]
    boundary: dict[str, float] = field(default_factory=dict)
    output: OutputConfig = field(default_factory=OutputConfig)
    text: str = ""  # source text, for hashing

    def validate(self, network: ReactionNetwork) -> None:
        names = set(network.names)
        for key in list(self.init) + list(self.boundary):
            if key not in names:
                raise ValueError(f"config refers to unknown species {key!r}")
        missing = [n for n in network.names if n not in self.init]
        if missing:
            raise ValueError(f"no initial data for species {', '.join(missing)}")
        for k, v in self.boundary.items():
            if v > 0:
                raise ValueError(f"boundary flux for {k} must be <= 0")
        if not self.output.interval > 0:
            raise ValueError("output interval must be positive")
        if self.output.lp < 1:
            raise ValueError("output lp must be >= 1")

    def flux(self, network: ReactionNetwork) -> BoundaryFlux:
        return BoundaryFlux(tuple(self.boundary.get(n, 0.0) for n in network.names))

    def initial_state(self, network: ReactionNetwork) -> StateField:
        vals = np.stack([self.init[n].evaluate(self.grid) for n in network.names])
        return StateField(self.grid, vals, 0.0)


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    snapshots: list[StateField]
    log: "object"  # diagnostics.DiagnosticsLog
    steady: bool
    n_accepted: int
    n_rejected: int


def simulate(network: ReactionNetwork, config: SimConfig,
             initial: Optional[StateField] = None,
             on_step: Optional[Callable[[StateField, float], None]] = None) -> RunResult:
    """Run to ``t_end`` or steady state, recording diagnostics at output times.

    Steady state is declared after 3 consecutive accepted steps with
    max |du/dt| < steady_tol. The step is halved on rejection and grown by
    1.2 after 10 consecutive clean steps (capped at dt_max). Step sizes are
    clipped so output times and t_end are hit exactly.
    """
    from .diagnostics import DiagnosticsLog, record  # avoid import cycle

    config.validate(network)
    tc = config.time
    state = initial if initial is not None else config.initial_state(network)
    if np.any(state.values < 0) or not np.all(np.isfinite(state.values)):
        raise ValueError("initial data must be finite and nonnegative")
    flux = config.flux(network)

    mc = classify_mass_condition(network)
    dlog = DiagnosticsLog(network.names, config.grid, lp=config.output.lp)
    record(dlog, state, network, mc, dt=0.0)
    snapshots = [state.copy()]

    t = 0.0
    dt = tc.dt_init
    out_k = 1
    clean = 0
    streak = 0
    steady = False
    n_acc = n_rej = 0
    last_used = 0.0
    while True:
        target = min(out_k * config.output.interval, tc.t_end)
        remaining = target - t
        if remaining <= 0:
            break
        h = tc.safety * dt
        hit = h >= remaining * (1 - 1e-9)
        if hit:
            h = remaining
        new, used = step(state, network, flux, tc, h)
        n_acc += 1
        if used < h:
            n_rej += int(round(np.log2(h / used)))
            dt = used / tc.safety
            clean = 0
            hit = False
        else:
            clean += 1
            if clean >= GROWTH_AFTER:
                dt = min(dt * GROWTH_FACTOR, tc.dt_max)
                clean = 0
        rate = float(np.max(np.abs(new.values - state.values))) / used
        t = target if hit else t + used
        new.time = t
        state = new
        last_used = used
        if on_step is not None:
            on_step(state, used)

        streak = streak + 1 if rate < tc.steady_tol else 0
        if streak >= STEADY_STREAK:
            steady = True
        if hit or steady:
            record(dlog, state, network, mc, dt=used)
            snapshots.append(state.copy())
            if hit:
                out_k += 1
        if steady or t >= tc.t_end:
            break

    dlog.steady = steady
    dlog.n_accepted = n_acc
    dlog.n_rejected = n_rej
    if dlog.times[-1] != state.time:
        record(dlog, state, network, mc, dt=last_used)
        snapshots.append(state.copy())
    log.debug("run finished at t=%g after %d steps (%d rejections), steady=%s",
              state.time, n_acc, n_rej, steady)
    return RunResult(snapshots, dlog, steady, n_acc, n_rej)
