"""Simulation config files.

One ``section.key = value`` assignment per line; ``#`` starts a comment::

    grid.dim = 1
    grid.nx = 64
    grid.lx = 1.0
    time.t_end = 5
    time.dt_init = 1e-3
    time.dt_max = 1e-2
    time.scheme = lie
    init.A = random(0, 1, 42)
    init.B = constant(0.5)
    init.C = gaussian(0.5, 0.1, 2.0, 0.0)
    boundary.A = -0.1
    output.interval = 0.5
    output.lp = 2
    output.dir = out

Sections: grid (dim, nx, ny, lx, ly), time (t_end, dt_init, dt_min,
dt_max, safety, scheme, steady_tol), init.<species>, boundary.<species>,
output (interval, lp, dir).
"""

from __future__ import annotations

import re

from .discretization import Grid
from .integrate import Initializer, IntegratorConfig, OutputConfig, SimConfig


class ConfigError(ValueError):
    pass


_LINE = re.compile(r"^(?P<section>[a-z]+)\.(?P<key>[A-Za-z][A-Za-z0-9_]*)\s*=\s*(?P<value>.+?)\s*$")
_CALL = re.compile(r"^(?P<kind>[a-z]+)\s*\((?P<args>[^)]*)\)$")

_GRID_KEYS = {"dim": int, "nx": int, "ny": int, "lx": float, "ly": float}
_TIME_KEYS = {"t_end": float, "dt_init": float, "dt_min": float, "dt_max": float,
              "safety": float, "scheme": str, "steady_tol": float}
_OUTPUT_KEYS = {"interval": float, "lp": float, "dir": str}


def _convert(conv, value, lineno, key):
    try:
        if conv is float and value.lower() in ("inf", "infinity"):
            return float("inf")
        return conv(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None


def parse_initializer(text: str) -> Initializer:
    m = _CALL.match(text.strip())
    if not m:
        raise ValueError(f"expected constant(c), random(min,max,seed) or gaussian(...), got {text!r}")
    args = [a.strip() for a in m.group("args").split(",") if a.strip()]
    return Initializer(m.group("kind"), tuple(float(a) for a in args))


def parse_config(text: str) -> SimConfig:
    grid: dict = {}
    time: dict = {}
    output: dict = {}
    init: dict[str, Initializer] = {}
    boundary: dict[str, float] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        section, key, value = m.group("section", "key", "value")
        if section == "grid":
            if key not in _GRID_KEYS:
                raise ConfigError(f"line {lineno}: unknown key grid.{key}")
            grid[key] = _convert(_GRID_KEYS[key], value, lineno, key)
        elif section == "time":
            if key not in _TIME_KEYS:
                raise ConfigError(f"line {lineno}: unknown key time.{key}")
            time[key] = _convert(_TIME_KEYS[key], value, lineno, key)
        elif section == "output":
            if key not in _OUTPUT_KEYS:
                raise ConfigError(f"line {lineno}: unknown key output.{key}")
            output[key] = _convert(_OUTPUT_KEYS[key], value, lineno, key)
        elif section == "init":
            try:
                init[key] = parse_initializer(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
        elif section == "boundary":
            b = _convert(float, value, lineno, key)
            if b > 0:
                raise ConfigError(f"line {lineno}: boundary flux for {key} must be <= 0")
            boundary[key] = b
        else:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")

    if "t_end" not in time:
        raise ConfigError("time.t_end is required")
    try:
        g = Grid(grid.get("dim", 1), grid.get("nx", 64), grid.get("ny", 1),
                 grid.get("lx", 1.0), grid.get("ly", 1.0))
        tc = IntegratorConfig(**time)
        oc = OutputConfig(**output)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return SimConfig(g, tc, init, boundary, oc, text=text)


def render_config(cfg: SimConfig) -> str:
    """Inverse of parse_config (up to comments and ordering)."""
    g, t, o = cfg.grid, cfg.time, cfg.output
    lines = [f"grid.dim = {g.dim}", f"grid.nx = {g.nx}", f"grid.ny = {g.ny}",
             f"grid.lx = {g.lx!r}", f"grid.ly = {g.ly!r}",
             f"time.t_end = {t.t_end!r}", f"time.dt_init = {t.dt_init!r}",
             f"time.dt_min = {t.dt_min!r}", f"time.dt_max = {t.dt_max!r}",
             f"time.safety = {t.safety!r}", f"time.scheme = {t.scheme.value}",
             f"time.steady_tol = {t.steady_tol!r}"]
    for name, ini in cfg.init.items():
        lines.append(f"init.{name} = {ini.kind}({', '.join(repr(float(v)) for v in ini.params)})")
    for name, b in cfg.boundary.items():
        lines.append(f"boundary.{name} = {b!r}")
    lines += [f"output.interval = {o.interval!r}", f"output.lp = {o.lp!r}", f"output.dir = {o.dir}"]
    return "\n".join(lines) + "\n"
