"""Shared oracles and small builders for the test suite."""

import numpy as np

from rdx.discretization import Grid, implicit_diffusion_solve
from rdx.network import Reaction, ReactionNetwork, Species


def manufactured_error(nx: int, D: float = 1.0, T: float = 0.1, cfl: float = 0.5, c: float = 2.0) -> float:
    """L-inf error at time T for u = exp(-D pi^2 t) cos(pi x) + c, dt = cfl dx^2."""
    grid = Grid.line(nx)
    x = grid.x
    steps = int(np.ceil(T / (cfl * grid.dx**2)))
    dt = T / steps
    u = np.cos(np.pi * x) + c
    for _ in range(steps):
        u = implicit_diffusion_solve(u, grid, D, dt)
    exact = np.exp(-D * np.pi**2 * T) * np.cos(np.pi * x) + c
    return float(np.max(np.abs(u - exact)))


def observed_orders(errors):
    return [np.log2(a / b) for a, b in zip(errors, errors[1:])]


def random_network(rng: np.random.Generator, max_species: int = 4, max_reactions: int = 3) -> ReactionNetwork:
    n_sp = int(rng.integers(1, max_species + 1))
    n_rx = int(rng.integers(1, max_reactions + 1))
    species = [Species(f"S{i}", i, float(rng.uniform(0.01, 1.0))) for i in range(n_sp)]
    reactions = []
    for _ in range(n_rx):
        while True:
            mu = tuple(int(v) for v in rng.integers(0, 3, n_sp))
            nu = tuple(int(v) for v in rng.integers(0, 3, n_sp))
            if mu != nu:
                break
        kf = float(rng.uniform(0.1, 2.0))
        kb = float(rng.uniform(0.1, 2.0)) if rng.random() < 0.7 else 0.0
        reactions.append(Reaction(mu, nu, kf, kb))
    return ReactionNetwork(tuple(species), tuple(reactions))


def sim_config(grid, t_end, init, boundary=None, interval=None, lp=2.0, **time):
    """SimConfig with ``init`` given as {name: array or Initializer or float}."""
    from rdx.integrate import Initializer, IntegratorConfig, OutputConfig, SimConfig

    inits = {k: (v if isinstance(v, Initializer) else Initializer("constant", (float(v),)))
             for k, v in init.items()}
    return SimConfig(grid, IntegratorConfig(t_end=t_end, **time), inits, dict(boundary or {}),
                     OutputConfig(interval=interval or t_end, lp=lp))


def run_uniform(network, values, t_end, nx=8, **kw):
    """Simulate from spatially uniform data; returns the RunResult."""
    from rdx.discretization import StateField
    from rdx.integrate import simulate

    grid = Grid.line(nx)
    cfg = sim_config(grid, t_end, dict(zip(network.names, values)), **kw)
    init = StateField(grid, np.repeat(np.asarray(values, float)[:, None], nx, axis=1))
    return simulate(network, cfg, init)
