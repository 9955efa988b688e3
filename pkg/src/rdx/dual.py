"""Backward dual heat problem and empirical maximal-regularity ratios.

The problem is

    psi_t + D Lap psi = -theta   on (tau, T) x Omega,
    grad psi . n = 0             on the boundary,
    psi(T) = 0.

With s = T - t it becomes a forward heat equation phi_s = D Lap phi + theta
from phi = 0, which we march with backward Euler. Every step is an M-matrix
solve with a nonnegative right-hand side, so psi >= 0 whenever theta >= 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .discretization import Grid, implicit_diffusion_solve, laplacian_apply

N_ADVERSARIAL = 4


@dataclass
class DualProblem:
    """theta is sampled on the time levels tau + k*dt, k = 0..nt (shape (nt+1, *grid.shape))."""

    grid: Grid
    D: float
    theta: np.ndarray
    horizon: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not self.D > 0:
            raise ValueError("D must be positive")
        tau, T = self.horizon
        if not T > tau:
            raise ValueError("horizon must satisfy tau < T")
        if self.theta.ndim < 1 + self.grid.dim or self.theta.shape[0] < 2:
            raise ValueError("theta needs at least two time levels")
        if self.theta.shape[-self.grid.dim:] != self.grid.shape:
            raise ValueError("theta does not match the grid")
        if np.any(self.theta < 0):
            raise ValueError("theta must be nonnegative")

    @property
    def nt(self) -> int:
        return self.theta.shape[0] - 1

    @property
    def dt(self) -> float:
        tau, T = self.horizon
        return (T - tau) / self.nt

    @property
    def times(self) -> np.ndarray:
        tau, T = self.horizon
        return np.linspace(tau, T, self.nt + 1)


def solve_dual(problem: DualProblem) -> np.ndarray:
    """psi on the time levels of ``problem.theta``; psi[-1] is exactly zero.

    Extra axes between time and space in ``theta`` are solved as a batch.
    """
    theta = problem.theta
    dt = problem.dt
    psi = np.empty_like(theta)
    psi[-1] = 0.0
    for k in range(problem.nt - 1, -1, -1):
        psi[k] = implicit_diffusion_solve(psi[k + 1] + dt * theta[k], problem.grid, problem.D, dt)
    return psi


def _levels_norm(v: np.ndarray, grid: Grid, dt: float, p: float) -> np.ndarray:
    # space-time norm over axis 0 (levels) and the spatial axes; middle axes are batch
    axes = (0,) + tuple(range(v.ndim - grid.dim, v.ndim))
    return (np.sum(np.abs(v) ** p, axis=axes) * grid.cell_volume * dt) ** (1.0 / p)


@dataclass
class DualNorms:
    """Space-time norms over the levels k = 0..nt-1 where the scheme is exact.

    On those levels (psi_{k+1} - psi_k)/dt = -(D Lap psi_k + theta_k), so
    ||psi_t|| <= D ||Lap psi|| + ||theta|| holds by Minkowski.
    """

    theta: np.ndarray
    lap: np.ndarray
    psi_t: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return np.where(self.theta > 0, self.lap / np.where(self.theta > 0, self.theta, 1.0), 0.0)


def dual_norms(problem: DualProblem, psi: np.ndarray, p: float) -> DualNorms:
    grid, dt = problem.grid, problem.dt
    lap = laplacian_apply(psi[:-1], grid)
    psi_t = np.diff(psi, axis=0) / dt
    return DualNorms(
        theta=_levels_norm(problem.theta[:-1], grid, dt, p),
        lap=_levels_norm(lap, grid, dt, p),
        psi_t=_levels_norm(psi_t, grid, dt, p),
    )


def cosine_mode(grid: Grid, k: int) -> np.ndarray:
    """1 + cos(k pi x / lx), the deterministic adversarial sources."""
    x = grid.coords()[0]
    return 1.0 + np.cos(k * np.pi * x / grid.lx)


def random_blend(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Sum of 1-5 positive Gaussian bumps with random centres and widths."""
    n = int(rng.integers(1, 6))
    coords = grid.coords()
    lengths = (grid.lx, grid.ly)[: grid.dim]
    out = np.zeros(grid.shape)
    for _ in range(n):
        amp = rng.uniform(0.2, 1.0)
        width = rng.uniform(0.02, 0.25) * min(lengths)
        r2 = sum((c - rng.uniform(0, L)) ** 2 for c, L in zip(coords, lengths))
        out += amp * np.exp(-r2 / (2 * width**2))
    return out


def sample_sources(grid: Grid, count: int, seed: int) -> np.ndarray:
    """``count`` spatial source profiles: the cosine modes k=1..4 first, then random blends."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        out.append(cosine_mode(grid, i + 1) if i < N_ADVERSARIAL else random_blend(grid, rng))
    return np.stack(out)


@dataclass
class CmrEstimate:
    """Empirical max of ||Lap psi||/||theta||; a lower estimate of C_mr(p')/D."""

    p_prime: float
    D: float
    ratio_max: float
    samples: int
    nx: int
    T: float
    seed: int
    nt: int
    ratios: list[float] = field(default_factory=list)
    theta_norms: list[float] = field(default_factory=list)
    psi_t_norms: list[float] = field(default_factory=list)
    psi_min: float = 0.0
    kind: str = "empirical lower estimate"

    @property
    def scaled(self) -> float:
        """ratio_max * D, the empirical counterpart of C_mr(p')."""
        return self.ratio_max * self.D

    def to_dict(self, full: bool = False) -> dict:
        d = asdict(self)
        if not full:
            for k in ("ratios", "theta_norms", "psi_t_norms"):
                d.pop(k)
        d["scaled"] = self.scaled
        return d


def estimate_cmr(grid: Grid, D: float, p_prime: float, sample_count: int, seed: int = 0,
                 T: float = 1.0, nt: int = 1000) -> CmrEstimate:
    """Max over sampled unit-norm sources of ||Lap psi||_{p'} on (0, T) x Omega.

    Sources are constant in time; each is scaled to ||theta||_{p'} = 1. The
    result depends only on (grid, D, p', sample_count, seed, T, nt).
    """
    if not p_prime > 1:
        raise ValueError("p_prime must be > 1")
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    profiles = sample_sources(grid, sample_count, seed)
    dt = T / nt
    spatial = (np.sum(profiles**p_prime, axis=tuple(range(1, profiles.ndim))) * grid.cell_volume) ** (1 / p_prime)
    # nt levels carry the norm
    scale = 1.0 / (spatial * (nt * dt) ** (1 / p_prime))
    profiles = profiles * scale.reshape((-1,) + (1,) * grid.dim)
    theta = np.broadcast_to(profiles, (nt + 1,) + profiles.shape)
    prob = DualProblem(grid, D, theta, (0.0, T))
    psi = solve_dual(prob)
    norms = dual_norms(prob, psi, p_prime)
    ratios = norms.ratio
    return CmrEstimate(
        p_prime=p_prime, D=D, ratio_max=float(np.max(ratios)), samples=sample_count,
        nx=grid.nx, T=T, seed=seed, nt=nt,
        ratios=[float(r) for r in ratios],
        theta_norms=[float(v) for v in norms.theta],
        psi_t_norms=[float(v) for v in norms.psi_t],
        psi_min=float(psi.min()),
    )


def mode_amplitude(t: np.ndarray, T: float, D: float, kappa2: float) -> np.ndarray:
    """Continuum cosine amplitude of psi for theta = 1 + cos: (1 - e^{-D k^2 (T-t)})/(D k^2)."""
    return -np.expm1(-D * kappa2 * (T - np.asarray(t))) / (D * kappa2)


def discrete_eigenvalue(k: int, h: float, L: float) -> float:
    """kappa_h^2 of the 3-point Neumann Laplacian for the mode cos(k pi x/L)."""
    return (2.0 / h**2) * (1.0 - np.cos(k * np.pi * h / L))
