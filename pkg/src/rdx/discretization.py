"""Cell-centred finite volumes on intervals and rectangles.

Fields for one species have shape ``grid.shape``: ``(nx,)`` in 1D and
``(ny, nx)`` in 2D (x varies along the last axis). Boundary data is a
constant normal flux ``b`` with ``-D du/dn = b`` on every face of the
boundary; ``b <= 0`` means inflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    dim: int
    nx: int
    ny: int = 1
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.dim == 1 and self.ny != 1:
            object.__setattr__(self, "ny", 1)
        if self.nx < 3 or (self.dim == 2 and self.ny < 3):
            raise ValueError("need at least 3 cells per direction")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @classmethod
    def line(cls, nx: int, lx: float = 1.0) -> "Grid":
        return cls(1, nx, 1, lx, 1.0)

    @classmethod
    def rect(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        return cls(2, nx, ny, lx, ly)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx,) if self.dim == 1 else (self.ny, self.nx)

    @property
    def cell_volume(self) -> float:
        return self.dx if self.dim == 1 else self.dx * self.dy

    @property
    def volume(self) -> float:
        return self.lx if self.dim == 1 else self.lx * self.ly

    @property
    def boundary_measure(self) -> float:
        """|dOmega|: 2 end points in 1D, the perimeter in 2D."""
        return 2.0 if self.dim == 1 else 2.0 * (self.lx + self.ly)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    def coords(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays broadcast to ``shape``."""
        if self.dim == 1:
            return (self.x,)
        yy, xx = np.meshgrid(self.y, self.x, indexing="ij")
        return xx, yy

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Sum over the trailing spatial axes times the cell volume."""
        axes = tuple(range(-self.dim, 0))
        return np.sum(values, axis=axes) * self.cell_volume


@dataclass(frozen=True)
class BoundaryFlux:
    """Per-species constant outward normal flux b_i <= 0."""

    b: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if any(v > 0 for v in self.b):
            raise ValueError("boundary flux must satisfy b <= 0 (inflow or no flux)")

    @classmethod
    def zero(cls, n_species: int) -> "BoundaryFlux":
        return cls((0.0,) * n_species)

    def inflow_rate(self, grid: Grid) -> float:
        """B = sum_i |b_i| |dOmega|, total mass entering per unit time."""
        return float(sum(abs(v) for v in self.b) * grid.boundary_measure)


def _boundary_source(grid: Grid, b: float, axis: int) -> np.ndarray:
    """Per-cell rate from the flux through the two boundary faces normal to ``axis``.

    axis = -1 is x, -2 is y (2D only). Face area / cell volume is 1/dx or 1/dy.
    """
    n = grid.shape[axis]
    h = grid.dx if axis == -1 else grid.dy
    prof = np.zeros(n)
    prof[0] -= b / h
    prof[-1] -= b / h
    if grid.dim == 1:
        return prof
    return prof[None, :] if axis == -1 else prof[:, None]


def boundary_source(grid: Grid, b: float) -> np.ndarray:
    """Per-cell rate contributed by the constant boundary flux ``b``."""
    out = np.broadcast_to(_boundary_source(grid, b, -1), grid.shape).copy()
    if grid.dim == 2:
        out += _boundary_source(grid, b, -2)
    return out


def _second_difference(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    # zero-flux faces at both ends
    u = np.moveaxis(u, axis, -1)
    out = np.empty_like(u)
    out[..., 1:-1] = u[..., :-2] - 2.0 * u[..., 1:-1] + u[..., 2:]
    out[..., 0] = u[..., 1] - u[..., 0]
    out[..., -1] = u[..., -2] - u[..., -1]
    return np.moveaxis(out / (h * h), -1, axis)


def laplacian_apply(u: np.ndarray, grid: Grid, D: float = 1.0, b: float = 0.0) -> np.ndarray:
    """Discrete div(D grad u) with boundary flux ``b`` per cell.

    Trailing axes of ``u`` are spatial (``grid.shape``); leading axes are
    batched. The sum of output times cell volume equals the inflow
    -b |dOmega| exactly (up to rounding).
    """
    u = np.asarray(u, dtype=float)
    out = D * _second_difference(u, -1, grid.dx)
    if grid.dim == 2:
        out = out + D * _second_difference(u, -2, grid.dy)
    if b != 0.0:
        out = out + boundary_source(grid, b)
    return out


class TridiagonalFactor:
    """Thomas-algorithm factorisation of a tridiagonal matrix.

    ``lower[0]`` and ``upper[-1]`` are ignored. For an M-matrix (positive
    diagonal, nonpositive off-diagonals, diagonally dominant) no pivoting is
    needed and every operation in ``solve`` combines nonnegative quantities,
    so nonnegative right-hand sides give nonnegative solutions exactly.
    """

    def __init__(self, lower: Sequence[float], diag: Sequence[float], upper: Sequence[float]):
        lower = np.asarray(lower, dtype=float)
        diag = np.asarray(diag, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = diag.shape[0]
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("lower, diag, upper must have equal length")
        cp = np.zeros(n)
        inv = np.zeros(n)
        denom = diag[0]
        for i in range(n):
            if i > 0:
                denom = diag[i] - lower[i] * cp[i - 1]
            if denom == 0 or not np.isfinite(denom):
                raise np.linalg.LinAlgError("singular tridiagonal system")
            inv[i] = 1.0 / denom
            cp[i] = upper[i] * inv[i] if i < n - 1 else 0.0
        self.n = n
        self.lower = lower
        self.cp = cp
        self.inv = inv

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve along axis 0 of ``rhs`` (extra axes are independent columns)."""
        d = np.array(rhs, dtype=float, copy=True)
        if d.shape[0] != self.n:
            raise ValueError("rhs length does not match matrix size")
        lower, cp, inv = self.lower, self.cp, self.inv
        d[0] *= inv[0]
        for i in range(1, self.n):
            d[i] -= lower[i] * d[i - 1]
            d[i] *= inv[i]
        for i in range(self.n - 2, -1, -1):
            d[i] -= cp[i] * d[i + 1]
        return d


@lru_cache(maxsize=256)
def _neumann_factor(n: int, r: float) -> TridiagonalFactor:
    """Factor of I - r * (3-point Neumann second difference), r = dt D / h^2."""
    lower = np.full(n, -r)
    upper = np.full(n, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    diag[0] = diag[-1] = 1.0 + r
    return TridiagonalFactor(lower, diag, upper)


def neumann_matrix(n: int, r: float) -> np.ndarray:
    """Dense I - r * L_h for tests and small problems."""
    A = np.diag(np.full(n, 1.0 + 2.0 * r)) - r * np.eye(n, k=1) - r * np.eye(n, k=-1)
    A[0, 0] = A[-1, -1] = 1.0 + r
    return A


def _solve_axis(u: np.ndarray, r: float, axis: int) -> np.ndarray:
    fac = _neumann_factor(u.shape[axis], float(r))
    moved = np.moveaxis(u, axis, 0)
    return np.moveaxis(fac.solve(moved), 0, axis)


def implicit_diffusion_solve(u: np.ndarray, grid: Grid, D: float, dt: float,
                             source: np.ndarray | None = None, b: float = 0.0) -> np.ndarray:
    """One backward-Euler step of u_t = D Lap u + source with flux ``b``.

    1D is a single tridiagonal solve. In 2D the operator is split as
    (I - dt D Lx)(I - dt D Ly); the x-face inflow enters the x sweep and the
    y-face inflow the y sweep, so each sweep conserves mass exactly.
    ``u`` may carry leading batch axes.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rhs = np.asarray(u, dtype=float)
    if source is not None:
        rhs = rhs + dt * source
    if b != 0.0:
        rhs = rhs + dt * _boundary_source(grid, b, -1)
    out = _solve_axis(rhs, dt * D / grid.dx**2, -1)
    if grid.dim == 2:
        if b != 0.0:
            out = out + dt * _boundary_source(grid, b, -2)
        out = _solve_axis(out, dt * D / grid.dy**2, -2)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite values in implicit diffusion solve")
    return out


def diffusion_step_implicit(values: np.ndarray, grid: Grid, diffusion: Sequence[float],
                            flux: BoundaryFlux | Sequence[float] | None, dt: float) -> np.ndarray:
    """Backward-Euler diffusion for every species of ``values`` (shape (I, *grid.shape))."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    bs = (0.0,) * n if flux is None else (flux.b if isinstance(flux, BoundaryFlux) else tuple(flux))
    if len(diffusion) != n or len(bs) != n:
        raise ValueError("diffusion/flux length does not match species count")
    out = np.empty_like(values)
    for i in range(n):
        out[i] = implicit_diffusion_solve(values[i], grid, float(diffusion[i]), dt, b=float(bs[i]))
    return out


def discrete_norm_lp(trajectory, grid: Grid, dt: float, p: float) -> float:
    """Space-time L^p norm of a uniformly sampled trajectory.

    ``trajectory`` has shape (n_steps, *grid.shape); each slice stands for a
    time slab of length ``dt``. ``p = inf`` gives the max of |v|.
    """
    v = np.asarray(trajectory, dtype=float)
    if v.size == 0:
        raise ValueError("empty trajectory")
    if p == np.inf:
        return float(np.max(np.abs(v)))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(np.abs(v) ** p) * grid.cell_volume * dt) ** (1.0 / p))


def spatial_norm_lp(values: np.ndarray, grid: Grid, p: float) -> np.ndarray:
    """L^p(Omega) norm over the trailing spatial axes."""
    v = np.abs(np.asarray(values, dtype=float))
    axes = tuple(range(-grid.dim, 0))
    if p == np.inf:
        return np.max(v, axis=axes)
    if p < 1:
        raise ValueError("p must be >= 1")
    return (np.sum(v**p, axis=axes) * grid.cell_volume) ** (1.0 / p)


@dataclass
class StateField:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[1:] != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("state contains non-finite values")

    @property
    def n_species(self) -> int:
        return self.values.shape[0]

    def masses(self) -> np.ndarray:
        return self.grid.integrate(self.values)

    def total_mass(self) -> float:
        return float(np.sum(self.masses()))

    def copy(self) -> "StateField":
        return StateField(self.grid, self.values.copy(), self.time)
