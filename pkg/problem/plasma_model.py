"""Discretized linearized Vlasov-Ampere problem and its classical reference solves.

Unknowns are laid out register-major and little-endian: the flat index of
(x, v, e) is ``x + 2**n_x * v + 2**(n_x + n_v) * e``. The perturbed
distribution g lives in the e=0 sector, the electric field E_x at (x, v=0, e=1)
and every (x, v != 0, e=1) slot is unused.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from config.settings import Config

logger = logging.getLogger(__name__)

Profile = Union[float, Callable, np.ndarray, list]


class ProblemError(ValueError):
    """Invalid plasma parameters or discretization"""


class SingularMatrixError(ArithmeticError):
    """Dense factorization met a vanishing pivot"""


def _evaluate_profile(profile, x, x_max, dtype=float):
    """Evaluate a constant, callable or tabulated profile at positions x"""
    x = np.asarray(x, dtype=float)
    if callable(profile):
        return np.broadcast_to(np.asarray(profile(x), dtype=dtype), x.shape).copy()
    values = np.asarray(profile, dtype=dtype)
    if values.ndim == 0:
        return np.full(x.shape, values[()], dtype=dtype)
    # Tabulated on a uniform grid over [0, x_max)
    nodes = np.arange(len(values)) * x_max / len(values)
    if np.iscomplexobj(values):
        return np.interp(x, nodes, values.real) + 1j * np.interp(x, nodes, values.imag)
    return np.interp(x, nodes, values)


@dataclass(frozen=True)
class PlasmaParams:
    omega0: float
    x_max: float
    v_max: float
    density: Profile = 1.0
    temperature: Profile = 1.0
    source: Profile = 0.0
    include_a: bool = True

    @classmethod
    def default(cls, omega0=None, x_max=None, v_max=None, source_width=None,
                source_center=None, density=1.0, temperature=1.0, include_a=True):
        """Default profiles: uniform Maxwellian background and a Gaussian antenna"""
        omega0 = Config.OMEGA0 if omega0 is None else omega0
        x_max = Config.X_MAX if x_max is None else x_max
        v_max = Config.V_MAX if v_max is None else v_max
        source_width = Config.SOURCE_WIDTH if source_width is None else source_width
        width = x_max / 8 if source_width is None else source_width
        center = x_max / 2 if source_center is None else source_center

        def source(x):
            return np.exp(-(x - center) ** 2 / (2 * width ** 2))

        return cls(omega0=float(omega0), x_max=float(x_max), v_max=float(v_max),
                   density=density, temperature=temperature, source=source,
                   include_a=include_a)

    def density_at(self, x):
        return _evaluate_profile(self.density, x, self.x_max)

    def temperature_at(self, x):
        return _evaluate_profile(self.temperature, x, self.x_max)

    def source_at(self, x):
        return _evaluate_profile(self.source, x, self.x_max, dtype=complex)


@dataclass(frozen=True, eq=False)
class GridSpec:
    n_x: int
    n_v: int
    dx: float
    dv: float
    x_points: np.ndarray = field(repr=False)
    v_points: np.ndarray = field(repr=False)

    @property
    def nx_points(self):
        return 1 << self.n_x

    @property
    def nv_points(self):
        return 1 << self.n_v

    @property
    def layout(self):
        return StateLayout(self.n_x, self.n_v)


@dataclass(frozen=True)
class StateLayout:
    n_x: int
    n_v: int

    @property
    def dim(self):
        return 1 << (self.n_x + self.n_v + 1)

    def index(self, x, v, e):
        """Flat basis index of (x, v, e); v is the register value, not the signed one"""
        return (np.asarray(x) + (np.asarray(v) << self.n_x)
                + (np.asarray(e) << (self.n_x + self.n_v)))

    def _fields(self):
        flat = np.arange(self.dim)
        x = flat & ((1 << self.n_x) - 1)
        v = (flat >> self.n_x) & ((1 << self.n_v) - 1)
        e = flat >> (self.n_x + self.n_v)
        return x, v, e

    @property
    def g_mask(self):
        _, _, e = self._fields()
        return e == 0

    @property
    def e_mask(self):
        _, v, e = self._fields()
        return (e == 1) & (v == 0)

    @property
    def unused_mask(self):
        _, v, e = self._fields()
        return (e == 1) & (v != 0)


def signed_values(n_bits):
    """Two's-complement value of every n-bit register index"""
    idx = np.arange(1 << n_bits)
    return np.where(idx < (1 << (n_bits - 1)), idx, idx - (1 << n_bits))


def make_grid(params: PlasmaParams, n_x: int, n_v: int) -> GridSpec:
    """Build the phase-space grid for 2**n_x x-points and 2**n_v v-points"""
    if n_x < 3:
        raise ProblemError(f"n_x must be at least 3 for the boundary stencils, got {n_x}")
    if n_v < 1:
        raise ProblemError(f"n_v must be at least 1, got {n_v}")
    if params.x_max <= 0 or params.v_max <= 0:
        raise ProblemError(f"x_max and v_max must be positive, got {params.x_max}, {params.v_max}")
    if params.omega0 <= 0:
        raise ProblemError(f"omega0 must be positive, got {params.omega0}")

    dx = params.x_max / (1 << n_x)
    dv = 2 * params.v_max / (1 << n_v)
    x_points = np.arange(1 << n_x) * dx
    v_points = signed_values(n_v) * dv

    density = params.density_at(x_points)
    temperature = params.temperature_at(x_points)
    if np.any(density <= 0) or np.any(temperature <= 0):
        raise ProblemError("density and temperature must be positive at every grid point")

    logger.debug(f"Grid n_x={n_x} n_v={n_v} dx={dx} dv={dv}")
    return GridSpec(n_x=n_x, n_v=n_v, dx=dx, dv=dv, x_points=x_points, v_points=v_points)


def maxwellian(x, v, params: PlasmaParams):
    """Background distribution F(x, v) = n/sqrt(2 pi T) exp(-v^2 / 2T)"""
    n = params.density_at(x)
    t = params.temperature_at(x)
    return n / np.sqrt(2 * np.pi * t) * np.exp(-np.asarray(v) ** 2 / (2 * t))


def dv_maxwellian(x, v, params: PlasmaParams):
    """Velocity derivative of the background, -(v/T) F"""
    t = params.temperature_at(x)
    return -(np.asarray(v) / t) * maxwellian(x, v, params)


def gradient_matrix(grid: GridSpec) -> np.ndarray:
    """Row-acting second-order d/dx with one-sided 3-point boundary rows"""
    n = grid.nx_points
    grad = bulk_gradient_matrix(grid)
    grad[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * grid.dx)
    grad[n - 1, n - 3:] = np.array([1.0, -4.0, 3.0]) / (2 * grid.dx)
    return grad


def bulk_gradient_matrix(grid: GridSpec) -> np.ndarray:
    """Central difference (S_{+1} - S_{-1}) / 2dx truncated to the grid"""
    n = grid.nx_points
    return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * grid.dx)


def boundary_gradient_matrix(grid: GridSpec) -> np.ndarray:
    return gradient_matrix(grid) - bulk_gradient_matrix(grid)


def zeta_mask(grid: GridSpec) -> np.ndarray:
    """Inflow mask over the x (+) v space: 0 at (x=0, v>0) and (x=last, v<=0)"""
    nx = grid.nx_points
    mask = np.ones((grid.nv_points, nx))
    mask[grid.v_points > 0, 0] = 0.0
    mask[grid.v_points <= 0, nx - 1] = 0.0
    return mask.reshape(-1)


def advection_matrix(grid: GridSpec) -> np.ndarray:
    """F = zeta (v (x) I)(I (x) grad_x) on the x (+) v space"""
    # (v (x) I)(I (x) grad_x) = v (x) grad_x; zeta scales the rows
    return zeta_mask(grid)[:, None] * np.kron(np.diag(grid.v_points), gradient_matrix(grid))


def force_column(grid: GridSpec, params: PlasmaParams) -> np.ndarray:
    """-dF/dv on the (v, x) grid"""
    return -dv_maxwellian(grid.x_points[None, :], grid.v_points[:, None], params)


def coupling_matrix(grid: GridSpec, params: PlasmaParams) -> np.ndarray:
    """Off-diagonal part of A: C^E (E -> g) and C^g (g -> E) on the full space"""
    layout = grid.layout
    coupling = np.zeros((layout.dim, layout.dim), dtype=complex)
    force = force_column(grid, params)
    x = np.arange(grid.nx_points)
    for v in range(grid.nv_points):
        rows_g = layout.index(x, v, 0)
        slots_e = layout.index(x, 0, 1)
        coupling[rows_g, slots_e] = force[v]
        coupling[slots_e, rows_g] = grid.v_points[v] * grid.dv
    return coupling


def assemble_operator(grid: GridSpec, params: PlasmaParams) -> np.ndarray:
    """Assemble M = i omega0 + A on the full 2**(n_x+n_v+1) space"""
    dim = grid.layout.dim
    matrix = 1j * params.omega0 * np.eye(dim, dtype=complex)
    if not params.include_a:
        return matrix

    g_dim = grid.nx_points * grid.nv_points
    matrix[:g_dim, :g_dim] += advection_matrix(grid)
    matrix += coupling_matrix(grid, params)

    logger.debug(f"Assembled operator of dimension {dim}")
    return matrix


def apply_operator(grid: GridSpec, params: PlasmaParams, u) -> np.ndarray:
    """Matrix-free stencil application of M, independent of the assembly"""
    nx, nv = grid.nx_points, grid.nv_points
    u = np.asarray(u, dtype=complex).reshape(2, nv, nx)
    out = 1j * params.omega0 * u
    if not params.include_a:
        return out.reshape(-1)

    g = u[0]
    field_e = u[1, 0]

    dg = np.zeros_like(g)
    dg[:, 1:-1] = (g[:, 2:] - g[:, :-2]) / (2 * grid.dx)
    dg[:, 0] = (-3 * g[:, 0] + 4 * g[:, 1] - g[:, 2]) / (2 * grid.dx)
    dg[:, -1] = (3 * g[:, -1] - 4 * g[:, -2] + g[:, -3]) / (2 * grid.dx)

    zeta = zeta_mask(grid).reshape(nv, nx)
    out[0] += zeta * grid.v_points[:, None] * dg
    out[0] += force_column(grid, params) * field_e[None, :]
    out[1, 0] += grid.dv * np.sum(grid.v_points[:, None] * g, axis=0)
    return out.reshape(-1)


def assemble_rhs(grid: GridSpec, params: PlasmaParams) -> np.ndarray:
    """Source vector: -j(x) on the E slots, zero elsewhere"""
    b = np.zeros(grid.layout.dim, dtype=complex)
    b[grid.layout.index(np.arange(grid.nx_points), 0, 1)] = -params.source_at(grid.x_points)
    return b


def solve_classical(matrix, rhs) -> np.ndarray:
    """Direct dense solve with partial pivoting"""
    matrix = np.asarray(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ProblemError(f"matrix must be square, got shape {matrix.shape}")
    if matrix.shape[0] != rhs.shape[0]:
        raise ProblemError(f"dimension mismatch: {matrix.shape} vs {rhs.shape}")

    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
    min_pivot = np.min(np.abs(np.diag(lu)))
    if min_pivot < Config.PIVOT_TOLERANCE:
        raise SingularMatrixError(f"pivot magnitude {min_pivot:.3e} below {Config.PIVOT_TOLERANCE}")

    solution = scipy.linalg.lu_solve((lu, piv), rhs)
    b_norm = np.linalg.norm(rhs)
    if b_norm > 0:
        residual = np.linalg.norm(matrix @ solution - rhs) / b_norm
        logger.debug(f"Classical solve residual {residual:.3e}")
    return solution


@dataclass(frozen=True)
class ConditionReport:
    sigma_max: float
    sigma_min: float
    ratio: float
    scale: Optional[float] = None
    scaled: Optional[float] = None


def condition_number(matrix, scale=None) -> ConditionReport:
    """Conventional sigma_max/sigma_min and, given s, the embedded s/sigma_min"""
    sigma = scipy.linalg.svdvals(np.asarray(matrix, dtype=complex))
    sigma_max = float(sigma[0]) if sigma.size else 0.0
    sigma_min = float(sigma[-1]) if sigma.size else 0.0

    if sigma_min <= Config.PIVOT_TOLERANCE * max(sigma_max, 1.0):
        logger.warning(f"Matrix is numerically singular (sigma_min={sigma_min:.3e})")
        ratio = float('inf')
        scaled = float('inf') if scale is not None else None
    else:
        ratio = sigma_max / sigma_min
        scaled = scale / sigma_min if scale is not None else None

    return ConditionReport(sigma_max=sigma_max, sigma_min=sigma_min, ratio=ratio,
                           scale=scale, scaled=scaled)
