"""Off-diagonal coupling encodings: the force column C^E and the current row C^g."""
import logging

import numpy as np

from blockenc.block_encoding import BlockEncoding, BlockEncodingError
from circuit.builders import (control_on, equalize_amplitude, invert, ne, state_prep,
                              xor_predicate)
from circuit.ir import CircuitBuilder, sequence
from problem.plasma_model import GridSpec, PlasmaParams, coupling_matrix, force_column

logger = logging.getLogger(__name__)

UNIFORM_TOLERANCE = 1e-12


def uniform_force(grid: GridSpec, params: PlasmaParams) -> np.ndarray:
    """-dF/dv over the v grid; the background must not depend on x"""
    force = force_column(grid, params)
    spread = np.max(np.abs(force - force[:, :1]))
    if spread > UNIFORM_TOLERANCE:
        raise BlockEncodingError(f"coupling encodings need an x-uniform background, "
                                 f"force varies by {spread:.3e} across x")
    return np.real(force[:, 0])


def current_row(grid: GridSpec) -> np.ndarray:
    return grid.v_points * grid.dv


def coupling_factors(grid: GridSpec, params: PlasmaParams):
    """(beta_E, beta_g): 2-norms of the force column and the v*dv row"""
    return (float(np.linalg.norm(uniform_force(grid, params))),
            float(np.linalg.norm(current_row(grid))))


def cE_be(grid: GridSpec, params: PlasmaParams, v, b) -> BlockEncoding:
    """Column encoding |force/beta_E><0| on the v register"""
    force = uniform_force(grid, params)
    beta_e = float(np.linalg.norm(force))
    if beta_e == 0:
        raise BlockEncodingError("force column vanishes; nothing to encode")
    circuit = sequence(xor_predicate(ne(v, 0), b), state_prep(force / beta_e, v))
    reference = np.zeros((grid.nv_points, grid.nv_points), dtype=complex)
    reference[:, 0] = force
    return BlockEncoding(circuit, beta_e, (b,), (v,), reference, 'cE', {'beta_E': beta_e})


def cG_be(grid: GridSpec, v, b) -> BlockEncoding:
    """Row encoding |0><v dv/beta_g| on the v register"""
    row = current_row(grid)
    beta_g = float(np.linalg.norm(row))
    circuit = sequence(invert(state_prep(row / beta_g, v)), xor_predicate(ne(v, 0), b))
    reference = np.zeros((grid.nv_points, grid.nv_points), dtype=complex)
    reference[0, :] = row
    return BlockEncoding(circuit, beta_g, (b,), (v,), reference, 'cG', {'beta_g': beta_g})


def off_diag_be(grid: GridSpec, params: PlasmaParams, x, v, e, b0, b1) -> BlockEncoding:
    """[[0, C^E], [C^g, 0]] with scale max(beta_E, beta_g).

    The E-slot input (e=1) runs the column encoding, the g input (e=0) the
    row encoding; the branch with the smaller factor is damped on b1 and the
    final X on e moves each result to the opposite sector.
    """
    column = cE_be(grid, params, v, b0)
    row = cG_be(grid, v, b0)
    beta_e, beta_g = column.scale, row.scale
    scale = max(beta_e, beta_g)

    flip = CircuitBuilder(e).x(e[0]).build()
    circuit = sequence(control_on((e, 1), column.circuit),
                       control_on((e, 0), row.circuit),
                       equalize_amplitude([beta_g / scale, beta_e / scale], e, b1),
                       flip).with_registers(x, b1)
    logger.info(f"U_C on n_x={grid.n_x} n_v={grid.n_v}: beta_E={beta_e:.6f} "
                f"beta_g={beta_g:.6f} s_C={scale:.6f}")
    return BlockEncoding(circuit, scale, (b0, b1), (x, v, e),
                         lambda: coupling_matrix(grid, params), 'off_diag',
                         {'beta_E': beta_e, 'beta_g': beta_g})
