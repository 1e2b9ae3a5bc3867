"""Block encodings of the advection term F = zeta (v (x) I)(I (x) grad_x).

Registers come from a Workspace so that data qubits x, v, e sit below every
block qubit; the extracted blocks then use the problem module's flat index.
"""
import logging

import numpy as np

from blockenc.block_encoding import (BOUNDARY_TABLE, TEXT_ALPHA, BlockEncoding,
                                     BlockEncodingError, DerivativeDecomp)
from circuit.builders import (conjugate, control_on, eq, gt, invert, le, ne, state_prep,
                              amplitude_assign, xor_predicate)
from circuit.ir import Circuit, CircuitBuilder, GateKind, sequence
from problem.plasma_model import (GridSpec, advection_matrix, boundary_gradient_matrix,
                                  bulk_gradient_matrix, gradient_matrix, zeta_mask)

logger = logging.getLogger(__name__)

SIDES = ('left', 'right', 'both')


def _zeta_circuit(x, v, flag, extra=()) -> Circuit:
    """flag ^= inflow(x, v); extra equality tests are added to both conjunctions"""
    last = (1 << x.width) - 1
    left = xor_predicate([eq(x, 0), gt(v)] + list(extra), flag)
    right = xor_predicate([eq(x, last), le(v)] + list(extra), flag)
    return sequence(left, right)


def zeta_be(grid: GridSpec, x, v, flag) -> BlockEncoding:
    """Inflow mask: 0 at (x=0, v>0) and (x=last, v<=0), 1 elsewhere"""
    return BlockEncoding(_zeta_circuit(x, v, flag), 1.0, (flag,), (x, v),
                         np.diag(zeta_mask(grid)).astype(complex), 'zeta')


def v_diag_be(grid: GridSpec, v, flag) -> BlockEncoding:
    """diag(v_points) via amplitude assignment of v / v_max"""
    v_max = grid.dv * (1 << (grid.n_v - 1))
    eta = grid.v_points / v_max
    builder = CircuitBuilder(v, flag)
    builder.append(amplitude_assign(eta, v, flag))
    builder.x(flag[0])
    return BlockEncoding(builder.build(), v_max, (flag,), (v,),
                         np.diag(grid.v_points).astype(complex), 'v_diag')


def d_bulk_be(grid: GridSpec, x, b1, b2) -> BlockEncoding:
    """Central difference (superdiagonal minus subdiagonal) / 2; b1 extends x as its top bit"""
    extended = list(x.qubits + b1.qubits)
    hadamard = CircuitBuilder(b2).h(b2[0]).build()
    body = CircuitBuilder(x, b1, b2)
    body.z(b2[0])
    body.add(GateKind.ADD, extended, (b2[0],), (0,), -1)
    body.add(GateKind.ADD, extended, (b2[0],), (1,), 1)
    circuit = conjugate(hadamard, body.build())
    return BlockEncoding(circuit, 1 / grid.dx, (b1, b2), (x,),
                         bulk_gradient_matrix(grid).astype(complex), 'd_bulk')


def _boundary_core(reg, bc, alpha) -> Circuit:
    """Single first row: <0| gets table[j]/alpha from |j>, every other row flagged"""
    prep = invert(state_prep(BOUNDARY_TABLE / alpha, reg.sub(0, 2)))
    return sequence(prep, xor_predicate(ne(reg, 0), bc))


def _mirrored_core(reg, bc, alpha) -> Circuit:
    """Anti-diagonal transpose of the core with an overall minus sign"""
    flip = CircuitBuilder(reg)
    for q in reg.qubits:
        flip.x(q)
    minus = CircuitBuilder(bc).ry(2 * np.pi, bc[0]).build()
    return conjugate(flip.build(), sequence(minus, _boundary_core(reg, bc, alpha)))


def d_boundary_be(grid: GridSpec, x, bc, side='both') -> BlockEncoding:
    """Boundary correction rows of grad_x, scale alpha/dx.

    Single sides act on the whole x register; the combined encoding runs both
    cores on the low n_x-1 qubits and dispatches on the top x qubit.
    """
    if side not in SIDES:
        raise BlockEncodingError(f"unknown boundary side {side!r}")
    if x.width < 3:
        raise BlockEncodingError(f"boundary stencils need n_x >= 3, got {x.width}")
    decomp = DerivativeDecomp.from_table()
    alpha = decomp.alpha
    reference = boundary_gradient_matrix(grid).astype(complex)

    if side == 'left':
        circuit = _boundary_core(x, bc, alpha)
        reference[-1, :] = 0
    elif side == 'right':
        circuit = _mirrored_core(x, bc, alpha)
        reference[0, :] = 0
    else:
        low = x.sub(0, x.width - 1)
        top = x.sub(x.width - 1, x.width)
        circuit = sequence(control_on((top, 0), _boundary_core(low, bc, alpha)),
                           control_on((top, 1), _mirrored_core(low, bc, alpha)))

    circuit = circuit.with_registers(x)
    return BlockEncoding(circuit, alpha / grid.dx, (bc,), (x,), reference,
                         f"d_boundary_{side}", {'alpha': alpha, 'text_alpha': TEXT_ALPHA})


def d_full_be(grid: GridSpec, x, blocks) -> BlockEncoding:
    """grad_x = alpha/(1+alpha) boundary + 1/(1+alpha) bulk, blocks = (lcu, b1, b2, bc)"""
    lcu, b1, b2, bc = blocks
    decomp = DerivativeDecomp.from_table()
    boundary = d_boundary_be(grid, x, bc)
    bulk = d_bulk_be(grid, x, b1, b2)

    prep = CircuitBuilder(lcu).ry(decomp.theta_prep, lcu[0]).build()
    select = sequence(control_on((lcu, 0), boundary.circuit),
                      control_on((lcu, 1), bulk.circuit))
    scale = (1 + decomp.alpha) / grid.dx
    logger.debug(f"Derivative LCU: alpha={decomp.alpha:.6f} theta_prep={decomp.theta_prep:.6f}")
    return BlockEncoding(conjugate(prep, select), scale, (lcu, b1, b2, bc), (x,),
                         gradient_matrix(grid).astype(complex), 'd_full',
                         {'decomposition': decomp, 'alpha': decomp.alpha,
                          'text_alpha': TEXT_ALPHA})


def F_be(grid: GridSpec, x, v, e, blocks) -> BlockEncoding:
    """Advection block confined to the e=0 sector, blocks = (lcu, b1, b2, bc, zf, vf)"""
    lcu, b1, b2, bc, zf, vf = blocks
    derivative = d_full_be(grid, x, (lcu, b1, b2, bc))
    velocity = v_diag_be(grid, v, vf)
    zeta = _zeta_circuit(x, v, zf, extra=[eq(e, 0)])
    confine = CircuitBuilder(e, zf).x(zf[0], (e[0],)).build()

    circuit = sequence(derivative.circuit, zeta, velocity.circuit, confine)
    scale = velocity.scale * derivative.scale
    def reference():
        return np.kron(np.diag([1.0, 0.0]), advection_matrix(grid)).astype(complex)

    logger.info(f"U_F on n_x={grid.n_x} n_v={grid.n_v}: s_F={scale:.6f}")
    return BlockEncoding(circuit, scale, tuple(blocks), (x, v, e), reference, 'F',
                         {'decomposition': derivative.details['decomposition'],
                          'alpha': derivative.details['alpha'], 'text_alpha': TEXT_ALPHA,
                          'v_max': velocity.scale})
