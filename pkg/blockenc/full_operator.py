"""The full encoding of i omega0 + A as a two-qubit LCU over U_F, U_C and i I."""
import logging
from typing import List

import numpy as np

from blockenc.advection import F_be, d_boundary_be, d_bulk_be, d_full_be, v_diag_be, zeta_be
from blockenc.block_encoding import TEXT_ALPHA, BlockEncoding, Workspace
from blockenc.coupling import cE_be, cG_be, off_diag_be
from circuit.builders import conjugate, control_on, state_prep
from circuit.ir import CircuitBuilder, sequence
from problem.plasma_model import GridSpec, PlasmaParams, assemble_operator

logger = logging.getLogger(__name__)


def full_be(grid: GridSpec, params: PlasmaParams, shared=True) -> BlockEncoding:
    """Select register amplitudes (s_F, s_C, omega0, 0)/s, branches U_F, U_C, i I.

    With ``shared`` the coupling branch reuses the bc and zf block qubits of
    U_F; otherwise it gets two qubits of its own. With A disabled only the
    i I branch is built.
    """
    ws = Workspace.standard(grid.n_x, grid.n_v, shared)
    sel = ws['sel']
    branches = []
    details = {'omega0': params.omega0, 'shared': shared}

    if params.include_a:
        advection = F_be(grid, ws.x, ws.v, ws.e, tuple(ws[n] for n in Workspace.BLOCK_NAMES))
        c0, c1 = (ws['bc'], ws['zf']) if shared else (ws['c0'], ws['c1'])
        coupling = off_diag_be(grid, params, ws.x, ws.v, ws.e, c0, c1)
        scale = advection.scale + coupling.scale + params.omega0
        weights = np.array([advection.scale, coupling.scale, params.omega0, 0.0]) / scale
        branches = [control_on((sel, 0), advection.circuit),
                    control_on((sel, 1), coupling.circuit)]
        details.update(s_F=advection.scale, s_C=coupling.scale,
                       alpha=advection.details['alpha'], text_alpha=TEXT_ALPHA,
                       beta_E=coupling.details['beta_E'], beta_g=coupling.details['beta_g'])
    else:
        scale = params.omega0
        weights = np.array([0.0, 0.0, 1.0, 0.0])

    # i on the third select value: sel[1]=1, sel[0]=0
    phase = CircuitBuilder(sel).phase(np.pi / 2, sel[1], (sel[0],), (0,)).build()
    circuit = conjugate(state_prep(np.sqrt(weights), sel), sequence(*branches, phase))

    blocks = tuple(r for r in (ws[n] for n in Workspace.BLOCK_NAMES + ('sel', 'c0', 'c1')
                               if n in ws))
    circuit = circuit.with_registers(*ws.data_registers, *blocks)
    logger.info(f"Full encoding n_x={grid.n_x} n_v={grid.n_v}: s={scale:.6f} "
                f"block qubits={sum(r.width for r in blocks)} width={circuit.width}")
    return BlockEncoding(circuit, scale, blocks, ws.data_registers,
                         lambda: assemble_operator(grid, params), 'full', details)


def all_encodings(grid: GridSpec, params: PlasmaParams) -> List[BlockEncoding]:
    """Every construction with its classical reference, in build order"""
    ws = Workspace.standard(grid.n_x, grid.n_v)
    x, v, e = ws.data_registers
    encodings = [
        zeta_be(grid, x, v, ws['zf']),
        v_diag_be(grid, v, ws['vf']),
        d_bulk_be(grid, x, ws['b1'], ws['b2']),
    ]
    encodings += [d_boundary_be(grid, x, ws['bc'], side) for side in ('left', 'right', 'both')]
    encodings.append(d_full_be(grid, x, (ws['lcu'], ws['b1'], ws['b2'], ws['bc'])))
    encodings.append(F_be(grid, x, v, e, tuple(ws[n] for n in Workspace.BLOCK_NAMES)))
    if params.include_a:
        encodings += [
            cE_be(grid, params, v, ws['bc']),
            cG_be(grid, v, ws['bc']),
            off_diag_be(grid, params, x, v, e, ws['bc'], ws['zf']),
        ]
    encodings.append(full_be(grid, params))
    return encodings
