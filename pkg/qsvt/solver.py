"""QSVT circuits over a block encoding and the post-selected quantum linear solve."""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from blockenc.block_encoding import BlockEncoding
from blockenc.full_operator import full_be
from circuit.builders import control_on, state_prep
from circuit.ir import Circuit, CircuitBuilder, Composite, Gate, GateKind, Register, sequence
from config.settings import Config
from problem.plasma_model import (GridSpec, PlasmaParams, assemble_rhs, condition_number,
                                  solve_classical)
from qsvt.phases import PhaseSequence, qsvt_phases
from qsvt.polynomial import SolverConfig, inverse_poly
from sim.statevector import StateVector, apply_circuit, postselect, run_gates

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Quantum solve whose result is inconsistent with the chosen kappa"""


def sign_register(be: BlockEncoding) -> Register:
    """The projector-phase qubit, placed right after the encoding's qubits"""
    return Register('sign', 1, 'block', offset=be.width)


def projector_phase(be: BlockEncoding, angle, sign_qubit) -> Circuit:
    """e^{i angle (2 Pi - 1)} for Pi = |0><0| on the block qubits, via the sign qubit"""
    blocks = be.block_qubits
    mark = Gate(GateKind.X, (sign_qubit,), blocks, (0,) * len(blocks))
    rotate = Gate(GateKind.RZ, (sign_qubit,), param=2 * float(angle))
    sign = Register('sign', 1, 'block', offset=sign_qubit)
    return Circuit(be.block_registers + (sign,), (Composite((rotate,), within=(mark,)),))


def qsvt_step(be: BlockEncoding, angle, sign_qubit, second_angle=None,
              with_inverse=True) -> Circuit:
    """phase, U, phase, U^dagger"""
    second_angle = angle if second_angle is None else second_angle
    parts = [projector_phase(be, angle, sign_qubit), be.circuit]
    if with_inverse:
        parts += [projector_phase(be, second_angle, sign_qubit), be.circuit.inverse()]
    return sequence(*parts)


def qsvt_circuit(be: BlockEncoding, phases: PhaseSequence) -> Circuit:
    """H on sign, phi_d, U, phi_{d-1}, U^dagger, ..., U, phi_0, H on sign.

    Post-selecting the block qubits and the sign qubit on 0 yields the real
    polynomial of the encoded matrix's singular values.
    """
    parts = _qsvt_parts(be, phases, be.circuit, be.circuit.inverse())
    return sequence(*parts).with_registers(*be.data_registers)


def _qsvt_parts(be: BlockEncoding, phases: PhaseSequence, forward, backward):
    """The QSVT sequence with caller-supplied stand-ins for U and U^dagger"""
    sign = sign_register(be)
    d = phases.degree

    hadamard = CircuitBuilder(sign).h(sign[0]).build()
    yield hadamard
    for i in reversed(range(d + 1)):
        yield projector_phase(be, phases.angles[i], sign[0])
        if i > 0:
            yield forward if (d - i) % 2 == 0 else backward
    yield hadamard


def apply_qsvt(be: BlockEncoding, phases: PhaseSequence, psi: StateVector) -> StateVector:
    """qsvt_circuit(be, phases) applied to psi without materializing its gate list"""
    width = sign_register(be)[0] + 1
    if psi.width != width:
        raise SolverError(f"state width {psi.width} does not match QSVT width {width}")
    tensor = np.array(psi.amplitudes, dtype=complex).reshape((2,) * width + (1,))

    # U and U^dagger repeat d times; flatten each once
    forward = be.circuit.gates()
    backward = be.circuit.inverse().gates()
    for part in _qsvt_parts(be, phases, forward, backward):
        gates = part if isinstance(part, list) else part.gates()
        run_gates(gates, tensor, width)
    return StateVector(tensor.reshape(-1), width)


def rhs_preparation(be: BlockEncoding, amplitudes) -> Circuit:
    """state_prep of normalized amplitudes over the encoding's data registers"""
    data = [q for r in be.data_registers for q in r.qubits]
    if data != list(range(data[0], data[0] + len(data))):
        raise SolverError(f"data qubits {data} are not contiguous")
    return state_prep(amplitudes, Register('rhs', len(data), 'data', offset=data[0]))


def hermitian_dilation(be: BlockEncoding) -> BlockEncoding:
    """[[0, M], [M^dagger, 0]] / s with one extra data qubit d as the slowest index"""
    d = Register('d', 1, 'data', offset=be.width)
    forward = control_on((d, 1), be.circuit)
    backward = control_on((d, 0), be.circuit.inverse())
    swap = CircuitBuilder(d).x(d[0]).build()
    circuit = sequence(forward, backward, swap)

    reference = None
    if be.has_reference:
        def reference():
            zero = np.zeros_like(be.reference)
            return np.block([[zero, be.reference], [be.reference.conj().T, zero]])
    return BlockEncoding(circuit, be.scale, be.block_registers, be.data_registers + (d,),
                         reference, f"dilation({be.label})", dict(be.details))


@dataclass
class QuantumSolution:
    state: np.ndarray
    success_probability: float
    fidelity: float
    residual: float
    kappa: float
    degree: int
    sigma_min: float
    scale: float
    classical: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def normalized_state(self):
        norm = np.linalg.norm(self.state)
        return self.state / norm if norm > 0 else self.state

    def report(self):
        return {
            'success_probability': self.success_probability,
            'fidelity': self.fidelity,
            'residual': self.residual,
            'kappa': self.kappa,
            'degree': self.degree,
            'sigma_min': self.sigma_min,
            'scale': self.scale,
        }


def _best_fit_residual(matrix, psi, b) -> float:
    """min_c |c M psi - b| / |b|"""
    m_psi = matrix @ psi
    denom = np.vdot(m_psi, m_psi)
    if denom == 0:
        return 1.0
    c = np.vdot(m_psi, b) / denom
    return float(np.linalg.norm(c * m_psi - b) / np.linalg.norm(b))


def solve_quantum(grid: GridSpec, params: PlasmaParams,
                  config: Optional[SolverConfig] = None) -> QuantumSolution:
    """Prepare b, run QSVT on the dilated encoding and post-select the solution sector"""
    config = config or SolverConfig()
    be = full_be(grid, params)
    matrix = be.reference
    b = assemble_rhs(grid, params)
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        raise SolverError("right-hand side vanishes; nothing to solve")

    # kappa from the scaled condition number unless pinned by the caller
    cond = condition_number(matrix, be.scale)
    if not np.isfinite(cond.ratio):
        raise SolverError(f"operator is singular (sigma_min={cond.sigma_min:.3e})")
    kappa = config.kappa if config.kappa is not None else Config.KAPPA_SAFETY * cond.scaled
    poly = inverse_poly(config.with_kappa(kappa))
    phases = qsvt_phases(poly)

    dilated = hermitian_dilation(be)
    d_qubit = dilated.data_registers[-1][0]
    sign = sign_register(dilated)
    frame = dilated.block_registers + dilated.data_registers + (sign,)
    width = sign[0] + 1
    logger.info(f"QSVT solve: width={width} degree={poly.degree} kappa={kappa:.3f}")

    # |0...0> -> |b>, QSVT on the dilation, then d back to the solution half
    prepare = rhs_preparation(be, b / b_norm).with_registers(*frame)
    closing = CircuitBuilder(dilated.data_registers[-1]).x(d_qubit).build().with_registers(*frame)
    psi = apply_circuit(prepare, StateVector.zero(width))
    psi = apply_qsvt(dilated, phases, psi)
    out = apply_circuit(closing, psi)

    data = [q for r in be.data_registers for q in r.qubits]
    fixed = {q: 0 for q in dilated.block_qubits}
    fixed[sign[0]] = 0
    fixed[d_qubit] = 0
    state = postselect(out.amplitudes, data, fixed)

    # Compare directions only; the post-selected norm is the success probability
    success = float(np.vdot(state, state).real)
    classical = solve_classical(matrix, b)
    psi_q = state / np.sqrt(success) if success > 0 else state
    psi_c = classical / np.linalg.norm(classical)
    fidelity = float(abs(np.vdot(psi_q, psi_c)))
    residual = _best_fit_residual(matrix, psi_q, b)

    logger.info(f"QSVT solve: success={success:.4e} fidelity={fidelity:.6f} "
                f"residual={residual:.3e}")
    if fidelity < config.fidelity_threshold:
        margin = cond.sigma_min * kappa / be.scale
        if margin < 1:
            raise SolverError(f"fidelity {fidelity:.4f} below {config.fidelity_threshold}; "
                              f"kappa={kappa:.3f} underestimates s/sigma_min="
                              f"{be.scale / cond.sigma_min:.3f}")
        logger.warning(f"Fidelity {fidelity:.4f} below threshold {config.fidelity_threshold}")

    return QuantumSolution(state=state, success_probability=success, fidelity=fidelity,
                           residual=residual, kappa=kappa, degree=poly.degree,
                           sigma_min=cond.sigma_min, scale=be.scale, classical=classical)
