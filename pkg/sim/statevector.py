"""Exact statevector simulation and block extraction.

States are numpy tensors of shape (2,)*width + (batch,); qubit q lives on
axis width-1-q so that the flattened index is little-endian in qubit order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence

import numpy as np

from circuit.ir import Circuit, Gate, GateKind
from config.settings import Config

logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Width mismatch or simulation size guard exceeded"""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    width: int

    @classmethod
    def zero(cls, width):
        return cls.basis(width, 0)

    @classmethod
    def basis(cls, width, index):
        amps = np.zeros(1 << width, dtype=complex)
        amps[index] = 1.0
        return cls(amps, width)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


def _apply_gate(tensor: np.ndarray, gate: Gate, width: int):
    """Apply one gate in place to a (2,)*width + (batch,) tensor"""
    idx = [slice(None)] * (width + 1)
    for c, v in zip(gate.controls, gate.control_values):
        idx[width - 1 - c] = v

    if gate.kind == GateKind.ADD:
        _apply_add(tensor, gate, idx, width)
        return

    axis = width - 1 - gate.target
    idx[axis] = 0
    i0 = tuple(idx)
    idx[axis] = 1
    i1 = tuple(idx)

    if gate.kind == GateKind.X:
        tmp = tensor[i0].copy()
        tensor[i0] = tensor[i1]
        tensor[i1] = tmp
    elif gate.kind == GateKind.Z:
        tensor[i1] *= -1
    elif gate.kind == GateKind.P:
        tensor[i1] *= np.exp(1j * gate.param)
    elif gate.kind == GateKind.RZ:
        tensor[i0] *= np.exp(-0.5j * gate.param)
        tensor[i1] *= np.exp(0.5j * gate.param)
    else:
        m = gate.matrix()
        a = tensor[i0].copy()
        b = tensor[i1]
        tensor[i0] = m[0, 0] * a + m[0, 1] * b
        tensor[i1] = m[1, 0] * a + m[1, 1] * b


def _apply_add(tensor, gate, idx, width):
    """Cyclic shift of the target register value by the gate constant"""
    n_targets = len(gate.targets)
    shift = int(gate.param) % (1 << n_targets)
    if shift == 0:
        return
    sub = tensor[tuple(idx)]
    removed = sorted(width - 1 - c for c in gate.controls)

    def sub_axis(ax):
        return ax - sum(1 for r in removed if r < ax)

    # Most significant register bit first so the merged axis reads the register value
    axes = [sub_axis(width - 1 - q) for q in reversed(gate.targets)]
    moved = np.moveaxis(sub, axes, list(range(n_targets)))
    shape = moved.shape
    values = moved.reshape((1 << n_targets, -1))
    moved[...] = np.roll(values, shift, axis=0).reshape(shape)


def run_gates(gates: Iterable[Gate], tensor: np.ndarray, width: int) -> np.ndarray:
    for gate in gates:
        _apply_gate(tensor, gate, width)
    return tensor


def apply_circuit(circuit: Circuit, psi: StateVector) -> StateVector:
    """Apply the circuit unitary to a state, gate by gate"""
    if psi.width != circuit.width:
        raise SimulationError(f"state width {psi.width} does not match circuit width {circuit.width}")
    tensor = np.array(psi.amplitudes, dtype=complex).reshape((2,) * psi.width + (1,))
    run_gates(circuit.gates(), tensor, psi.width)
    return StateVector(tensor.reshape(-1), psi.width)


def _simulate_columns(gates: List[Gate], width: int, inputs: np.ndarray,
                      readout: np.ndarray) -> np.ndarray:
    """Simulate basis inputs (global indices) and read the amplitudes at `readout`"""
    batch = len(inputs)
    tensor = np.zeros((1 << width, batch), dtype=complex)
    tensor[inputs, np.arange(batch)] = 1.0
    tensor = tensor.reshape((2,) * width + (batch,))
    run_gates(gates, tensor, width)
    return tensor.reshape(1 << width, batch)[readout, :]


def _column_matrix(circuit: Circuit, inputs: np.ndarray, readout: np.ndarray) -> np.ndarray:
    gates = circuit.gates()
    width = circuit.width
    batch = max(1, Config.COLUMN_BATCH)
    chunks = [inputs[i:i + batch] for i in range(0, len(inputs), batch)]

    def run(chunk):
        return _simulate_columns(gates, width, chunk, readout)

    if Config.MAX_WORKERS > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=Config.MAX_WORKERS) as pool:
            columns = list(pool.map(run, chunks))
    else:
        columns = [run(chunk) for chunk in chunks]
    return np.concatenate(columns, axis=1)


def extract_unitary(circuit: Circuit) -> np.ndarray:
    """Full unitary, column j = circuit applied to basis state j"""
    if circuit.width > Config.MAX_UNITARY_QUBITS:
        raise SimulationError(f"width {circuit.width} exceeds the unitary guard of "
                              f"{Config.MAX_UNITARY_QUBITS} qubits")
    everything = np.arange(1 << circuit.width)
    return _column_matrix(circuit, everything, everything)


def scatter_indices(qubits: Sequence[int], fixed: Dict[int, int] = None) -> np.ndarray:
    """Global basis index of every value of `qubits` (little-endian), other qubits fixed"""
    base = sum(bit << q for q, bit in (fixed or {}).items())
    values = np.arange(1 << len(qubits))
    index = np.full(values.shape, base, dtype=np.int64)
    for i, q in enumerate(qubits):
        index |= ((values >> i) & 1) << q
    return index


def data_qubits(circuit: Circuit, block_registers) -> List[int]:
    block_names = {r if isinstance(r, str) else r.name for r in block_registers}
    block_qubits = set()
    for r in block_registers:
        if not isinstance(r, str):
            block_qubits.update(r.qubits)
    qubits = []
    for reg in circuit.registers:
        if reg.name in block_names or set(reg.qubits) <= block_qubits:
            continue
        qubits.extend(q for q in reg.qubits if q not in block_qubits)
    return qubits


def extract_block(circuit: Circuit, block_registers=(), scale: float = 1.0) -> np.ndarray:
    """s * (<0_block| (x) I) U (|0_block> (x) I), simulating only block=0 columns"""
    qubits = data_qubits(circuit, block_registers)
    if len(qubits) > Config.MAX_DATA_QUBITS:
        raise SimulationError(f"data width {len(qubits)} exceeds the guard of "
                              f"{Config.MAX_DATA_QUBITS} qubits; use count-only mode")
    index = scatter_indices(qubits)
    logger.debug(f"Extracting {len(index)} block columns on width {circuit.width}")
    return scale * _column_matrix(circuit, index, index)


def postselect(amplitudes: np.ndarray, keep_qubits: Sequence[int],
            fixed: Dict[int, int]) -> np.ndarray:
    """Amplitudes over keep_qubits with every other listed qubit fixed (post-selection)"""
    return np.asarray(amplitudes).reshape(-1)[scatter_indices(keep_qubits, fixed)]


def states_equal(a, b, tol=1e-10) -> bool:
    """Equality up to a global phase"""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    overlap = np.vdot(b, a)
    if abs(overlap) > 0:
        b = b * overlap / abs(overlap)
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol)


def unitaries_equal(u, v, tol=1e-8) -> bool:
    """Matrix equality up to a global phase"""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        return False
    return states_equal(u.reshape(-1), v.reshape(-1), tol)
