"""In-place constant adders: a swap-free QFT (Draper) adder and a Cuccaro
ripple-carry adder that loads the constant into an ancilla register."""
import logging
from typing import List, Optional, Sequence

import numpy as np

from circuit.ir import Circuit, CircuitError, Gate, GateKind, Register

logger = logging.getLogger(__name__)

ADDER_STYLES = (None, 'qft', 'ripple')


def _wrap_angle(theta):
    """Map an angle into (-pi, pi]"""
    wrapped = (theta + np.pi) % (2 * np.pi) - np.pi
    return np.pi if np.isclose(wrapped, -np.pi) else wrapped


def fourier_transform_gates(qubits: Sequence[int]) -> List[Gate]:
    """Swap-free QFT: qubit j ends up holding the phase 2 pi m / 2^(j+1)"""
    gates = []
    for j in reversed(range(len(qubits))):
        gates.append(Gate(GateKind.H, (qubits[j],)))
        for l in reversed(range(j)):
            theta = 2 * np.pi / (1 << (j - l + 1))
            gates.append(Gate(GateKind.P, (qubits[j],), (qubits[l],), (1,), theta))
    return gates


def constant_phase_gates(k, qubits, controls=(), values=()) -> List[Gate]:
    gates = []
    for j, q in enumerate(qubits):
        theta = _wrap_angle(2 * np.pi * k / (1 << (j + 1)))
        if abs(theta) < 1e-15:
            continue
        gates.append(Gate(GateKind.P, (q,), tuple(controls), tuple(values), theta))
    return gates


def qft_adder_gates(k, qubits, controls=(), values=()) -> List[Gate]:
    """|m> -> |m + k mod 2^w>; controls only reach the constant phases"""
    if k % (1 << len(qubits)) == 0:
        return []
    transform = fourier_transform_gates(qubits)
    inverse = [g.inverse() for g in reversed(transform)]
    return transform + constant_phase_gates(k, qubits, controls, values) + inverse


def _maj(c, b, a):
    return [Gate(GateKind.X, (b,), (a,), (1,)),
            Gate(GateKind.X, (c,), (a,), (1,)),
            Gate(GateKind.X, (a,), (c, b), (1, 1))]


def _uma(c, b, a):
    return [Gate(GateKind.X, (a,), (c, b), (1, 1)),
            Gate(GateKind.X, (c,), (a,), (1,)),
            Gate(GateKind.X, (b,), (c,), (1,))]


def ripple_adder_gates(k, qubits, ancillas, controls=(), values=()) -> List[Gate]:
    """Cuccaro adder with the constant loaded into ancillas[:w], carry in ancillas[w]"""
    width = len(qubits)
    if len(ancillas) < width + 1:
        raise CircuitError(f"ripple adder on {width} qubits needs {width + 1} ancillas")
    k %= 1 << width
    if k == 0:
        return []

    const, carry = list(ancillas[:width]), ancillas[width]
    load = [Gate(GateKind.X, (const[i],), tuple(controls), tuple(values))
            for i in range(width) if (k >> i) & 1]

    gates = list(load)
    gates += _maj(carry, qubits[0], const[0])
    for i in range(1, width):
        gates += _maj(const[i - 1], qubits[i], const[i])
    for i in reversed(range(1, width)):
        gates += _uma(const[i - 1], qubits[i], const[i])
    gates += _uma(carry, qubits[0], const[0])
    gates += list(reversed(load))
    return gates


def inplace_add_const(k: int, target: Register, style: Optional[str] = None,
                      ancilla: Optional[Register] = None) -> Circuit:
    """In-place addition of a signed constant modulo 2^width"""
    if style not in ADDER_STYLES:
        raise CircuitError(f"unknown adder style {style!r}")
    if k % (1 << target.width) == 0:
        return Circuit((target,))

    if style is None:
        return Circuit((target,), (Gate(GateKind.ADD, target.qubits, param=int(k)),))
    if style == 'qft':
        return Circuit((target,), tuple(qft_adder_gates(k, target.qubits)))

    if ancilla is None:
        ancilla = Register(f"{target.name}_anc", target.width + 1, 'ancilla',
                           offset=target.offset + target.width)
    gates = ripple_adder_gates(k, target.qubits, ancilla.qubits)
    return Circuit((target, ancilla), tuple(gates))
