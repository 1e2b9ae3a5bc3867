"""Composite circuit builders: state preparation, amplitude assignment,
predicate evaluation and the control / invert / conjugate combinators."""
import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np

from circuit.ir import (Circuit, CircuitBuilder, CircuitError, Composite,
                        Register)

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
ANGLE_EPS = 1e-15


def _prefix_controls(qubits, prefix):
    """Controls and polarities selecting the basis value `prefix` on `qubits`"""
    return tuple(qubits), tuple((prefix >> i) & 1 for i in range(len(qubits)))


def state_prep(amplitudes, target: Register) -> Circuit:
    """Naive multiplexed-RY preparation |0...0> -> sum_i a_i |i>"""
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if amps.size != 1 << target.width:
        raise CircuitError(f"state_prep needs {1 << target.width} amplitudes, got {amps.size}")
    norm = np.linalg.norm(amps)
    if abs(norm - 1) > NORM_TOLERANCE:
        raise CircuitError(f"amplitudes must be normalized, got norm {norm!r}")

    is_real = np.all(np.abs(amps.imag) <= ANGLE_EPS)
    values = amps.real if is_real else np.abs(amps)
    builder = CircuitBuilder(target)
    qubits = target.qubits

    # Top qubit first; each level is multiplexed over the already prepared higher bits
    for level in reversed(range(target.width)):
        higher = qubits[level + 1:]
        block = values.reshape(-1, 2, 1 << level)
        if level == 0:
            zero, one = block[:, 0, 0], block[:, 1, 0]
        else:
            zero = np.linalg.norm(block[:, 0, :], axis=1)
            one = np.linalg.norm(block[:, 1, :], axis=1)
        angles = 2 * np.arctan2(one, zero)
        for prefix, theta in enumerate(angles):
            if abs(theta) <= ANGLE_EPS:
                continue
            controls, polarity = _prefix_controls(higher, prefix)
            builder.ry(theta, qubits[level], controls, polarity)

    if not is_real:
        phases = np.angle(amps)
        for index, phi in enumerate(phases):
            if abs(amps[index]) <= ANGLE_EPS or abs(phi) <= ANGLE_EPS:
                continue
            controls, polarity = _prefix_controls(qubits[1:], index >> 1)
            if index & 1 == 0:
                builder.x(qubits[0])
            builder.phase(phi, qubits[0], controls, polarity)
            if index & 1 == 0:
                builder.x(qubits[0])

    return builder.build()


def amplitude_assign(eta, source: Register, flag: Register) -> Circuit:
    """|v>|0> -> eta(v)|v>|1> + sqrt(1 - eta(v)^2)|v>|0> by multiplexed RY"""
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size != 1 << source.width:
        raise CircuitError(f"amplitude table needs {1 << source.width} entries, got {eta.size}")
    if np.any(np.abs(eta) > 1 + NORM_TOLERANCE):
        raise CircuitError(f"amplitudes must satisfy |eta| <= 1, max is {np.max(np.abs(eta))!r}")

    angles = 2 * np.arcsin(np.clip(eta, -1.0, 1.0))
    builder = CircuitBuilder(source, flag)
    if np.all(angles == angles[0]):
        if abs(angles[0]) > ANGLE_EPS:
            builder.ry(angles[0], flag[0])
        return builder.build()

    for value, theta in enumerate(angles):
        if abs(theta) <= ANGLE_EPS:
            continue
        controls, polarity = _prefix_controls(source.qubits, value)
        builder.ry(theta, flag[0], controls, polarity)
    return builder.build()


def equalize_amplitude(weights, source: Register, flag: Register) -> Circuit:
    """Scale the flag=0 branch by weights[value]; weights of 1 leave it unchanged"""
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if np.allclose(weights, 1.0, rtol=0, atol=NORM_TOLERANCE):
        return Circuit((source, flag))
    builder = CircuitBuilder(source, flag)
    builder.append(amplitude_assign(weights, source, flag))
    builder.x(flag[0])
    return builder.build()


@dataclass(frozen=True)
class Condition:
    register: Register
    op: str
    value: int = 0


def eq(register, value):
    return Condition(register, '==', value)


def ne(register, value):
    return Condition(register, '!=', value)


def gt(register, value=0):
    return Condition(register, '>', value)


def le(register, value=0):
    return Condition(register, '<=', value)


Cube = FrozenSet[Tuple[int, int]]


def _xor_terms(terms: List[Cube]) -> set:
    result = set()
    for cube in terms:
        result ^= {cube}
    return result


def _product(left: set, right: set) -> set:
    terms = []
    for a in left:
        for b in right:
            merged = dict(a)
            if any(merged.get(q, bit) != bit for q, bit in b):
                continue
            merged.update(dict(b))
            terms.append(frozenset(merged.items()))
    return _xor_terms(terms)


def _clause_terms(cond: Condition) -> set:
    """Exclusive-sum-of-cubes form of a single register test"""
    reg = cond.register
    if cond.op in ('>', '<=') and cond.value != 0:
        raise CircuitError(f"ordering tests are only supported against 0, got {cond.op} {cond.value}")

    def equals(value):
        return frozenset(zip(reg.qubits, reg.value_bits(value)))

    empty = frozenset()
    if cond.op == '==':
        return {equals(cond.value)}
    if cond.op == '!=':
        return _xor_terms([empty, equals(cond.value)])
    sign = frozenset({(reg[-1], 0 if cond.op == '>' else 1)})
    if cond.op == '>':
        if reg.signed:
            return _xor_terms([sign, equals(0)])
        return _xor_terms([empty, equals(0)])
    if cond.op == '<=':
        if reg.signed:
            return _xor_terms([sign, equals(0)])
        return {equals(0)}
    raise CircuitError(f"unsupported predicate operator {cond.op!r}")


def predicate_cubes(conditions: Sequence[Condition]) -> List[Cube]:
    if isinstance(conditions, Condition):
        conditions = [conditions]
    terms = {frozenset()}
    for cond in conditions:
        if not isinstance(cond, Condition):
            raise CircuitError(f"unsupported predicate term {cond!r}")
        terms = _product(terms, _clause_terms(cond))
    return sorted(terms, key=lambda cube: (len(cube), sorted(cube)))


def xor_predicate(conditions, flag: Register) -> Circuit:
    """flag ^= AND(conditions), one (multi-)controlled X per cube"""
    if isinstance(conditions, Condition):
        conditions = [conditions]
    registers = [c.register for c in conditions]
    if any(flag[0] in r.qubits for r in registers):
        raise CircuitError("flag qubit is part of the predicate registers")

    builder = CircuitBuilder(flag, *registers)
    for cube in predicate_cubes(conditions):
        literals = sorted(cube)
        builder.x(flag[0], [q for q, _ in literals], [b for _, b in literals])
    return builder.build()


def _condition_literals(condition) -> Tuple[Tuple[int, ...], Tuple[int, ...], List[Register]]:
    items = condition if isinstance(condition, list) else [condition]
    controls, values, registers = [], [], []
    for item in items:
        if isinstance(item, Condition):
            if item.op != '==':
                raise CircuitError(f"control conditions must be equality tests, got {item.op}")
            controls.extend(item.register.qubits)
            values.extend(item.register.value_bits(item.value))
            registers.append(item.register)
        elif isinstance(item, Register):
            controls.extend(item.qubits)
            values.extend([1] * item.width)
            registers.append(item)
        elif isinstance(item, tuple) and isinstance(item[0], Register):
            reg, value = item
            controls.extend(reg.qubits)
            values.extend(reg.value_bits(value))
            registers.append(reg)
        elif isinstance(item, tuple):
            controls.append(int(item[0]))
            values.append(int(item[1]))
        else:
            controls.append(int(item))
            values.append(1)
    return tuple(controls), tuple(values), registers


def control_on(condition, body: Circuit) -> Circuit:
    """Apply body iff the condition holds on the control qubits"""
    controls, values, registers = _condition_literals(condition)
    body_qubits = set()
    for g in body.gates():
        body_qubits.update(g.qubits)
    clash = body_qubits & set(controls)
    if clash:
        raise CircuitError(f"control qubits {sorted(clash)} collide with the body")
    if not body.ops:
        return Circuit(body.registers + tuple(registers))
    return Circuit(body.registers + tuple(registers),
                   (Composite(body.ops, controls, values),))


def invert(body: Circuit) -> Circuit:
    return body.inverse()


def conjugate(outer: Circuit, inner: Circuit) -> Circuit:
    """outer, inner, outer^-1 in time order; control only reaches the inner part"""
    return Circuit(outer.registers + inner.registers,
                   (Composite(inner.ops, within=outer.ops),))
