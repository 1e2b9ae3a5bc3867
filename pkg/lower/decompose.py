"""Decompositions into the CX + single-qubit basis.

Every emitter returns a list of basis gates (uncontrolled X, H, Z, RY, RZ, P
and positive single-control X). The CX count of each emitter is mirrored
exactly by a formula in lower.cost_model.
"""
import logging
import math
from contextlib import contextmanager
from typing import List, Sequence

import numpy as np
import scipy.linalg

from circuit.ir import Gate, GateKind, single_qubit_matrix

logger = logging.getLogger(__name__)

BASIS_KINDS = {GateKind.X, GateKind.H, GateKind.Z, GateKind.RY, GateKind.RZ, GateKind.P}
X_LIKE = {GateKind.X, GateKind.Z}
GENERIC = 'U'


class LoweringError(ValueError):
    """Gate that cannot be lowered or counted"""


class AncillaPool:
    """Clean ancilla allocator with stack discipline, starting at qubit `start`"""

    def __init__(self, start, limit=None):
        self.start = start
        self.limit = limit
        self.in_use = 0
        self.peak = 0

    @property
    def free(self):
        return math.inf if self.limit is None else self.limit - self.in_use

    def can_allocate(self, n):
        return n <= self.free

    def allocate(self, n) -> List[int]:
        if not self.can_allocate(n):
            raise LoweringError(f"ancilla pool exhausted: need {n}, {self.free} free")
        qubits = list(range(self.start + self.in_use, self.start + self.in_use + n))
        self.in_use += n
        self.peak = max(self.peak, self.in_use)
        return qubits

    def release(self, qubits):
        if qubits and qubits[-1] != self.start + self.in_use - 1:
            raise LoweringError("ancillas must be released in reverse allocation order")
        self.in_use -= len(qubits)

    @contextmanager
    def borrow(self, n):
        qubits = self.allocate(n)
        try:
            yield qubits
        finally:
            self.release(qubits)


def is_basis(gate: Gate) -> bool:
    if gate.kind not in BASIS_KINDS:
        return False
    if not gate.controls:
        return True
    return gate.kind == GateKind.X and gate.control_values == (1,)


def cx(c, t) -> Gate:
    return Gate(GateKind.X, (t,), (c,), (1,))


def single(kind, t, param=0.0) -> Gate:
    return Gate(GateKind(kind), (t,), param=float(param))


def _inverse_list(gates):
    return [g.inverse() for g in reversed(gates)]


def toffoli_gates(c1, c2, t) -> List[Gate]:
    """Exact Toffoli, 6 CX"""
    quarter = np.pi / 4
    return [
        single('H', t), cx(c2, t), single('P', t, -quarter), cx(c1, t), single('P', t, quarter),
        cx(c2, t), single('P', t, -quarter), cx(c1, t), single('P', c2, quarter),
        single('P', t, quarter), single('H', t), cx(c1, c2), single('P', c1, quarter),
        single('P', c2, -quarter), cx(c1, c2),
    ]


def rccx_gates(c1, c2, t) -> List[Gate]:
    """Toffoli up to a relative phase, 3 CX; exact when used in compute/uncompute pairs"""
    quarter = np.pi / 4
    return [
        single('H', t), single('P', t, quarter), cx(c2, t), single('P', t, -quarter),
        cx(c1, t), single('P', t, quarter), cx(c2, t), single('P', t, -quarter), single('H', t),
    ]


def zyz_angles(u):
    """(alpha, beta, gamma, delta) with u = e^{i alpha} RZ(beta) RY(gamma) RZ(delta)"""
    u = np.asarray(u, dtype=complex)
    alpha = np.angle(np.linalg.det(u)) / 2
    v = np.exp(-1j * alpha) * u
    gamma = 2 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) < 1e-12:
        plus, minus = 0.0, 2 * np.angle(v[1, 0])
    elif abs(v[1, 0]) < 1e-12:
        plus, minus = 2 * np.angle(v[1, 1]), 0.0
    else:
        plus, minus = 2 * np.angle(v[1, 1]), 2 * np.angle(v[1, 0])
    beta = (plus + minus) / 2
    delta = (plus - minus) / 2
    return float(alpha), float(beta), float(gamma), float(delta)


def target_matrix(kind, param=0.0, matrix=None):
    if kind == GENERIC:
        return np.asarray(matrix, dtype=complex)
    return single_qubit_matrix(GateKind(kind), param)


def root_of(kind, param=0.0, matrix=None):
    """A square root V (V @ V = U) as (kind, param, matrix)"""
    if kind in (GateKind.RY, GateKind.RZ, GateKind.P):
        return kind, param / 2, None
    return GENERIC, 0.0, scipy.linalg.sqrtm(target_matrix(kind, param, matrix))


def inverse_of(kind, param=0.0, matrix=None):
    if kind == GENERIC:
        return GENERIC, 0.0, np.asarray(matrix).conj().T
    if kind in (GateKind.RY, GateKind.RZ, GateKind.P):
        return kind, -param, None
    return kind, param, None


def uncontrolled_gates(t, kind, param=0.0, matrix=None) -> List[Gate]:
    if kind != GENERIC:
        return [single(kind, t, param)]
    _, beta, gamma, delta = zyz_angles(matrix)
    return [single('RZ', t, delta), single('RY', t, gamma), single('RZ', t, beta)]


def controlled_gates(c, t, kind, param=0.0, matrix=None) -> List[Gate]:
    """Single positive control; 1 CX for X and Z, 2 otherwise"""
    if kind == GateKind.X:
        return [cx(c, t)]
    if kind == GateKind.Z:
        return [single('H', t), cx(c, t), single('H', t)]
    if kind in (GateKind.RY, GateKind.RZ):
        return [single(kind, t, param / 2), cx(c, t), single(kind, t, -param / 2), cx(c, t)]
    if kind == GateKind.P:
        return [single('P', c, param / 2), cx(c, t), single('P', t, -param / 2), cx(c, t),
                single('P', t, param / 2)]

    alpha, beta, gamma, delta = zyz_angles(target_matrix(kind, param, matrix))
    return [
        single('RZ', t, (delta - beta) / 2),
        cx(c, t),
        single('RZ', t, -(delta + beta) / 2), single('RY', t, -gamma / 2),
        cx(c, t),
        single('RY', t, gamma / 2), single('RZ', t, beta),
        single('P', c, alpha),
    ]


def mcx_many_workers(controls, target, work) -> List[Gate]:
    """C^m X with m-2 dirty work qubits: 4(m-2) Toffolis"""
    work = list(work[:len(controls) - 2])
    work_rev = list(reversed(work))
    ctrl_rev = list(reversed(controls))

    def down(i):
        t = target if i == 0 else work_rev[i - 1]
        return toffoli_gates(ctrl_rev[i], work_rev[i], t)

    def restore(i):
        return toffoli_gates(ctrl_rev[i + 1], work_rev[i + 1], work_rev[i])

    bottom = toffoli_gates(controls[0], controls[1], work[0])
    gates = []
    for i in range(len(work)):
        gates += down(i)
    gates += bottom
    for i in reversed(range(len(work))):
        gates += down(i)
    for i in range(len(work) - 1):
        gates += restore(i)
    gates += bottom
    for i in reversed(range(len(work) - 1)):
        gates += restore(i)
    return gates


def mcx_one_worker(controls, target, work) -> List[Gate]:
    """C^m X with one dirty work qubit, split into four smaller MCX"""
    partition = int(np.ceil((len(controls) + 2) / 2))
    first = list(controls[:partition])
    second = list(controls[partition:])
    to_work = mcx_dirty_gates(first, work, second + [target])
    to_target = mcx_dirty_gates(second + [work], target, first)
    return to_work + to_target + to_work + to_target


def mcx_dirty_gates(controls, target, dirty: Sequence[int] = ()) -> List[Gate]:
    """C^m X borrowing the given qubits in any state"""
    controls = list(controls)
    m = len(controls)
    if m == 0:
        return [single('X', target)]
    if m == 1:
        return [cx(controls[0], target)]
    if m == 2:
        return toffoli_gates(controls[0], controls[1], target)
    if len(dirty) >= m - 2:
        return mcx_many_workers(controls, target, list(dirty))
    if dirty:
        return mcx_one_worker(controls, target, dirty[0])
    return mcu_baseline_gates(controls, target, GateKind.X)


def mcu_baseline_gates(controls, target, kind, param=0.0, matrix=None) -> List[Gate]:
    """No-ancilla C^k U: CV(c_k), C^{k-1}X onto c_k, CV^dagger(c_k), C^{k-1}X, C^{k-1}V"""
    controls = list(controls)
    k = len(controls)
    if k == 0:
        return uncontrolled_gates(target, kind, param, matrix)
    if kind == GateKind.Z:
        h = single('H', target)
        return [h] + mcu_baseline_gates(controls, target, GateKind.X) + [h]
    if k == 1:
        return controlled_gates(controls[0], target, kind, param, matrix)
    if kind == GateKind.X and k == 2:
        return toffoli_gates(controls[0], controls[1], target)

    root = root_of(kind, param, matrix)
    root_dagger = inverse_of(*root)
    *rest, last = controls
    flip = mcx_dirty_gates(rest, last, [target])
    gates = controlled_gates(last, target, *root)
    gates += flip
    gates += controlled_gates(last, target, *root_dagger)
    gates += flip
    gates += mcu_baseline_gates(rest, target, *root)
    return gates


def and_ladder(controls, ancillas) -> List[Gate]:
    """ancillas[-1] <- AND(controls) with relative-phase Toffolis"""
    if len(ancillas) != len(controls) - 1:
        raise LoweringError(f"{len(controls)} controls need {len(controls) - 1} ladder ancillas")
    gates = rccx_gates(controls[0], controls[1], ancillas[0])
    for i in range(1, len(ancillas)):
        gates += rccx_gates(controls[i + 1], ancillas[i - 1], ancillas[i])
    return gates


def mcu_ladder_gates(controls, target, kind, ancillas, param=0.0, matrix=None) -> List[Gate]:
    """C^k U with clean ancillas: k-2 for X-like targets, k-1 otherwise"""
    controls = list(controls)
    if kind in X_LIKE:
        compute = and_ladder(controls[:-1], ancillas)
        core = toffoli_gates(controls[-1], ancillas[-1], target)
        if kind == GateKind.Z:
            core = [single('H', target)] + core + [single('H', target)]
    else:
        compute = and_ladder(controls, ancillas)
        core = controlled_gates(ancillas[-1], target, kind, param, matrix)
    return compute + core + _inverse_list(compute)


def wrap_negative(controls, values) -> List[Gate]:
    return [single('X', c) for c, v in zip(controls, values) if v == 0]
