"""CX-count formulas for every decomposition in lower.decompose.

Each formula equals the number of CX the matching emitter produces, so a
strategy can pick the cheapest candidate before emitting anything.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

from circuit.arithmetic import constant_phase_gates
from circuit.ir import GateKind
from lower.decompose import GENERIC, X_LIKE

logger = logging.getLogger(__name__)

TOFFOLI_CX = 6
RCCX_CX = 3
STRATEGIES = ('baseline', 'optimized')


@dataclass(frozen=True)
class Candidate:
    cost: int
    method: str
    ancillas: int = 0


def controlled_cost(kind) -> int:
    return 1 if kind in X_LIKE else 2


def _root_kind(kind):
    if kind in (GateKind.RY, GateKind.RZ, GateKind.P):
        return kind
    return GENERIC


@lru_cache(maxsize=None)
def mcx_dirty_cost(m, n_dirty) -> int:
    if m == 0:
        return 0
    if m == 1:
        return 1
    if m == 2:
        return TOFFOLI_CX
    if n_dirty >= m - 2:
        return 4 * (m - 2) * TOFFOLI_CX
    if n_dirty >= 1:
        partition = math.ceil((m + 2) / 2)
        rest = m - partition
        return 2 * mcx_dirty_cost(partition, rest + 1) + 2 * mcx_dirty_cost(rest + 1, partition)
    return baseline_cost(GateKind.X, m)


@lru_cache(maxsize=None)
def baseline_cost(kind, k) -> int:
    """No-ancilla C^k U, recursing on square roots"""
    if k == 0:
        return 0
    if kind == GateKind.Z:
        return baseline_cost(GateKind.X, k)
    if k == 1:
        return controlled_cost(kind)
    if kind == GateKind.X and k == 2:
        return TOFFOLI_CX
    root = _root_kind(kind)
    return 2 * controlled_cost(root) + 2 * mcx_dirty_cost(k - 1, 1) + baseline_cost(root, k - 1)


def ladder_ancillas(kind, k) -> int:
    return k - 2 if kind in X_LIKE else k - 1


def ladder_cost(kind, k) -> int:
    if kind in X_LIKE:
        return 2 * RCCX_CX * (k - 2) + TOFFOLI_CX
    return 2 * RCCX_CX * (k - 1) + controlled_cost(kind)


def shared_control_cost(k) -> int:
    """Compute and uncompute AND(k controls) into one clean ancilla"""
    return 2 * RCCX_CX * (k - 1)


def mcu_candidates(kind, k, free, strategy):
    candidates = [Candidate(baseline_cost(kind, k), 'baseline')]
    if strategy == 'optimized' and k >= 2:
        need = ladder_ancillas(kind, k)
        if need >= 1 and need <= free:
            candidates.append(Candidate(ladder_cost(kind, k), 'ladder', need))
    return candidates


def best(candidates) -> Candidate:
    """Cheapest candidate; ties keep the earlier one"""
    return min(candidates, key=lambda c: c.cost)


def gate_cost(kind, k, free, strategy) -> int:
    """CX count of one C^k U gate with positive or negative controls"""
    if k == 0:
        return 0
    if k == 1:
        return controlled_cost(kind)
    return best(mcu_candidates(kind, k, free, strategy)).cost


def fourier_cost(width) -> int:
    """Both transforms of the QFT adder: width(width-1)/2 controlled phases each"""
    return 2 * width * (width - 1)


def adder_candidates(k, width, n_controls, free, strategy):
    """Candidates for an in-place constant add on `width` qubits with n_controls controls"""
    phases = len(constant_phase_gates(k, range(width)))
    loads = bin(k % (1 << width)).count('1')
    candidates = [Candidate(fourier_cost(width) + phases * gate_cost(GateKind.P, n_controls, free, strategy),
                            'qft')]
    if strategy != 'optimized':
        return candidates

    shared = n_controls - 1
    if n_controls >= 2 and shared <= free:
        candidates.append(Candidate(shared_control_cost(n_controls) + fourier_cost(width)
                                    + phases * controlled_cost(GateKind.P), 'qft_shared', shared))
    ripple = width + 1
    if ripple <= free:
        load = gate_cost(GateKind.X, n_controls, free - ripple, strategy)
        candidates.append(Candidate(16 * width + 2 * loads * load, 'ripple', ripple))
    if n_controls >= 2 and shared + ripple <= free:
        candidates.append(Candidate(shared_control_cost(n_controls) + 16 * width + 2 * loads,
                                    'ripple_shared', shared + ripple))
    return candidates
