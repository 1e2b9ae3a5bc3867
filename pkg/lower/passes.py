"""Lowering of IR circuits to CX + single-qubit gates, and peephole cleanup.

The baseline strategy flattens every composite with all of its controls and
uses no-ancilla decompositions only. The optimized strategy keeps compute
blocks uncontrolled, picks the cheapest decomposition per gate given the free
clean ancillas, and finishes with peephole passes.
"""
import logging
from typing import Iterable, Iterator, List, Optional

import numpy as np

from circuit.arithmetic import qft_adder_gates, ripple_adder_gates
from circuit.ir import ROTATIONS, SELF_INVERSE, Circuit, Gate, GateKind, Register
from config.settings import Config
from lower.cost_model import STRATEGIES, adder_candidates, best, mcu_candidates
from lower.decompose import (AncillaPool, LoweringError, and_ladder, controlled_gates,
                             mcu_baseline_gates, mcu_ladder_gates, wrap_negative)

logger = logging.getLogger(__name__)

ANGLE_TOLERANCE = 1e-12


def _inverse_list(gates):
    return [g.inverse() for g in reversed(gates)]


class GateLowering:
    """Lowers one IR gate at a time, drawing clean ancillas from a shared pool"""

    def __init__(self, strategy, pool: AncillaPool):
        if strategy not in STRATEGIES:
            raise LoweringError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
        self.strategy = strategy
        self.pool = pool
        self.choices = {}

    def _record(self, method):
        self.choices[method] = self.choices.get(method, 0) + 1

    def lower(self, gate: Gate) -> List[Gate]:
        if gate.kind == GateKind.ADD:
            return self._lower_add(gate)
        if not gate.controls:
            return [gate]
        # Negative controls become X-wrapped positive ones
        flips = wrap_negative(gate.controls, gate.control_values)
        return flips + self._lower_positive(list(gate.controls), gate.target, gate.kind,
                                            gate.param) + flips

    def lower_all(self, gates: Iterable[Gate]) -> List[Gate]:
        out = []
        for g in gates:
            out.extend(self.lower(g))
        return out

    def _lower_positive(self, controls, target, kind, param) -> List[Gate]:
        k = len(controls)
        if k == 1:
            return controlled_gates(controls[0], target, kind, param)
        choice = best(mcu_candidates(kind, k, self.pool.free, self.strategy))
        self._record(choice.method)
        if choice.method == 'ladder':
            with self.pool.borrow(choice.ancillas) as ancillas:
                return mcu_ladder_gates(controls, target, kind, ancillas, param)
        return mcu_baseline_gates(controls, target, kind, param)

    def _lower_add(self, gate: Gate) -> List[Gate]:
        qubits = list(gate.targets)
        k = int(gate.param)
        if k % (1 << len(qubits)) == 0:
            return []
        controls, values = list(gate.controls), list(gate.control_values)
        choice = best(adder_candidates(k, len(qubits), len(controls), self.pool.free,
                                       self.strategy))
        self._record(f"add_{choice.method}")

        if choice.method == 'qft':
            return self.lower_all(qft_adder_gates(k, qubits, controls, values))
        if choice.method == 'ripple':
            with self.pool.borrow(len(qubits) + 1) as ancillas:
                return self.lower_all(ripple_adder_gates(k, qubits, ancillas, controls, values))

        flips = wrap_negative(controls, values)
        with self.pool.borrow(len(controls) - 1) as shared:
            compute = and_ladder(controls, shared)
            flag = (shared[-1],)
            if choice.method == 'qft_shared':
                body = self.lower_all(qft_adder_gates(k, qubits, flag, (1,)))
            else:
                with self.pool.borrow(len(qubits) + 1) as ancillas:
                    body = self.lower_all(ripple_adder_gates(k, qubits, ancillas, flag, (1,)))
        return flips + compute + body + _inverse_list(compute) + flips


def _angle_is_zero(gate: Gate) -> bool:
    # Uncontrolled rotations: a multiple of 2 pi is the identity up to global phase
    wrapped = np.mod(gate.param, 2 * np.pi)
    return min(wrapped, 2 * np.pi - wrapped) < ANGLE_TOLERANCE


def _same_slot(a: Gate, b: Gate) -> bool:
    return (a.kind == b.kind and a.targets == b.targets and a.controls == b.controls
            and a.control_values == b.control_values)


def drop_zero_angles(gates: Iterable[Gate]) -> List[Gate]:
    return [g for g in gates
            if not (g.kind in ROTATIONS and not g.controls and _angle_is_zero(g))]


def _rewrite_adjacent(gates, combine) -> List[Gate]:
    """Apply combine(prev, gate) to each gate and the last gate on the same qubits.

    combine returns None to keep both, () to drop both, or a 1-tuple replacing
    the pair. Removals re-expose the previous gate on those qubits.
    """
    out: List[Optional[Gate]] = []
    last = {}
    for g in gates:
        # Only a gate that is the latest on all of its qubits can pair with g
        stacks = [last.get(q) for q in g.qubits]
        tops = {s[-1] if s else None for s in stacks}
        if len(tops) == 1 and None not in tops:
            index = tops.pop()
            prev = out[index]
            if set(prev.qubits) == set(g.qubits):
                merged = combine(prev, g)
                if merged is not None:
                    # Pop the partner so the gate before it becomes visible again
                    for q in g.qubits:
                        last[q].pop()
                    out[index] = None
                    if merged:
                        g = merged[0]
                    else:
                        continue
        out.append(g)
        for q in g.qubits:
            last.setdefault(q, []).append(len(out) - 1)
    return [g for g in out if g is not None]


def _cancel(prev: Gate, g: Gate):
    if not _same_slot(prev, g):
        return None
    if g.kind in SELF_INVERSE:
        return ()
    if g.kind in ROTATIONS and not g.controls:
        if abs(prev.param + g.param) < ANGLE_TOLERANCE:
            return ()
    return None


def _merge(prev: Gate, g: Gate):
    if g.kind in ROTATIONS and not g.controls and _same_slot(prev, g):
        return (Gate(g.kind, g.targets, param=prev.param + g.param),)
    return None


def cancel_inverse_pairs(gates: Iterable[Gate]) -> List[Gate]:
    return _rewrite_adjacent(gates, _cancel)


def merge_rotations(gates: Iterable[Gate]) -> List[Gate]:
    return _rewrite_adjacent(gates, _merge)


def peephole(gates: Iterable[Gate], max_rounds=20) -> List[Gate]:
    """Merge rotations, drop identities and cancel inverse pairs until nothing changes"""
    gates = list(gates)
    for round_no in range(1, max_rounds + 1):
        before = len(gates)
        gates = cancel_inverse_pairs(drop_zero_angles(merge_rotations(gates)))
        logger.debug(f"Peephole round {round_no}: {before} -> {len(gates)} gates")
        if len(gates) == before:
            break
    return gates


class LoweringRun:
    """Streams the lowered gates of a circuit; `pool` holds the ancilla peak afterwards"""

    def __init__(self, circuit: Circuit, strategy=None, ancillas=None):
        self.circuit = circuit
        self.strategy = strategy or Config.DEFAULT_STRATEGY
        limit = 0 if self.strategy == 'baseline' else ancillas
        self.pool = AncillaPool(circuit.width, limit)
        self.lowering = GateLowering(self.strategy, self.pool)

    def __iter__(self) -> Iterator[Gate]:
        # Baseline pushes every control through conjugations
        smart = self.strategy == 'optimized'
        for gate in self.circuit.gates(smart=smart):
            yield from self.lowering.lower(gate)

    def ancilla_register(self) -> Optional[Register]:
        if self.pool.peak == 0:
            return None
        return Register('anc', self.pool.peak, 'ancilla', offset=self.circuit.width)


def lower_to_basis(circuit: Circuit, strategy=None, ancillas=None) -> Circuit:
    """The circuit over X, H, Z, RY, RZ, P and CX, with any clean ancillas appended"""
    run = LoweringRun(circuit, strategy, ancillas)
    gates = list(run)
    if run.strategy == 'optimized':
        gates = peephole(gates)
    anc = run.ancilla_register()
    registers = circuit.registers + ((anc,) if anc else ())
    logger.info(f"Lowered ({run.strategy}): {len(gates)} gates, {run.pool.peak} ancillas, "
                f"choices={run.lowering.choices}")
    return Circuit(registers, tuple(gates))
