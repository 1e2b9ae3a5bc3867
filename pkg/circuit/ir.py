"""Gate-level circuit IR.

Qubits are global indices. Registers are little-endian: qubit ``offset + i``
carries bit i of the register value. A circuit is an immutable sequence of
gates and composites; a composite is a nested circuit with extra controls and
an optional compute block (``within``) that stays uncontrolled when the
composite is flattened with smart control.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


class CircuitError(ValueError):
    """Malformed circuit or invalid builder input"""


class GateKind(str, Enum):
    X = 'X'
    H = 'H'
    Z = 'Z'
    RY = 'RY'
    RZ = 'RZ'
    P = 'P'
    ADD = 'ADD'


SELF_INVERSE = {GateKind.X, GateKind.H, GateKind.Z}
ROTATIONS = {GateKind.RY, GateKind.RZ, GateKind.P}


@dataclass(frozen=True)
class Register:
    name: str
    width: int
    kind: str = 'data'
    signed: bool = False
    offset: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise CircuitError(f"register {self.name} must have width >= 1, got {self.width}")
        if self.kind not in ('data', 'block', 'ancilla'):
            raise CircuitError(f"unknown register kind {self.kind}")

    @property
    def qubits(self) -> Tuple[int, ...]:
        return tuple(range(self.offset, self.offset + self.width))

    def __getitem__(self, i):
        return self.qubits[i]

    def __len__(self):
        return self.width

    def sub(self, start, stop):
        """A view on qubits [start, stop) of this register"""
        if not 0 <= start < stop <= self.width:
            raise CircuitError(f"bad slice [{start}:{stop}] of {self.name}")
        return Register(f"{self.name}[{start}:{stop}]", stop - start, self.kind,
                        self.signed, self.offset + start)

    def value_bits(self, value):
        """Bit pattern (LSB first) of a register value; negatives wrap for signed registers"""
        if not self.signed and value < 0:
            raise CircuitError(f"negative value {value} for unsigned register {self.name}")
        lo = -(1 << (self.width - 1)) if self.signed else 0
        hi = (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1
        if not lo <= value <= hi:
            raise CircuitError(f"value {value} out of range for register {self.name}")
        raw = value % (1 << self.width)
        return tuple((raw >> i) & 1 for i in range(self.width))


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    targets: Tuple[int, ...]
    controls: Tuple[int, ...] = ()
    control_values: Tuple[int, ...] = ()
    param: Union[float, int] = 0.0

    def __post_init__(self):
        if len(self.controls) != len(self.control_values):
            raise CircuitError("controls and control_values differ in length")
        if self.kind != GateKind.ADD and len(self.targets) != 1:
            raise CircuitError(f"{self.kind.value} acts on exactly one qubit")
        qubits = list(self.targets) + list(self.controls)
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"qubit collision in {self.kind.value}: targets={self.targets} controls={self.controls}")
        if any(v not in (0, 1) for v in self.control_values):
            raise CircuitError(f"control values must be 0 or 1, got {self.control_values}")

    @property
    def target(self):
        return self.targets[0]

    @property
    def qubits(self):
        return self.targets + self.controls

    @property
    def name(self):
        if self.kind == GateKind.X and self.controls:
            return 'CX' if len(self.controls) == 1 else 'MCX'
        return self.kind.value

    def inverse(self):
        if self.kind in SELF_INVERSE:
            return self
        return Gate(self.kind, self.targets, self.controls, self.control_values, -self.param)

    def with_controls(self, controls, values):
        if not controls:
            return self
        return Gate(self.kind, self.targets, tuple(controls) + self.controls,
                    tuple(values) + self.control_values, self.param)

    def matrix(self):
        """2x2 matrix of the target action (not defined for ADD)"""
        return single_qubit_matrix(self.kind, self.param)


def single_qubit_matrix(kind, theta=0.0):
    if kind == GateKind.X:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if kind == GateKind.Z:
        return np.diag([1, -1]).astype(complex)
    if kind == GateKind.RY:
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == GateKind.RZ:
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    if kind == GateKind.P:
        return np.diag([1, np.exp(1j * theta)])
    raise CircuitError(f"no 2x2 matrix for {kind}")


@dataclass(frozen=True)
class Composite:
    body: Tuple['Op', ...]
    controls: Tuple[int, ...] = ()
    control_values: Tuple[int, ...] = ()
    within: Tuple['Op', ...] = ()

    def inverse(self):
        return Composite(invert_ops(self.body), self.controls, self.control_values,
                         self.within)

    def with_controls(self, controls, values):
        return Composite(self.body, tuple(controls) + self.controls,
                         tuple(values) + self.control_values, self.within)

    def flatten(self, smart=True, controls=(), values=()) -> Iterator[Gate]:
        controls = tuple(controls) + self.controls
        values = tuple(values) + self.control_values
        outer_c, outer_v = ((), ()) if smart else (controls, values)
        yield from flatten_ops(self.within, smart, outer_c, outer_v)
        yield from flatten_ops(self.body, smart, controls, values)
        yield from flatten_ops(invert_ops(self.within), smart, outer_c, outer_v)


Op = Union[Gate, Composite]


def invert_ops(ops: Sequence[Op]) -> Tuple[Op, ...]:
    return tuple(op.inverse() for op in reversed(ops))


def flatten_ops(ops: Sequence[Op], smart=True, controls=(), values=()) -> Iterator[Gate]:
    for op in ops:
        if isinstance(op, Gate):
            yield op.with_controls(controls, values)
        else:
            yield from op.flatten(smart, controls, values)


def op_qubits(op: Op) -> set:
    if isinstance(op, Gate):
        return set(op.qubits)
    qubits = set(op.controls)
    for inner in op.body + op.within:
        qubits |= op_qubits(inner)
    return qubits


def merge_registers(registers: Sequence[Register]) -> Tuple[Register, ...]:
    """Union of register tables; views contained in a register are folded into it"""
    merged: List[Register] = []
    for reg in registers:
        qs = set(reg.qubits)
        if any(qs <= set(m.qubits) for m in merged):
            continue
        merged = [m for m in merged if not set(m.qubits) <= qs]
        for m in merged:
            if qs & set(m.qubits):
                raise CircuitError(f"registers {reg.name} and {m.name} partially overlap")
            if m.name == reg.name:
                raise CircuitError(f"two different registers named {reg.name}")
        merged.append(reg)
    return tuple(sorted(merged, key=lambda r: r.offset))


@dataclass(frozen=True)
class Circuit:
    registers: Tuple[Register, ...]
    ops: Tuple[Op, ...] = ()
    _width: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        registers = merge_registers(self.registers)
        object.__setattr__(self, 'registers', registers)
        declared = set()
        for reg in registers:
            declared.update(reg.qubits)
        for op in self.ops:
            missing = op_qubits(op) - declared
            if missing:
                raise CircuitError(f"qubits {sorted(missing)} are not in any declared register")
        width = max((r.offset + r.width for r in registers), default=0)
        object.__setattr__(self, '_width', width)

    @property
    def width(self):
        return self._width

    def register(self, name) -> Register:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise CircuitError(f"no register named {name}")

    def qubits(self, name) -> Tuple[int, ...]:
        return self.register(name).qubits

    def gates(self, smart=True) -> List[Gate]:
        return list(flatten_ops(self.ops, smart))

    @property
    def num_gates(self):
        return sum(1 for _ in flatten_ops(self.ops))

    def then(self, *others) -> 'Circuit':
        return sequence(self, *others)

    def inverse(self) -> 'Circuit':
        return Circuit(self.registers, invert_ops(self.ops))

    def with_registers(self, *registers) -> 'Circuit':
        return Circuit(self.registers + tuple(registers), self.ops)

    def to_text(self) -> str:
        """Line-oriented serialization of the flattened gate list"""
        lines = [f"REG {r.name} {r.width} {r.kind} {'signed' if r.signed else 'unsigned'} {r.offset}"
                 for r in self.registers]
        for g in self.gates():
            controls = ','.join(f"{c}:{v}" for c, v in zip(g.controls, g.control_values))
            targets = ','.join(str(t) for t in g.targets)
            lines.append(f"{g.name} targets={targets} controls={controls} param={g.param!r}")
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'Circuit':
        registers, ops = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            try:
                if parts[0] == 'REG':
                    name, width, kind, signed, offset = parts[1:6]
                    registers.append(Register(name, int(width), kind, signed == 'signed', int(offset)))
                    continue
                kind = GateKind.X if parts[0] in ('CX', 'MCX') else GateKind(parts[0])
                fields = dict(p.split('=', 1) for p in parts[1:])
                targets = tuple(int(t) for t in fields['targets'].split(','))
                pairs = [c.split(':') for c in fields['controls'].split(',') if c]
                param = int(fields['param']) if kind == GateKind.ADD else float(fields['param'])
                ops.append(Gate(kind, targets, tuple(int(c) for c, _ in pairs),
                                tuple(int(v) for _, v in pairs), param))
            except (KeyError, ValueError, IndexError) as e:
                raise CircuitError(f"line {lineno}: cannot parse '{line}': {e}")
        return cls(tuple(registers), tuple(ops))


def sequence(*circuits: Circuit) -> Circuit:
    """Concatenate circuits in time order"""
    registers, ops = [], []
    for c in circuits:
        registers.extend(c.registers)
        ops.extend(c.ops)
    return Circuit(tuple(registers), tuple(ops))


class CircuitBuilder:
    """Mutable helper that collects ops and registers into a Circuit"""

    def __init__(self, *registers: Register):
        self.registers = list(registers)
        self.ops: List[Op] = []

    def add(self, kind, target, controls=(), values=None, param=0.0):
        if values is None:
            values = (1,) * len(controls)
        targets = tuple(target) if isinstance(target, (tuple, list)) else (target,)
        self.ops.append(Gate(GateKind(kind), targets, tuple(controls), tuple(values), param))
        return self

    def x(self, target, controls=(), values=None):
        return self.add(GateKind.X, target, controls, values)

    def h(self, target):
        return self.add(GateKind.H, target)

    def z(self, target):
        return self.add(GateKind.Z, target)

    def ry(self, theta, target, controls=(), values=None):
        return self.add(GateKind.RY, target, controls, values, float(theta))

    def rz(self, theta, target, controls=(), values=None):
        return self.add(GateKind.RZ, target, controls, values, float(theta))

    def phase(self, theta, target, controls=(), values=None):
        return self.add(GateKind.P, target, controls, values, float(theta))

    def append(self, circuit: Circuit):
        self.registers.extend(circuit.registers)
        self.ops.extend(circuit.ops)
        return self

    def build(self) -> Circuit:
        return Circuit(tuple(self.registers), tuple(self.ops))
