"""Block-encoding container, register workspace and the derivative LCU weights.

A block encoding U of a matrix B with scale s satisfies
``s * (<0_block| (x) I) U (|0_block> (x) I) = B``. Every construction in this
package carries the classical matrix it is meant to encode so that it can be
checked by column-wise simulation. Large references are passed as callables
and only assembled when something reads them.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from circuit.ir import Circuit, Register
from sim.statevector import extract_block, extract_unitary

logger = logging.getLogger(__name__)

# One-sided boundary row minus the overlapping bulk entries
BOUNDARY_TABLE = np.array([-1.5, 1.5, -0.5, 0.0])
# Norm of the uncorrected one-sided stencil (-3, 4, -1)
TEXT_ALPHA = float(np.sqrt(26.0))


class BlockEncodingError(ValueError):
    """Construction that cannot be block-encoded or fails its reference check"""


@dataclass(frozen=True)
class DerivativeDecomp:
    alpha: float
    theta_prep: float

    @classmethod
    def from_table(cls, table=BOUNDARY_TABLE):
        alpha = float(np.linalg.norm(table))
        return cls(alpha=alpha, theta_prep=2 * float(np.arccos(np.sqrt(alpha / (1 + alpha)))))

    @property
    def weights(self):
        """LCU weights of the boundary and bulk branches"""
        return self.alpha / (1 + self.alpha), 1 / (1 + self.alpha)


class Workspace:
    """Sequential register allocator: data registers first, block qubits after"""

    BLOCK_NAMES = ('lcu', 'b1', 'b2', 'bc', 'zf', 'vf')

    def __init__(self, n_x, n_v):
        self._next = 0
        self._registers: Dict[str, Register] = {}
        self.x = self.allocate('x', n_x)
        self.v = self.allocate('v', n_v, signed=True)
        self.e = self.allocate('e', 1)

    @classmethod
    def standard(cls, n_x, n_v, shared=True):
        """Data registers, the six U_F block qubits, the select pair and,
        unless shared, two dedicated U_C block qubits"""
        ws = cls(n_x, n_v)
        for name in cls.BLOCK_NAMES:
            ws.block(name)
        ws.block('sel', 2)
        if not shared:
            ws.block('c0')
            ws.block('c1')
        return ws

    def allocate(self, name, width=1, kind='data', signed=False) -> Register:
        if name in self._registers:
            raise BlockEncodingError(f"register {name} is already allocated")
        reg = Register(name, width, kind, signed, self._next)
        self._next += width
        self._registers[name] = reg
        return reg

    def block(self, name, width=1) -> Register:
        return self.allocate(name, width, 'block')

    def __getitem__(self, name) -> Register:
        try:
            return self._registers[name]
        except KeyError:
            raise BlockEncodingError(f"no register named {name} in the workspace")

    def __contains__(self, name):
        return name in self._registers

    @property
    def width(self):
        return self._next

    @property
    def data_registers(self) -> Tuple[Register, ...]:
        return (self.x, self.v, self.e)


@dataclass
class BlockEncoding:
    circuit: Circuit
    scale: float
    block_registers: Tuple[Register, ...]
    data_registers: Tuple[Register, ...]
    reference_source: Union[None, np.ndarray, Callable[[], np.ndarray]] = field(default=None,
                                                                                repr=False)
    label: str = ''
    details: Dict = field(default_factory=dict)

    @property
    def reference(self) -> Optional[np.ndarray]:
        """The classical matrix; a callable source is built on first use"""
        if callable(self.reference_source):
            self.reference_source = np.asarray(self.reference_source())
        return self.reference_source

    @property
    def has_reference(self):
        return self.reference_source is not None

    @property
    def block_qubits(self) -> Tuple[int, ...]:
        return tuple(q for r in self.block_registers for q in r.qubits)

    @property
    def block_width(self):
        return len(self.block_qubits)

    @property
    def data_width(self):
        return sum(r.width for r in self.data_registers)

    @property
    def width(self):
        return self.circuit.width

    def block(self) -> np.ndarray:
        """scale * top-left block, simulated column by column"""
        return extract_block(self.circuit, self.block_registers, self.scale)

    def verify(self) -> float:
        """Max-norm distance between the encoded block and the reference"""
        if not self.has_reference:
            raise BlockEncodingError(f"{self.label or 'encoding'} carries no reference matrix")
        block = self.block()
        if block.shape != self.reference.shape:
            raise BlockEncodingError(f"{self.label}: block shape {block.shape} does not match "
                                     f"reference {self.reference.shape}")
        error = float(np.max(np.abs(block - self.reference), initial=0.0))
        logger.debug(f"{self.label}: block error {error:.3e}")
        return error

    def unitarity_error(self) -> float:
        u = extract_unitary(self.circuit)
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))

    def inverse(self) -> 'BlockEncoding':
        """Encoding of the adjoint matrix"""
        reference = None
        if self.has_reference:
            def reference():
                return self.reference.conj().T
        return BlockEncoding(self.circuit.inverse(), self.scale, self.block_registers,
                             self.data_registers, reference, f"{self.label}^dagger",
                             dict(self.details))

    def manifest(self) -> Dict:
        registers = [{'name': r.name, 'width': r.width, 'kind': r.kind,
                      'signed': r.signed, 'offset': r.offset} for r in self.circuit.registers]
        digest = None
        if self.has_reference:
            data = np.ascontiguousarray(self.reference, dtype='<c16').tobytes()
            digest = hashlib.sha256(data).hexdigest()
        return {
            'label': self.label,
            'scale': float(self.scale),
            'registers': registers,
            'block_registers': [r.name for r in self.block_registers],
            'block_width': self.block_width,
            'data_width': self.data_width,
            'width': self.width,
            'reference_sha256': digest,
            'details': {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(value):
    """JSON-friendly view of a details entry"""
    if isinstance(value, DerivativeDecomp):
        return {'alpha': value.alpha, 'theta_prep': value.theta_prep}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value
