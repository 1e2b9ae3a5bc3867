"""QSVT phase factors for a real odd polynomial.

Phases are found for the Wx signal convention, where the target is the
imaginary part of the top-left entry, by Newton iteration on the symmetric
reduced phases, each step solved by GMRES on a matrix-free Jacobian. The
residual is measured on Chebyshev coefficients. The
result is converted to the reflection convention used by the circuit:
Re <0| e^{i phi_0 Z} prod_j R(x) e^{i phi_j Z} |0> = p(x), R(x) = [[x, s], [s, -x]].
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from config.settings import Config
from qsvt.polynomial import InversePolynomial, chebyshev_coefficients, chebyshev_nodes

logger = logging.getLogger(__name__)


class PhaseFindingError(ArithmeticError):
    """Newton iteration did not reach the residual tolerance"""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PhaseSequence:
    angles: np.ndarray

    @property
    def degree(self):
        return len(self.angles) - 1

    def response(self, x) -> float:
        """Re <0| e^{i phi_0 Z} prod_j R(x) e^{i phi_j Z} |0>"""
        s = np.sqrt(max(0.0, 1 - x * x))
        signal = np.array([[x, s], [s, -x]], dtype=complex)
        u = _z_phase(self.angles[0])
        for phi in self.angles[1:]:
            u = u @ signal @ _z_phase(phi)
        return float(u[0, 0].real)

    def save(self, filepath):
        with open(filepath, 'w') as f:
            for phi in self.angles:
                f.write(f"{phi:.17g}\n")
        logger.info(f"Saved {len(self.angles)} phases to {filepath}")

    @classmethod
    def load(cls, filepath) -> 'PhaseSequence':
        try:
            with open(filepath, 'r') as f:
                angles = [float(line) for line in f if line.strip()]
        except FileNotFoundError:
            logger.warning(f"Phase file not found: {filepath}")
            raise
        return cls(np.array(angles))


def _z_phase(phi):
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def _signal_sweep(full, x, direction=None):
    """Im U_00 at the nodes x and, for a phase direction, its directional derivative.

    Only the top row of the running product and its tangent are kept, so the
    sweep needs O(len(x)) memory whatever the degree.
    """
    s = 1j * np.sqrt(1 - x ** 2)
    phase = np.exp(1j * np.asarray(full))
    r0 = np.full(len(x), phase[0], dtype=complex)
    r1 = np.zeros(len(x), dtype=complex)
    if direction is not None:
        t0 = 1j * direction[0] * r0
        t1 = np.zeros(len(x), dtype=complex)

    for j in range(1, len(full)):
        # Row times W(x) = [[x, i s], [i s, x]], then times e^{i phi_j Z}
        a0 = (r0 * x + r1 * s) * phase[j]
        a1 = (r0 * s + r1 * x) * phase[j].conjugate()
        if direction is not None:
            b0 = (t0 * x + t1 * s) * phase[j] + 1j * direction[j] * a0
            b1 = (t0 * s + t1 * x) * phase[j].conjugate() - 1j * direction[j] * a1
            t0, t1 = b0, b1
        r0, r1 = a0, a1

    return r0.imag, (t0.imag if direction is not None else None)


def _odd_coefficients(half_values, d):
    """Coefficients of T_d, T_{d-2}, ... of an odd function sampled on the positive nodes"""
    values = np.concatenate([half_values, -half_values[::-1]])
    return chebyshev_coefficients(values)[d::-2]


def _reflection_phases(full):
    phases = full - np.pi / 2
    phases[0] = full[0] - np.pi / 4
    phases[-1] = full[-1] - np.pi / 4
    return phases


def _symmetric(reduced):
    return np.concatenate([reduced, reduced[::-1]])


def qsvt_phases(poly: InversePolynomial, tol=None, max_iterations=None) -> PhaseSequence:
    """Symmetric reflection-convention phases whose response is poly"""
    d = poly.degree
    if d % 2 == 0:
        raise PhaseFindingError(f"only odd polynomials are supported, got degree {d}")
    if tol is None:
        # Round-off in the product grows with the number of factors
        tol = max(Config.PHASE_TOLERANCE, d * np.finfo(float).eps)
    max_iterations = Config.PHASE_MAX_ITERATIONS if max_iterations is None else max_iterations

    coef = np.zeros(d + 1)
    coef[:len(poly.coefficients)] = poly.coefficients[:d + 1]
    sign = (-1) ** ((d - 1) // 2)
    target = sign * coef[d::-2]

    if d == 1:
        reduced = np.array([np.arcsin(np.clip(target[0], -1, 1)) / 2])
        return PhaseSequence(_reflection_phases(_symmetric(reduced)))

    # Odd parity: the negative nodes mirror the positive ones
    half = len(target)
    nodes = chebyshev_nodes(d + 1)[:half]

    def residual_of(reduced):
        values, _ = _signal_sweep(_symmetric(reduced), nodes)
        return _odd_coefficients(values, d) - target

    reduced = target / 2
    error = residual_of(reduced)
    residual = float(np.max(np.abs(error)))
    iteration = 0
    while residual > tol and iteration < max_iterations:
        iteration += 1
        full = _symmetric(reduced)

        def jacobian_times(v, full=full):
            _, derivative = _signal_sweep(full, nodes, _symmetric(np.ravel(v)))
            return _odd_coefficients(derivative, d)

        # Newton step from a matrix-free Jacobian
        jacobian = LinearOperator((half, half), matvec=jacobian_times, dtype=float)
        step, info = gmres(jacobian, error, atol=0.1 * tol)
        if info != 0:
            logger.warning(f"GMRES did not converge in phase iteration {iteration} (info={info})")
        reduced = reduced - step
        error = residual_of(reduced)
        residual = float(np.max(np.abs(error)))
        logger.debug(f"Phase iteration {iteration}: residual {residual:.3e}")

    if residual > tol:
        raise PhaseFindingError(f"phase iteration for degree {d} stalled at residual "
                                f"{residual:.3e} after {max_iterations} steps", residual)

    logger.info(f"Found {d + 1} phases for degree {d} (residual {residual:.2e})")
    return PhaseSequence(_reflection_phases(_symmetric(reduced)))
