"""Odd polynomial approximations of 1/x on [1/kappa, 1] for matrix inversion."""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev
from scipy.fft import dct

from config.settings import Config

logger = logging.getLogger(__name__)


class PolynomialError(ValueError):
    """Degree or normalization requirement that cannot be met"""

    def __init__(self, message, required_degree=None):
        super().__init__(message)
        self.required_degree = required_degree


@dataclass(frozen=True)
class SolverConfig:
    kappa: Optional[float] = None
    eps: float = Config.EPS
    max_degree: int = Config.MAX_DEGREE
    fidelity_threshold: float = Config.FIDELITY_THRESHOLD

    def __post_init__(self):
        if self.kappa is not None and self.kappa < 1:
            raise PolynomialError(f"kappa must be >= 1, got {self.kappa}")
        if not 0 < self.eps < 1:
            raise PolynomialError(f"eps must lie in (0, 1), got {self.eps}")
        if self.max_degree < 1:
            raise PolynomialError(f"max_degree must be positive, got {self.max_degree}")

    def with_kappa(self, kappa) -> 'SolverConfig':
        return SolverConfig(kappa, self.eps, self.max_degree, self.fidelity_threshold)


def chebyshev_nodes(count):
    """First-kind nodes cos((2k+1) pi / 2 count), k = 0 .. count-1"""
    return np.cos((2 * np.arange(count) + 1) * np.pi / (2 * count))


def chebyshev_coefficients(values):
    """Interpolating Chebyshev coefficients from samples at the first-kind nodes"""
    coef = dct(np.asarray(values, dtype=float), type=2) / len(values)
    coef[0] /= 2
    return coef


class ReciprocalPolynomial:
    """Optimal odd polynomial P_{2n-1}(x; a) approximating 1/x on [a, 1]"""

    @staticmethod
    def helper_Lfrac(n: int, x, a: float):
        alpha = (1 + a) / (2 * (1 - a))
        l1 = (x + (1 - a) / (1 + a)) / alpha
        l2 = (x ** 2 + (1 - a) / (1 + a) * x / 2 - 1 / 2) / alpha ** 2
        if n == 1:
            return l1
        for _ in range(3, n + 1):
            l1, l2 = l2, x * l2 / alpha - l1 / (4 * alpha ** 2)
        return l2

    @staticmethod
    def helper_P(x, n: int, a: float):
        y = (2 * x ** 2 - (1 + a ** 2)) / (1 - a ** 2)
        lfrac = ReciprocalPolynomial.helper_Lfrac(n, y, a)
        return (1 - (-1) ** n * (1 + a) ** 2 / (4 * a) * lfrac) / x

    @staticmethod
    def coefficients(d: int, a: float) -> np.ndarray:
        """Chebyshev coefficients of P for odd degree d"""
        if d % 2 == 0:
            raise PolynomialError(f"degree must be odd, got {d}")
        nodes = chebyshev_nodes(d + 1)
        coef = chebyshev_coefficients(ReciprocalPolynomial.helper_P(nodes, (d + 1) // 2, a))
        coef[0::2] = 0
        return coef

    @staticmethod
    def error_for_degree(d: int, a: float) -> float:
        if d % 2 == 0:
            raise PolynomialError(f"degree must be odd, got {d}")
        n = (d + 1) // 2
        return (1 - a) ** n / (a * (1 + a) ** (n - 1))

    @staticmethod
    def mindegree(epsilon: float, a: float) -> int:
        n = math.ceil((np.log(1 / epsilon) + np.log(1 / a) + np.log(1 + a))
                      / np.log((1 + a) / (1 - a)))
        return 2 * max(n, 1) - 1


def polynomial_max(coef, degree) -> float:
    """Upper bound of |p| on [-1, 1] from 25*degree samples"""
    samples = 25 * max(degree, 1)
    x = np.linspace(-1, 1, samples)
    sampled = np.max(np.abs(chebyshev.chebval(x, coef)))
    return float(sampled / np.cos(np.pi * degree / (2 * samples)))


@dataclass(frozen=True)
class InversePolynomial:
    coefficients: np.ndarray
    kappa: float
    eps: float
    degree: int
    bound: float = 0.0

    def __call__(self, x):
        return chebyshev.chebval(x, self.coefficients)

    def target(self, x):
        """The function approximated on [1/kappa, 1]"""
        return 1 / (2 * self.kappa * np.asarray(x, dtype=float))

    def max_error(self, points=1001) -> float:
        x = np.linspace(1 / self.kappa, 1, points)
        return float(np.max(np.abs(self(x) - self.target(x))))


def required_degree(kappa, eps) -> int:
    if kappa <= 1:
        return 1
    return ReciprocalPolynomial.mindegree(2 * kappa * eps, 1 / kappa)


def inverse_poly(config: SolverConfig) -> InversePolynomial:
    """p = P/(2 kappa) with |p - 1/(2 kappa x)| <= eps on [1/kappa, 1] and |p| <= 1"""
    if config.kappa is None:
        raise PolynomialError("inverse_poly needs an explicit kappa")
    kappa, eps = float(config.kappa), config.eps

    degree = required_degree(kappa, eps)
    if degree > config.max_degree:
        raise PolynomialError(f"kappa={kappa:.4g}, eps={eps:.3g} need degree {degree} "
                              f"> max_degree {config.max_degree}", required_degree=degree)

    if kappa <= 1:
        coef = np.array([0.0, 0.5])
    else:
        a = 1 / kappa
        coef = ReciprocalPolynomial.coefficients(degree, a) / (2 * kappa)

    bound = polynomial_max(coef, degree)
    if bound > 1:
        raise PolynomialError(f"polynomial exceeds 1 on [-1, 1] (bound {bound:.6f})")

    poly = InversePolynomial(coef, kappa, eps, degree, bound)
    logger.info(f"Inverse polynomial: kappa={kappa:.4f} eps={eps:.2e} degree={degree} "
                f"max|p|<={bound:.4f}")
    return poly
