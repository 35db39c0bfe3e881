"""
Mittag-Leffler function and gamma-family helpers.

E_a(z) = sum_{n>=0} z^n / Gamma(1 + a n) is summed directly from its power series.
Every formula downstream samples E_a on the nonnegative real axis, where all terms are
positive and the partial sums increase monotonically. Differences of those values, such as
E_a E_a'' - E_a'^2, cancel to far below the size of each term and are formed from an
extended-precision jet instead.
"""
import cmath
import logging
import math
from collections import namedtuple
from functools import lru_cache
from typing import Tuple, Union

import mpmath
import numpy as np
from scipy.special import gammaincc, gammaln

from .utilities import ConfigurationError

logger = logging.getLogger(__name__)

Number = Union[float, complex]

DEFAULT_REL_TOLERANCE = 1e-15
DEFAULT_MAX_TERMS = 400
DEFAULT_REAL_DOMAIN_CAP = 1e4
DEFAULT_COMPLEX_DOMAIN_CAP = 30.0

# terms whose log-magnitude exceeds this overflow double precision
LOG_MAGNITUDE_GUARD = math.log(1e300)

EXTENDED_GUARD_DIGITS = 30
EXTENDED_MAX_TERMS = 20_000


class NumericalDomainError(ValueError):
    """Base exception for arguments outside the domain an evaluation supports.
    """

    pass


class NumericalFailure(ArithmeticError):
    """Base exception for evaluations that ran but could not meet their accuracy contract.
    """

    pass


class DomainCapExceeded(NumericalDomainError):
    """Exception for |z| beyond the direct-summation cap of the Mittag-Leffler series.
    """

    pass


class NonConvergence(NumericalFailure):
    """Exception for a series that did not meet its tolerance within max_terms.
    """

    pass


class SeriesConfig(namedtuple("SeriesConfig", ("rel_tolerance", "max_terms", "real_domain_cap", "complex_domain_cap"))):
    """Summation controls for the Mittag-Leffler power series.

    :param rel_tolerance: stop once the next term is below rel_tolerance * |partial sum|
    :param max_terms: hard limit on the number of terms
    :param real_domain_cap: largest z accepted for nonnegative real arguments
    :param complex_domain_cap: largest |z| accepted for any other argument
    """

    __slots__ = ()

    def __new__(
        cls,
        rel_tolerance: float = DEFAULT_REL_TOLERANCE,
        max_terms: int = DEFAULT_MAX_TERMS,
        real_domain_cap: float = DEFAULT_REAL_DOMAIN_CAP,
        complex_domain_cap: float = DEFAULT_COMPLEX_DOMAIN_CAP,
    ):
        if not rel_tolerance > 0:
            raise ConfigurationError(f"rel_tolerance must be > 0, got: {rel_tolerance}")
        if int(max_terms) < 10:
            raise ConfigurationError(f"max_terms must be >= 10, got: {max_terms}")
        if not (real_domain_cap > 0 and complex_domain_cap > 0):
            raise ConfigurationError(f"domain caps must be > 0, got: {real_domain_cap}, {complex_domain_cap}")
        return super().__new__(cls, float(rel_tolerance), int(max_terms), float(real_domain_cap), float(complex_domain_cap))

    def domain_cap(self, z: Number) -> float:
        if is_nonnegative_real(z):
            return self.real_domain_cap
        return self.complex_domain_cap


DEFAULT_SERIES_CONFIG = SeriesConfig()


def is_nonnegative_real(z: Number) -> bool:
    return isinstance(z, (int, float, np.floating, np.integer)) and z >= 0


def _coerce(z: Number) -> Number:
    if isinstance(z, (complex, np.complexfloating)):
        z = complex(z)
        return z.real if z.imag == 0.0 else z
    return float(z)


def _log_coefficients(a: float, order: int, n_terms: int) -> np.ndarray:
    """log of n!/(n-order)! / Gamma(1 + a n) for n = order .. order + n_terms - 1."""
    n = np.arange(order, order + n_terms, dtype=float)
    log_falling = gammaln(n + 1.0) - gammaln(n - order + 1.0)
    return log_falling - gammaln(1.0 + a * n)


def _series_terms(a: float, z: Number, order: int, n_terms: int) -> np.ndarray:
    """Terms of the order-th termwise derivative of the series, in increasing power of z."""
    log_coefficients = _log_coefficients(a, order, n_terms)
    powers = np.arange(n_terms, dtype=float)
    if z == 0:
        terms = np.zeros(n_terms)
        terms[0] = math.exp(log_coefficients[0])
        return terms
    if isinstance(z, float):
        log_terms = log_coefficients + powers * math.log(abs(z))
        if log_terms.max() > LOG_MAGNITUDE_GUARD:
            raise DomainCapExceeded(f"E_{a} series overflows double precision at z={z}")
        signs = np.where(powers % 2 == 1, -1.0, 1.0) if z < 0 else 1.0
        return signs * np.exp(log_terms)
    log_terms = log_coefficients + powers * cmath.log(z)
    if log_terms.real.max() > LOG_MAGNITUDE_GUARD:
        raise DomainCapExceeded(f"E_{a} series overflows double precision at z={z}")
    return np.exp(log_terms)


def _kahan_partial_sums(terms: np.ndarray, rel_tolerance: float):
    """Compensated running sum, stopping once the next term is negligible.

    :return: (value, number of terms used, array of partial sums)
    """
    total = terms.dtype.type(0)
    compensation = terms.dtype.type(0)
    partials = np.empty_like(terms)
    for index, term in enumerate(terms):
        corrected = term - compensation
        running = total + corrected
        compensation = (running - total) - corrected
        total = running
        partials[index] = total
        if index + 1 < len(terms) and abs(terms[index + 1]) <= rel_tolerance * abs(total):
            return total, index + 1, partials[: index + 1]
    return total, len(terms), partials


def mittag_leffler_partial_sums(a: float, z: Number, order: int = 0, cfg: SeriesConfig = DEFAULT_SERIES_CONFIG) -> np.ndarray:
    """
    Partial sums of the (termwise differentiated) Mittag-Leffler series up to the stopping term.

    :param a: index of the function, a > 0
    :param z: argument
    :param order: derivative order in {0, 1, 2}
    :param cfg: summation controls
    :raises DomainCapExceeded: |z| beyond the cap for its value class
    :raises NonConvergence: tolerance not met within cfg.max_terms
    """
    if not a > 0:
        raise NumericalDomainError(f"Mittag-Leffler index must be > 0, got: {a}")
    if order not in (0, 1, 2):
        raise ValueError(f"order must be in (0, 1, 2), got: {order}")
    z = _coerce(z)
    cap = cfg.domain_cap(z)
    if abs(z) > cap:
        raise DomainCapExceeded(f"|z|={abs(z)} exceeds the series domain cap {cap}")

    terms = _series_terms(float(a), z, order, cfg.max_terms)
    value, used, partials = _kahan_partial_sums(terms, cfg.rel_tolerance)
    if used == cfg.max_terms and abs(terms[-1]) > cfg.rel_tolerance * abs(value):
        raise NonConvergence(f"E_{a}^({order})({z}) did not converge within {cfg.max_terms} terms")
    logger.debug(f"E_{a}^({order})({z}) summed with {used} terms")
    return partials


@lru_cache(maxsize=8192)
def _mittag_leffler_cached(a: float, z: Number, order: int, cfg: SeriesConfig) -> Number:
    partials = mittag_leffler_partial_sums(a, z, order, cfg)
    value = partials[-1]
    if isinstance(value, np.complexfloating):
        return complex(value)
    return float(value)


def mittag_leffler(a: float, z: Number, order: int = 0, cfg: SeriesConfig = DEFAULT_SERIES_CONFIG) -> Number:
    """
    Evaluate E_a(z), E_a'(z) or E_a''(z) by direct summation of the power series.

    :param a: index of the function, a > 0
    :param z: real or complex argument with |z| within cfg's cap
    :param order: derivative order in {0, 1, 2}
    :param cfg: summation controls
    """
    return _mittag_leffler_cached(float(a), _coerce(z), int(order), cfg)


def extended_digits(a: float, z: float) -> int:
    """Working decimal digits for combinations of E_a, E_a', E_a'' at z >= 0.

    The jet terms grow like exp(z^(1/a)) while their combinations stay bounded, so that many digits are lost.
    """
    growth = z ** (1.0 / a) if z > 0 else 0.0
    return EXTENDED_GUARD_DIGITS + int(math.ceil(2.0 * growth / math.log(10.0)))


def mittag_leffler_jet(a: float, z: float, cfg: SeriesConfig = DEFAULT_SERIES_CONFIG) -> Tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf]:
    """
    (E_a(z), E_a'(z), E_a''(z)) as mpmath numbers summed at extended precision, for real z >= 0.

    Use this where the three values enter a difference, e.g. E_a E_a'' - E_a'^2; the caller
    should do that arithmetic inside mpmath.workdps(extended_digits(a, z)).

    :raises DomainCapExceeded: z beyond cfg.real_domain_cap
    :raises NonConvergence: tolerance not met within EXTENDED_MAX_TERMS
    """
    if not a > 0:
        raise NumericalDomainError(f"Mittag-Leffler index must be > 0, got: {a}")
    if not is_nonnegative_real(z):
        raise NumericalDomainError(f"the extended-precision jet needs real z >= 0, got: {z}")
    if z > cfg.real_domain_cap:
        raise DomainCapExceeded(f"z={z} exceeds the series domain cap {cfg.real_domain_cap}")
    digits = extended_digits(a, z)
    with mpmath.workdps(digits):
        a_mp = mpmath.mpf(a)
        if z == 0:
            return mpmath.mpf(1), mpmath.rgamma(a_mp + 1), 2 * mpmath.rgamma(2 * a_mp + 1)
        z_mp = mpmath.mpf(z)
        tolerance = mpmath.mpf(10) ** (-digits)
        # the terms peak near n = z^(1/a) / a
        peak = int(z ** (1.0 / a) / a) + 2
        totals = [mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(0)]
        for n in range(EXTENDED_MAX_TERMS):
            term = mpmath.power(z_mp, n) * mpmath.rgamma(a_mp * n + 1)
            totals[0] += term
            totals[1] += n * term
            totals[2] += n * (n - 1) * term
            if n > peak and (n + 1) ** 2 * term <= tolerance * totals[0]:
                logger.debug(f"E_{a} jet at z={z} summed with {n + 1} terms at {digits} digits")
                return totals[0], totals[1] / z_mp, totals[2] / (z_mp * z_mp)
    raise NonConvergence(f"E_{a} jet at z={z} did not converge within {EXTENDED_MAX_TERMS} terms")


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not x > 0:
        raise NumericalDomainError(f"log_gamma requires x > 0, got: {x}")
    return float(gammaln(x))


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    if not a > 0 or x < 0:
        raise NumericalDomainError(f"regularized_upper_gamma requires a > 0 and x >= 0, got: a={a}, x={x}")
    return float(gammaincc(a, x))


def log_regularized_upper_gamma(a: float, x: float) -> float:
    """log Q(a, x), finite where Q(a, x) itself underflows double precision."""
    if not a > 0 or x < 0:
        raise NumericalDomainError(f"log_regularized_upper_gamma requires a > 0 and x >= 0, got: a={a}, x={x}")
    value = regularized_upper_gamma(a, x)
    if value > 1e-280:
        return math.log(value)
    return float(mpmath.log(mpmath.gammainc(a, x, regularized=True)))
