"""
Real-axis numerical Laplace inversion (Gaver-Stehfest) and the exact a=2 oracle.
"""
import logging
import math
from collections import namedtuple
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

from .special import NumericalDomainError, NumericalFailure
from .utilities import ConfigurationError

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

DEFAULT_N_TERMS = 16
DEFAULT_T_MIN = 0.05
DEFAULT_T_MAX = 50.0
DEFAULT_ORACLE_TERMS = 200


class InversionRangeError(NumericalDomainError):
    """Exception for an inversion point outside [t_min, t_max].
    """

    pass


class TransformEvaluationError(NumericalFailure):
    """Exception for a transform that failed or returned a non-finite value.
    """

    pass


class InversionConfig(namedtuple("InversionConfig", ("n_terms", "t_min", "t_max"))):
    """
    :param n_terms: even number of Stehfest terms, 8 <= n_terms <= 20
    :param t_min: smallest inversion point accepted
    :param t_max: largest inversion point accepted
    """

    __slots__ = ()

    def __new__(cls, n_terms: int = DEFAULT_N_TERMS, t_min: float = DEFAULT_T_MIN, t_max: float = DEFAULT_T_MAX):
        n_terms = int(n_terms)
        if n_terms % 2 or not 8 <= n_terms <= 20:
            raise ConfigurationError(f"n_terms must be even and in [8, 20], got: {n_terms}")
        if not 0 < t_min < t_max:
            raise ConfigurationError(f"expected 0 < t_min < t_max, got: t_min={t_min}, t_max={t_max}")
        return super().__new__(cls, n_terms, float(t_min), float(t_max))


DEFAULT_INVERSION_CONFIG = InversionConfig()


class TransformHandle(namedtuple("TransformHandle", ("function", "label"))):
    """A one-argument map lam -> value standing for a Laplace transform to be inverted."""

    __slots__ = ()

    def __call__(self, lam: float) -> float:
        if not lam > 0:
            raise NumericalDomainError(f"{self.label}: transform sampled at lam={lam} <= 0")
        try:
            value = float(self.function(lam))
        except (NumericalDomainError, NumericalFailure):
            raise
        except (ValueError, ArithmeticError) as error:
            raise TransformEvaluationError(f"{self.label}: evaluation failed at lam={lam}: {error}") from error
        if not math.isfinite(value):
            raise TransformEvaluationError(f"{self.label}: non-finite transform value at lam={lam}")
        return value


def divided_by_lam(handle: TransformHandle) -> TransformHandle:
    """Transform of the running integral of the inverse of handle."""
    return TransformHandle(lambda lam: handle(lam) / lam, f"{handle.label}/lam")


@lru_cache(maxsize=8)
def stehfest_weights(n_terms: int) -> Tuple[float, ...]:
    """
    Stehfest weights V_1..V_n, accumulated in exact rational arithmetic before rounding.

        V_k = (-1)^(k + n/2) sum_{j=floor((k+1)/2)}^{min(k, n/2)}
              j^(n/2) (2j)! / ((n/2 - j)! j! (j-1)! (k-j)! (2j-k)!)
    """
    half = n_terms // 2
    factorial = math.factorial
    weights = []
    for k in range(1, n_terms + 1):
        total = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            numerator = j ** half * factorial(2 * j)
            denominator = factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k)
            total += Fraction(numerator, denominator)
        sign = -1 if (k + half) % 2 else 1
        weights.append(float(sign * total))
    logger.debug(f"stehfest weights n={n_terms}: max |V|={max(abs(w) for w in weights):.3e}")
    return tuple(weights)


def _check_range(t: float, cfg: InversionConfig) -> None:
    if not cfg.t_min <= t <= cfg.t_max:
        raise InversionRangeError(f"inversion point t={t} outside [{cfg.t_min}, {cfg.t_max}]")


def gaver_stehfest(handle: TransformHandle, t: float, cfg: InversionConfig = DEFAULT_INVERSION_CONFIG) -> float:
    """
    f(t) ~ (ln2 / t) sum_{k=1}^{n} V_k fhat(k ln2 / t).

    :param handle: transform to invert
    :param t: inversion point in [cfg.t_min, cfg.t_max]
    :param cfg: inversion controls
    """
    _check_range(t, cfg)
    scale = LN2 / t
    weights = stehfest_weights(cfg.n_terms)
    products = [weight * handle(k * scale) for k, weight in enumerate(weights, 1)]
    return scale * math.fsum(products)


def invert_cdf(handle: TransformHandle, t: float, cfg: InversionConfig = DEFAULT_INVERSION_CONFIG) -> float:
    """Distribution function whose Laplace-Stieltjes transform is handle, clamped to [0, 1]."""
    value = gaver_stehfest(divided_by_lam(handle), t, cfg)
    return min(1.0, max(0.0, value))


def kesten_oracle_density(t: float, terms: int = DEFAULT_ORACLE_TERMS) -> float:
    """
    Exact inverse of 1/cosh(sqrt(lam)) from its residues at lam = -(2n+1)^2 pi^2 / 4:

        pi sum_{n=0}^{terms} (-1)^n (2n+1) exp(-(2n+1)^2 pi^2 t / 4)
    """
    if not t > 0:
        raise NumericalDomainError(f"oracle density requires t > 0, got: {t}")
    rate = math.pi ** 2 * t / 4.0
    series = [(-1) ** n * (2 * n + 1) * math.exp(-((2 * n + 1) ** 2) * rate) for n in range(terms + 1)]
    return math.pi * math.fsum(series)


def kesten_oracle_truncation_bound(t: float, terms: int = DEFAULT_ORACLE_TERMS) -> float:
    """Magnitude of the first omitted oracle term."""
    n = terms + 1
    return math.pi * (2 * n + 1) * math.exp(-((2 * n + 1) ** 2) * math.pi ** 2 * t / 4.0)
