"""
Scale functions of the spectrally negative stable process with Laplace exponent psi(l) = l^a.

    W(z)      = z^(a-1) / Gamma(a)
    W^(q)(z)  = a z^(a-1) E_a'(q z^a)
    Z^(q)(z)  = E_a(q z^a)

Tilted versions use W_c^(q)(z) = exp(-c z) W^(q + psi(c))(z), restricted to q + psi(c) >= 0 so
every evaluation stays on the nonnegative Mittag-Leffler series.
"""
import logging
import math
from collections import namedtuple
from typing import Callable

from scipy.integrate import quad

from .special import (
    DEFAULT_SERIES_CONFIG,
    NumericalDomainError,
    SeriesConfig,
    log_gamma,
    mittag_leffler,
    regularized_upper_gamma,
)

logger = logging.getLogger(__name__)

QUADRATURE_ABS_TOLERANCE = 1e-10
QUADRATURE_REL_TOLERANCE = 1e-12
QUADRATURE_SUBDIVISION_LIMIT = 10_000

# q + psi(c) below this is treated as the exact q = -psi(c) slice
TILT_SLICE_TOLERANCE = 1e-13


class ScaleContext(namedtuple("ScaleContext", ("a", "series"))):
    """Stability index a in (1, 2] together with the series controls used for E_a."""

    __slots__ = ()

    def __new__(cls, a: float, series: SeriesConfig = DEFAULT_SERIES_CONFIG):
        a = float(a)
        if not 1.0 < a <= 2.0:
            raise NumericalDomainError(f"stability index must be in (1, 2], got: {a}")
        return super().__new__(cls, a, series)


def _require_nonnegative(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise NumericalDomainError(f"{name} must be >= 0, got: {value}")


def integrate(func: Callable[[float], float], lower: float, upper: float) -> float:
    """Adaptive Gauss-Kronrod quadrature with the package-wide tolerances."""
    if upper == lower:
        return 0.0
    value, error = quad(
        func,
        lower,
        upper,
        epsabs=QUADRATURE_ABS_TOLERANCE,
        epsrel=QUADRATURE_REL_TOLERANCE,
        limit=QUADRATURE_SUBDIVISION_LIMIT,
    )
    logger.debug(f"quad[{lower}, {upper}] = {value} (error estimate {error})")
    return float(value)


def psi(ctx: ScaleContext, lam: float) -> float:
    """Laplace exponent, E exp(lam X_t) = exp(t psi(lam))."""
    _require_nonnegative(lam=lam)
    return lam ** ctx.a


def phi(ctx: ScaleContext, q: float) -> float:
    """Right inverse of psi."""
    _require_nonnegative(q=q)
    return q ** (1.0 / ctx.a)


def W(ctx: ScaleContext, z: float) -> float:
    _require_nonnegative(z=z)
    return z ** (ctx.a - 1.0) / math.exp(log_gamma(ctx.a))


def W_prime(ctx: ScaleContext, z: float) -> float:
    return Wq_prime(ctx, 0.0, z)


def Wq(ctx: ScaleContext, q: float, z: float) -> float:
    """q-scale function; Wq(ctx, 0, z) == W(ctx, z)."""
    _require_nonnegative(q=q, z=z)
    if q == 0:
        return W(ctx, z)
    a = ctx.a
    return a * z ** (a - 1.0) * mittag_leffler(a, q * z ** a, 1, ctx.series)


def Wq_prime(ctx: ScaleContext, q: float, z: float) -> float:
    """
    Analytic z-derivative of W^(q):
        a (a-1) z^(a-2) E_a'(q z^a) + a^2 q z^(2a-2) E_a''(q z^a)
    """
    _require_nonnegative(q=q, z=z)
    a = ctx.a
    if z == 0 and a < 2:
        raise NumericalDomainError(f"W^(q)' is unbounded at z=0 for a={a} < 2")
    argument = q * z ** a
    first = a * (a - 1.0) * z ** (a - 2.0) * mittag_leffler(a, argument, 1, ctx.series)
    if q == 0:
        return first
    return first + a * a * q * z ** (2.0 * a - 2.0) * mittag_leffler(a, argument, 2, ctx.series)


def Zq(ctx: ScaleContext, q: float, z: float) -> float:
    """Z^(q)(z) = 1 + q int_0^z W^(q) = E_a(q z^a)."""
    _require_nonnegative(q=q, z=z)
    if q == 0 or z == 0:
        return 1.0
    return mittag_leffler(ctx.a, q * z ** ctx.a, 0, ctx.series)


def _untilted_rate(ctx: ScaleContext, c: float, q: float) -> float:
    _require_nonnegative(c=c)
    rate = q + psi(ctx, c)
    if rate < 0:
        if rate > -TILT_SLICE_TOLERANCE * max(1.0, abs(q)):
            return 0.0
        raise NumericalDomainError(f"tilted scale functions need q + psi(c) >= 0, got: q={q}, c={c}")
    return rate


def tilted_W(ctx: ScaleContext, c: float, q: float, z: float) -> float:
    """W_c^(q)(z) = exp(-c z) W^(q + psi(c))(z)."""
    rate = _untilted_rate(ctx, c, q)
    return math.exp(-c * z) * Wq(ctx, rate, z)


def tilted_W_prime(ctx: ScaleContext, c: float, q: float, z: float) -> float:
    """z-derivative of W_c^(q): exp(-c z) (W^(u)'(z) - c W^(u)(z)) with u = q + psi(c)."""
    rate = _untilted_rate(ctx, c, q)
    return math.exp(-c * z) * (Wq_prime(ctx, rate, z) - c * Wq(ctx, rate, z))


def tilted_Z(ctx: ScaleContext, c: float, q: float, z: float) -> float:
    """
    Z_c^(q)(z) = 1 + q int_0^z W_c^(q).

    On the slice q = -psi(c) the integral is an incomplete gamma function and Z_c^(q)(z) = Q(a, c z).
    """
    _require_nonnegative(z=z)
    rate = _untilted_rate(ctx, c, q)
    if q == 0 or z == 0:
        return 1.0
    if rate == 0.0:
        return regularized_upper_gamma(ctx.a, c * z)
    return 1.0 + q * integrate(lambda s: tilted_W(ctx, c, q, s), 0.0, z)


def exit_up_lt(ctx: ScaleContext, q: float, x: float, y: float) -> float:
    """E_x(exp(-q T) 1{X_T = y}) for the exit time T of (0, y), 0 < x < y."""
    _require_nonnegative(q=q)
    if not 0 < x < y:
        raise NumericalDomainError(f"exit_up_lt requires 0 < x < y, got: x={x}, y={y}")
    return Wq(ctx, q, x) / Wq(ctx, q, y)
