"""
Fluctuation identities of the stable environment and the law of b_1.

Notation for a level k > 0 (drawdown quantities carry a bar, drawup quantities an underbar):
    tau_bar_k    first time the path is k below its running maximum
    sigma_bar_k  last time before tau_bar_k the path sat at its running maximum
    beta_bar_k   running maximum at tau_bar_k
    tau_k, sigma_k, beta_k  the mirror quantities for the running minimum
An upward k-slope is (tau_k - sigma_k) glued to an independent sigma_bar_k; a downward k-slope is
(tau_bar_k - sigma_bar_k) glued to an independent sigma_k.
"""
import enum
import logging
import math
from collections import namedtuple
from functools import lru_cache

import mpmath
import numpy as np

from .inversion import (
    DEFAULT_INVERSION_CONFIG,
    InversionConfig,
    InversionRangeError,
    TransformHandle,
    gaver_stehfest,
    invert_cdf,
)
from .scale import (
    W,
    W_prime,
    Wq,
    Wq_prime,
    ScaleContext,
    Zq,
    integrate,
    psi,
    tilted_W,
    tilted_W_prime,
    tilted_Z,
)
from .special import (
    NumericalDomainError,
    extended_digits,
    log_gamma,
    log_regularized_upper_gamma,
    mittag_leffler,
    mittag_leffler_jet,
)

logger = logging.getLogger(__name__)

G_INTEGRAL_EPSILON = 1e-8
G_INTEGRAL_HORIZON = 60.0

# the bias function is defined on [1, 2]; its logarithm extends to (1/2, inf)
BIAS_DOMAIN = (1.0, 2.0)


class SlopeKind(enum.Enum):
    UPWARD = "upward"
    DOWNWARD = "downward"


class HittingParams(namedtuple("HittingParams", ("u", "v", "k"))):
    """
    :param u: time Laplace variable, u >= 0
    :param v: overshoot Laplace variable, v >= 0
    :param k: level, k > 0
    """

    __slots__ = ()

    def __new__(cls, u: float, v: float = 0.0, k: float = 1.0):
        if u < 0 or v < 0:
            raise NumericalDomainError(f"Laplace variables must be >= 0, got: u={u}, v={v}")
        if not k > 0:
            raise NumericalDomainError(f"level must be > 0, got: k={k}")
        return super().__new__(cls, float(u), float(v), float(k))

    def p(self, ctx: ScaleContext) -> float:
        """Tilted time variable, p + psi(v) = u."""
        return self.u - psi(ctx, self.v)


def _check_time_variable(u: float, k: float) -> None:
    if u < 0:
        raise NumericalDomainError(f"u must be >= 0, got: {u}")
    if not k > 0:
        raise NumericalDomainError(f"level must be > 0, got: k={k}")


def _down_excursion_without_overshoot(ctx: ScaleContext, u: float, k: float) -> float:
    """
    v = 0 case written in terms of the jet at x = u k^a:

        E_a + a/(a-1) x (E_a E_a'' - E_a'^2) / E_a'

    The result lies in (0, 1] while each term is of size E_a(x), so it is formed in mpmath.
    """
    a = ctx.a
    x = u * k ** a
    if x == 0:
        return 1.0
    e0, e1, e2 = mittag_leffler_jet(a, x, ctx.series)
    with mpmath.workdps(extended_digits(a, x)):
        a_mp = mpmath.mpf(a)
        value = e0 + a_mp / (a_mp - 1) * mpmath.mpf(x) * (e0 * e2 - e1 * e1) / e1
    return float(value)


def lt_down_excursion(ctx: ScaleContext, params: HittingParams) -> float:
    """
    E exp{-u (tau_bar_k - sigma_bar_k) - v (overshoot)}, overshoot = running max - X - k at tau_bar_k:

        e^(vk) W(k)/W'(k) (Z_v^(p)(k) W_v^(p)'(k) / W_v^(p)(k) - p W_v^(p)(k)),  p = u - psi(v)
    """
    u, v, k = params
    if v == 0:
        return _down_excursion_without_overshoot(ctx, u, k)
    p = params.p(ctx)
    z_tilted = tilted_Z(ctx, v, p, k)
    w_tilted = tilted_W(ctx, v, p, k)
    w_tilted_prime = tilted_W_prime(ctx, v, p, k)
    bracket = z_tilted * w_tilted_prime / w_tilted - p * w_tilted
    return math.exp(v * k) * W(ctx, k) / W_prime(ctx, k) * bracket


def lt_up_run(ctx: ScaleContext, u: float, x: float = math.inf, k: float = 1.0) -> float:
    """
    E(exp{-u sigma_bar_k} 1{beta_bar_k <= x}); x = math.inf selects the closed-form limit
    W'(k) W^(u)(k) / (W(k) W^(u)'(k)).
    """
    _check_time_variable(u, k)
    if not (x > 0 or math.isinf(x)):
        raise NumericalDomainError(f"x must be > 0 or math.inf, got: {x}")
    ratio = Wq(ctx, u, k) / Wq_prime(ctx, u, k)
    limit = W_prime(ctx, k) / W(ctx, k) * ratio
    if math.isinf(x):
        return limit
    return limit * -math.expm1(-x / ratio)


def lt_up_excursion(ctx: ScaleContext, u: float, k: float = 1.0) -> float:
    """E exp{-u (tau_k - sigma_k)} = W(k) / W^(u)(k)."""
    _check_time_variable(u, k)
    return W(ctx, k) / Wq(ctx, u, k)


def lt_down_run(ctx: ScaleContext, u: float, k: float = 1.0) -> float:
    """E exp{-u sigma_k} = W^(u)(k) / (Z^(u)(k) W(k))."""
    _check_time_variable(u, k)
    return Wq(ctx, u, k) / (Zq(ctx, u, k) * W(ctx, k))


def lt_undershoot(ctx: ScaleContext, u: float, k: float = 1.0) -> float:
    """E exp{-u beta_k} = e^(-uk) / Z_u^(-psi(u))(k) = e^(-uk) / Q(a, uk), evaluated in log space."""
    _check_time_variable(u, k)
    x = u * k
    return math.exp(-x - log_regularized_upper_gamma(ctx.a, x))


def drawup_time_lt(ctx: ScaleContext, u: float, k: float = 1.0) -> float:
    """E exp{-u tau_k} = 1 / Z^(u)(k)."""
    _check_time_variable(u, k)
    return 1.0 / Zq(ctx, u, k)


def overshoot_lt(ctx: ScaleContext, v: float, k: float = 1.0) -> float:
    """Transform of the jump overshoot below the drawdown level, lt_down_excursion at u=0."""
    return lt_down_excursion(ctx, HittingParams(0.0, v, k))


def mean_overshoot(ctx: ScaleContext, level: float = 1.0) -> float:
    """E(overshoot) = k (2 - a) / (a - 1); zero for the continuous a=2 environment."""
    return level * (2.0 - ctx.a) / (ctx.a - 1.0)


def slope_length_lt(ctx: ScaleContext, kind: SlopeKind, u: float, level: float = 1.0) -> float:
    """
    Laplace transform of the length of an upward/downward slope at the given level (scaling l_x = x^a l_1):

        upward:   (Gamma(a+1) (E_a'(u) + a/(a-1) u E_a''(u)))^-1
        downward: Gamma(a+1) (E_a'(u) + a/(a-1) u (E_a(u) E_a''(u) - E_a'(u)^2) / E_a(u))

    The downward bracket is formed from the extended-precision jet.
    """
    _check_time_variable(u, level)
    a = ctx.a
    z = u * level ** a
    gamma_a1 = math.exp(log_gamma(a + 1.0))
    if kind is SlopeKind.UPWARD:
        core = mittag_leffler(a, z, 1, ctx.series)
        if z > 0:
            core += a / (a - 1.0) * z * mittag_leffler(a, z, 2, ctx.series)
        return 1.0 / (gamma_a1 * core)
    if z == 0:
        return 1.0
    e0, e1, e2 = mittag_leffler_jet(a, z, ctx.series)
    with mpmath.workdps(extended_digits(a, z)):
        a_mp = mpmath.mpf(a)
        core = e1 + a_mp / (a_mp - 1) * mpmath.mpf(z) * (e0 * e2 - e1 * e1) / e0
    return gamma_a1 * float(core)


def slope_length_mean(ctx: ScaleContext, kind: SlopeKind, level: float = 1.0) -> float:
    """
    upward:   Gamma(a) / ((a-1) Gamma(2a-1))
    downward: (1/Gamma(a) - Gamma(a)/Gamma(2a-1)) / (a-1)
    """
    a = ctx.a
    gamma_a = math.exp(log_gamma(a))
    upward = math.exp(log_gamma(a) - log_gamma(2.0 * a - 1.0)) / (a - 1.0)
    scale = level ** a
    if kind is SlopeKind.UPWARD:
        return scale * upward
    return scale * (1.0 / gamma_a - gamma_a * math.exp(-log_gamma(2.0 * a - 1.0))) / (a - 1.0)


def slope_height_mean(ctx: ScaleContext, kind: SlopeKind, level: float = 1.0) -> float:
    """
    Mean height of a slope at the given level.

    upward:   k + E beta_bar_k, beta_bar_k exponential with rate W'(k)/W(k) = (a-1)/k
    downward: k + E(overshoot) + E beta_k, with E beta_k = k
    Both reduce to k a / (a-1).
    """
    a = ctx.a
    if kind is SlopeKind.UPWARD:
        return level + level / (a - 1.0)
    return level + mean_overshoot(ctx, level) + level


def _check_bias_domain(a: float) -> None:
    if not BIAS_DOMAIN[0] <= a <= BIAS_DOMAIN[1]:
        raise NumericalDomainError(f"bias_gamma is defined for a in {list(BIAS_DOMAIN)}, got: {a}")


def g_closed(a: float) -> float:
    """g(a) = log(Gamma(2a-1) / Gamma(a)^2), defined for a > 1/2."""
    if not a > 0.5:
        raise NumericalDomainError(f"g is defined for a > 1/2, got: {a}")
    return log_gamma(2.0 * a - 1.0) - 2.0 * log_gamma(a)


def _g_integrand(a: float, t: float) -> float:
    numerator = math.expm1(-(a - 1.0) * t) ** 2
    return math.exp(-t) * numerator / (t * -math.expm1(-t))


def g_integral(a: float) -> float:
    """
    g(a) = int_0^inf e^-t (1 - e^-(a-1)t)^2 / (t (1 - e^-t)) dt.

    The integrand tends to (a-1)^2 as t -> 0, so [0, eps] is added in closed form.
    """
    if not a > 0.5:
        raise NumericalDomainError(f"g is defined for a > 1/2, got: {a}")
    if a == 1.0:
        return 0.0
    head = (a - 1.0) ** 2 * G_INTEGRAL_EPSILON
    body = integrate(lambda t: _g_integrand(a, t), G_INTEGRAL_EPSILON, G_INTEGRAL_HORIZON)
    tail = integrate(lambda t: _g_integrand(a, t), G_INTEGRAL_HORIZON, math.inf)
    logger.debug(f"g_integral({a}): head={head:.3e} body={body} tail={tail:.3e}")
    return head + body + tail


def bias_gamma(a: float) -> float:
    """P(b_1 < 0) = exp(-g(a)) = Gamma(a)^2 / Gamma(2a-1)."""
    _check_bias_domain(a)
    return math.exp(-g_closed(a))


@lru_cache(maxsize=64)
def slope_length_transform(ctx: ScaleContext, kind: SlopeKind) -> TransformHandle:
    return TransformHandle(lambda lam: slope_length_lt(ctx, kind, lam), f"slope_length_lt[{kind.value}, a={ctx.a}]")


@lru_cache(maxsize=64)
def integrated_survival_transform(ctx: ScaleContext, kind: SlopeKind) -> TransformHandle:
    """Transform (1 - fhat(lam)) / lam^2 of y -> int_0^y (1 - F(s)) ds."""
    density = slope_length_transform(ctx, kind)
    return TransformHandle(lambda lam: (1.0 - density(lam)) / (lam * lam), f"integrated_survival[{kind.value}, a={ctx.a}]")


@lru_cache(maxsize=16384)
def slope_length_cdf(ctx: ScaleContext, kind: SlopeKind, t: float, inv: InversionConfig = DEFAULT_INVERSION_CONFIG) -> float:
    """
    F_u (upward) or F_d (downward) at t >= 0 by numerical inversion.

    Below inv.t_min the distribution function is interpolated linearly from F(t_min) toward F(0) = 0.
    """
    if t <= 0:
        return 0.0
    if t > inv.t_max:
        raise InversionRangeError(f"slope length cdf requested at t={t} beyond t_max={inv.t_max}")
    if t < inv.t_min:
        return t / inv.t_min * slope_length_cdf(ctx, kind, inv.t_min, inv)
    return invert_cdf(slope_length_transform(ctx, kind), t, inv)


def integrated_survival(ctx: ScaleContext, kind: SlopeKind, y: float, inv: InversionConfig) -> float:
    """int_0^y (1 - F(s)) ds, consistent with the interpolation used below t_min."""
    if y <= 0:
        return 0.0
    if y > inv.t_max:
        raise InversionRangeError(f"integrated survival requested at y={y} beyond t_max={inv.t_max}")
    if y < inv.t_min:
        return y - slope_length_cdf(ctx, kind, inv.t_min, inv) * y * y / (2.0 * inv.t_min)
    return gaver_stehfest(integrated_survival_transform(ctx, kind), y, inv)


def density_scale(ctx: ScaleContext) -> float:
    """f_b1(0) = (a-1) Gamma(a) = 1 / (E l_up + E l_down)."""
    return (ctx.a - 1.0) * math.exp(log_gamma(ctx.a))


def density_b1(ctx: ScaleContext, x: float, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, level: float = 1.0) -> float:
    """
    Density of b_level:
        (a-1) Gamma(a) (1 - F_u(-x))  for x <= 0
        (a-1) Gamma(a) (1 - F_d(x))   for x > 0
    with b_x = x^a b_1 in law for level x != 1.
    """
    scale = level ** ctx.a
    y = x / scale
    if y <= 0:
        survival = 1.0 - slope_length_cdf(ctx, SlopeKind.UPWARD, -y, inv)
    else:
        survival = 1.0 - slope_length_cdf(ctx, SlopeKind.DOWNWARD, y, inv)
    return max(0.0, density_scale(ctx) * survival) / scale


def cdf_b1(ctx: ScaleContext, x: float, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, level: float = 1.0) -> float:
    """
    Distribution function of b_level:
        (a-1) Gamma(a) (E l_up - int_0^-x (1 - F_u))    for x <= 0
        gamma(a) + (a-1) Gamma(a) int_0^x (1 - F_d)     for x > 0
    """
    y = x / level ** ctx.a
    c0 = density_scale(ctx)
    if y <= 0:
        value = c0 * (slope_length_mean(ctx, SlopeKind.UPWARD) - integrated_survival(ctx, SlopeKind.UPWARD, -y, inv))
    else:
        value = bias_gamma(ctx.a) + c0 * integrated_survival(ctx, SlopeKind.DOWNWARD, y, inv)
    return min(1.0, max(0.0, value))


def density_b1_grid(ctx: ScaleContext, xs, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, level: float = 1.0) -> np.ndarray:
    return np.array([density_b1(ctx, float(x), inv, level) for x in xs])


def cdf_b1_grid(ctx: ScaleContext, xs, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, level: float = 1.0) -> np.ndarray:
    return np.array([cdf_b1(ctx, float(x), inv, level) for x in xs])
