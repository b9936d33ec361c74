"""Closed-form capacity bounds, the ideal (perfect CSI) water-filling capacity
and beamforming-gain curves. All rates are in bits per channel use.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .channel import Constraint
from .errors import DegenerateConfigError, DomainError, InvalidInputError, NumericalFailureError
from .numerics import digamma
from .scheme import training_length

__all__ = [
    "upper_second",
    "upper_fourth",
    "scheme_rate_bound",
    "lower_second",
    "lower_fourth",
    "WaterFilling",
    "waterfill",
    "ideal_waterfill",
    "ideal_bracket",
    "equal_power_rate",
    "ideal_asymptote",
    "GainCurve",
    "gain_curve",
    "BoundReport",
    "bound_report",
]


def _check(m, tc, p, kappa=1.0):
    if int(m) != m or m < 2:
        raise InvalidInputError(f"M must be an integer >= 2, got {m!r}")
    if int(tc) != tc or tc < 1:
        raise InvalidInputError(f"T_c must be a positive integer, got {tc!r}")
    if not 0 < p < math.inf:
        raise InvalidInputError(f"P must be finite and positive, got {p!r}")
    if not 0 < kappa < math.inf:
        raise InvalidInputError(f"kappa must be finite and positive, got {kappa!r}")


def upper_second(m, tc, p):
    """Converse under the average-power budget:
    ``2 log2(4 + 3 min(M, T_c)) + log2(1 + 4P)``."""
    _check(m, tc, p)
    return 2.0 * math.log2(4 + 3 * min(m, tc)) + math.log2(1.0 + 4.0 * p)


def upper_fourth(m, tc, p, kappa):
    """Converse under the fourth-moment budget:
    ``log2(1 + min(M + 2, sqrt(2) (T_c + 1)) kappa P)``."""
    _check(m, tc, p, kappa)
    return math.log2(1.0 + min(m + 2.0, math.sqrt(2.0) * (tc + 1)) * kappa * p)


def scheme_rate_bound(tc, t_train, power):
    """Closed-form rate guaranteed by the training scheme (may be negative).

    ``(T_c - T_tau)/T_c * log2(1 + P max(T_tau - 1, 1/2)/(2 + 1/P) - 1/max(T_tau, 2))``
    """
    if not 1 <= t_train < tc:
        raise DegenerateConfigError(f"T_tau={t_train} leaves no data phase in T_c={tc}")
    arg = (1.0 + power * max(t_train - 1.0, 0.5) / (2.0 + 1.0 / power)
           - 1.0 / max(t_train, 2))
    return (tc - t_train) / tc * math.log2(arg)


def lower_second(m, tc, p):
    """Achievable rate under the average-power budget, clamped at 0.

    Raises :class:`DegenerateConfigError` when training fills the block.
    """
    _check(m, tc, p)
    if tc < 2:
        raise DegenerateConfigError("T_c = 1 leaves no room for training and data")
    return max(0.0, scheme_rate_bound(tc, training_length(m, tc), p))


def lower_fourth(m, tc, p, kappa):
    """Same as :func:`lower_second` at the effective power ``kappa P/sqrt(3)``."""
    _check(m, tc, p, kappa)
    return lower_second(m, tc, kappa * p / math.sqrt(3.0))


# ---------------------------------------------------------------------------
# ideal channel: perfect CSI at both ends, gamma = ||h||^2 ~ Gamma(M, 1)

_TAIL_MASS = 1e-14


def _log_density(g, m):
    return (m - 1) * np.log(g) - g - math.lgamma(m)


def _gamma_max(m):
    return float(special.gammainccinv(m, _TAIL_MASS))


def _expect(fun, m, lo, hi):
    """Integral of ``fun(g) f(g)`` over ``[lo, hi]`` for the Gamma(M, 1) density."""
    def integrand(g):
        return fun(g) * math.exp(_log_density(g, m)) if g > 0 else 0.0

    points = [m - 1.0] if lo < m - 1.0 < hi else None
    val, _ = integrate.quad(integrand, lo, hi, points=points, limit=400,
                            epsabs=1e-14, epsrel=1e-13)
    return val


def _inverse_tail(x, m):
    """``E[1/gamma; gamma > x]``."""
    if m == 1:
        return float(special.exp1(x))
    return float(special.gammaincc(m - 1, x)) / (m - 1)


def _power_used(level, m):
    if level <= 0:
        return 0.0
    x = 1.0 / level
    return level * float(special.gammaincc(m, x)) - _inverse_tail(x, m)


def _log_tail(x, m):
    """``E[ln gamma; gamma > x]`` (natural log)."""
    if x < m:
        head = _expect(math.log, m, 0.0, x) if x > 0 else 0.0
        return digamma(m) - head
    return _expect(math.log, m, x, max(_gamma_max(m), 2.0 * x))


@dataclass(frozen=True)
class WaterFilling:
    level: float
    rate_bits: float
    power_used: float
    power_residual: float
    iterations: int


def waterfill(m, p, tol=1e-11, max_iter=200):
    """Optimal power allocation ``P(gamma) = (mu - 1/gamma)^+`` for i.i.d.
    Rayleigh MISO with perfect CSI.

    The water level ``mu`` is found by bisection on the (closed-form) power
    integral; the rate is then ``E[log2(mu gamma); gamma > 1/mu]``.
    """
    if int(m) != m or m < 1:
        raise InvalidInputError(f"M must be a positive integer, got {m!r}")
    if not 0 < p < math.inf:
        raise InvalidInputError(f"P must be finite and positive, got {p!r}")
    m = int(m)
    lo, hi = 0.0, max(1.0, p)
    while _power_used(hi, m) < p:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalFailureError("could not bracket the water level")
    level, used, it = hi, _power_used(hi, m), 0
    for it in range(1, max_iter + 1):
        level = 0.5 * (lo + hi)
        used = _power_used(level, m)
        if abs(used - p) <= tol:
            break
        if used < p:
            lo = level
        else:
            hi = level
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    else:
        raise NumericalFailureError("water-level bisection did not converge")
    residual = abs(used - p)
    if residual > 1e-9:
        raise NumericalFailureError(f"power constraint residual {residual:.3e}")
    x = 1.0 / level
    rate = (float(special.gammaincc(m, x)) * math.log(level) + _log_tail(x, m)) / math.log(2.0)
    return WaterFilling(level, rate, used, residual, it)


def ideal_waterfill(m, p):
    """Ergodic capacity with perfect CSIT/CSIR, in bits per use."""
    return waterfill(m, p).rate_bits


def equal_power_rate(m, p):
    """``E[log2(1 + P gamma)]``: the rate of a constant power allocation."""
    m = int(m)
    return _expect(lambda g: math.log2(1.0 + p * g), m, 0.0, _gamma_max(m))


def ideal_bracket(m, p):
    """``(log2(1 + (M-1)P) - 1, log2(1 + PM + P + M))`` enclosing the ideal capacity."""
    return math.log2(1.0 + (m - 1) * p) - 1.0, math.log2(1.0 + p * m + p + m)


def ideal_asymptote(m, p):
    """Large-M behaviour of the ideal capacity, ``log2(1 + P M)``."""
    if int(m) != m or m < 1 or not p > 0:
        raise InvalidInputError("need M >= 1 and P > 0")
    return math.log2(1.0 + p * m)


# ---------------------------------------------------------------------------
# beamforming gain

@dataclass(frozen=True)
class GainCurve:
    """Beamforming-gain bounds against ``alpha = log T_c / log M``.

    Under the average-power budget the gain lies in ``[lower, upper_second]``;
    under the fourth-moment budget it equals ``exact_fourth``.
    """

    alpha_grid: np.ndarray
    lower: np.ndarray
    upper_second: np.ndarray
    exact_fourth: np.ndarray
    constraint: Constraint

    @property
    def upper(self):
        if self.constraint is Constraint.FOURTH_MOMENT:
            return self.exact_fourth
        return self.upper_second


def gain_curve(alpha_grid, constraint=Constraint.SECOND_MOMENT):
    alpha = np.asarray(alpha_grid, dtype=float)
    if np.any(alpha < 0) or np.any(np.isnan(alpha)):
        raise DomainError("alpha must be non-negative")
    lower = np.minimum(alpha, 1.0)
    return GainCurve(alpha, lower, np.minimum(2.0 * alpha, 1.0), lower.copy(),
                     Constraint(constraint))


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Every closed-form value for one ``(M, T_c, P, kappa)`` point.

    ``lower_*`` are ``None`` when ``degenerate`` (no data phase). A
    ``*_vacuous`` flag marks a lower bound whose formula went negative and
    was clamped to 0.
    """

    m: int
    tc: int
    p: float
    kappa: float
    alpha: float
    t_train: int | None
    ideal_waterfill_bits: float
    ideal_asymptote_bits: float
    upper_second_bits: float
    upper_fourth_bits: float
    lower_second_bits: float | None
    lower_fourth_bits: float | None
    lower_second_vacuous: bool = False
    lower_fourth_vacuous: bool = False
    degenerate: bool = False


def bound_report(m, tc, p, kappa=1.0):
    _check(m, tc, p, kappa)
    m, tc = int(m), int(tc)
    try:
        t_train = training_length(m, tc) if tc >= 2 else None
    except DegenerateConfigError:
        t_train = None
    if t_train is None:
        lower2 = lower4 = None
        vac2 = vac4 = False
    else:
        raw2 = scheme_rate_bound(tc, t_train, p)
        raw4 = scheme_rate_bound(tc, t_train, kappa * p / math.sqrt(3.0))
        lower2, lower4 = max(0.0, raw2), max(0.0, raw4)
        vac2, vac4 = raw2 < 0, raw4 < 0
    return BoundReport(
        m=m, tc=tc, p=float(p), kappa=float(kappa),
        alpha=math.log(tc) / math.log(m),
        t_train=t_train,
        ideal_waterfill_bits=ideal_waterfill(m, p),
        ideal_asymptote_bits=ideal_asymptote(m, p),
        upper_second_bits=upper_second(m, tc, p),
        upper_fourth_bits=upper_fourth(m, tc, p, kappa),
        lower_second_bits=lower2,
        lower_fourth_bits=lower4,
        lower_second_vacuous=vac2,
        lower_fourth_vacuous=vac4,
        degenerate=t_train is None,
    )
