"""
Scalar nonlinearity f(t) = t²/2 - t^p/p, its branch inverses, the real-line
soliton φ and the auxiliary functions A, g, ρ.

A, g, ρ/f'⁴ and d/dt((2t²-g)/f') have removable singularities at t = 1. Inside
|t - 1| < tol_series they are evaluated from truncated Taylor series in
s = t - 1, with the vanishing leading orders cancelled symbolically.
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize, special

from app.core.config import settings
from app.core.exceptions import DomainError
from app.schemas.model import Branch

logger = logging.getLogger(__name__)

SERIES_ORDER = 12
SOLITON_CUTOFF = 40.0
_LOG_MAX = 709.0


def _pow(t: float, a: float) -> float:
    """t**a for t >= 0, computed as exp(a ln t), with 0**a = 0 and overflow to inf."""
    if t == 0.0:
        return 0.0
    exponent = a * math.log(t)
    if exponent > _LOG_MAX:
        return math.inf
    return math.exp(exponent)


def _check_nonneg(t: float) -> None:
    if t < 0.0 or math.isnan(t):
        raise DomainError("f is defined for t >= 0 only", {"t": t})


def _check_pos(t: float) -> None:
    if not t > 0.0:
        raise DomainError("argument must be positive", {"t": t})


def peak(p: float) -> float:
    """φ(0) = (p/2)^{1/(p-2)}."""
    return math.exp(math.log(p / 2.0) / (p - 2.0))


def f_one(p: float) -> float:
    """f(1) = 1/2 - 1/p."""
    return 0.5 - 1.0 / p


def alpha(p: float) -> float:
    """Mass-scaling exponent (6-p)/(2(p-2)); exactly zero at the critical exponent."""
    if abs(p - 6.0) <= 1e-12:
        return 0.0
    return (6.0 - p) / (2.0 * (p - 2.0))


def eval_f(p: float, t: float) -> float:
    _check_nonneg(t)
    return 0.5 * t * t - _pow(t, p) / p


def eval_f1(p: float, t: float) -> float:
    """f'(t) = t - t^{p-1}, written as -t·expm1((p-2) ln t) to stay accurate near t = 1."""
    _check_nonneg(t)
    if t == 0.0:
        return 0.0
    exponent = (p - 2.0) * math.log(t)
    if exponent > _LOG_MAX:
        return -math.inf
    return -t * math.expm1(exponent)


def eval_f2(p: float, t: float) -> float:
    _check_nonneg(t)
    return 1.0 - (p - 1.0) * _pow(t, p - 2.0)


def eval_f3(p: float, t: float) -> float:
    _check_pos(t)
    return -(p - 1.0) * (p - 2.0) * _pow(t, p - 3.0)


def f_difference(p: float, t: float, t0: float) -> float:
    """f(t) - f(t0) without cancellation when t is close to t0."""
    _check_nonneg(t)
    _check_nonneg(t0)
    if t0 == 0.0:
        return eval_f(p, t)
    delta = t - t0
    quadratic = 0.5 * delta * (t + t0)
    if t == 0.0:
        power = -_pow(t0, p)
    else:
        exponent = p * math.log1p(delta / t0)
        if exponent > _LOG_MAX:
            return -math.inf
        power = _pow(t0, p) * math.expm1(exponent)
    return quadratic - power / p


# ---------------------------------------------------------------------------
# Branch inverses and the soliton
# ---------------------------------------------------------------------------

def f_branch_inverse(p: float, branch: Branch, v: float, tol_root: Optional[float] = None) -> float:
    """
    Invert f on one of its monotone branches.

    Args:
        p: Nonlinearity exponent
        branch: Branch.LOWER for t in [0, 1], Branch.UPPER for t >= 1
        v: Target value of f
        tol_root: Relative tolerance of the bracketed root search

    Returns:
        t on the selected branch with f(t) = v

    Raises:
        DomainError: If v is outside the range of the branch
    """
    tol = tol_root or settings.TOL_ROOT
    f1 = f_one(p)
    slack = 8.0 * np.finfo(float).eps * f1
    if v > f1 + slack:
        raise DomainError("value above the branch maximum f(1)", {"p": p, "v": v})
    if v >= f1:
        return 1.0

    if branch is Branch.LOWER:
        if v < 0.0:
            raise DomainError("lower branch covers [0, f(1)] only", {"p": p, "v": v})
        if v == 0.0:
            return 0.0
        lo, hi = 0.0, 1.0
    else:
        if v == 0.0:
            return peak(p)
        lo, hi = 1.0, 2.0
        while eval_f(p, hi) >= v:
            lo, hi = hi, 2.0 * hi

    return optimize.brentq(
        lambda t: eval_f(p, t) - v, lo, hi,
        xtol=np.finfo(float).tiny, rtol=max(tol, 4.0 * np.finfo(float).eps), maxiter=500,
    )


def _log_sech(u: float) -> float:
    a = abs(u)
    return math.log(2.0) - a - math.log1p(math.exp(-2.0 * a))


def soliton(p: float, x: float) -> float:
    """φ(x) = (p/2)^{1/(p-2)} sech^{2/(p-2)}((p-2)x/2)."""
    a = 0.5 * (p - 2.0)
    return peak(p) * math.exp(_log_sech(a * x) / a)


def soliton_deriv(p: float, x: float) -> float:
    """φ'(x) = -φ(x) tanh((p-2)x/2)."""
    return -soliton(p, x) * math.tanh(0.5 * (p - 2.0) * x)


def soliton_second_deriv(p: float, x: float) -> float:
    a = 0.5 * (p - 2.0)
    th = math.tanh(a * x)
    return soliton(p, x) * (th * th - a * (1.0 - th * th))


def soliton_inverse(p: float, z: float) -> float:
    """
    The unique y >= 0 with φ(y) = z.

    Raises:
        DomainError: If z is outside (0, φ(0)]
    """
    top = peak(p)
    if not 0.0 < z <= top * (1.0 + 4.0 * np.finfo(float).eps):
        raise DomainError("soliton_inverse needs z in (0, φ(0)]", {"p": p, "z": z})
    a = 0.5 * (p - 2.0)
    log_s = min(0.0, a * (math.log(z) - math.log(top)))
    one_minus_s2 = -math.expm1(2.0 * log_s)
    return (math.log1p(math.sqrt(one_minus_s2)) - log_s) / a


@lru_cache(maxsize=256)
def soliton_mass(p: float) -> float:
    """‖φ‖²_{L²(ℝ)} by quadrature of the sech-power profile, truncated at |x| = 40."""
    value, _ = integrate.quad(
        lambda x: soliton(p, x) ** 2, 0.0, SOLITON_CUTOFF,
        epsabs=1e-13, epsrel=1e-12, limit=200,
    )
    return 2.0 * value


# ---------------------------------------------------------------------------
# Removable singularities at t = 1
# ---------------------------------------------------------------------------

class _TaylorAtOne:
    """Truncated Taylor polynomials in s = t - 1 of f and the quotients built on it."""

    def __init__(self, p: float, order: int = SERIES_ORDER):
        k = np.arange(order + 1)
        coef = -special.binom(p, k) / p
        coef[:3] += (0.5, 1.0, 0.5)
        series = Polynomial(coef)
        self.d = Polynomial(coef[2:])              # (f(t) - f(1)) / s²
        self.e = Polynomial(series.deriv(1).coef[1:])  # f'(t) / s
        self.f2 = series.deriv(2)
        self.f3 = series.deriv(3)
        t = Polynomial([1.0, 1.0])

        # ρ / s²: the s⁰ and s¹ coefficients vanish identically.
        rho = (-3.0 * self.f2 * self.e ** 2 + 6.0 * self.d * self.f2 ** 2
               - 2.0 * self.d * self.f3 * self.e * Polynomial([0.0, 1.0]))
        self.rho_reduced = Polynomial(rho.coef[2:order - 2])

        # (2t² - g)·e² / s, whose s⁰ coefficient vanishes identically.
        numer = -(t ** 2) * self.e ** 2 + 2.0 * t ** 2 * self.d * self.f2 - 4.0 * t * Polynomial([0.0, 1.0]) * self.d * self.e
        self.q_numer = Polynomial(numer.coef[1:order - 2])

    def ratio(self, s: float) -> float:
        """(f(t) - f(1)) f''(t) / f'(t)²."""
        e = self.e(s)
        return self.d(s) * self.f2(s) / (e * e)

    def d_over_e(self, s: float) -> float:
        """(f(t) - f(1)) / (s·f'(t))."""
        return self.d(s) / self.e(s)

    def rho_over_fprime4(self, s: float) -> float:
        return self.rho_reduced(s) / self.e(s) ** 4

    def dgdiv(self, s: float) -> float:
        e = self.e(s)
        n = self.q_numer(s)
        return (self.q_numer.deriv()(s) * e - 3.0 * n * self.e.deriv()(s)) / e ** 4


@lru_cache(maxsize=256)
def _taylor(p: float) -> _TaylorAtOne:
    return _TaylorAtOne(p)


def _near_one(t: float, tol_series: Optional[float]) -> bool:
    return abs(t - 1.0) < (tol_series or settings.TOL_SERIES)


def _quotients(p: float, t: float) -> Tuple[float, float, float, float]:
    """(f(t)-f(1), f'(t), f''(t), f'''(t)) by the cancellation-free direct formulas."""
    return f_difference(p, t, 1.0), eval_f1(p, t), eval_f2(p, t), eval_f3(p, t)


def eval_A(p: float, t: float, tol_series: Optional[float] = None) -> float:
    """A(t) = 1/2 - (f(t)-f(1)) f''(t) / f'(t)², continuously extended by A(1) = 0."""
    _check_pos(t)
    if _near_one(t, tol_series):
        return 0.5 - _taylor(p).ratio(t - 1.0)
    diff, d1, d2, _ = _quotients(p, t)
    return 0.5 - diff * d2 / (d1 * d1)


def eval_g(p: float, t: float, tol_series: Optional[float] = None) -> float:
    """g(t) = 3t² - 2t²(f(t)-f(1))f''(t)/f'(t)² + 4t(f(t)-f(1))/f'(t)."""
    _check_pos(t)
    if _near_one(t, tol_series):
        series = _taylor(p)
        s = t - 1.0
        return 3.0 * t * t - 2.0 * t * t * series.ratio(s) + 4.0 * t * s * series.d_over_e(s)
    diff, d1, d2, _ = _quotients(p, t)
    return 3.0 * t * t - 2.0 * t * t * diff * d2 / (d1 * d1) + 4.0 * t * diff / d1


def eval_dgdiv(p: float, t: float, tol_series: Optional[float] = None) -> float:
    """d/dt((2t² - g(t)) / f'(t)); tends to (22 - 11p + p²)/(6(p-2)) at t = 1."""
    _check_pos(t)
    if _near_one(t, tol_series):
        return _taylor(p).dgdiv(t - 1.0)
    diff, d1, d2, d3 = _quotients(p, t)
    q = diff / d1
    dq = 1.0 - diff * d2 / (d1 * d1)
    ddq = -(d1 * d2 + diff * d3) / (d1 * d1) + 2.0 * diff * d2 * d2 / (d1 ** 3)
    g = t * t + 2.0 * t * t * dq + 4.0 * t * q
    dg = 2.0 * t + 8.0 * t * dq + 2.0 * t * t * ddq + 4.0 * q
    return (4.0 * t - dg) / d1 - (2.0 * t * t - g) * d2 / (d1 * d1)


def eval_rho(p: float, t: float) -> float:
    """ρ(t) = -3f''f'² + 6(f-f(1))f''² - 2(f-f(1))f'''f'; tends to -6f(1) as t → 0⁺."""
    _check_pos(t)
    diff, d1, d2, d3 = _quotients(p, t)
    return -3.0 * d2 * d1 * d1 + 6.0 * diff * d2 * d2 - 2.0 * diff * d3 * d1


def eval_rho_over_fprime4(p: float, t: float, tol_series: Optional[float] = None) -> float:
    """ρ(t)/f'(t)⁴, negative for every t > 0; equals -(p²+p-2)/(6(p-2)) at t = 1."""
    _check_pos(t)
    if _near_one(t, tol_series):
        return _taylor(p).rho_over_fprime4(t - 1.0)
    d1 = eval_f1(p, t)
    return eval_rho(p, t) / d1 ** 4


def eval_diff_over_fprime(p: float, t: float, tol_series: Optional[float] = None) -> float:
    """(f(t) - f(1)) / f'(t), which vanishes at t = 1."""
    _check_pos(t)
    if _near_one(t, tol_series):
        s = t - 1.0
        return s * _taylor(p).d_over_e(s)
    return f_difference(p, t, 1.0) / eval_f1(p, t)
