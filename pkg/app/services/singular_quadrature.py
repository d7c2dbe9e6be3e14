"""
Endpoint-singular integrals of the phase-plane reduction.

UpperEdge:   ∫_z^T h(t) / √(f(t) - (1-θ²)f(z)) dt,  T = f₂⁻¹((1-θ²)f(z))
SolitonTail: μ₂(p, z) = (1/√2) ∫_0^z t² / √f(t) dt

The inverse square root at T is removed with t = T - s². The stretch below
t = 1 is integrated in u = ln t, which keeps the 1/t growth of small-z
integrals bounded. Both pieces go to QUADPACK's adaptive Gauss–Kronrod rule.
"""
import logging
import math
from typing import Callable, Optional

from scipy import integrate as scipy_integrate

from app.core.config import settings
from app.core.exceptions import DomainError, NonConvergence, NumericsError
from app.schemas.model import Branch, IntegralKind, SingularIntegralSpec
from app.services.scalar_model import eval_f, eval_f1, f_branch_inverse, f_difference, peak

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def checked_quad(
    func: Callable[[float], float], a: float, b: float, tol: float, context: dict, **weight
) -> float:
    """
    Adaptive Gauss–Kronrod with an absolute-plus-relative target.

    Extra keyword arguments (weight, wvar) go to scipy's quad unchanged.
    """
    if b <= a:
        return 0.0
    try:
        result = scipy_integrate.quad(
            func, a, b,
            epsabs=tol, epsrel=tol,
            limit=settings.QUAD_MAX_SUBDIVISIONS,
            full_output=1,
            **weight,
        )
    except NumericsError:
        raise
    except (ArithmeticError, ValueError) as e:
        logger.error(f"Integrand failed on [{a}, {b}]: {e}")
        raise NonConvergence("integrand evaluation failed", {**context, "error": repr(e)})
    value, abserr = result[0], result[1]
    if len(result) > 3:
        # QUADPACK flagged trouble; accept only when its own error estimate still meets the target.
        if not math.isfinite(value) or abserr > 10.0 * tol * max(1.0, abs(value)):
            logger.error(f"Quadrature failed on [{a}, {b}]: {result[3]}")
            raise NonConvergence("adaptive quadrature did not meet tolerance",
                                 {**context, "abserr": abserr, "message": result[3]})
        logger.debug(f"Quadrature accepted with warning on [{a}, {b}]: abserr={abserr:.3e}")
    return value


def _check_z(p: float, z: float) -> float:
    top = peak(p)
    if not 0.0 < z < top:
        raise DomainError("z must lie in (0, φ(0))", {"p": p, "z": z, "peak": top})
    return top


def upper_endpoint(p: float, theta: float, z: float) -> float:
    """T = f₂⁻¹((1-θ²)f(z)); T > 1 for every z in (0, φ(0))."""
    return f_branch_inverse(p, Branch.UPPER, (1.0 - theta * theta) * eval_f(p, z))


def integrate_upper_edge(spec: SingularIntegralSpec, tol: Optional[float] = None) -> float:
    """
    Integrate h(t)/√(f(t) - (1-θ²)f(z)) over [z, T].

    Args:
        spec: Integral inputs; spec.kind must be UPPER_EDGE
        tol: Absolute and relative tolerance (defaults to settings.QUAD_TOL)

    Returns:
        The value of the integral (without the 1/√2 of L and μ₁)

    Raises:
        DomainError: If z is outside (0, φ(0)) or the spec has the wrong kind
        NonConvergence: If the adaptive scheme cannot meet tol
    """
    if spec.kind is not IntegralKind.UPPER_EDGE:
        raise DomainError("integrate_upper_edge needs an UPPER_EDGE spec", {"kind": spec.kind.value})
    tol = tol or settings.QUAD_TOL
    p, theta, z, h = spec.p, spec.theta, spec.z, spec.numerator
    top = _check_z(p, z)

    if top - z < settings.PEAK_DEGENERATE_GAP:
        slope = abs(eval_f1(p, top))
        logger.debug(f"Peak-adjacent z={z} (p={p}); using the leading-order closed form")
        return 2.0 * theta * h(top) * math.sqrt(top - z) / math.sqrt(slope)

    level = (1.0 - theta * theta) * eval_f(p, z)
    T = upper_endpoint(p, theta, z)
    endpoint_limit = 2.0 / math.sqrt(abs(eval_f1(p, T)))
    context = {"p": p, "theta": theta, "z": z}

    def near_top(s: float) -> float:
        if s == 0.0:
            return h(T) * endpoint_limit
        t = T - s * s
        radicand = f_difference(p, t, T)
        if radicand <= 0.0:
            return h(t) * endpoint_limit
        return 2.0 * s * h(t) / math.sqrt(radicand)

    # below t = 1 the radicand is f(t) - level >= θ²f(z), formed from f(t) directly
    def log_scale(u: float) -> float:
        t = math.exp(u)
        return h(t) * t / math.sqrt(eval_f(p, t) - level)

    if z >= 1.0:
        return checked_quad(near_top, 0.0, math.sqrt(T - z), tol, context)

    lower = checked_quad(log_scale, math.log(z), 0.0, 0.5 * tol, context)
    upper = checked_quad(near_top, 0.0, math.sqrt(T - 1.0), 0.5 * tol, context)
    return lower + upper


def integrate_soliton_tail(p: float, z: float, tol: Optional[float] = None) -> float:
    """
    μ₂(p, z) = (1/√2) ∫_0^z t²/√f(t) dt.

    The piece above t = 1 uses t = φ(0) - w², so z close to φ(0) stays regular.

    Raises:
        DomainError: If z is outside (0, φ(0))
    """
    tol = tol or settings.QUAD_TOL
    top = _check_z(p, z)
    context = {"p": p, "z": z}

    def direct(t: float) -> float:
        if t == 0.0:
            return 0.0
        return t * t / math.sqrt(eval_f(p, t))

    def near_peak(w: float) -> float:
        t = top - w * w
        radicand = f_difference(p, t, top)
        if radicand <= 0.0:
            return 2.0 * t * t / math.sqrt(abs(eval_f1(p, top)))
        return 2.0 * w * t * t / math.sqrt(radicand)

    if z <= 1.0:
        return checked_quad(direct, 0.0, z, tol, context) / SQRT2
    value = checked_quad(direct, 0.0, 1.0, 0.5 * tol, context)
    value += checked_quad(near_peak, math.sqrt(top - z), math.sqrt(top - 1.0), 0.5 * tol, context)
    return value / SQRT2


def integrate(spec: SingularIntegralSpec, tol: Optional[float] = None) -> float:
    """Dispatch on spec.kind; SolitonTail ignores θ and the numerator."""
    if spec.kind is IntegralKind.UPPER_EDGE:
        return integrate_upper_edge(spec, tol)
    return integrate_soliton_tail(spec.p, spec.z, tol)


def integrate_upper_edge_weighted(
    p: float, theta: float, z: float, h: Callable[[float], float], tol: Optional[float] = None
) -> float:
    """
    ∫_z^T h(t)·√(f(t) - (1-θ²)f(z)) dt.

    The integrand is bounded, but the same split at t = 1 is used so that
    small z and the square-root endpoint are resolved alike.
    """
    tol = tol or settings.QUAD_TOL
    _check_z(p, z)
    level = (1.0 - theta * theta) * eval_f(p, z)
    T = upper_endpoint(p, theta, z)
    context = {"p": p, "theta": theta, "z": z, "weighted": True}

    def near_top(s: float) -> float:
        t = T - s * s
        return 2.0 * s * h(t) * math.sqrt(max(f_difference(p, t, T), 0.0))

    def log_scale(u: float) -> float:
        t = math.exp(u)
        return h(t) * t * math.sqrt(max(eval_f(p, t) - level, 0.0))

    if z >= 1.0:
        return checked_quad(near_top, 0.0, math.sqrt(T - z), tol, context)
    lower = checked_quad(log_scale, math.log(z), 0.0, 0.5 * tol, context)
    upper = checked_quad(near_top, 0.0, math.sqrt(T - 1.0), 0.5 * tol, context)
    return lower + upper
