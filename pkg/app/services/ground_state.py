"""
Ground-State Assembly Service.
Solves L(p, z) = ℓ for the vertex value and builds Θ₁, Θ and ∂Θ/∂λ
from the closed-form derivative identities.
"""
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import optimize, special

from app.core.config import Settings, settings
from app.core.exceptions import BracketFailure, DomainError, NonConvergence, NumericsError
from app.schemas.ground_state import GroundStateRecord, PhaseState
from app.schemas.model import GraphKind, HamiltonianLevel, IntegralKind, ModelParams, SingularIntegralSpec
from app.services.scalar_model import (
    alpha,
    eval_A,
    eval_diff_over_fprime,
    eval_f,
    eval_f1,
    eval_g,
    eval_rho_over_fprime4,
    f_one,
    peak,
    soliton_deriv,
    soliton_inverse,
)
from app.services.singular_quadrature import (
    integrate_soliton_tail,
    integrate_upper_edge,
    integrate_upper_edge_weighted,
)

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# (weight of μ₁, weight of μ₂) in Θ₁ for each graph
MASS_WEIGHTS = {
    GraphKind.T_GRAPH: (1.0, 2.0),
    GraphKind.TADPOLE: (2.0, 1.0),
}

# bracket limits in σ = logit(z/φ(0)): z stays above 1e-130·φ(0) so z² does not underflow,
# and below φ(0)(1 - 8ε) so z and φ(0) remain distinct
_SIGMA_FLOOR = -300.0
_SIGMA_CEILING = float(special.logit(1.0 - 8.0 * np.finfo(float).eps))


def _one(t: float) -> float:
    return 1.0


def _square(t: float) -> float:
    return t * t


class GroundStateService:
    """Service for the ground-state branch of one graph."""

    def __init__(self, config: Settings = settings):
        self.config = config

    # ------------------------------------------------------------------
    # Length function
    # ------------------------------------------------------------------

    def _edge(self, p: float, theta: float, z: float, h=_one) -> float:
        spec = SingularIntegralSpec(p=p, theta=theta, z=z, numerator=h, kind=IntegralKind.UPPER_EDGE)
        return integrate_upper_edge(spec, tol=self.config.QUAD_TOL)

    def _peak_gap(self, p: float, z: float) -> Tuple[float, bool]:
        gap = peak(p) - z
        return gap, gap < self.config.PEAK_DEGENERATE_GAP

    @staticmethod
    def _prefactor(p: float, theta: float, z: float) -> float:
        """√2((1-θ²)f(z) - f(1)); negative for every z in (0, φ(0)) when θ ∈ (0, 2]."""
        return SQRT2 * ((1.0 - theta * theta) * eval_f(p, z) - f_one(p))

    def length_L(self, p: float, theta: float, z: float) -> float:
        """L(p, z) = (1/√2) ∫_z^T dt / √(f(t) - (1-θ²)f(z))."""
        return self._edge(p, theta, z) / SQRT2

    def length_L_alt(self, p: float, theta: float, z: float) -> float:
        """L from the integrated-by-parts identity with a bounded integrand."""
        tol = self.config.TOL_SERIES
        boundary = -2.0 * theta * eval_diff_over_fprime(p, z, tol) * math.sqrt(eval_f(p, z))
        weighted = integrate_upper_edge_weighted(
            p, theta, z, lambda t: 2.0 + 2.0 * eval_A(p, t, tol), tol=self.config.QUAD_TOL
        )
        return (boundary - weighted) / self._prefactor(p, theta, z)

    def dlength_dz(self, p: float, theta: float, z: float) -> float:
        """
        ∂L/∂z from the non-singular representation.

        Args:
            p: Nonlinearity exponent
            theta: Incidence index
            z: Vertex value in (0, φ(0))

        Returns:
            ∂L/∂z, negative for θ ∈ (0, 2]
        """
        gap, degenerate = self._peak_gap(p, z)
        if degenerate:
            slope = abs(eval_f1(p, peak(p)))
            return -theta / (math.sqrt(2.0 * slope) * math.sqrt(gap))
        tol = self.config.TOL_SERIES
        integral = self._edge(p, theta, z, lambda t: eval_A(p, t, tol))
        numerator = theta * f_one(p) / math.sqrt(eval_f(p, z))
        numerator += (1.0 - theta * theta) * eval_f1(p, z) * integral
        return numerator / self._prefactor(p, theta, z)

    def dlength_dz_alt(self, p: float, theta: float, z: float) -> float:
        """∂L/∂z through ρ/f'⁴ times the radicand."""
        tol = self.config.TOL_SERIES
        fz = eval_f(p, z)
        k = 1.0 - theta * theta
        weighted = integrate_upper_edge_weighted(
            p, theta, z, lambda t: eval_rho_over_fprime4(p, t, tol), tol=self.config.QUAD_TOL
        )
        numerator = theta * (f_one(p) - 2.0 * k * eval_A(p, z, tol) * fz) / math.sqrt(fz)
        numerator -= k * eval_f1(p, z) * weighted
        return numerator / self._prefactor(p, theta, z)

    def solve_z(self, p: float, theta: float, ell: float, z_hint: Optional[float] = None) -> float:
        """
        The unique z with L(p, z) = ell.

        The root is sought in σ with z = φ(0)·expit(σ), which resolves both
        z → 0⁺ and z → φ(0)⁻ on a logarithmic scale.

        Args:
            p: Nonlinearity exponent
            theta: Incidence index in (0, 2]
            ell: Compact-edge half-length
            z_hint: Optional starting point, e.g. the previous root of a sweep

        Raises:
            DomainError: If θ is outside (0, 2] or ell <= 0
            BracketFailure: If no bracket encloses ell
        """
        if not 0.0 < theta <= 2.0:
            raise DomainError("solve_z needs θ in (0, 2], where L is monotone", {"theta": theta})
        if not ell > 0.0:
            raise DomainError("ell must be positive", {"ell": ell})
        top = peak(p)
        context = {"p": p, "theta": theta, "ell": ell}

        def position(sigma: float) -> float:
            return top * float(special.expit(sigma))

        def residual(sigma: float) -> float:
            return self.length_L(p, theta, position(sigma)) - ell

        centre = 0.0
        if z_hint is not None and 0.0 < z_hint < top:
            centre = float(np.clip(special.logit(z_hint / top), _SIGMA_FLOOR + 1.0, _SIGMA_CEILING - 1.0))

        # L decreases in σ; widen each side geometrically until the residual changes sign
        step, hi = 1.0, min(centre + 1.0, _SIGMA_CEILING)
        while residual(hi) > 0.0:
            if hi >= _SIGMA_CEILING:
                logger.error(f"Upper bracket for solve_z exhausted: {context}")
                raise BracketFailure("ell is below the resolvable range near φ(0)", context)
            step *= 2.0
            hi = min(hi + step, _SIGMA_CEILING)
        step, lo = 1.0, max(centre - 1.0, _SIGMA_FLOOR)
        while residual(lo) < 0.0:
            if lo <= _SIGMA_FLOOR:
                logger.error(f"Lower bracket for solve_z exhausted: {context}")
                raise BracketFailure("ell exceeds the resolvable range near z = 0", context)
            step *= 2.0
            lo = max(lo - step, _SIGMA_FLOOR)

        try:
            sigma = optimize.brentq(
                residual, lo, hi,
                xtol=self.config.TOL_Z, rtol=4.0 * np.finfo(float).eps, maxiter=200,
            )
        except RuntimeError as e:
            raise NonConvergence("brentq did not converge in solve_z", {**context, "error": str(e)})
        return position(sigma)

    # ------------------------------------------------------------------
    # Masses
    # ------------------------------------------------------------------

    def mu1(self, p: float, z: float, theta: float) -> float:
        """μ₁(p, z, θ) = (1/√2) ∫_z^T t² / √(f(t) - (1-θ²)f(z)) dt."""
        return self._edge(p, theta, z, _square) / SQRT2

    def mu1_alt(self, p: float, z: float, theta: float) -> float:
        """μ₁ from the regular identity with g(t)√(f(t) - (1-θ²)f(z))."""
        tol = self.config.TOL_SERIES
        boundary = -2.0 * theta * z * z * eval_diff_over_fprime(p, z, tol) * math.sqrt(eval_f(p, z))
        weighted = integrate_upper_edge_weighted(
            p, theta, z, lambda t: eval_g(p, t, tol), tol=self.config.QUAD_TOL
        )
        return (boundary - weighted) / self._prefactor(p, theta, z)

    def mu2(self, p: float, z: float) -> float:
        return integrate_soliton_tail(p, z, tol=self.config.QUAD_TOL)

    def dmu1_dz(self, p: float, z: float, theta: float) -> float:
        gap, degenerate = self._peak_gap(p, z)
        if degenerate:
            top = peak(p)
            slope = abs(eval_f1(p, top))
            return -theta * top * top / (math.sqrt(2.0 * slope) * math.sqrt(gap))
        tol = self.config.TOL_SERIES
        integral = self._edge(p, theta, z, lambda t: t * t - 0.5 * eval_g(p, t, tol))
        numerator = theta * z * z * f_one(p) / math.sqrt(eval_f(p, z))
        numerator -= (1.0 - theta * theta) * eval_f1(p, z) * integral
        return numerator / self._prefactor(p, theta, z)

    @staticmethod
    def dmu2_dz(p: float, z: float) -> float:
        return z * z / math.sqrt(2.0 * eval_f(p, z))

    @staticmethod
    def _weights(params: ModelParams) -> Tuple[float, float]:
        try:
            return MASS_WEIGHTS[params.graph]
        except KeyError:
            raise DomainError(
                "the mass decomposition is defined for the 𝒯 and tadpole graphs only",
                {"graph": params.graph.value},
            )

    def mass_theta1(self, params: ModelParams, z: float) -> float:
        """Θ₁ = μ₁(θ=2) + 2μ₂ on the 𝒯-graph, 2μ₁(θ=1/2) + μ₂ on the tadpole."""
        w1, w2 = self._weights(params)
        return w1 * self.mu1(params.p, z, params.theta) + w2 * self.mu2(params.p, z)

    def dmass_theta1_dz(self, params: ModelParams, z: float) -> float:
        """
        ∂Θ₁/∂z assembled from the closed forms of ∂μ₁/∂z and ∂μ₂/∂z.

        On the 𝒯-graph this is
            √2 Θ₁'(-3f(z) - f(1)) = -6z²√f(z) + 3f'(z) ∫ (t² - g/2)/√(f + 3f(z)) dt,
        on the tadpole
            √2 Θ₁'((3/4)f(z) - f(1)) = (3/4)z²√f(z) - (3/2)f'(z) ∫ (t² - g/2)/√(f - (3/4)f(z)) dt.
        """
        w1, w2 = self._weights(params)
        return w1 * self.dmu1_dz(params.p, z, params.theta) + w2 * self.dmu2_dz(params.p, z)

    # ------------------------------------------------------------------
    # Dependence on ℓ
    # ------------------------------------------------------------------

    def dz_dell(self, p: float, theta: float, ell: float) -> float:
        """∂z/∂ℓ = 1/(∂L/∂z) at z = z(p, ℓ); negative."""
        return 1.0 / self.dlength_dz(p, theta, self.solve_z(p, theta, ell))

    def dy_dell(self, p: float, theta: float, ell: float) -> float:
        """∂y/∂ℓ = 1/(φ'(y)·∂L/∂z); positive."""
        z = self.solve_z(p, theta, ell)
        y = soliton_inverse(p, z)
        return 1.0 / (soliton_deriv(p, y) * self.dlength_dz(p, theta, z))

    def theta1_of_ell(self, params: ModelParams, ell: float) -> float:
        return self.mass_theta1(params, self.solve_z(params.p, params.theta, ell))

    # ------------------------------------------------------------------
    # Assembly
    # ------------------------------------------------------------------

    def assemble(self, params: ModelParams, lambda_: float, z_hint: Optional[float] = None) -> GroundStateRecord:
        """
        Build the ground-state record at frequency λ.

        ∂Θ/∂λ = λ^{α-1}(αΘ₁ + (ℓ/2)(∂Θ₁/∂z)/(∂L/∂z)) with ℓ = √λ.

        Raises:
            DomainError: If λ <= 0 or the graph has no mass decomposition
            BracketFailure, NonConvergence: Propagated from the root solve and quadrature
        """
        if not lambda_ > 0.0:
            raise DomainError("lambda must be positive", {"lambda": lambda_})
        try:
            return self._assemble(params, lambda_, z_hint)
        except NumericsError:
            raise
        except (ArithmeticError, ValueError) as e:
            logger.error(f"Assembly failed at p={params.p}, λ={lambda_}: {e!r}")
            raise NonConvergence("ground-state assembly failed", {"p": params.p, "lambda": lambda_, "error": repr(e)})

    def _assemble(self, params: ModelParams, lambda_: float, z_hint: Optional[float]) -> GroundStateRecord:
        p, theta = params.p, params.theta
        ell = math.sqrt(lambda_)
        z = self.solve_z(p, theta, ell, z_hint=z_hint)
        y = soliton_inverse(p, z)
        _, degenerate = self._peak_gap(p, z)
        if degenerate:
            logger.warning(f"Peak-adjacent z at p={p}, λ={lambda_}; derivatives are leading-order")

        a = alpha(p)
        theta1 = self.mass_theta1(params, z)
        ratio = self.dmass_theta1_dz(params, z) / self.dlength_dz(p, theta, z)
        dtheta = lambda_ ** (a - 1.0) * (a * theta1 + 0.5 * ell * ratio)

        phase = PhaseState(
            z=z, y=y, level=HamiltonianLevel(value=(1.0 - theta * theta) * eval_f(p, z)), ell=ell
        )
        logger.debug(f"Assembled p={p}, graph={params.graph.value}, λ={lambda_}: z={z}, dΘ/dλ={dtheta}")
        return GroundStateRecord(
            params=params,
            lambda_=lambda_,
            phase=phase,
            alpha=a,
            theta1=theta1,
            theta=lambda_ ** a * theta1,
            dtheta_dlambda=dtheta,
            peak_asymptotic=degenerate,
        )

    def mass_bounds_constant(self, params: ModelParams, lambdas: Iterable[float]) -> float:
        """Smallest C with (1/C)λ^α <= Θ(p, λ) <= Cλ^α over the given frequencies."""
        scaled = [self.theta1_of_ell(params, math.sqrt(lam)) for lam in lambdas]
        if not scaled:
            raise DomainError("mass_bounds_constant needs at least one frequency")
        return max(max(scaled), 1.0 / min(scaled), 1.0)
