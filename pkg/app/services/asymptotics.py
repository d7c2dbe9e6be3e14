"""
Asymptotics Service.
Limit forms for λ → 0, λ → ∞, p → 2⁺ and p → ∞, checked as ratio tests
against the exact pipeline.
"""
import logging
import math
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from scipy import optimize

from app.core.config import Settings, settings
from app.core.exceptions import DomainError
from app.schemas.asymptotics import AsymptoteAssertion, AsymptoteCheck, Regime
from app.schemas.model import GRAPH_THETA, GraphKind, ModelParams
from app.services.ground_state import MASS_WEIGHTS, GroundStateService
from app.services.scalar_model import eval_f1, peak, soliton_mass
from app.services.singular_quadrature import checked_quad

logger = logging.getLogger(__name__)

SQRT_E = math.sqrt(math.e)
SQRT2 = math.sqrt(2.0)

P2_PROBES = (2.05, 2.02, 2.01)
PINF_PROBES = (20.0, 50.0, 100.0)
DEFAULT_WINDOW = (0.5, 2.0)


# ---------------------------------------------------------------------------
# p → 2⁺
# ---------------------------------------------------------------------------

def f_infinity(z: float) -> float:
    """f_∞(z) = z²(1 - 2 ln z)/4, the limit of f/(p-2)."""
    if not z > 0.0:
        raise DomainError("f_∞ needs z > 0", {"z": z})
    return 0.25 * z * z * (1.0 - 2.0 * math.log(z))


def f_inf_derivatives(z: float) -> Tuple[float, float]:
    """(f_∞'(z), f_∞''(z)) = (-z ln z, -ln z - 1)."""
    if not z > 0.0:
        raise DomainError("f_∞ needs z > 0", {"z": z})
    log_z = math.log(z)
    return -z * log_z, -log_z - 1.0


def f_inf_branch_inverse(v: float) -> float:
    """Inverse of f_∞ on [1, ∞), where f_∞ decreases from 1/4."""
    if v > 0.25:
        raise DomainError("f_∞ does not exceed 1/4 on [1, ∞)", {"v": v})
    if v == 0.25:
        return 1.0
    hi = 2.0
    while f_infinity(hi) > v:
        hi *= 2.0
    return optimize.brentq(lambda t: f_infinity(t) - v, 1.0, hi, xtol=1e-300, rtol=4.0 * sys.float_info.epsilon)


def limit_length_p2(theta: float, z: float, tol: Optional[float] = None) -> float:
    """
    lim √(p-2)·L(p, z) = (1/√2) ∫_z^{T_∞} dt / √(f_∞(t) - (1-θ²)f_∞(z)),
    with T_∞ the inverse of f_∞ on [1, ∞) at (1-θ²)f_∞(z).
    """
    if not 0.0 < z < SQRT_E:
        raise DomainError("the p → 2⁺ limit of L is taken for z in (0, √e)", {"z": z})
    tol = tol or settings.QUAD_TOL
    level = (1.0 - theta * theta) * f_infinity(z)
    T = f_inf_branch_inverse(level)
    slope = abs(f_inf_derivatives(T)[0])
    context = {"theta": theta, "z": z, "limit": "p2"}

    def near_top(s: float) -> float:
        t = T - s * s
        radicand = f_infinity(t) - level
        if radicand <= 0.0:
            return 2.0 / math.sqrt(slope)
        return 2.0 * s / math.sqrt(radicand)

    def log_scale(u: float) -> float:
        t = math.exp(u)
        return t / math.sqrt(f_infinity(t) - level)

    if z >= 1.0:
        raw = checked_quad(near_top, 0.0, math.sqrt(T - z), tol, context)
    else:
        raw = checked_quad(log_scale, math.log(z), 0.0, 0.5 * tol, context)
        raw += checked_quad(near_top, 0.0, math.sqrt(T - 1.0), 0.5 * tol, context)
    return raw / SQRT2


# ---------------------------------------------------------------------------
# p → ∞
# ---------------------------------------------------------------------------

def G_sigma(theta: float, sigma: float) -> float:
    """G(σ) = ½ ln(((√(1+σ)+1)(θ-1)) / ((√(1+σ)-1)(θ+1))), equal to ∫_z^1 dt/√(t²+σ) for σ = -(1-θ²)z²."""
    if not 1.0 + sigma > 0.0 or sigma == 0.0:
        raise DomainError("G(σ) needs 1 + σ > 0 and σ ≠ 0", {"sigma": sigma})
    xi = math.sqrt(1.0 + sigma)
    argument = (xi + 1.0) * (theta - 1.0) / ((xi - 1.0) * (theta + 1.0))
    if not argument > 0.0:
        raise DomainError("the logarithm in G(σ) needs a positive argument", {"theta": theta, "sigma": sigma})
    return 0.5 * math.log(argument)


def pinfty_mu_limits(theta: float, z: float) -> Dict[str, float]:
    """The p → ∞ limits of L, ∂L/∂z, μ₁, ∂μ₁/∂z, μ₂ and ∂μ₂/∂z at z in (0, 1)."""
    if not 0.0 < z < 1.0:
        raise DomainError("the p → ∞ limits are taken for z in (0, 1)", {"z": z})
    sigma = -(1.0 - theta * theta) * z * z
    xi = math.sqrt(1.0 + sigma)
    g = G_sigma(theta, sigma)
    return {
        "sigma": sigma,
        "L": g,
        "dL_dz": -1.0 / (z * xi),
        "mu1": 0.5 * xi - 0.5 * theta * z * z - 0.5 * sigma * g,
        "dmu1_dz": -theta * z - g * sigma / z + sigma / (z * xi),
        "mu2": 0.5 * z * z,
        "dmu2_dz": z,
    }


def _graph_theta(graph: GraphKind) -> float:
    if graph not in GRAPH_THETA:
        raise DomainError("the mass decomposition is defined for the 𝒯 and tadpole graphs only", {"graph": graph.value})
    return GRAPH_THETA[graph]


def pinfty_theta1_limit(graph: GraphKind, z: float) -> Tuple[float, float]:
    """(Θ₁, ∂Θ₁/∂z) as p → ∞: K(√(1+σ) - σG) and 2K(σ/(z√(1+σ)) - Gσ/z), K = 1/2 (𝒯) or 1 (tadpole)."""
    theta = _graph_theta(graph)
    w1, w2 = MASS_WEIGHTS[graph]
    limits = pinfty_mu_limits(theta, z)
    theta1 = w1 * limits["mu1"] + w2 * limits["mu2"]
    dtheta1 = w1 * limits["dmu1_dz"] + w2 * limits["dmu2_dz"]
    return theta1, dtheta1


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def _band(name: str, value: float, lower: Optional[float] = None, upper: Optional[float] = None) -> AsymptoteAssertion:
    passed = math.isfinite(value)
    if lower is not None:
        passed = passed and value >= lower
    if upper is not None:
        passed = passed and value <= upper
    return AsymptoteAssertion(name=name, value=value, lower=lower, upper=upper, passed=passed)


def _improving(name: str, ratios: Sequence[float], slack: float = 1e-8) -> AsymptoteAssertion:
    """Distances |r - 1| must not grow along the probe sequence."""
    distances = [abs(r - 1.0) for r in ratios]
    growth = max((b - a for a, b in zip(distances, distances[1:])), default=0.0)
    return AsymptoteAssertion(name=name, value=growth, upper=slack, passed=growth <= slack)


def _expected_sign(p: float) -> int:
    return 1 if p < 6.0 else -1


class AsymptoticsService:
    """Service for the asymptotic ratio tests."""

    def __init__(self, config: Settings = settings):
        self.config = config
        self.ground_state = GroundStateService(config)

    def _check(self, regime: Regime, graph: GraphKind, probes, ratios, assertions) -> AsymptoteCheck:
        check = AsymptoteCheck(
            regime=regime,
            graph=graph.value,
            probe_points=probes,
            ratios=ratios,
            assertions=assertions,
            passed=all(a.passed for a in assertions),
        )
        failed = [a.name for a in assertions if not a.passed]
        if failed:
            logger.warning(f"{regime.value} ({graph.value}): failed {failed}")
        else:
            logger.info(f"{regime.value} ({graph.value}): all {len(assertions)} assertions passed")
        return check

    def check_lambda_asymptotes(self, params: ModelParams, side: Regime) -> AsymptoteCheck:
        """
        Ratio tests near z → 0⁺ (λ → ∞) or z → φ(0)⁻ (λ → 0).

        Raises:
            DomainError: At p = 6, where Θ does not scale with λ
        """
        p, theta = params.p, params.theta
        if abs(p - 6.0) <= 1e-12:
            raise DomainError("the λ-rate checks exclude p = 6")
        gs = self.ground_state
        w1, w2 = MASS_WEIGHTS[params.graph]
        norm = soliton_mass(p)
        sign = _expected_sign(p)
        probes: List[Dict[str, float]] = []
        ratios: List[float] = []
        assertions: List[AsymptoteAssertion] = []

        if side is Regime.LAMBDA_LARGE:
            # compact edge carries μ₁ → ½‖φ‖², each soliton tail vanishes
            mass_limit = 0.5 * w1 * norm
            log_ratios, mass_ratios = [], []
            for z in (1e-3, 1e-4, 1e-5, 1e-6):
                ell = gs.length_L(p, theta, z)
                log_ratio = ell / abs(math.log(z))
                mass_ratio = gs.mass_theta1(params, z) / mass_limit
                probes.append({"z": z, "lambda": ell * ell})
                log_ratios.append(log_ratio)
                mass_ratios.append(mass_ratio)
                ratios.extend([log_ratio, mass_ratio])
            reference = log_ratios[0]
            for z, r in zip((1e-4, 1e-5, 1e-6), log_ratios[1:]):
                assertions.append(_band(f"L/|ln z| at z={z:g}", r, 0.5 * reference, 2.0 * reference))
            assertions.append(_band("Θ₁/limit at z=1e-3", mass_ratios[0], 0.98, 1.02))
            assertions.append(_improving("Θ₁ ratio improves as z → 0", mass_ratios))
            sign_lambdas = (1e3,)
        else:
            top = peak(p)
            slope = abs(eval_f1(p, top))
            # compact edge shrinks, the tails carry the whole mass
            mass_limit = w2 * 0.5 * norm
            dl_ratios, dmu_ratios = [], []
            for gap in (1e-2, 1e-3, 1e-4):
                z = top - gap
                root = math.sqrt(gap)
                length_ratio = gs.length_L(p, theta, z) / (SQRT2 * theta * root / math.sqrt(slope))
                dl_ratio = gs.dlength_dz(p, theta, z) / (-theta / (math.sqrt(2.0 * slope) * root))
                dmu_ratio = gs.dmu1_dz(p, z, theta) / (-theta * top * top / (math.sqrt(2.0 * slope) * root))
                mass_ratio = gs.mass_theta1(params, z) / mass_limit
                probes.append({"z": z, "gap": gap})
                dl_ratios.append(dl_ratio)
                dmu_ratios.append(dmu_ratio)
                ratios.extend([length_ratio, dl_ratio, dmu_ratio, mass_ratio])
            assertions.append(_band("L/asymptote at gap=1e-4", ratios[-4], 0.8, 1.25))
            assertions.append(_band("∂L/∂z/asymptote at gap=1e-4", dl_ratios[-1], 0.8, 1.25))
            assertions.append(_band("∂μ₁/∂z/asymptote at gap=1e-4", dmu_ratios[-1], 0.8, 1.25))
            assertions.append(_band("Θ₁/limit at gap=1e-4", ratios[-1], 0.95, 1.05))
            assertions.append(_improving("∂L/∂z ratio improves as z → φ(0)", dl_ratios))
            sign_lambdas = (1e-3,)

        for lam in sign_lambdas:
            d = gs.assemble(params, lam).dtheta_dlambda
            probes.append({"p": p, "lambda": lam})
            assertions.append(
                _band(f"sign(∂Θ/∂λ)·{sign:+d} at λ={lam:g}", sign * d, lower=0.0)
            )
        return self._check(side, params.graph, probes, ratios, assertions)

    def check_p2_regime(
        self, graph: GraphKind, lambda_window: Tuple[float, float] = DEFAULT_WINDOW
    ) -> AsymptoteCheck:
        """z → √e, √(p-2)·L → its limit and ∂Θ/∂λ ~ (p-2)^{-3/2} > 0 as p → 2⁺."""
        lo, hi = lambda_window
        if not 0.0 < lo <= hi:
            raise DomainError("lambda_window must satisfy 0 < lo <= hi", {"lo": lo, "hi": hi})
        gs = self.ground_state
        theta = _graph_theta(graph)
        z_ref = 1.0
        length_limit = limit_length_p2(theta, z_ref, tol=self.config.QUAD_TOL)
        probes: List[Dict[str, float]] = []
        ratios: List[float] = []
        assertions: List[AsymptoteAssertion] = []
        distances, length_ratios, slopes = [], [], []

        for p in P2_PROBES:
            params = ModelParams(p=p, graph=graph)
            record = gs.assemble(params, 1.0)
            distances.append(abs(record.phase.z - SQRT_E))
            slopes.append(record.dtheta_dlambda)
            length_ratio = math.sqrt(p - 2.0) * gs.length_L(p, theta, z_ref) / length_limit
            length_ratios.append(length_ratio)
            ratios.append(length_ratio)
            probes.append({"p": p, "lambda": 1.0, "z": record.phase.z})
            for lam in sorted({lo, hi}):
                d = gs.assemble(params, lam).dtheta_dlambda
                assertions.append(_band(f"∂Θ/∂λ > 0 at p={p:g}, λ={lam:g}", d, lower=0.0))

        for k in range(len(P2_PROBES) - 1):
            p_a, p_b = P2_PROBES[k], P2_PROBES[k + 1]
            assertions.append(
                _band(f"|z-√e| decreases from p={p_a:g} to p={p_b:g}", distances[k] - distances[k + 1], lower=0.0)
            )
            predicted = ((p_b - 2.0) / (p_a - 2.0)) ** -1.5
            growth = (slopes[k + 1] / slopes[k]) / predicted
            ratios.append(growth)
            assertions.append(_band(f"(p-2)^(-3/2) growth p={p_a:g}→{p_b:g}", growth, 0.5, 2.0))
        assertions.append(_band("√(p-2)·L/limit at p=2.01", length_ratios[-1], 0.9, 1.1))
        assertions.append(_improving("√(p-2)·L ratio improves as p → 2", length_ratios))
        return self._check(Regime.P_NEAR_TWO, graph, probes, ratios, assertions)

    def check_pinfty_regime(
        self, graph: GraphKind, lambda_window: Tuple[float, float] = DEFAULT_WINDOW
    ) -> AsymptoteCheck:
        """L → G(σ), Θ₁ → K(√(1+σ) - σG(σ)), z(p, λ) ∈ [δ, 1-δ] and ∂Θ/∂λ < 0 as p → ∞."""
        lo, hi = lambda_window
        if not 0.0 < lo <= hi:
            raise DomainError("lambda_window must satisfy 0 < lo <= hi", {"lo": lo, "hi": hi})
        gs = self.ground_state
        theta = _graph_theta(graph)
        z_ref = 0.5
        limits = pinfty_mu_limits(theta, z_ref)
        theta1_limit, _ = pinfty_theta1_limit(graph, z_ref)
        probes: List[Dict[str, float]] = []
        ratios: List[float] = []
        assertions: List[AsymptoteAssertion] = []
        length_ratios, mass_ratios = [], []

        for p in PINF_PROBES:
            params = ModelParams(p=p, graph=graph)
            length_ratio = gs.length_L(p, theta, z_ref) / limits["L"]
            mass_ratio = gs.mass_theta1(params, z_ref) / theta1_limit
            length_ratios.append(length_ratio)
            mass_ratios.append(mass_ratio)
            ratios.extend([length_ratio, mass_ratio])
            probes.append({"p": p, "z": z_ref})
            for lam in sorted({lo, math.sqrt(lo * hi), hi}):
                record = gs.assemble(params, lam)
                probes.append({"p": p, "lambda": lam, "z": record.phase.z})
                assertions.append(_band(f"z in [0.01, 0.99] at p={p:g}, λ={lam:g}", record.phase.z, 0.01, 0.99))
                assertions.append(_band(f"∂Θ/∂λ < 0 at p={p:g}, λ={lam:g}", record.dtheta_dlambda, upper=0.0))

        assertions.append(_band("L/G(σ) at p=100", length_ratios[-1], 0.95, 1.05))
        assertions.append(_band("Θ₁/limit at p=100", mass_ratios[-1], 0.9, 1.1))
        assertions.append(_improving("L/G(σ) improves as p → ∞", length_ratios))
        return self._check(Regime.P_LARGE, graph, probes, ratios, assertions)

    def run(self, regime: Regime, graph: GraphKind, p: Optional[float] = None) -> AsymptoteCheck:
        """Dispatch one regime; λ-side checks default to p = 4 below the critical exponent."""
        if regime is Regime.P_NEAR_TWO:
            return self.check_p2_regime(graph)
        if regime is Regime.P_LARGE:
            return self.check_pinfty_regime(graph)
        return self.check_lambda_asymptotes(ModelParams(p=p or 4.0, graph=graph), regime)
