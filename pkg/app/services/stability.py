"""
Stability Service.
Vakhitov–Kolokolov sign test, the degenerate frequency λ*, the p = 6
structure and the (λ, p) phase diagram.
"""
import logging
import math
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from app.core.config import Settings, settings
from app.core.exceptions import DomainError, NoSignChange, NumericsError
from app.schemas.ground_state import GroundStateRecord
from app.schemas.model import GraphKind, IntegralKind, ModelParams, SingularIntegralSpec
from app.schemas.stability import (
    Direction,
    PhaseDiagram,
    SignChange,
    StabilityVerdict,
    TransitionPattern,
    TransitionReport,
    VerdictKind,
)
from app.services.ground_state import GroundStateService
from app.services.scalar_model import eval_f, eval_f1, f_difference, peak
from app.services.singular_quadrature import checked_quad, integrate_upper_edge, upper_endpoint

logger = logging.getLogger(__name__)

P_CRITICAL = 6.0
THETA_T = 2.0

# logistic coordinate of z/φ(0) for the p = 6 turning-point scan
_TURNING_SIGMA = (-10.0, 12.0)
_TURNING_POINTS = 160


def _kernel(t: float) -> float:
    """(1 - t²)/(1 + t²)², which is t² - g(t)/2 up to the factor 1/3 at p = 6."""
    return (1.0 - t * t) / (1.0 + t * t) ** 2


def pinfty_sign_function(graph: GraphKind, xi: float) -> float:
    """
    The sign functions of the large-p limit.

    𝒯-graph: h(ξ) on (1, 2] with log argument (ξ+1)/(3(ξ-1)); h > 0 there and h(2) = 4/3.
    Tadpole: j(ξ) on [0, 1) with log argument (ξ+1)/(3(1-ξ)); j < 0 there and j(0) = ln(1/3).
    Both read ln(a) + 2ξ/(ξ²-1) - ξ ln²(a).
    """
    if graph is GraphKind.T_GRAPH:
        if not 1.0 < xi <= 2.0:
            raise DomainError("h(ξ) is defined for ξ in (1, 2]", {"xi": xi})
        log_arg = math.log((xi + 1.0) / (3.0 * (xi - 1.0)))
    elif graph is GraphKind.TADPOLE:
        if not 0.0 <= xi < 1.0:
            raise DomainError("j(ξ) is defined for ξ in [0, 1)", {"xi": xi})
        log_arg = math.log((xi + 1.0) / (3.0 * (1.0 - xi)))
    else:
        raise DomainError("sign functions exist for the 𝒯 and tadpole graphs only", {"graph": graph.value})
    return log_arg + 2.0 * xi / (xi * xi - 1.0) - xi * log_arg * log_arg


def _sign_runs(signs: Sequence[int], min_points: int) -> List[Tuple[int, int, int]]:
    """
    Collapse a sign sequence into (sign, first index, last index) runs.

    Zeros are transparent. Runs shorter than min_points are dropped and
    their same-sign neighbours merged.
    """
    runs: List[List[int]] = []
    for index, sign in enumerate(signs):
        if sign == 0:
            continue
        if runs and runs[-1][0] == sign:
            runs[-1][2] = index
            runs[-1][3] += 1
        else:
            runs.append([sign, index, index, 1])
    kept: List[List[int]] = []
    for run in runs:
        if run[3] < min_points:
            continue
        if kept and kept[-1][0] == run[0]:
            kept[-1][2] = run[2]
        else:
            kept.append(run)
    return [(run[0], run[1], run[2]) for run in kept]


def _pattern(signs: Sequence[int]) -> TransitionPattern:
    if len(signs) <= 1:
        return TransitionPattern.MONOTONE
    if len(signs) == 2:
        return TransitionPattern.SINGLE_SWITCH
    if list(signs) == [1, -1, 1]:
        return TransitionPattern.SUS
    if list(signs) == [-1, 1, -1]:
        return TransitionPattern.USU
    return TransitionPattern.OTHER


def _diagram_row(payload) -> Tuple[int, float, List[StabilityVerdict]]:
    """Pool worker: classify one p-row, warm-starting each root from its left neighbour."""
    index, config, graph, p, lambdas = payload
    service = StabilityService(config)
    params = ModelParams(p=p, graph=graph)
    try:
        lam_star = service.lambda_star(p, params.theta)
    except (NumericsError, ArithmeticError, ValueError) as e:
        logger.warning(f"λ* failed at p={p}: {e}")
        lam_star = math.nan

    cells: List[StabilityVerdict] = []
    z_hint: Optional[float] = None
    for lam in lambdas:
        try:
            verdict, record = service._classify(params, lam, lam_star, z_hint)
            z_hint = record.phase.z
        except NumericsError as e:
            logger.warning(f"Cell (p={p}, λ={lam}) recorded as inconclusive: {e}")
            verdict = StabilityVerdict(
                kind=VerdictKind.INCONCLUSIVE,
                dtheta_dlambda=math.nan,
                lambda_star_distance=abs(lam - lam_star),
                diagnostic=str(e),
            )
            z_hint = None
        cells.append(verdict)
    logger.debug(f"Diagram row {index} (p={p}) done")
    return index, lam_star, cells


class StabilityService:
    """Service for stability verdicts and transition searches."""

    def __init__(self, config: Settings = settings):
        self.config = config
        self.ground_state = GroundStateService(config)

    def lambda_star(self, p: float, theta: float) -> float:
        """λ* = L(p, 1)², the frequency excluded by the nondegeneracy argument."""
        return self.ground_state.length_L(p, theta, 1.0) ** 2

    def _classify(
        self, params: ModelParams, lambda_: float, lam_star: float, z_hint: Optional[float] = None
    ) -> Tuple[StabilityVerdict, GroundStateRecord]:
        record = self.ground_state.assemble(params, lambda_, z_hint=z_hint)
        d = record.dtheta_dlambda
        distance = abs(lambda_ - lam_star)
        eps_sign = self.config.EPS_SIGN * max(1.0, abs(record.theta) / lambda_)

        diagnostic = None
        if distance <= self.config.DELTA_STAR * lam_star:
            kind = VerdictKind.NEAR_DEGENERATE
            diagnostic = f"within {self.config.DELTA_STAR:g}·λ* of λ* = {lam_star:.17g}"
        elif record.peak_asymptotic:
            kind = VerdictKind.INCONCLUSIVE
            diagnostic = "z within the peak-degenerate gap; ∂Θ₁/∂z is leading-order only"
        elif d > eps_sign:
            kind = VerdictKind.STABLE
        elif d < -eps_sign:
            kind = VerdictKind.UNSTABLE
        else:
            kind = VerdictKind.INCONCLUSIVE
            diagnostic = f"|dΘ/dλ| = {abs(d):.3e} below ε_sign = {eps_sign:.3e}"
        verdict = StabilityVerdict(
            kind=kind, dtheta_dlambda=d, lambda_star_distance=distance, diagnostic=diagnostic
        )
        return verdict, record

    def classify(self, params: ModelParams, lambda_: float) -> StabilityVerdict:
        """
        Vakhitov–Kolokolov verdict at (p, λ).

        Stable when ∂Θ/∂λ > ε_sign, unstable when ∂Θ/∂λ < -ε_sign, and
        near-degenerate inside the δ_star window around λ* whatever the sign.
        """
        _, verdict = self.classify_state(params, lambda_)
        return verdict

    def classify_state(self, params: ModelParams, lambda_: float) -> Tuple[GroundStateRecord, StabilityVerdict]:
        """The assembled record together with its verdict, from a single assembly."""
        verdict, record = self._classify(params, lambda_, self.lambda_star(params.p, params.theta))
        return record, verdict

    # ------------------------------------------------------------------
    # p = 6
    # ------------------------------------------------------------------

    def p6_turning_z(self, graph: GraphKind) -> float:
        """
        The unique sign change of z ↦ ∂Θ₁/∂z at p = 6.

        Raises:
            NoSignChange: If the scan shows a constant sign
        """
        params = ModelParams(p=P_CRITICAL, graph=graph)
        top = peak(P_CRITICAL)

        def derivative(sigma: float) -> float:
            return self.ground_state.dmass_theta1_dz(params, top * float(special.expit(sigma)))

        sigmas = np.linspace(*_TURNING_SIGMA, _TURNING_POINTS)
        values = [derivative(s) for s in sigmas]
        crossings = [i for i in range(len(values) - 1) if values[i] * values[i + 1] < 0.0]
        if not crossings:
            raise NoSignChange("∂Θ₁/∂z keeps one sign at p = 6", {"graph": graph.value})
        if len(crossings) > 1:
            logger.warning(f"{len(crossings)} sign changes of ∂Θ₁/∂z at p = 6 ({graph.value}); using the first")
        i = crossings[0]
        sigma = optimize.brentq(derivative, sigmas[i], sigmas[i + 1], xtol=self.config.TOL_Z)
        return top * float(special.expit(sigma))

    def find_p6_turning_point(self, graph: GraphKind) -> float:
        """The frequency λ₀ (𝒯) or λ₁ (tadpole) where ∂Θ/∂λ changes sign at p = 6."""
        params = ModelParams(p=P_CRITICAL, graph=graph)
        z0 = self.p6_turning_z(graph)
        lam = self.ground_state.length_L(P_CRITICAL, params.theta, z0) ** 2
        logger.info(f"p = 6 turning point for {graph.value}: z = {z0}, λ = {lam}")
        return lam

    @staticmethod
    def _check_unit_interval(z: float) -> None:
        if not 0.0 < z < 1.0:
            raise DomainError("F and G are defined on (0, 1)", {"z": z})

    def eval_F(self, z: float) -> float:
        """F(z) = ∫_z^{f₂⁻¹(-3f(z))} (1-t²)/(1+t²)² dt/√(f(t)+3f(z)) at p = 6."""
        self._check_unit_interval(z)
        spec = SingularIntegralSpec(
            p=P_CRITICAL, theta=THETA_T, z=z, numerator=_kernel, kind=IntegralKind.UPPER_EDGE
        )
        return integrate_upper_edge(spec, tol=self.config.QUAD_TOL)

    def eval_G(self, z: float) -> float:
        """G(z) = 6z²√f(z)/f'(z) at p = 6."""
        self._check_unit_interval(z)
        return 6.0 * z * z * math.sqrt(eval_f(P_CRITICAL, z)) / eval_f1(P_CRITICAL, z)

    def eval_F1(self, z: float) -> float:
        """The part of F over [z, 1], where the integrand is bounded."""
        self._check_unit_interval(z)
        offset = 3.0 * eval_f(P_CRITICAL, z)

        def integrand(t: float) -> float:
            return _kernel(t) / math.sqrt(eval_f(P_CRITICAL, t) + offset)

        return checked_quad(integrand, z, 1.0, self.config.QUAD_TOL, {"z": z, "piece": "F1"})

    def eval_F2(self, z: float) -> float:
        """The part of F over [1, T] in t = 1 + s·I_z with I_z = T - 1; the (1-s)^(-1/2) weight goes to QUADPACK."""
        self._check_unit_interval(z)
        T = upper_endpoint(P_CRITICAL, THETA_T, z)
        width = T - 1.0
        endpoint = 1.0 / math.sqrt(width * abs(eval_f1(P_CRITICAL, T)))

        def regular_part(s: float) -> float:
            t = 1.0 + s * width
            radicand = f_difference(P_CRITICAL, t, T)
            if radicand <= 0.0:
                return width * _kernel(T) * endpoint
            return width * _kernel(t) * math.sqrt(1.0 - s) / math.sqrt(radicand)

        return checked_quad(
            regular_part, 0.0, 1.0, self.config.QUAD_TOL, {"z": z, "piece": "F2"},
            weight="alg", wvar=(0.0, -0.5),
        )

    # ------------------------------------------------------------------
    # Transition search
    # ------------------------------------------------------------------

    def _refine(self, params: ModelParams, lo: float, hi: float, sign_lo: int) -> float:
        """Bisect the sign of ∂Θ/∂λ in log λ."""
        log_lo, log_hi = math.log(lo), math.log(hi)
        for _ in range(self.config.REFINE_MAX_ITER):
            if math.expm1(log_hi - log_lo) <= self.config.REFINE_RTOL:
                break
            mid = 0.5 * (log_lo + log_hi)
            try:
                d = self.ground_state.assemble(params, math.exp(mid)).dtheta_dlambda
            except NumericsError as e:
                logger.warning(f"Refinement stopped at λ = {math.exp(mid)}: {e}")
                break
            if (d > 0.0) == (sign_lo > 0):
                log_lo = mid
            else:
                log_hi = mid
        return math.exp(0.5 * (log_lo + log_hi))

    def detect_transitions(
        self,
        params: ModelParams,
        lambda_range: Optional[Tuple[float, float]] = None,
        n_scan: Optional[int] = None,
    ) -> TransitionReport:
        """
        Scan λ ↦ ∂Θ/∂λ on a log grid and classify the sign pattern.

        Near-degenerate and inconclusive scan points are recorded but never
        count as sign changes.
        """
        lmin, lmax = lambda_range or (self.config.SCAN_LAMBDA_MIN, self.config.SCAN_LAMBDA_MAX)
        n = n_scan or self.config.SCAN_POINTS
        if not 0.0 < lmin < lmax:
            raise DomainError("lambda_range must satisfy 0 < lmin < lmax", {"lmin": lmin, "lmax": lmax})
        if n < 16:
            raise DomainError("n_scan must be at least 16", {"n_scan": n})

        logger.info(f"Scanning p={params.p}, graph={params.graph.value} over λ ∈ [{lmin}, {lmax}] ({n} points)")
        lambdas = np.geomspace(lmin, lmax, n)
        lam_star = self.lambda_star(params.p, params.theta)
        signs: List[int] = []
        near_degenerate: List[float] = []
        z_hint: Optional[float] = None
        for lam in lambdas:
            try:
                verdict, record = self._classify(params, float(lam), lam_star, z_hint)
                z_hint = record.phase.z
            except NumericsError as e:
                logger.warning(f"Scan point λ={lam} skipped: {e}")
                signs.append(0)
                z_hint = None
                continue
            if verdict.kind is VerdictKind.NEAR_DEGENERATE:
                near_degenerate.append(float(lam))
                signs.append(0)
            elif verdict.kind is VerdictKind.STABLE:
                signs.append(1)
            elif verdict.kind is VerdictKind.UNSTABLE:
                signs.append(-1)
            else:
                signs.append(0)

        runs = _sign_runs(signs, self.config.MIN_REGIME_POINTS)
        changes: List[SignChange] = []
        for left, right in zip(runs, runs[1:]):
            lam = self._refine(params, float(lambdas[left[2]]), float(lambdas[right[1]]), left[0])
            direction = Direction.TO_STABLE if left[0] < 0 else Direction.TO_UNSTABLE
            logger.info(f"Sign change at λ = {lam:.9g} ({direction.value})")
            changes.append(SignChange(lambda_=lam, direction=direction))

        return TransitionReport(
            p=params.p,
            graph=params.graph,
            theta=params.theta,
            lambda_range=(lmin, lmax),
            n_scan=n,
            sign_changes=changes,
            pattern=_pattern([run[0] for run in runs]),
            near_degenerate=near_degenerate,
        )

    # ------------------------------------------------------------------
    # Phase diagram
    # ------------------------------------------------------------------

    def default_grids(self) -> Tuple[List[float], List[float]]:
        """(λ grid, p grid) from the configured diagram ranges."""
        lambdas = np.geomspace(self.config.DIAGRAM_LAMBDA_MIN, self.config.DIAGRAM_LAMBDA_MAX, self.config.DIAGRAM_NX)
        ps = np.linspace(self.config.DIAGRAM_P_MIN, self.config.DIAGRAM_P_MAX, self.config.DIAGRAM_NY)
        return [float(x) for x in lambdas], [float(x) for x in ps]

    def phase_diagram(
        self,
        graph: GraphKind,
        lambda_grid: Optional[Sequence[float]] = None,
        p_grid: Optional[Sequence[float]] = None,
        workers: int = 1,
    ) -> PhaseDiagram:
        """
        Classify every (p, λ) cell; rows are distributed to a process pool.

        Per-cell failures become inconclusive verdicts. The grid is assembled
        by row index, so the result does not depend on scheduling.
        """
        default_lambdas, default_ps = self.default_grids()
        lambdas = [float(x) for x in (lambda_grid if lambda_grid is not None else default_lambdas)]
        ps = [float(x) for x in (p_grid if p_grid is not None else default_ps)]
        if not lambdas or not ps:
            raise DomainError("phase_diagram needs nonempty grids")
        if min(ps) <= 2.0 or min(lambdas) <= 0.0:
            raise DomainError("grids need p > 2 and λ > 0", {"p_min": min(ps), "lambda_min": min(lambdas)})

        payloads = [(i, self.config, graph, p, lambdas) for i, p in enumerate(ps)]
        rows: List[Optional[List[StabilityVerdict]]] = [None] * len(ps)
        stars: List[float] = [math.nan] * len(ps)
        logger.info(f"Phase diagram for {graph.value}: {len(ps)}×{len(lambdas)} cells, {workers} worker(s)")
        if workers > 1:
            with Pool(processes=workers) as pool:
                for index, lam_star, cells in pool.imap_unordered(_diagram_row, payloads):
                    rows[index], stars[index] = cells, lam_star
        else:
            for payload in payloads:
                index, lam_star, cells = _diagram_row(payload)
                rows[index], stars[index] = cells, lam_star
        logger.info("Phase diagram complete")

        return PhaseDiagram(graph=graph, p_grid=ps, lambda_grid=lambdas, lambda_star=stars, cells=rows)
