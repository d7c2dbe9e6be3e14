"""
Shooting Oracle Service.
Integrates -u'' + u = u^{p-1} along the compact edge and the soliton on the
half-lines, independently of the closed-form phase-plane formulas.
"""
import logging
import math
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from app.core.config import Settings, settings
from app.core.exceptions import DomainError, EventNotFound
from app.schemas.model import GraphKind, ModelParams
from app.schemas.oracle import EdgeProfile, GroundStateProfile, OracleRow, ShotTrajectory
from app.services.ground_state import MASS_WEIGHTS, GroundStateService
from app.services.scalar_model import eval_f, peak, soliton, soliton_deriv, soliton_inverse
from app.services.singular_quadrature import checked_quad

logger = logging.getLogger(__name__)

HALFLINE_TAIL = 1e-12
EDGE_NAMES = {
    GraphKind.T_GRAPH: ("h1", "h2", "e1"),
    GraphKind.TADPOLE: ("h1", "loop"),
}


def _soliton_cutoff(p: float, y: float = 0.0) -> float:
    """X with ∫_{y+X}^∞ φ² dx below HALFLINE_TAIL, from φ² <= φ(0)²·2^{4/(p-2)}·e^{-2x}."""
    log_bound = 2.0 * math.log(peak(p)) + 4.0 * math.log(2.0) / (p - 2.0) - math.log(2.0)
    return max(1.0, 0.5 * (log_bound - math.log(HALFLINE_TAIL)) - y)


def halfline_mass(p: float, y: float, tol: Optional[float] = None) -> float:
    """∫_0^∞ φ(x+y)² dx by direct quadrature of the sech-power formula."""
    if y < 0.0:
        raise DomainError("y must be nonnegative", {"y": y})
    tol = tol or settings.QUAD_TOL
    span = _soliton_cutoff(p, y)
    return checked_quad(lambda x: soliton(p, x + y) ** 2, 0.0, span, tol, {"p": p, "y": y})


def _oracle_row(payload) -> Tuple[int, OracleRow]:
    index, config, params, z = payload
    return index, OracleService(config).oracle_row(params, z)


class OracleService:
    """Service for shooting trajectories and sampled profiles."""

    def __init__(self, config: Settings = settings):
        self.config = config
        self.ground_state = GroundStateService(config)

    def shoot_compact_edge(
        self,
        p: float,
        theta: float,
        z: float,
        rtol: Optional[float] = None,
        atol: Optional[float] = None,
    ) -> ShotTrajectory:
        """
        Shoot from (u, u') = (z, θ√(2f(z))) to the first zero of u'.

        The state carries the running mass m' = u², so mass_edge comes out of
        the same integrator. The turning point is located by the event finder
        of scipy's DOP853 on its dense output.

        Raises:
            DomainError: If z is outside (0, φ(0)) or θ <= 0
            EventNotFound: If u' does not vanish before x_max = 10(1 + |ln z|)
        """
        top = peak(p)
        if not 0.0 < z < top or not theta > 0.0:
            raise DomainError("shooting needs z in (0, φ(0)) and θ > 0", {"p": p, "theta": theta, "z": z})
        rtol = rtol or self.config.ODE_RTOL
        atol = atol or self.config.ODE_ATOL
        level = (1.0 - theta * theta) * eval_f(p, z)
        x_max = 10.0 * (1.0 + abs(math.log(z)))

        def rhs(x, state):
            u, v, _ = state
            return [v, u - abs(u) ** (p - 1.0), u * u]

        def turning(x, state):
            return state[1]

        turning.terminal = True
        turning.direction = -1

        y0 = [z, theta * math.sqrt(2.0 * eval_f(p, z)), 0.0]
        sol = integrate.solve_ivp(
            rhs, (0.0, x_max), y0,
            method="DOP853", rtol=rtol, atol=atol,
            events=turning, dense_output=True,
        )
        if not sol.success or len(sol.t_events[0]) == 0:
            logger.error(f"No turning point before x_max={x_max} (p={p}, θ={theta}, z={z}): {sol.message}")
            raise EventNotFound(
                "u' did not vanish on the shooting interval",
                {"p": p, "theta": theta, "z": z, "x_max": x_max},
            )

        ell_hit = float(sol.t_events[0][0])
        mass_edge = float(sol.y_events[0][0][2])
        xs = np.linspace(0.0, ell_hit, self.config.ODE_SAMPLES)
        states = sol.sol(xs)
        drift = max(
            abs(-0.5 * v * v + eval_f(p, u) - level) for u, v in zip(states[0], states[1])
        )
        samples = [(float(x), float(u), float(v)) for x, u, v in zip(xs, states[0], states[1])]
        return ShotTrajectory(
            p=p, theta=theta, z=z, samples=samples,
            ell_hit=ell_hit, mass_edge=mass_edge, hamiltonian_drift=float(drift),
        )

    def shot_theta1(self, params: ModelParams, z: float, shot: Optional[ShotTrajectory] = None) -> float:
        """Θ₁ from the shot edge mass plus soliton tails by direct quadrature."""
        w1, w2 = MASS_WEIGHTS[params.graph]
        shot = shot or self.shoot_compact_edge(params.p, params.theta, z)
        tail = halfline_mass(params.p, soliton_inverse(params.p, z), tol=self.config.QUAD_TOL)
        return w1 * shot.mass_edge + w2 * tail

    def oracle_row(self, params: ModelParams, z: float) -> OracleRow:
        p, theta = params.p, params.theta
        shot = self.shoot_compact_edge(p, theta, z)
        length = self.ground_state.length_L(p, theta, z)
        theta1 = self.ground_state.mass_theta1(params, z)
        theta1_shot = self.shot_theta1(params, z, shot)
        return OracleRow(
            p=p,
            theta=theta,
            z=z,
            length_closed=length,
            length_shot=shot.ell_hit,
            length_rel_err=abs(shot.ell_hit - length) / length,
            theta1_closed=theta1,
            theta1_shot=theta1_shot,
            theta1_rel_err=abs(theta1_shot - theta1) / theta1,
            hamiltonian_drift=shot.hamiltonian_drift,
        )

    def oracle_table(
        self,
        params: ModelParams,
        z_values: Optional[Sequence[float]] = None,
        workers: int = 1,
    ) -> List[OracleRow]:
        """
        Closed form against shooting over a z-grid.

        Args:
            params: Exponent and graph (𝒯 or tadpole)
            z_values: Vertex values; defaults to 10 points spanning (0.05·φ(0), 0.95·φ(0))
            workers: Process-pool size; 1 runs in this process

        Returns:
            One OracleRow per z, in input order
        """
        if params.graph not in MASS_WEIGHTS:
            raise DomainError("the oracle table needs the 𝒯 or tadpole graph", {"graph": params.graph.value})
        if z_values is None:
            top = peak(params.p)
            z_values = np.linspace(0.05 * top, 0.95 * top, 10)
        payloads = [(i, self.config, params, float(z)) for i, z in enumerate(z_values)]
        rows: List[Optional[OracleRow]] = [None] * len(payloads)
        logger.info(f"Oracle table p={params.p}, graph={params.graph.value}: {len(payloads)} rows")
        if workers > 1:
            with Pool(processes=workers) as pool:
                for index, row in pool.imap_unordered(_oracle_row, payloads):
                    rows[index] = row
        else:
            for payload in payloads:
                index, row = _oracle_row(payload)
                rows[index] = row
        return rows

    def reconstruct_profile(self, params: ModelParams, lambda_: float) -> GroundStateProfile:
        """
        Sample the ground-state on the unit-length graph at frequency λ.

        u(x) = λ^{1/(p-2)} v(√λ x), where v solves the problem on the graph
        whose compact edge has half-length ℓ = √λ. The tadpole loop is the
        shot half mirrored about its midpoint.
        """
        if not lambda_ > 0.0:
            raise DomainError("lambda must be positive", {"lambda": lambda_})
        if params.graph not in EDGE_NAMES:
            raise DomainError("profiles exist for the 𝒯 and tadpole graphs", {"graph": params.graph.value})
        p, theta = params.p, params.theta
        root = math.sqrt(lambda_)
        scale = lambda_ ** (1.0 / (p - 2.0))
        z = self.ground_state.solve_z(p, theta, root)
        y = soliton_inverse(p, z)
        shot = self.shoot_compact_edge(p, theta, z)

        span = _soliton_cutoff(p, y) / root
        xs = np.linspace(0.0, span, self.config.ODE_SAMPLES)
        half_u = [scale * soliton(p, root * x + y) for x in xs]
        half_du = [scale * root * soliton_deriv(p, root * x + y) for x in xs]

        # shot samples live on [0, ell_hit]; ell_hit = ℓ up to the oracle tolerance
        edge_x = np.array([s[0] for s in shot.samples]) / shot.ell_hit
        edge_u = scale * np.array([s[1] for s in shot.samples])
        edge_du = scale * root * np.array([s[2] for s in shot.samples])

        edges: List[EdgeProfile] = []
        names = EDGE_NAMES[params.graph]
        if params.graph is GraphKind.T_GRAPH:
            for name in names[:2]:
                edges.append(EdgeProfile(edge=name, x=list(xs), u=half_u, du=half_du))
            edges.append(EdgeProfile(edge=names[2], x=list(edge_x), u=list(edge_u), du=list(edge_du)))
        else:
            edges.append(EdgeProfile(edge=names[0], x=list(xs), u=half_u, du=half_du))
            loop_x = np.concatenate([edge_x, 2.0 - edge_x[::-1][1:]])
            loop_u = np.concatenate([edge_u, edge_u[::-1][1:]])
            loop_du = np.concatenate([edge_du, -edge_du[::-1][1:]])
            edges.append(EdgeProfile(edge=names[1], x=list(loop_x), u=list(loop_u), du=list(loop_du)))

        mass = sum(integrate.simpson(np.square(e.u), x=e.x) for e in edges)
        logger.debug(f"Profile p={p}, λ={lambda_}: vertex value {scale * z}, mass {mass}")
        return GroundStateProfile(
            params=params,
            lambda_=lambda_,
            vertex_value=scale * z,
            edges=edges,
            mass=float(mass),
        )
