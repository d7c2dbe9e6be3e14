"""
Pydantic schemas for the shooting oracle and reconstructed profiles.
"""
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.model import ModelParams


class ShotTrajectory(BaseModel):
    """Compact-edge trajectory from (z, θ√(2f(z))) to the first zero of u'."""
    model_config = ConfigDict(frozen=True)

    p: float
    theta: float
    z: float
    samples: List[Tuple[float, float, float]] = Field(..., description="(x, u, u') triples")
    ell_hit: float
    mass_edge: float
    hamiltonian_drift: float


class EdgeProfile(BaseModel):
    """Samples along one edge; x = 0 is the vertex (the loop returns to it at x = 2)."""
    model_config = ConfigDict(frozen=True)

    edge: str
    x: List[float]
    u: List[float]
    du: List[float]


class GroundStateProfile(BaseModel):
    """Sampled ground-state on the unit-length graph at frequency λ."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    params: ModelParams
    lambda_: float = Field(..., alias="lambda")
    vertex_value: float
    edges: List[EdgeProfile]
    mass: float = Field(..., description="∫u² over the sampled graph")


class OracleRow(BaseModel):
    """Closed form against shooting for one (p, θ, z)."""
    model_config = ConfigDict(frozen=True)

    p: float
    theta: float
    z: float
    length_closed: float
    length_shot: float
    length_rel_err: float
    theta1_closed: float
    theta1_shot: float
    theta1_rel_err: float
    hamiltonian_drift: float
