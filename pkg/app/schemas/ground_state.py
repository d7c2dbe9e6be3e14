"""
Pydantic schemas for ground-state records.
"""
from pydantic import BaseModel, ConfigDict, Field

from app.schemas.model import HamiltonianLevel, ModelParams


class PhaseState(BaseModel):
    """Phase-plane coordinates pinning down a ground-state edge by edge."""
    model_config = ConfigDict(frozen=True)

    z: float = Field(..., gt=0, description="Vertex value, φ(y) = z")
    y: float = Field(..., ge=0, description="Soliton shift on the half-lines")
    level: HamiltonianLevel
    ell: float = Field(..., gt=0, description="Compact-edge half-length, L(p, z) = ell")


class GroundStateRecord(BaseModel):
    """Assembled ground-state quantities for one (p, λ)."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    params: ModelParams
    lambda_: float = Field(..., gt=0, alias="lambda", description="Frequency λ = ell²")
    phase: PhaseState
    alpha: float = Field(..., description="Mass-scaling exponent (6-p)/(2(p-2))")
    theta1: float = Field(..., gt=0, description="Θ₁ = ‖u_ℓ‖²")
    theta: float = Field(..., gt=0, description="Θ(p, λ) = λ^α Θ₁")
    dtheta_dlambda: float
    peak_asymptotic: bool = Field(False, description="Derivatives from leading-order peak forms")
