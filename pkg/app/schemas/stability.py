"""
Pydantic schemas for stability verdicts, transition reports and phase diagrams.
"""
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.model import GraphKind


class VerdictKind(str, Enum):
    """Outcome of the Vakhitov–Kolokolov sign test."""
    STABLE = "stable"
    UNSTABLE = "unstable"
    NEAR_DEGENERATE = "near_degenerate"
    INCONCLUSIVE = "inconclusive"


class StabilityVerdict(BaseModel):
    """Classification of one (p, λ) point."""
    model_config = ConfigDict(frozen=True)

    kind: VerdictKind
    dtheta_dlambda: float
    lambda_star_distance: float = Field(..., description="|λ - λ*|")
    diagnostic: Optional[str] = None


class Direction(str, Enum):
    """Sign of ∂Θ/∂λ before and after a crossing, read left to right in λ."""
    TO_STABLE = "unstable_to_stable"
    TO_UNSTABLE = "stable_to_unstable"


class SignChange(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(..., alias="lambda")
    direction: Direction


class TransitionPattern(str, Enum):
    MONOTONE = "monotone"
    SINGLE_SWITCH = "single_switch"
    SUS = "SUS"
    USU = "USU"
    OTHER = "other"


class TransitionReport(BaseModel):
    """Sign changes of λ ↦ ∂Θ/∂λ and their pattern."""
    model_config = ConfigDict(frozen=True)

    p: float
    graph: GraphKind
    theta: float
    lambda_range: Tuple[float, float]
    n_scan: int
    sign_changes: List[SignChange] = Field(default_factory=list)
    pattern: TransitionPattern
    near_degenerate: List[float] = Field(
        default_factory=list, description="Scan frequencies skipped inside the λ* window"
    )


class PhaseDiagram(BaseModel):
    """Grid of verdicts; rows follow p_grid, columns follow lambda_grid."""
    model_config = ConfigDict(frozen=True)

    graph: GraphKind
    p_grid: List[float]
    lambda_grid: List[float]
    lambda_star: List[float]
    cells: List[List[StabilityVerdict]]
