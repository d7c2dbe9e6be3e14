"""
Pydantic schemas for asymptote checks.
"""
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Regime(str, Enum):
    LAMBDA_SMALL = "lambda-small"
    LAMBDA_LARGE = "lambda-large"
    P_NEAR_TWO = "p2"
    P_LARGE = "pinf"


class AsymptoteAssertion(BaseModel):
    """One banded check: lower <= value <= upper (a missing bound is open)."""
    model_config = ConfigDict(frozen=True)

    name: str
    value: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    passed: bool


class AsymptoteCheck(BaseModel):
    """Ratio tests of one asymptotic regime against the exact pipeline."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    regime: Regime
    graph: str
    probe_points: List[Dict[str, float]]
    ratios: List[float]
    assertions: List[AsymptoteAssertion]
    passed: bool = Field(..., alias="pass")
