"""
Pydantic schemas for the scalar model and the singular integrals.
"""
import math
from enum import Enum
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


class GraphKind(str, Enum):
    """Graph selector: the 𝒯-graph, the tadpole graph, or a raw incidence index."""
    T_GRAPH = "t"
    TADPOLE = "tadpole"
    RAW_THETA = "raw"


GRAPH_THETA = {
    GraphKind.T_GRAPH: 2.0,
    GraphKind.TADPOLE: 0.5,
}


class Branch(str, Enum):
    """Monotone branches of f: (0, 1) and (1, ∞)."""
    LOWER = "lower"
    UPPER = "upper"


class ModelParams(BaseModel):
    """Nonlinearity exponent and graph; the single source of p and θ."""
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., gt=2, description="Nonlinearity exponent p > 2")
    graph: GraphKind = Field(GraphKind.T_GRAPH, description="Graph selector")
    raw_theta: Optional[float] = Field(None, gt=0, description="Incidence index for graph=raw")

    @model_validator(mode="after")
    def _check_theta(self) -> "ModelParams":
        if self.graph is GraphKind.RAW_THETA and self.raw_theta is None:
            raise ValueError("graph=raw requires raw_theta")
        if self.graph is not GraphKind.RAW_THETA and self.raw_theta is not None:
            raise ValueError("raw_theta is only accepted with graph=raw")
        return self

    @computed_field
    @property
    def theta(self) -> float:
        if self.graph is GraphKind.RAW_THETA:
            return float(self.raw_theta)
        return GRAPH_THETA[self.graph]

    @computed_field
    @property
    def peak(self) -> float:
        """φ(0) = (p/2)^{1/(p-2)}, the positive root of f."""
        return math.exp(math.log(self.p / 2.0) / (self.p - 2.0))

    @classmethod
    def t_graph(cls, p: float) -> "ModelParams":
        return cls(p=p, graph=GraphKind.T_GRAPH)

    @classmethod
    def tadpole(cls, p: float) -> "ModelParams":
        return cls(p=p, graph=GraphKind.TADPOLE)

    @classmethod
    def raw(cls, p: float, theta: float) -> "ModelParams":
        return cls(p=p, graph=GraphKind.RAW_THETA, raw_theta=theta)


class HamiltonianLevel(BaseModel):
    """First-integral constant (1-θ²)f(z) on the compact edge."""
    model_config = ConfigDict(frozen=True)

    value: float


class IntegralKind(str, Enum):
    """The two endpoint-singular integrals."""
    UPPER_EDGE = "upper_edge"
    SOLITON_TAIL = "soliton_tail"


class SingularIntegralSpec(BaseModel):
    """Inputs of one endpoint-singular integral."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: float = Field(..., gt=2)
    theta: float = Field(..., gt=0)
    z: float = Field(..., gt=0)
    numerator: Callable[[float], float] = Field(default=lambda t: 1.0, exclude=True)
    kind: IntegralKind = IntegralKind.UPPER_EDGE
