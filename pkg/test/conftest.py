"""
Shared fixtures for the service tests.
"""
import pytest

from app.core.config import Settings
from app.schemas.model import ModelParams
from app.services.asymptotics import AsymptoticsService
from app.services.ground_state import GroundStateService
from app.services.ode_oracle import OracleService
from app.services.stability import StabilityService


@pytest.fixture(scope="session")
def config():
    return Settings()


@pytest.fixture(scope="session")
def ground_state(config):
    return GroundStateService(config)


@pytest.fixture(scope="session")
def stability(config):
    return StabilityService(config)


@pytest.fixture(scope="session")
def asymptotics(config):
    return AsymptoticsService(config)


@pytest.fixture(scope="session")
def oracle(config):
    return OracleService(config)


@pytest.fixture(params=["t", "tadpole"])
def graph_params(request):
    """Factory for ModelParams on each graph."""
    def make(p: float) -> ModelParams:
        return ModelParams.t_graph(p) if request.param == "t" else ModelParams.tadpole(p)
    return make
