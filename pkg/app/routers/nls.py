from typing import Optional

from fastapi import APIRouter, HTTPException, Query, status
from fastapi.concurrency import run_in_threadpool

from app.core.exceptions import DomainError, NumericsError
from app.schemas.asymptotics import AsymptoteCheck, Regime
from app.schemas.model import GraphKind, ModelParams
from app.schemas.stability import TransitionReport
from app.services.asymptotics import AsymptoticsService
from app.services.stability import StabilityService
import logging

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/nls", tags=["NLS Ground States"])

# Service instances
stability_service = StabilityService()
asymptotics_service = AsymptoticsService()


def _graph_params(graph: GraphKind, p: float) -> ModelParams:
    if graph is GraphKind.RAW_THETA:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail="graph must be 't' or 'tadpole'"
        )
    return ModelParams(p=p, graph=graph)


def _raise_http(e: NumericsError) -> None:
    if isinstance(e, DomainError):
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    logger.error(f"Computation failed: {e}")
    raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(e))


@router.get("/state", summary="Ground-state record and stability verdict")
async def get_state(
    graph: GraphKind = Query(GraphKind.T_GRAPH),
    p: float = Query(..., gt=2),
    lambda_: float = Query(..., gt=0, alias="lambda"),
):
    """
    Assemble the ground-state at (p, λ) and classify it.

    - **graph**: `t` or `tadpole`
    - **p**: nonlinearity exponent, p > 2
    - **lambda**: frequency, λ > 0
    """
    params = _graph_params(graph, p)
    try:
        record, verdict = await run_in_threadpool(stability_service.classify_state, params, lambda_)
    except NumericsError as e:
        _raise_http(e)
    return {
        "record": record.model_dump(by_alias=True),
        "verdict": verdict.model_dump(),
    }


@router.get("/transitions", response_model=TransitionReport, summary="Stability transitions in λ")
async def get_transitions(
    graph: GraphKind = Query(GraphKind.T_GRAPH),
    p: float = Query(..., gt=2),
    lmin: Optional[float] = Query(None, gt=0),
    lmax: Optional[float] = Query(None, gt=0),
    scan: Optional[int] = Query(None, ge=16),
):
    """Scan λ ↦ ∂Θ/∂λ and report the sign pattern (USU, SUS, ...)."""
    params = _graph_params(graph, p)
    config = stability_service.config
    lambda_range = (lmin or config.SCAN_LAMBDA_MIN, lmax or config.SCAN_LAMBDA_MAX)
    try:
        return await run_in_threadpool(stability_service.detect_transitions, params, lambda_range, scan)
    except NumericsError as e:
        _raise_http(e)


@router.get("/asymptotics", response_model=AsymptoteCheck, response_model_by_alias=True,
            summary="Asymptotic ratio tests")
async def get_asymptotics(
    regime: Regime = Query(...),
    graph: GraphKind = Query(GraphKind.T_GRAPH),
    p: Optional[float] = Query(None, gt=2),
):
    """Run one asymptotic regime; `p` applies to the λ-side regimes (default 4)."""
    _graph_params(graph, p or 4.0)
    try:
        return await run_in_threadpool(asymptotics_service.run, regime, graph, p)
    except NumericsError as e:
        _raise_http(e)


@router.get("/lambda-star", summary="Degenerate frequency λ* = L(p, 1)²")
async def get_lambda_star(
    graph: GraphKind = Query(GraphKind.T_GRAPH),
    p: float = Query(..., gt=2),
):
    params = _graph_params(graph, p)
    try:
        value = await run_in_threadpool(stability_service.lambda_star, p, params.theta)
    except NumericsError as e:
        _raise_http(e)
    return {"p": p, "theta": params.theta, "lambda_star": value}
