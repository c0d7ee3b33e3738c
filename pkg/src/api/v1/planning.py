"""Network planning endpoints."""

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from src.models.base import ERROR_RESPONSES, ApiResponse
from src.models.planning import PlanRequest, PlanResult
from src.services.planner import service as planner_service

router = APIRouter(prefix="/plan", tags=["Planning"])


@router.post(
    "", response_model=ApiResponse[PlanResult], responses=ERROR_RESPONSES
)
async def plan(request: PlanRequest):
    """Channels needed to serve the demand on the requested network."""
    result = await run_in_threadpool(
        planner_service.plan,
        request.demand,
        request.network,
        request.per_channel_ase_mbps_km2,
    )
    fingerprint = planner_service.plan_fingerprint(request.demand, request.network)
    return ApiResponse(data=result, meta={"fingerprint": fingerprint})
