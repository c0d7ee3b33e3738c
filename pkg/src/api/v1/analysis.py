"""Analytic model endpoints."""

import logging

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from src.models.analysis import AnalysisReport
from src.models.base import ERROR_RESPONSES, ApiResponse
from src.models.network import NetworkConfig
from src.services.sinr import service as sinr_service

router = APIRouter(prefix="/analysis", tags=["Analysis"])
logger = logging.getLogger(__name__)


@router.post(
    "", response_model=ApiResponse[AnalysisReport], responses=ERROR_RESPONSES
)
async def analyze(config: NetworkConfig):
    """Single-configuration metrics: p_T, coverage, starvation, throughput, ASE."""
    report = await run_in_threadpool(sinr_service.analyze, config)
    logger.info("Analysis served", extra={"fingerprint": report.fingerprint})
    return ApiResponse(data=report)
