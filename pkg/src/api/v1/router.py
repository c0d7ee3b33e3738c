"""Main API v1 router that aggregates all endpoint routers."""

from fastapi import APIRouter

from src.api.v1 import analysis, health, planning

router = APIRouter(prefix="/api/v1")

router.include_router(health.router)
router.include_router(analysis.router)
router.include_router(planning.router)
