"""Health check endpoints."""

from fastapi import APIRouter

from src.core.config import get_settings

router = APIRouter(tags=["Health"])


@router.get("/ping")
async def ping():
    """Simple liveness check - no dependencies."""
    return {"status": "ok"}


@router.get("/health")
async def health_check():
    """Report the execution settings the model runs with."""
    settings = get_settings()
    return {
        "status": "healthy",
        "workers": settings.workers,
        "q_cache_points": settings.q_cache_points,
    }
