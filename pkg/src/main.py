"""FastAPI application entry point."""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from src.api.v1.router import router as api_router
from src.core.config import get_settings
from src.core.exceptions import (
    ModelDomainError,
    NumericalError,
    SuperWifiException,
    ValidationError,
)
from src.models.base import ApiErrorDetail, ApiErrorResponse

logging.basicConfig(
    level=get_settings().log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager for startup and shutdown events."""
    settings = get_settings()
    logger.info(f"Starting Super Wi-Fi API in {settings.app_env} mode")
    yield
    logger.info("Super Wi-Fi API stopped")


def _error(status_code: int, exc: SuperWifiException) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content=ApiErrorResponse(
            error=ApiErrorDetail(
                code=exc.code, message=exc.message, details=exc.details
            )
        ).model_dump(mode="json"),
    )


def create_app() -> FastAPI:
    """Create and configure the FastAPI application."""
    settings = get_settings()

    app = FastAPI(
        title="Super Wi-Fi API",
        description="CSMA/CA performance model for TV white space networks",
        version="0.1.0",
        docs_url="/docs" if settings.is_development else None,
        redoc_url="/redoc" if settings.is_development else None,
        lifespan=lifespan,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"] if settings.is_development else [],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.include_router(api_router)

    @app.exception_handler(ValidationError)
    async def validation_handler(request: Request, exc: ValidationError):
        return _error(status.HTTP_400_BAD_REQUEST, exc)

    @app.exception_handler(ModelDomainError)
    async def domain_handler(request: Request, exc: ModelDomainError):
        return _error(status.HTTP_422_UNPROCESSABLE_ENTITY, exc)

    @app.exception_handler(NumericalError)
    async def numerical_handler(request: Request, exc: NumericalError):
        logger.error(
            "Numerical failure", extra={"code": exc.code, "details": exc.details}
        )
        return _error(status.HTTP_500_INTERNAL_SERVER_ERROR, exc)

    @app.exception_handler(SuperWifiException)
    async def superwifi_exception_handler(request: Request, exc: SuperWifiException):
        return _error(status.HTTP_500_INTERNAL_SERVER_ERROR, exc)

    @app.get("/")
    async def root():
        return {
            "name": "Super Wi-Fi API",
            "version": "0.1.0",
            "status": "running",
        }

    return app


app = create_app()
