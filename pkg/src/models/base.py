"""Base models for API request/response."""

from typing import Any, Generic, TypeVar

from pydantic import BaseModel

T = TypeVar("T")


class ApiResponse(BaseModel, Generic[T]):
    """Standard API response wrapper."""

    success: bool = True
    data: T
    meta: dict[str, Any] | None = None


class ApiErrorDetail(BaseModel):
    """Error detail structure."""

    code: str
    message: str
    details: Any = None


class ApiErrorResponse(BaseModel):
    """Standard API error response."""

    success: bool = False
    error: ApiErrorDetail


ERROR_RESPONSES: dict[int | str, dict[str, Any]] = {
    400: {"model": ApiErrorResponse},
    422: {"model": ApiErrorResponse},
    500: {"model": ApiErrorResponse},
}
