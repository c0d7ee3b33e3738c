"""Custom exceptions for the application."""

from typing import Any


class SuperWifiException(Exception):
    """Base exception for the Super Wi-Fi model."""

    def __init__(
        self, message: str, code: str = "SUPERWIFI_ERROR", details: Any = None
    ):
        self.message = message
        self.code = code
        self.details = details
        super().__init__(message)


class ValidationError(SuperWifiException):
    """Invalid input, configuration or data file."""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message, code="VALIDATION_ERROR", details=details)


class RegulatoryError(ValidationError):
    """A parameter exceeds the FCC TVWS caps without an explicit override."""

    def __init__(self, parameter: str, value: float, cap: float, unit: str):
        super().__init__(
            f"{parameter}={value:g} {unit} exceeds the FCC TVWS maximum of "
            f"{cap:g} {unit}; set override_regulatory to allow it",
            details={"parameter": parameter, "value": value, "cap": cap},
        )
        self.code = "REGULATORY_ERROR"


class ModelDomainError(SuperWifiException):
    """Inputs fall outside the domain where the analytic model is defined."""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message, code="MODEL_DOMAIN_ERROR", details=details)


class NumericalError(SuperWifiException):
    """Quadrature or root finding did not reach the requested tolerance."""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message, code="NUMERICAL_ERROR", details=details)


class RejectionLimitError(NumericalError):
    """Conditioned sampling rejected too many consecutive draws."""

    def __init__(self, what: str, rejections: int, details: Any = None):
        super().__init__(
            f"{what}: {rejections} consecutive rejections",
            details={"rejections": rejections, **(details or {})},
        )
        self.code = "REJECTION_LIMIT"
