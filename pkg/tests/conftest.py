"""Shared fixtures for the model, service and API tests."""

from pathlib import Path

import pytest

from src.models.analysis import ContentionModel, SinrModel, UplinkModel
from src.models.network import DeploymentModel, NetworkConfig
from src.services.csma import service as csma
from src.services.sinr import service as sinr
from src.services.uplink import service as uplink

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def config() -> NetworkConfig:
    """Default network: 1 W APs at 10 m, one AP per km²."""
    return NetworkConfig()


@pytest.fixture
def deployment(config: NetworkConfig) -> DeploymentModel:
    return DeploymentModel.from_config(config)


@pytest.fixture
def contention(config: NetworkConfig) -> ContentionModel:
    return csma.contention_model(config)


@pytest.fixture
def link(config: NetworkConfig) -> UplinkModel:
    return uplink.uplink_model(config)


@pytest.fixture
def sinr_model(config: NetworkConfig) -> SinrModel:
    return sinr.sinr_model(config)


@pytest.fixture
def tall_config() -> NetworkConfig:
    """Maximum-height APs used for the coverage and starvation figures."""
    return NetworkConfig(h_ap_m=30.0)
