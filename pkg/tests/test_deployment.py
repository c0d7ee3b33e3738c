"""Tests for the nearest-AP and serving-distance laws."""

import math

import numpy as np
import pytest

from src.core.exceptions import ModelDomainError
from src.core.quadrature import integrate_adaptive
from src.models.network import DeploymentModel, NetworkConfig
from src.services.deployment import service as deployment_service
from src.services.uplink import service as uplink


class TestNearestDistance:
    def test_pdf_integrates_to_one(self, deployment):
        limit = deployment_service.nearest_distance_cutoff(deployment)
        total = integrate_adaptive(
            lambda r: float(deployment_service.nearest_ap_distance_pdf(r, deployment)),
            0.0,
            limit,
            what="nearest-AP pdf mass",
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_pdf_is_rayleigh(self, deployment):
        lam = deployment.density_per_m2
        r = 400.0
        expected = 2 * math.pi * lam * r * math.exp(-lam * math.pi * r**2)
        assert deployment_service.nearest_ap_distance_pdf(r, deployment) == (
            pytest.approx(expected)
        )

    def test_pdf_vanishes_for_negative_distance(self, deployment):
        pdf = deployment_service.nearest_ap_distance_pdf([-1.0, 0.0], deployment)
        assert np.all(pdf == 0.0)

    def test_cutoff_needs_density(self):
        with pytest.raises(ModelDomainError):
            deployment_service.nearest_distance_cutoff(
                DeploymentModel(density_per_km2=0)
            )


class TestUplinkMarginal:
    def test_always_viable_uplink_gives_one(self, deployment):
        assert deployment_service.uplink_marginal(deployment, None) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_tall_sparse_network(self, tall_config):
        model = DeploymentModel.from_config(tall_config)
        marginal = deployment_service.uplink_marginal(
            model, uplink.uplink_model(tall_config)
        )
        assert 0.3 < marginal < 0.6

    def test_zero_density_gives_zero(self, link):
        empty = DeploymentModel(density_per_km2=0.0)
        assert deployment_service.uplink_marginal(empty, link) == 0.0

    def test_marginal_grows_with_density(self, link):
        sparse = deployment_service.uplink_marginal(
            DeploymentModel(density_per_km2=0.1), link
        )
        dense = deployment_service.uplink_marginal(
            DeploymentModel(density_per_km2=10.0), link
        )
        assert dense > sparse


class TestServingDistance:
    def test_conditional_pdf_suppresses_far_clients(self, tall_config):
        model = DeploymentModel.from_config(tall_config)
        link = uplink.uplink_model(tall_config)
        conditional = deployment_service.conditional_distance_pdf(800.0, model, link)
        unconditional = deployment_service.nearest_ap_distance_pdf(800.0, model)
        assert conditional < unconditional

    def test_conditional_pdf_needs_positive_marginal(self, deployment, link):
        with pytest.raises(ModelDomainError):
            deployment_service.conditional_distance_pdf(
                100.0, deployment, link, marginal=0.0
            )

    def test_weights_are_normalized(self, deployment, link):
        nodes, weights = deployment_service.serving_distance_nodes(deployment, link)
        assert nodes.shape == weights.shape
        assert weights.sum() == pytest.approx(1.0)
        assert np.all(weights >= 0)

    def test_expectation_of_constant(self, deployment, link):
        _, weights = deployment_service.serving_distance_nodes(deployment, link)
        values = np.full(weights.shape, 3.0)
        assert deployment_service.expected_over_serving_distance(
            values, weights
        ) == pytest.approx(3.0)

    def test_mean_distance_without_uplink_limit(self, deployment):
        nodes, weights = deployment_service.serving_distance_nodes(deployment, None)
        mean = deployment_service.expected_over_serving_distance(nodes, weights)
        expected = 0.5 / math.sqrt(deployment.density_per_m2)
        assert mean == pytest.approx(expected, rel=1e-4)

    def test_no_association_is_a_domain_error(self):
        config = NetworkConfig(density_per_km2=0.0)
        with pytest.raises(ModelDomainError):
            deployment_service.serving_distance_nodes(
                DeploymentModel.from_config(config), uplink.uplink_model(config)
            )
