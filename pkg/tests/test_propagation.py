"""Tests for pathloss, gain, detection range and fading."""

import math

import numpy as np
import pytest

from src.core.exceptions import ModelDomainError
from src.models.network import NetworkConfig
from src.models.propagation import (
    FadingModel,
    LinkGeometry,
    PathlossModel,
    PathlossVariant,
)
from src.services.propagation import service as propagation

WAVELENGTH_M = 2.998e8 / 600e6

# Random TV-band links: 470-698 MHz, antennas between 1 m and 30 m.
_rng = np.random.default_rng(1411)
RANDOM_GEOMETRIES = [
    LinkGeometry(
        wavelength_m=2.998e8 / (f_mhz * 1e6), h_t_m=float(h_t), h_r_m=float(h_r)
    )
    for f_mhz, h_t, h_r in zip(
        _rng.uniform(470.0, 698.0, 50),
        _rng.uniform(1.0, 30.0, 50),
        _rng.uniform(1.0, 30.0, 50),
        strict=True,
    )
]


def dual_slope(h_t: float, h_r: float) -> PathlossModel:
    return PathlossModel(
        geometry=LinkGeometry(wavelength_m=WAVELENGTH_M, h_t_m=h_t, h_r_m=h_r)
    )


class TestBreakpoint:
    def test_ten_meter_aps(self):
        geom = LinkGeometry(wavelength_m=WAVELENGTH_M, h_t_m=10.0, h_r_m=10.0)
        assert propagation.breakpoint_distance(geom) == pytest.approx(800.4, rel=1e-3)

    def test_thirty_meter_aps(self):
        geom = LinkGeometry(wavelength_m=WAVELENGTH_M, h_t_m=30.0, h_r_m=30.0)
        assert propagation.breakpoint_distance(geom) == pytest.approx(7204.6, rel=1e-3)

    def test_negative_radicand_is_a_domain_error(self):
        geom = LinkGeometry(wavelength_m=WAVELENGTH_M, h_t_m=0.3, h_r_m=0.01)
        with pytest.raises(ModelDomainError):
            propagation.breakpoint_distance(geom)

    def test_heights_are_stored_ordered(self):
        geom = LinkGeometry(wavelength_m=WAVELENGTH_M, h_t_m=1.0, h_r_m=30.0)
        assert (geom.h_t_m, geom.h_r_m) == (30.0, 1.0)


class TestPathloss:
    def test_loss_at_breakpoint_is_los_plus_20db(self):
        model = dual_slope(10.0, 10.0)
        geom = model.geometry
        r_bp = propagation.breakpoint_distance(geom)
        expected = propagation.los_pathloss_db(geom) + 20.0
        below = propagation.pathloss_db(model, r_bp * (1 - 1e-9))
        above = propagation.pathloss_db(model, r_bp * (1 + 1e-9))
        assert below == pytest.approx(expected, abs=1e-6)
        assert above == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("geom", RANDOM_GEOMETRIES)
    def test_branches_meet_at_breakpoint(self, geom):
        model = PathlossModel(geometry=geom)
        r_bp = propagation.breakpoint_distance(geom)
        near = propagation.pathloss_db(model, np.nextafter(r_bp, 0.0))
        far = propagation.pathloss_db(model, r_bp)
        assert abs(far - near) <= 1e-9

    def test_slopes_either_side_of_breakpoint(self):
        model = dual_slope(10.0, 10.0)
        near = propagation.pathloss_db(model, 100.0) - propagation.pathloss_db(
            model, 10.0
        )
        far = propagation.pathloss_db(model, 20_000.0) - propagation.pathloss_db(
            model, 2_000.0
        )
        assert near == pytest.approx(25.0)
        assert far == pytest.approx(40.0)

    def test_loss_is_monotone(self):
        model = dual_slope(30.0, 1.0)
        losses = propagation.pathloss_db(model, np.geomspace(1.0, 1e5, 200))
        assert np.all(np.diff(losses) > 0)

    def test_hata_anchor_at_one_kilometer(self):
        model = PathlossModel(variant=PathlossVariant.SUBURBAN_HATA)
        assert propagation.pathloss_db(model, 1000.0) == pytest.approx(124.3)
        assert propagation.pathloss_db(model, 10_000.0) == pytest.approx(159.53)

    def test_distances_below_floor_are_clamped(self):
        model = dual_slope(10.0, 1.0)
        assert propagation.pathloss_db(model, 0.0) == propagation.pathloss_db(
            model, 1.0
        )
        evaluation = propagation.evaluate_pathloss(model, 0.25)
        assert evaluation.clamped
        assert evaluation.distance_m == 1.0
        assert not propagation.evaluate_pathloss(model, 50.0).clamped

    def test_gain_is_capped_at_one(self):
        assert propagation.db_to_gain(-5.0) == 1.0
        assert propagation.db_to_gain(30.0) == pytest.approx(1e-3)

    def test_config_selects_link_geometry(self):
        config = NetworkConfig(h_ap_m=30.0)
        assert propagation.ap_ap_pathloss(config).geometry.h_r_m == 30.0
        assert propagation.ap_client_pathloss(config).geometry.h_r_m == 1.0

    def test_far_field_exponent(self):
        assert propagation.far_field_exponent(dual_slope(10.0, 1.0)) == 4.0
        hata = PathlossModel(variant=PathlossVariant.SUBURBAN_HATA)
        assert propagation.far_field_exponent(hata) == pytest.approx(3.523)


class TestDetectionRange:
    def test_uplink_range_of_thirty_meter_ap(self):
        config = NetworkConfig(h_ap_m=30.0)
        d = propagation.detection_range(
            config.p_client_w,
            config.gamma_w,
            propagation.ap_client_pathloss(config),
            level=0.1,
        )
        assert d == pytest.approx(599.2, rel=2e-3)

    def test_range_hits_requested_level(self):
        model = dual_slope(10.0, 10.0)
        sigma = NetworkConfig().sigma_w
        d = propagation.detection_range(1.0, sigma, model, level=0.1)
        p = propagation.exceedance_probability(1.0, sigma, model, d)
        assert p == pytest.approx(0.1, abs=1e-4)

    def test_none_when_floor_already_misses(self):
        model = dual_slope(10.0, 1.0)
        assert propagation.detection_range(1e-12, 1.0, model, level=0.1) is None

    def test_level_must_be_a_probability(self):
        with pytest.raises(ValueError):
            propagation.detection_range(1.0, 1e-12, dual_slope(10.0, 1.0), level=1.5)


class TestFading:
    def test_sample_mean_matches_rate(self):
        rng = np.random.default_rng(7)
        samples = propagation.sample_fading(FadingModel(mu=2.0), rng, 200_000)
        assert samples.mean() == pytest.approx(0.5, rel=0.01)

    def test_exceedance_is_exponential_tail(self):
        model = dual_slope(10.0, 1.0)
        gain = propagation.path_gain(model, 300.0)
        p = propagation.exceedance_probability(1.0, 1e-10, model, 300.0, mu=1.5)
        assert p == pytest.approx(math.exp(-1.5 * 1e-10 / gain))
