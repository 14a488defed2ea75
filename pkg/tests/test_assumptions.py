"""Tests for the sampled assumption verifiers"""

import dataclasses
import logging

import numpy as np
import pytest

from truncem.assumptions import (
    SegmentPairSampler,
    ViolationReport,
    check_initial_holder,
    check_khasminskii_inequality,
    check_polynomial_growth,
)
from truncem.errors import ConfigurationError
from truncem.model import AssumptionConstants, make_cubic_volatility_model, make_linear_delay_model

CUBIC_CONSTANTS = AssumptionConstants(q=27.0, alpha0=20.0, alpha1=53.0, alpha2=52.0, c1=200.0)
LINEAR_CONSTANTS = AssumptionConstants(q=4.0, alpha0=3.0, alpha1=1.0, alpha2=0.5, rhat=0.0)


class IdenticalPairSampler(SegmentPairSampler):
    """Yields psi == psi_bar; every inequality holds with equality"""

    def pairs(self, model, count):
        for psi, _ in super().pairs(model, count):
            yield psi, psi


@pytest.mark.unit
class TestSampler:
    def test_reproducible(self, cubic_model):
        sampler = SegmentPairSampler(seed=3)
        first = [(a.nodes.copy(), b.nodes.copy()) for a, b in sampler.pairs(cubic_model, 5)]
        second = [(a.nodes.copy(), b.nodes.copy()) for a, b in sampler.pairs(cubic_model, 5)]
        for (a1, b1), (a2, b2) in zip(first, second):
            np.testing.assert_array_equal(a1, a2)
            np.testing.assert_array_equal(b1, b2)

    def test_uniform_bounds(self, cubic_model):
        for psi, bar in SegmentPairSampler(bound=2.0, nodes=8).pairs(cubic_model, 50):
            assert psi.m == 8
            assert psi.tau == pytest.approx(cubic_model.tau)
            assert np.max(np.abs(psi.nodes)) <= 2.0
            assert np.max(np.abs(bar.nodes)) <= 2.0

    def test_shared_history_spike(self, cubic_model):
        sampler = SegmentPairSampler(bound=4.0, nodes=8, mode="shared-history")
        for psi, bar in sampler.pairs(cubic_model, 50):
            np.testing.assert_array_equal(psi.nodes[:-1], bar.nodes[:-1])
            x, y = psi.nodes[-1, 0], bar.nodes[-1, 0]
            assert 2.0 <= abs(x) <= 4.0
            assert np.sign(y) == -np.sign(x)
            assert 0.95 * abs(x) <= abs(y) <= abs(x)

    def test_spike_node_choice(self, cubic_model):
        sampler = SegmentPairSampler(nodes=8, mode="shared-history", spike_node=0)
        psi, bar = next(sampler.pairs(cubic_model, 1))
        np.testing.assert_array_equal(psi.nodes[1:], bar.nodes[1:])
        assert psi.nodes[0, 0] != bar.nodes[0, 0]

    @pytest.mark.parametrize(
        "kwargs",
        [dict(mode="gaussian"), dict(bound=0.0), dict(nodes=0), dict(seed=-1), dict(spike_node=17)],
    )
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ConfigurationError):
            SegmentPairSampler(**kwargs)


@pytest.mark.unit
class TestKhasminskii:
    @pytest.mark.parametrize("mode", ["uniform", "shared-history"])
    def test_cubic_constants_hold(self, cubic_model, mode):
        report = check_khasminskii_inequality(
            cubic_model, CUBIC_CONSTANTS, SegmentPairSampler(mode=mode), 2000
        )
        assert isinstance(report, ViolationReport)
        assert report.samples == 2000
        assert report.passed

    def test_weak_cubic_dissipation_fails(self):
        model = make_cubic_volatility_model(3.0, 10.0, 2.0)
        report = check_khasminskii_inequality(
            model, CUBIC_CONSTANTS, SegmentPairSampler(mode="shared-history"), 500
        )
        assert report.violations > 0
        assert report.worst_margin > 0
        assert 0 <= report.worst_index < 500

    def test_linear_drift_without_delay_holds(self):
        model = make_linear_delay_model(-1.0, 0.0, 0.1, 0.0)
        for mode in ("uniform", "shared-history"):
            report = check_khasminskii_inequality(model, LINEAR_CONSTANTS, SegmentPairSampler(mode=mode), 1000)
            assert report.passed

    def test_point_delay_in_diffusion_is_caught(self):
        model = make_linear_delay_model(-1.0, 0.0, 0.1, 0.5)
        constants = AssumptionConstants(q=4.0, alpha0=16.6, alpha1=1.0, alpha2=0.5, rhat=0.0)
        at_zero = SegmentPairSampler(mode="shared-history")
        at_lag = SegmentPairSampler(mode="shared-history", spike_node=0)
        assert check_khasminskii_inequality(model, constants, at_zero, 500).passed
        assert not check_khasminskii_inequality(model, constants, at_lag, 500).passed

    def test_identical_pairs_never_violate(self, cubic_model):
        report = check_khasminskii_inequality(cubic_model, CUBIC_CONSTANTS, IdenticalPairSampler(), 200)
        assert report.violations == 0
        assert report.worst_margin == pytest.approx(0.0, abs=1e-9)

    def test_count_must_be_positive(self, cubic_model):
        with pytest.raises(ConfigurationError):
            check_khasminskii_inequality(cubic_model, CUBIC_CONSTANTS, SegmentPairSampler(), 0)

    def test_violations_are_logged(self, caplog):
        model = make_cubic_volatility_model(3.0, 10.0, 2.0)
        with caplog.at_level(logging.WARNING, logger="truncem.assumptions"):
            check_khasminskii_inequality(model, CUBIC_CONSTANTS, SegmentPairSampler(mode="shared-history"), 100)
        assert "khasminskii" in caplog.text


@pytest.mark.unit
class TestPolynomialGrowth:
    @pytest.mark.parametrize("mode", ["uniform", "shared-history"])
    def test_cubic_model(self, cubic_model, mode):
        report = check_polynomial_growth(cubic_model, CUBIC_CONSTANTS, SegmentPairSampler(mode=mode), 2000)
        assert report.passed

    def test_small_constant_fails(self, cubic_model):
        constants = AssumptionConstants(q=27.0, alpha0=20.0, alpha1=53.0, alpha2=52.0, c1=0.01)
        report = check_polynomial_growth(cubic_model, constants, SegmentPairSampler(), 200)
        assert report.violations > 0

    def test_identical_pairs(self, cubic_model):
        assert check_polynomial_growth(cubic_model, CUBIC_CONSTANTS, IdenticalPairSampler(), 100).passed


@pytest.mark.unit
class TestInitialHolder:
    def test_constant_initial_data(self, cubic_model):
        report = check_initial_holder(cubic_model, 0.0, 1000)
        assert report.passed
        assert report.samples == 1000

    def test_oscillating_initial_data(self, frozen_model):
        model = frozen_model(xi=lambda theta: np.array([np.sin(5.0 * theta)]))
        assert not check_initial_holder(model, 0.0, 200).passed
        assert check_initial_holder(model, 25.0, 1000).passed

    def test_model_constant_is_the_default(self, frozen_model):
        model = frozen_model(xi=lambda theta: np.array([np.sin(5.0 * theta)]))
        assert not check_initial_holder(model, None, 200).passed
        smooth = dataclasses.replace(model, initial_holder_c2=25.0)
        assert check_initial_holder(smooth, None, 1000).passed

    def test_negative_constant(self, cubic_model):
        with pytest.raises(ConfigurationError):
            check_initial_holder(cubic_model, -1.0, 10)


@pytest.mark.slow
class TestFullSizeVerifier:
    @pytest.mark.parametrize("mode", ["uniform", "shared-history"])
    def test_cubic_constants_hold(self, cubic_model, mode):
        report = check_khasminskii_inequality(
            cubic_model, CUBIC_CONSTANTS, SegmentPairSampler(bound=5.0, mode=mode), 10_000
        )
        assert report.samples == 10_000
        assert report.violations == 0

    def test_weak_cubic_dissipation_fails(self):
        model = make_cubic_volatility_model(3.0, 10.0, 2.0)
        report = check_khasminskii_inequality(
            model, CUBIC_CONSTANTS, SegmentPairSampler(mode="shared-history"), 10_000
        )
        assert report.violations >= 1

    def test_point_delay_defeats_integral_bound(self):
        model = make_linear_delay_model(-1.0, 0.3, 0.1, 0.5)
        alpha0 = 2 * 1.0 + 2 * 0.3 + (4.0 - 1) * 2 * 0.5**2 + 1
        constants = AssumptionConstants(q=4.0, alpha0=alpha0, alpha1=1.0, alpha2=0.5, rhat=0.0)
        report = check_khasminskii_inequality(model, constants, SegmentPairSampler(), 10_000)
        assert report.violations > 0
        assert report.worst_margin > 0
