"""Tests for segments: interpolation, sup-norm, quadrature and sliding windows"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.polynomial import Polynomial

from truncem.errors import ConfigurationError, DomainError
from truncem.segment import (
    GridFunction,
    Segment,
    integrate_pointwise,
    segment_eval,
    segment_eval_many,
    segment_integral_power,
    segment_norm,
    shift_append,
)

node_values = arrays(
    np.float64,
    st.integers(min_value=2, max_value=12),
    elements=st.floats(min_value=-50, max_value=50, allow_nan=False),
)


@pytest.mark.unit
class TestSegmentConstruction:
    def test_scalar_nodes_become_column(self):
        seg = Segment([1.0, 2.0, 3.0], 0.5)
        assert seg.nodes.shape == (3, 1)
        assert seg.m == 2
        assert seg.tau == 1.0
        np.testing.assert_array_equal(seg.thetas, [-1.0, -0.5, 0.0])

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            Segment([0.0, np.nan], 1.0)

    def test_rejects_single_node(self):
        with pytest.raises(DomainError):
            Segment([1.0], 1.0)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(DomainError):
            Segment([0.0, 1.0], 0.0)

    def test_nodes_are_read_only(self):
        seg = Segment([0.0, 1.0], 1.0)
        with pytest.raises(ValueError):
            seg.nodes[0, 0] = 5.0

    def test_from_function_samples_grid(self):
        seg = Segment.from_function(lambda theta: theta, 1.0, 2)
        np.testing.assert_array_equal(seg.nodes[:, 0], [-1.0, -0.5, 0.0])


@pytest.mark.unit
class TestSegmentEval:
    def test_midpoint(self):
        seg = Segment([0.0, 2.0], 1.0)
        np.testing.assert_allclose(segment_eval(seg, -0.5), [1.0])

    def test_zero_returns_last_node_exactly(self):
        seg = Segment([0.1, 0.7, 0.3], 0.25)
        assert segment_eval(seg, 0.0)[0] == 0.3

    def test_hand_evaluated_interior_point(self):
        seg = Segment([1.0, -3.0, 2.0], 0.5)
        np.testing.assert_allclose(segment_eval(seg, -0.25), [-0.5])

    def test_nodes_are_returned_exactly(self):
        values = [0.1, 0.2, 0.7, -0.4]
        seg = Segment(values, 1.0 / 3.0)
        for i, theta in enumerate(seg.thetas):
            assert segment_eval(seg, theta)[0] == values[i]

    def test_out_of_range_raises(self):
        seg = Segment([0.0, 1.0], 1.0)
        with pytest.raises(DomainError):
            segment_eval(seg, 0.01)
        with pytest.raises(DomainError):
            segment_eval(seg, -1.01)

    def test_tolerance_band_clamps(self):
        seg = Segment([4.0, 1.0], 1.0)
        assert segment_eval(seg, 1e-14)[0] == 1.0
        assert segment_eval(seg, -1.0 - 1e-14)[0] == 4.0

    def test_many_matches_single(self):
        seg = Segment([1.0, -3.0, 2.0, 0.5], 1.0 / 3.0)
        thetas = np.linspace(-1.0, 0.0, 17)
        many = segment_eval_many(seg, thetas)
        single = np.vstack([segment_eval(seg, t) for t in thetas])
        np.testing.assert_allclose(many, single, rtol=0, atol=1e-15)


@pytest.mark.unit
class TestSegmentNorm:
    def test_max_abs_node(self):
        assert segment_norm(Segment([1.0, -3.0, 2.0], 0.5)) == 3.0

    def test_zero_segment(self):
        assert segment_norm(Segment.constant(0.0, 4, 0.25)) == 0.0

    def test_euclidean_nodes(self):
        assert segment_norm(Segment([[3.0, 4.0], [0.0, 0.0]], 1.0)) == 5.0

    @given(node_values)
    def test_interpolant_never_exceeds_norm(self, values):
        seg = Segment(values, 1.0 / (len(values) - 1))
        thetas = np.union1d(np.linspace(-seg.tau, 0.0, 1000), seg.thetas)
        dense = segment_eval_many(seg, thetas)
        sup = float(np.max(np.abs(dense)))
        assert sup <= segment_norm(seg) + 1e-12
        assert sup == pytest.approx(segment_norm(seg), abs=1e-12)


@pytest.mark.unit
class TestSegmentIntegral:
    def test_constant_square(self):
        assert segment_integral_power(Segment.constant(0.05, 8, 0.125), 2) == pytest.approx(0.0025, rel=1e-14)

    def test_ramp_square(self):
        assert segment_integral_power(Segment([0.0, 1.0], 1.0), 2) == pytest.approx(1.0 / 3.0, rel=1e-14)

    @pytest.mark.parametrize("power, expected", [(1, -0.5), (2, 1.0 / 3.0), (3, -0.25), (4, 0.2)])
    def test_identity_ramp_powers(self, power, expected):
        seg = Segment.from_function(lambda theta: theta, 1.0, 4)
        assert segment_integral_power(seg, power) == pytest.approx(expected, rel=1e-13)

    def test_vector_power_one_is_componentwise(self):
        seg = Segment([[0.0, 2.0], [1.0, 2.0]], 1.0)
        np.testing.assert_allclose(segment_integral_power(seg, 1), [0.5, 2.0])

    def test_unsupported_power(self):
        with pytest.raises(ConfigurationError):
            segment_integral_power(Segment([0.0, 1.0], 1.0), 5)

    def test_vector_power_above_one(self):
        with pytest.raises(ConfigurationError):
            segment_integral_power(Segment([[0.0, 2.0], [1.0, 2.0]], 1.0), 2)

    @settings(max_examples=60, deadline=None)
    @given(node_values, st.sampled_from([1, 2, 3, 4]))
    def test_matches_closed_form_polynomials(self, values, power):
        seg = Segment(values, 1.0 / (len(values) - 1))
        reference = 0.0
        scale = 1.0
        for left, right in zip(values[:-1], values[1:]):
            piece = Polynomial([left, right - left]) ** power
            reference += seg.delta * piece.integ()(1.0)
            scale += seg.delta * max(abs(left), abs(right)) ** power
        assert abs(segment_integral_power(seg, power) - reference) <= 1e-10 * scale

    def test_pointwise_integration_agrees(self):
        seg = Segment([1.0, -3.0, 2.0, 0.5], 0.25)
        value = integrate_pointwise([seg], lambda a: a[..., 0] ** 2)
        assert value == pytest.approx(segment_integral_power(seg, 2), rel=1e-12)

    def test_pointwise_needs_common_grid(self):
        with pytest.raises(DomainError):
            integrate_pointwise([Segment([0.0, 1.0], 1.0), Segment([0.0, 1.0, 2.0], 0.5)], lambda a, b: a[..., 0])


@pytest.mark.unit
class TestShiftAppend:
    def test_sliding_window(self):
        seg = shift_append(Segment([1.0, 2.0, 3.0], 1.0), 4.0)
        np.testing.assert_array_equal(seg.nodes[:, 0], [2.0, 3.0, 4.0])

    def test_two_appends_reproduce_history(self):
        seg = shift_append(shift_append(Segment([0.0, 0.0], 1.0), 1.0), 2.0)
        np.testing.assert_array_equal(seg.nodes[:, 0], [1.0, 2.0])

    def test_zero_fixed_point(self):
        seg = shift_append(Segment.constant(0.0, 3, 1.0), 0.0)
        assert segment_norm(seg) == 0.0

    @given(node_values)
    def test_m_plus_one_zero_appends_clear_history(self, values):
        seg = Segment(values, 1.0)
        for _ in range(seg.m + 1):
            seg = shift_append(seg, 0.0)
        assert segment_norm(seg) == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            shift_append(Segment([0.0, 1.0], 1.0), np.inf)

    def test_rejects_wrong_dimension(self):
        with pytest.raises(DomainError):
            shift_append(Segment([0.0, 1.0], 1.0), [1.0, 2.0])

    def test_input_is_untouched(self):
        seg = Segment([1.0, 2.0], 1.0)
        shift_append(seg, 9.0)
        np.testing.assert_array_equal(seg.nodes[:, 0], [1.0, 2.0])


@pytest.mark.unit
class TestGridFunction:
    def test_lengths_must_match(self):
        with pytest.raises(DomainError):
            GridFunction([0.0, 1.0], [1.0])

    def test_times_must_increase(self):
        with pytest.raises(DomainError):
            GridFunction([0.0, 0.0], [1.0, 2.0])

    def test_start(self):
        grid = GridFunction([-1.0, 0.0, 1.0], [1.0, 2.0, 3.0])
        assert grid.start == -1.0
        assert len(grid) == 3
