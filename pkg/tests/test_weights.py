"""Weight maps: closed-form values, bounds, monotonicity, derivatives."""

import numpy as np
import pytest

from neurofem.weights import (
    bounded_logistic,
    constant,
    logistic_offset,
    weight_deriv,
    weight_deriv2,
    weight_eval,
    weight_from_config,
    weight_inv,
    weight_inv_deriv,
    weight_inv_deriv2,
)


class TestClosedFormValues:
    def test_logistic_offset_at_zero(self):
        spec = logistic_offset(100.0)
        assert abs(weight_eval(spec, 0.0) - 51.0) < 1e-14

    def test_bounded_logistic_at_zero(self):
        spec = bounded_logistic()
        assert abs(weight_eval(spec, 0.0) - 1.5) < 1e-15
        assert abs(weight_inv(spec, 0.0) - 2.0 / 3.0) < 1e-15

    def test_logistic_offset_derivative_at_zero(self):
        spec = logistic_offset(100.0)
        assert abs(weight_deriv(spec, 0.0) - 25.0) < 1e-13

    def test_constant(self):
        spec = constant(3.5)
        for s in (-5.0, 0.0, 7.0):
            assert weight_eval(spec, s) == 3.5
            assert weight_deriv(spec, s) == 0.0


class TestBoundsAndMonotonicity:
    def test_logistic_offset_bounds(self):
        spec = logistic_offset(100.0)
        s = np.linspace(-40, 40, 1000)
        w = weight_eval(spec, s)
        assert np.all(w >= 1.0) and np.all(w <= 101.0)
        assert spec.bounds == (1.0, 101.0)

    def test_bounded_logistic_bounds(self):
        spec = bounded_logistic()
        s = np.linspace(-40, 40, 1000)
        w = weight_eval(spec, s)
        assert np.all(w >= 0.5) and np.all(w <= 2.5)

    def test_strict_monotonicity(self):
        s = np.linspace(-20, 20, 1000)
        for spec in (logistic_offset(10.0), bounded_logistic()):
            w = weight_eval(spec, s)
            assert np.all(np.diff(w) > 0)

    def test_reciprocal_identity(self):
        s = np.linspace(-30, 30, 500)
        for spec in (logistic_offset(7.0), bounded_logistic(), constant(2.0)):
            np.testing.assert_allclose(
                weight_eval(spec, s) * weight_inv(spec, s), 1.0, atol=1e-14
            )

    def test_inverse_bounds_bounded_logistic(self):
        spec = bounded_logistic()
        s = np.linspace(-40, 40, 1000)
        varpi = weight_inv(spec, s)
        assert np.all(varpi >= 2.0 / 5.0) and np.all(varpi <= 2.0)

    def test_overflow_safety(self):
        spec = logistic_offset(100.0)
        for s in (-800.0, 800.0):
            w = weight_eval(spec, s)
            assert np.isfinite(w)
        assert abs(weight_eval(spec, 800.0) - 101.0) < 1e-12
        assert abs(weight_eval(spec, -800.0) - 1.0) < 1e-12


class TestDerivatives:
    @pytest.mark.parametrize(
        "spec", [logistic_offset(100.0), bounded_logistic(), constant(1.7)]
    )
    def test_first_derivative_finite_difference(self, spec):
        rng = np.random.default_rng(17)
        s = rng.uniform(-6, 6, size=100)
        step = 1e-6
        fd = (weight_eval(spec, s + step) - weight_eval(spec, s - step)) / (2 * step)
        d = weight_deriv(spec, s)
        np.testing.assert_allclose(d, fd, atol=1e-8, rtol=1e-8)

    @pytest.mark.parametrize("spec", [logistic_offset(5.0), bounded_logistic()])
    def test_second_derivative_finite_difference(self, spec):
        rng = np.random.default_rng(23)
        s = rng.uniform(-4, 4, size=50)
        step = 1e-5
        fd = (
            weight_deriv(spec, s + step) - weight_deriv(spec, s - step)
        ) / (2 * step)
        np.testing.assert_allclose(weight_deriv2(spec, s), fd, atol=1e-7, rtol=1e-6)

    def test_inverse_derivative_consistency(self):
        spec = bounded_logistic()
        s = np.linspace(-3, 3, 40)
        w = weight_eval(spec, s)
        dw = weight_deriv(spec, s)
        np.testing.assert_allclose(
            weight_inv_deriv(spec, s), -dw / w**2, atol=1e-14
        )
        step = 1e-5
        fd2 = (
            weight_inv_deriv(spec, s + step) - weight_inv_deriv(spec, s - step)
        ) / (2 * step)
        np.testing.assert_allclose(weight_inv_deriv2(spec, s), fd2, atol=1e-8)


class TestValidationAndConfig:
    def test_bad_specs_rejected(self):
        with pytest.raises(ValueError):
            logistic_offset(-1.0)
        with pytest.raises(ValueError):
            constant(0.0)
        with pytest.raises(ValueError):
            weight_from_config({"kind": "mystery"})

    def test_config_round_trip(self):
        spec = weight_from_config({"kind": "logistic_offset", "M": 100.0})
        assert spec.M == 100.0
        spec = weight_from_config({"kind": "bounded_logistic"})
        assert spec.bounds == (0.5, 2.5)
        spec = weight_from_config({"kind": "constant", "value": 2.0})
        assert weight_eval(spec, 9.9) == 2.0
