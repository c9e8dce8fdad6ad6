import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphparisi.errors import DomainError
from sphparisi.mixture import Mixture, pure, theta, xi_derivative

betas = st.dictionaries(
    st.integers(min_value=1, max_value=8),
    st.floats(min_value=0.0, max_value=3.0, allow_nan=False),
    max_size=4,
)


class TestValues:
    def test_zero_mixture(self):
        assert xi_derivative(Mixture(), 0.7, 0) == 0.0

    def test_pure_two_spin(self):
        m = pure(2, 1.0)
        assert xi_derivative(m, 0.5, 0) == 0.25
        assert xi_derivative(m, 0.5, 1) == 1.0
        assert xi_derivative(m, 0.5, 2) == 2.0
        assert theta(m, 0.5) == 0.25

    def test_two_plus_three(self):
        m = Mixture(((2, 1.0), (3, 0.5)))
        assert xi_derivative(m, 1.0, 1) == pytest.approx(2.75, abs=1e-15)

    def test_pure_three_theta(self):
        assert theta(pure(3, 1.0), 1.0) == 2.0

    def test_p1_term(self):
        m = Mixture(((1, 0.7), (2, 1.0)))
        assert m.xi(0.0) == 0.0
        assert m.xi(0.0, 1) == pytest.approx(0.49)
        assert m.theta(0.0) == 0.0

    def test_array_in_array_out(self):
        x = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(pure(2, 1.0).xi(x), x**2, rtol=0, atol=1e-15)


class TestDomain:
    @pytest.mark.parametrize("x", [1.1, -1.0 - 1e-9, np.nan])
    def test_out_of_range(self, x):
        with pytest.raises(DomainError):
            pure(2, 1.0).xi(x)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            pure(2, 1.0).xi(0.5, 3)

    def test_roundoff_is_clamped(self):
        assert pure(2, 1.0).xi(1.0 + 5e-13) == 1.0

    @pytest.mark.parametrize(
        "terms", [((0, 1.0),), ((2, -1.0),), ((3, 1.0), (2, 1.0)), ((2, 1.0), (2, 0.5)), ((2, np.inf),)]
    )
    def test_invalid_terms(self, terms):
        with pytest.raises(DomainError):
            Mixture(terms)

    def test_config_roundtrip(self):
        m = Mixture.from_config([{"p": 3, "beta": 0.5}, {"p": 2, "beta": 1.0}])
        assert m.terms == ((2, 1.0), (3, 0.5))
        assert Mixture.from_config(m.to_config()) == m


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(betas)
    def test_theta_identity(self, b):
        m = Mixture.from_betas(b)
        x = np.linspace(-1, 1, 1001)
        np.testing.assert_allclose(x * m.xi(x, 1) - m.xi(x), m.theta(x), atol=1e-14 * (1 + m.xi(1.0, 1)))

    @settings(max_examples=60, deadline=None)
    @given(betas)
    def test_monotone_on_unit_interval(self, b):
        m = Mixture.from_betas(b)
        x = np.linspace(0, 1, 2001)
        for vals in (m.xi(x), m.xi(x, 1), m.xi(x, 2), m.theta(x)):
            assert np.all(np.diff(vals) >= -1e-13)

    @settings(max_examples=40, deadline=None)
    @given(betas)
    def test_finite_difference(self, b):
        m = Mixture.from_betas(b)
        h = 1e-5
        x = np.linspace(-0.9, 0.9, 37)
        fd = (m.xi(x + h) - m.xi(x - h)) / (2 * h)
        scale = 1 + m.xi(1.0, 1) * 64
        np.testing.assert_allclose(m.xi(x, 1), fd, atol=1e-8 * scale)
        fd2 = (m.xi(x + h, 1) - m.xi(x - h, 1)) / (2 * h)
        np.testing.assert_allclose(m.xi(x, 2), fd2, atol=1e-8 * scale * 8)

    def test_compensated_sum(self):
        m = Mixture(((1, 1e-5), (2, 1.0), (3, 3e-5), (5, 1e-3)))
        x = 0.37
        exact = math.fsum([1e-10 * x, x * x, 9e-10 * x**3, 1e-6 * x**5])
        assert m.xi(x) == pytest.approx(exact, rel=2e-16)
