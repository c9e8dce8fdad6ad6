import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import objective_direct, parisi_scan, pure_two_spin
from sphparisi.errors import DomainError
from sphparisi.mixture import Mixture, pure
from sphparisi.parisi import (
    cascade_depths,
    infimum_over_b,
    objective_at_b,
    objective_derivative,
    parisi_value,
)
from sphparisi.rsb import FunctionalOrderParameter, insert_degenerate_level, replica_symmetric, split_level

TWO_LEVEL = FunctionalOrderParameter(2, (0, 0.5, 1), (0, 0.3, 0.7, 1))

mixtures = st.dictionaries(
    st.integers(min_value=1, max_value=6), st.floats(min_value=0.05, max_value=2.0), min_size=1, max_size=3
).map(Mixture.from_betas)


@st.composite
def order_parameters(draw, max_k=3):
    k = draw(st.integers(min_value=1, max_value=max_k))
    unit = st.floats(min_value=0.0, max_value=1.0)
    q = sorted(draw(st.lists(unit, min_size=k, max_size=k)))
    m = sorted(draw(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=k - 1, max_size=k - 1)))
    return FunctionalOrderParameter(k, (0.0, *m, 1.0), (0.0, *q, 1.0))


class TestDepths:
    def test_rs_zero(self):
        assert cascade_depths(pure(2, 1.0), replica_symmetric(0.0)) == (2.0,)

    def test_zero_mixture(self):
        assert cascade_depths(Mixture(), TWO_LEVEL) == (0.0, 0.0)

    def test_two_level(self):
        np.testing.assert_allclose(cascade_depths(pure(2, 1.0), TWO_LEVEL), (1.0, 0.6), atol=1e-15)

    @settings(max_examples=80, deadline=None)
    @given(mixtures, order_parameters())
    def test_nonincreasing(self, mix, f):
        d = cascade_depths(mix, f)
        assert all(a >= b for a, b in zip(d, d[1:]))
        assert d[-1] >= 0
        assert d[-1] == pytest.approx(mix.xi(1.0, 1) - mix.xi(f.q[f.k], 1), abs=1e-12)


class TestObjective:
    def test_zero_mixture(self):
        assert objective_at_b(Mixture(), replica_symmetric(0.0), 1.0) == 0.0

    def test_rs_zero_closed_form(self):
        mix = pure(2, 1.0)
        for b in (2.5, 3.0, 7.0):
            closed = 0.5 * (b - 1 - math.log(b - 2.0) - 2.0 + 1.0)
            assert objective_at_b(mix, replica_symmetric(0.0), b) == pytest.approx(closed, abs=1e-14)
        assert objective_at_b(mix, replica_symmetric(0.0), 3.0) == pytest.approx(0.5, abs=1e-15)

    def test_small_m_branch_continuity(self):
        # below the threshold the limit branch Delta/D replaces log1p(m Delta/D)/m
        betas = {2: 1.0, 3: 0.7}
        m, q = (0, 1e-13, 1), (0, 0.2, 0.6, 1)
        f = FunctionalOrderParameter(2, m, q)
        for x in (2.0, 3.5):
            direct, _ = objective_direct(betas, m, q, x)
            assert objective_at_b(Mixture.from_betas(betas), f, x) == pytest.approx(float(direct), abs=1e-9)

    def test_m_zero_allowed(self):
        f = FunctionalOrderParameter(2, (0, 0.0, 1), (0, 0.2, 0.6, 1))
        assert math.isfinite(parisi_value(pure(2, 1.0), f))

    def test_domain(self):
        with pytest.raises(DomainError):
            objective_at_b(pure(2, 1.0), replica_symmetric(0.0), 2.0)

    @settings(max_examples=50, deadline=None)
    @given(mixtures, order_parameters(), st.floats(min_value=0.01, max_value=20.0))
    def test_derivative_matches_finite_difference(self, mix, f, offset):
        d1 = cascade_depths(mix, f)[0]
        b = d1 + offset
        h = 1e-6 * max(offset, 1e-3)
        fd = (objective_at_b(mix, f, b + h) - objective_at_b(mix, f, b - h)) / (2 * h)
        an = objective_derivative(mix, f, b)
        assert an == pytest.approx(fd, rel=1e-6, abs=1e-7)


class TestInfimum:
    def test_zero_mixture(self):
        ev = infimum_over_b(Mixture(), replica_symmetric(0.0))
        assert ev.value == pytest.approx(0.0, abs=1e-15)
        assert ev.b_star == pytest.approx(1.0, abs=1e-9)

    def test_rs_zero(self):
        ev = infimum_over_b(pure(2, 1.0), replica_symmetric(0.0))
        assert ev.value == pytest.approx(0.5, abs=1e-12)
        assert ev.b_star == pytest.approx(3.0, abs=1e-9)
        assert ev.b_star > ev.d[0]
        assert ev.big_d(2) == ev.b_star

    def test_pure_two_spin_optimum(self):
        value, q = pure_two_spin(1.0)
        ev = infimum_over_b(pure(2, 1.0), replica_symmetric(q))
        assert ev.value == pytest.approx(value, abs=1e-12)
        assert ev.b_star == pytest.approx(2 * math.sqrt(2), abs=1e-8)
        assert ev.value == pytest.approx(0.490927, abs=1e-6)

    @pytest.mark.parametrize(
        "betas,m,q",
        [
            ({2: 1.0}, (0, 1), (0, 0.3, 1)),
            ({2: 1.0, 3: 1.0}, (0, 0.5, 1), (0, 0.3, 0.7, 1)),
            ({3: 2.0}, (0, 0.2, 1), (0, 0.0, 0.8, 1)),
            ({1: 0.5, 4: 1.2}, (0, 0.4, 0.8, 1), (0, 0.1, 0.5, 0.9, 1)),
        ],
    )
    def test_against_grid_scan(self, betas, m, q):
        f = FunctionalOrderParameter(len(m) - 1, m, q)
        ev = infimum_over_b(Mixture.from_betas(betas), f)
        scan_val, scan_b = parisi_scan(betas, m, q)
        assert ev.value <= scan_val + 1e-12
        assert ev.value == pytest.approx(scan_val, abs=1e-9)
        assert abs(ev.derivative_at_b_star) < 1e-9

    def test_blows_up_at_edges(self):
        mix = Mixture(((2, 1.0), (3, 1.0)))
        ev = infimum_over_b(mix, TWO_LEVEL)
        assert objective_at_b(mix, TWO_LEVEL, ev.d[0] + 1e-9) > ev.value + 10
        assert objective_at_b(mix, TWO_LEVEL, 1e6) > ev.value + 1e5

    @settings(max_examples=40, deadline=None)
    @given(mixtures, order_parameters(max_k=2), st.data())
    def test_refinement_invariance(self, mix, f, data):
        idx = data.draw(st.integers(min_value=1, max_value=f.k))
        v = parisi_value(mix, f)
        g = insert_degenerate_level(f, idx)
        h = split_level(f, idx, 0.5 * (f.q[idx] + f.q[idx + 1]))
        assert parisi_value(mix, g) == pytest.approx(v, abs=1e-12 * (1 + abs(v)))
        assert parisi_value(mix, h) == pytest.approx(v, abs=1e-12 * (1 + abs(v)))

    @pytest.mark.parametrize("betas", [{2: 0.2}, {2: 0.5}, {2: 1.0}, {3: 0.5}, {3: 1.0}, {2: 0.7, 4: 0.3}])
    def test_rs_closed_form(self, betas):
        mix = Mixture.from_betas(betas)
        ev = infimum_over_b(mix, replica_symmetric(0.0))
        assert ev.value == pytest.approx(mix.xi(1.0) / 2, abs=1e-10)
        assert ev.b_star == pytest.approx(1 + mix.xi(1.0, 1), abs=1e-8)
