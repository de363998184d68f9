"""Cutoff profile: plateaus, monotonicity, and exact derivative jets."""

import numpy as np
import pytest

from weylcalc.windows import bump, bump_jets, lattice_window_1d, pairings, ramp


class TestBumpProfile:
    def test_plateaus(self):
        t = np.linspace(-1.0, 0.5, 100)
        assert np.all(bump(t) == 1.0)
        t = np.linspace(1.0, 3.0, 100)
        assert np.all(bump(t) == 0.0)

    def test_range_and_monotone(self):
        t = np.linspace(0.0, 1.5, 2001)
        v = bump(t)
        assert np.all(v >= 0.0) and np.all(v <= 1.0)
        assert np.all(np.diff(v) <= 1e-15)

    def test_first_derivative_nonpositive(self):
        t = np.linspace(0.4, 1.1, 501)
        jets = bump_jets(t, 1)
        assert np.all(jets[1] <= 1e-15)

    @pytest.mark.parametrize("order", [1, 2, 3, 5, 8])
    def test_jets_match_finite_differences(self, order):
        # central differences of the next-lower jet, with a Richardson step
        # halving to confirm the h^2 truncation scaling
        t = np.linspace(0.55, 0.95, 41)
        jets = bump_jets(t, order)
        scale = np.max(np.abs(jets[order])) + 1.0

        def fd(h):
            lower = bump_jets(t - h, order - 1)[order - 1]
            upper = bump_jets(t + h, order - 1)[order - 1]
            return (upper - lower) / (2 * h)

        h = 1e-5 if order <= 3 else 1e-3
        err_h = np.max(np.abs(jets[order] - fd(h)))
        assert err_h <= 5e-3 * scale
        if order <= 5:
            # step halving must show the h^2 truncation scaling; at order 8
            # the peak derivative scale puts fd past the roundoff crossover
            err_h2 = np.max(np.abs(jets[order] - fd(h / 2)))
            assert err_h2 <= 0.3 * err_h + 1e-9 * scale

    def test_jets_vanish_on_plateaus(self):
        jets = bump_jets(np.array([0.1, 0.5, 1.0, 2.0]), 6)
        assert np.all(jets[1:] == 0.0)

    def test_derivative_bounds_finite(self):
        t = np.linspace(0.5, 1.0, 4001)
        jets = bump_jets(t, 8)
        assert np.all(np.isfinite(jets))


class TestRamp:
    def test_partition_complement(self):
        u = np.linspace(-0.5, 1.5, 501)
        assert np.allclose(ramp(u) + ramp(1.0 - u), 1.0, atol=1e-15)

    def test_endpoints(self):
        assert ramp(np.array([0.0]))[0] == 0.0
        assert ramp(np.array([1.0]))[0] == 1.0


class TestLatticeWindow:
    def test_unit_partition_over_integer_shifts(self):
        t = np.linspace(-3, 3, 1001)
        total = sum(lattice_window_1d(t - k) for k in range(-5, 6))
        assert np.allclose(total, 1.0, atol=1e-14)

    def test_support(self):
        t = np.array([-1.5, -1.0, 1.0, 2.0])
        assert np.all(lattice_window_1d(t) == 0.0)


class TestPairings:
    def test_counts_match_involution_numbers(self):
        # number of partitions into singletons and pairs: 1, 1, 2, 4, 10, 26, 76
        expected = [1, 1, 2, 4, 10, 26, 76]
        for k, e in enumerate(expected):
            assert len(pairings(k)) == e

    def test_each_pairing_covers_index_set(self):
        for singles, pairs in pairings(5):
            seen = set(singles)
            for a, b in pairs:
                seen |= {a, b}
            assert seen == set(range(5))
