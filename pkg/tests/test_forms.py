"""Form algebra: dual forms, harmonic means, symplectic spectra."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weylcalc.forms import (
    IllConditionedFormError,
    QuadraticForm,
    dual_form,
    gain,
    harmonic_mean,
    symplectic_matrix,
    symplectic_pairing,
    symplectic_spectrum,
)


def random_spd(rng, n, spread=2.0):
    d = 2 * n
    A = rng.standard_normal((d, d))
    Q, _ = np.linalg.qr(A)
    eigs = np.exp(rng.uniform(-spread, spread, d))
    return QuadraticForm(Q @ np.diag(eigs) @ Q.T)


def random_symplectic(rng, n):
    # exponential of a Hamiltonian matrix J S, S symmetric
    d = 2 * n
    S = rng.standard_normal((d, d))
    S = 0.3 * (S + S.T)
    from scipy.linalg import expm

    return expm(symplectic_matrix(n) @ S)


def dual_by_sphere_sup(g, T, count=4000, seed=0):
    """Brute-force sup of sigma(T, Y)^2 over a dense sample of {g(Y) = 1}."""
    rng = np.random.default_rng(seed)
    Y = g.unit_directions(rng, count)
    return np.max(symplectic_pairing(np.asarray(T), Y) ** 2)


class TestSymplecticMatrix:
    def test_antisymmetric_and_square_root_of_minus_identity(self):
        for n in (1, 2, 3):
            J = symplectic_matrix(n)
            assert np.allclose(J, -J.T)
            assert np.allclose(J @ J, -np.eye(2 * n))

    def test_pairing_convention(self):
        # sigma(T, Y) = <t_xi, y_x> - <t_x, y_xi>
        T = np.array([1.0, 0.0])  # x-direction, n=1
        Y = np.array([0.0, 1.0])  # xi-direction
        assert symplectic_pairing(T, Y) == pytest.approx(-1.0)
        J = symplectic_matrix(1)
        assert symplectic_pairing(T, Y) == pytest.approx(T @ J @ Y)


class TestQuadraticForm:
    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            QuadraticForm(np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            QuadraticForm(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_ill_conditioned(self):
        with pytest.raises(IllConditionedFormError):
            QuadraticForm(np.diag([1.0, 1e13]))

    def test_evaluation_positive(self):
        g = random_spd(np.random.default_rng(0), 2)
        T = np.random.default_rng(1).standard_normal((50, 4))
        vals = g(T)
        assert np.all(vals > 0)
        assert g(np.zeros(4)) == 0.0

    def test_unit_directions_lie_on_sphere(self):
        g = random_spd(np.random.default_rng(2), 2)
        T = g.unit_directions(np.random.default_rng(3), 200)
        assert np.allclose(g(T), 1.0, atol=1e-12)


class TestDualForm:
    def test_identity_is_self_dual(self):
        g = QuadraticForm(np.eye(2))
        assert np.allclose(dual_form(g).matrix, np.eye(2))

    def test_frozen_axis_scaled_example(self):
        # diag(1, 1/4) in (x, xi) coordinates has dual diag(4, 1)
        g = QuadraticForm(np.diag([1.0, 0.25]))
        assert np.allclose(dual_form(g).matrix, np.diag([4.0, 1.0]), atol=1e-12)

    @pytest.mark.parametrize("a,b", [(2.0, 3.0), (5.0, 0.2)])
    def test_diagonal_swap_inverse_rule(self, a, b):
        g = QuadraticForm(np.diag([a, b]))
        assert np.allclose(dual_form(g).matrix, np.diag([1.0 / b, 1.0 / a]), atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_sphere_sup_oracle(self, n):
        rng = np.random.default_rng(7)
        g = random_spd(rng, n, spread=1.0)
        gs = dual_form(g)
        for T in rng.standard_normal((20, 2 * n)):
            brute = dual_by_sphere_sup(g, T, count=60000 if n == 2 else 6000)
            exact = gs(T)
            assert brute <= exact * (1 + 1e-9)
            assert brute >= exact * (1 - 2e-2)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_involution(self, n):
        rng = np.random.default_rng(11 + n)
        for _ in range(200):
            g = random_spd(rng, n)
            back = dual_form(dual_form(g)).matrix
            err = np.linalg.norm(back - g.matrix) / np.linalg.norm(g.matrix)
            assert err < 1e-10

    @pytest.mark.parametrize("n", [1, 2])
    def test_symplectic_invariance(self, n):
        rng = np.random.default_rng(23)
        for _ in range(20):
            g = random_spd(rng, n, spread=1.0)
            B = random_symplectic(rng, n)
            lhs = dual_form(QuadraticForm(B.T @ g.matrix @ B)).matrix
            rhs = B.T @ dual_form(g).matrix @ B
            assert np.allclose(lhs, rhs, atol=1e-8 * np.linalg.norm(rhs))


class TestHarmonicMean:
    def test_idempotent(self):
        g = random_spd(np.random.default_rng(5), 2)
        assert np.allclose(harmonic_mean(g, g).matrix, g.matrix, atol=1e-12)

    def test_scalar_example(self):
        g1 = QuadraticForm(np.eye(2))
        g2 = QuadraticForm(3.0 * np.eye(2))
        assert np.allclose(harmonic_mean(g1, g2).matrix, 1.5 * np.eye(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            harmonic_mean(QuadraticForm(np.eye(2)), QuadraticForm(np.eye(4)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_bounded_by_twice_min(self, seed):
        rng = np.random.default_rng(seed)
        g1 = random_spd(rng, 1)
        g2 = random_spd(rng, 1)
        h = harmonic_mean(g1, g2)
        T = rng.standard_normal((100, 2))
        assert np.all(h(T) <= 2 * np.minimum(g1(T), g2(T)) + 1e-12)

    def test_symmetric_and_monotone(self):
        rng = np.random.default_rng(17)
        g1 = random_spd(rng, 1)
        g2 = random_spd(rng, 1)
        assert np.allclose(
            harmonic_mean(g1, g2).matrix, harmonic_mean(g2, g1).matrix, atol=1e-12
        )
        g1p = QuadraticForm(g1.matrix + 0.5 * np.eye(2))  # g1 <= g1p
        T = rng.standard_normal((100, 2))
        assert np.all(harmonic_mean(g1, g2)(T) <= harmonic_mean(g1p, g2)(T) + 1e-12)


class TestSymplecticSpectrum:
    def test_identity(self):
        sp = symplectic_spectrum(QuadraticForm(np.eye(2)))
        assert np.allclose(sp.lambdas, [1.0])
        assert np.allclose(np.abs(sp.basis), np.eye(2), atol=1e-12) or np.allclose(
            sp.basis.T @ sp.basis, np.eye(2), atol=1e-10
        )

    def test_frozen_anisotropic_example(self):
        # g = diag(1, 1/25): generalized eigenvalues of (g^sigma, g) are 25, 25
        g = QuadraticForm(np.diag([1.0, 1.0 / 25.0]))
        sp = symplectic_spectrum(g)
        assert sp.lambdas == pytest.approx([5.0], rel=1e-10)

    def test_block_diagonal_two_modes(self):
        # blocks with gains 2 and 7
        G = np.diag([1.0 / 2.0, 1.0 / 7.0, 1.0 / 2.0, 1.0 / 7.0])
        sp = symplectic_spectrum(QuadraticForm(G))
        assert np.allclose(sp.lambdas, [2.0, 7.0], rtol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_basis_is_symplectic_and_normalizes(self, n):
        rng = np.random.default_rng(31 + n)
        g = random_spd(rng, n, spread=1.5)
        sp = symplectic_spectrum(g)
        J = symplectic_matrix(n)
        assert np.allclose(sp.basis.T @ J @ sp.basis, J, atol=1e-9)
        D = sp.basis.T @ g.matrix @ sp.basis
        expect = np.diag(np.concatenate([1.0 / sp.lambdas, 1.0 / sp.lambdas]))
        assert np.allclose(D, expect, atol=1e-9 * np.max(expect))


class TestGain:
    def test_identity(self):
        assert gain(QuadraticForm(np.eye(2))) == pytest.approx(1.0)

    def test_sigma_style_scale(self):
        # g = diag(1, L^-2) with L = 1 + |xi| + tau at (xi, tau) = (3, 10)
        L = 1.0 + 3.0 + 10.0
        g = QuadraticForm(np.diag([1.0, L**-2]))
        assert gain(g) == pytest.approx(14.0, rel=1e-12)

    def test_gain_by_direction_sampling_oracle(self):
        rng = np.random.default_rng(41)
        g = random_spd(rng, 1, spread=1.0)
        from weylcalc.forms import dual_form as df

        gs = df(g)
        T = g.unit_directions(rng, 20000)
        brute = np.sqrt(np.min(gs(T)))
        assert gain(g) <= brute + 1e-12
        assert gain(g) >= brute * (1 - 5e-3)

    def test_uncertainty_bound(self):
        from scipy.linalg import eigh

        rng = np.random.default_rng(43)
        for _ in range(20):
            g = random_spd(rng, 2, spread=0.5)
            gs = dual_form(g)
            # scale so that g <= g^sigma, then the gain is >= 1
            mu = np.max(eigh(g.matrix, gs.matrix, eigvals_only=True))
            scaled = QuadraticForm(g.matrix / np.sqrt(mu))
            assert gain(scaled) >= 1.0 - 1e-9

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_inverse_scaling(self, t):
        g = random_spd(np.random.default_rng(47), 2)
        scaled = QuadraticForm(t * g.matrix)
        assert gain(scaled) == pytest.approx(gain(g) / t, rel=1e-10)

    def test_consistent_with_spectrum(self):
        g = random_spd(np.random.default_rng(53), 3)
        sp = symplectic_spectrum(g)
        assert gain(g) == pytest.approx(sp.lambdas[0], rel=1e-9)
