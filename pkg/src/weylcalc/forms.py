"""Linear algebra on positive-definite quadratic forms over symplectic R^{2n}.

Coordinates are ordered (x_1..x_n, xi_1..xi_n).  The symplectic pairing is
sigma(T, Y) = T^T J Y with J the block matrix [[0, -I], [I, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

SYMMETRY_TOL = 1e-10
CONDITION_LIMIT = 1e12


class IllConditionedFormError(ValueError):
    """Eigenvalue spread of a form exceeds what downstream quadrature tolerates."""


def symplectic_matrix(n: int) -> np.ndarray:
    """Matrix of the standard symplectic form in (x, xi) coordinate order."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def symplectic_pairing(T: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """sigma(T, Y), broadcasting over leading axes."""
    T = np.asarray(T, float)
    Y = np.asarray(Y, float)
    n = T.shape[-1] // 2
    return np.einsum("...i,...i->...", T[..., n:], Y[..., :n]) - np.einsum(
        "...i,...i->...", T[..., :n], Y[..., n:]
    )


@dataclass(frozen=True)
class QuadraticForm:
    """Positive-definite form Gamma(T) = T^T G T on R^{2n}.

    The matrix is symmetrized on construction; non-positive or extremely
    ill-conditioned inputs are rejected.
    """

    matrix: np.ndarray
    _eigs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        G = np.asarray(self.matrix, float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] % 2:
            raise ValueError(f"form matrix must be square of even size, got {G.shape}")
        defect = np.linalg.norm(G - G.T)
        scale = max(np.linalg.norm(G), 1.0)
        if defect > SYMMETRY_TOL * scale:
            raise ValueError(f"form matrix is not symmetric (defect {defect:.3e})")
        G = 0.5 * (G + G.T)
        eigs = np.linalg.eigvalsh(G)
        if eigs[0] <= 0:
            raise ValueError(f"form is not positive definite (min eigenvalue {eigs[0]:.3e})")
        if eigs[-1] / eigs[0] > CONDITION_LIMIT:
            raise IllConditionedFormError(
                f"eigenvalue ratio {eigs[-1] / eigs[0]:.3e} exceeds {CONDITION_LIMIT:.0e}"
            )
        object.__setattr__(self, "matrix", G)
        object.__setattr__(self, "_eigs", eigs)

    @property
    def dim_n(self) -> int:
        return self.matrix.shape[0] // 2

    def __call__(self, T: np.ndarray) -> np.ndarray:
        """Evaluate Gamma(T); T may carry leading batch axes."""
        T = np.asarray(T, float)
        return np.einsum("...i,ij,...j->...", T, self.matrix, T)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.matrix)

    def unit_directions(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Directions T with Gamma(T) = 1, uniform on the Gamma-unit sphere."""
        d = self.matrix.shape[0]
        u = rng.standard_normal((count, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        L = self.cholesky()
        return sla.solve_triangular(L, u.T, lower=True, trans="T").T

    def det_sqrt(self) -> float:
        """sqrt det G, the density of the form against Lebesgue measure."""
        return float(np.prod(self._eigs) ** 0.5)


def dual_form(g: QuadraticForm) -> QuadraticForm:
    """Symplectically dual form, sup of sigma(T, .)^2 over the unit sphere of g.

    Realized in closed form as G^sigma = J G^{-1} J^T; the agreement with the
    sup definition is pinned by tests against a dense-sphere oracle.
    """
    J = symplectic_matrix(g.dim_n)
    return QuadraticForm(J @ g.inverse() @ J.T)


def dual_matrix(G: np.ndarray) -> np.ndarray:
    """Batched matrix-level dual: J G^{-1} J^T over leading axes."""
    G = np.asarray(G, float)
    n = G.shape[-1] // 2
    J = symplectic_matrix(n)
    return np.einsum("ij,...jk,lk->...il", J, np.linalg.inv(G), J)


def harmonic_mean(g1: QuadraticForm, g2: QuadraticForm) -> QuadraticForm:
    """Harmonic mean 2 (G1^{-1} + G2^{-1})^{-1} of two forms."""
    if g1.matrix.shape != g2.matrix.shape:
        raise ValueError(
            f"dimension mismatch: {g1.matrix.shape} vs {g2.matrix.shape}"
        )
    H = 2.0 * np.linalg.inv(g1.inverse() + g2.inverse())
    return QuadraticForm(0.5 * (H + H.T))


def harmonic_mean_matrix(G1: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """Batched matrix-level harmonic mean."""
    H = 2.0 * np.linalg.inv(np.linalg.inv(G1) + np.linalg.inv(G2))
    return 0.5 * (H + np.swapaxes(H, -1, -2))


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Normal form data: g = sum_j lambdas[j]^{-1} (|dx_j|^2 + |dxi_j|^2).

    ``basis`` is a symplectic matrix B with B^T G B diagonal in that shape.
    """

    lambdas: np.ndarray
    basis: np.ndarray


def symplectic_spectrum(g: QuadraticForm, tol: float = 1e-10) -> SymplecticSpectrum:
    """Williamson-style normal form of a positive-definite form.

    Diagonalizes the antisymmetric matrix G^{-1/2} J G^{-1/2} by a real Schur
    decomposition and rescales the pairs into a symplectic basis.
    """
    n = g.dim_n
    G = g.matrix
    J = symplectic_matrix(n)
    w, V = np.linalg.eigh(G)
    R = (V / np.sqrt(w)) @ V.T  # G^{-1/2}
    omega = R @ J @ R
    omega = 0.5 * (omega - omega.T)
    S, Q = sla.schur(omega, output="real")

    lams = np.empty(n)
    cols = Q.copy()
    for i in range(n):
        b = S[2 * i, 2 * i + 1]
        if b < 0:
            b = -b
            cols[:, [2 * i, 2 * i + 1]] = cols[:, [2 * i + 1, 2 * i]]
        if b <= 0:
            raise np.linalg.LinAlgError("degenerate Schur block in symplectic spectrum")
        lams[i] = b

    order = np.argsort(lams)
    lams = lams[order]
    pair_cols = np.empty_like(cols)
    for new, old in enumerate(order):
        pair_cols[:, 2 * new : 2 * new + 2] = cols[:, 2 * old : 2 * old + 2]

    # per-pair: swap to fix the sigma orientation, scale by 1/sqrt(lambda)
    C = np.zeros((2 * n, 2 * n))
    for i in range(n):
        c = 1.0 / np.sqrt(lams[i])
        C[2 * i, 2 * i + 1] = c
        C[2 * i + 1, 2 * i] = c
    # interleaved pairs (x_1, xi_1, ...) -> block order (x_1.., xi_1..)
    P = np.zeros((2 * n, 2 * n))
    for i in range(n):
        P[2 * i, i] = 1.0
        P[2 * i + 1, n + i] = 1.0
    B = R @ pair_cols @ C @ P

    defect = np.linalg.norm(B.T @ J @ B - J)
    if defect > 1e-6:
        raise np.linalg.LinAlgError(f"symplectic basis defect {defect:.3e}")
    return SymplecticSpectrum(lambdas=lams, basis=B)


def gain(g: QuadraticForm) -> float:
    """inf over directions of (g^sigma(T)/g(T))^{1/2}; equals min of the spectrum."""
    gs = dual_form(g)
    mu = sla.eigh(gs.matrix, g.matrix, eigvals_only=True)
    return float(np.sqrt(mu[0]))


def gain_matrix(G: np.ndarray) -> np.ndarray:
    """Batched gain over leading axes of a stack of form matrices."""
    G = np.asarray(G, float)
    Gs = dual_matrix(G)
    L = np.linalg.cholesky(G)
    Linv = np.linalg.inv(L)
    K = Linv @ Gs @ np.swapaxes(Linv, -1, -2)
    mu = np.linalg.eigvalsh(K)
    return np.sqrt(mu[..., 0])
