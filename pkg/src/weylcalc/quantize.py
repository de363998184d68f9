"""Discretized Weyl quantization on a dense grid, with spectral measurements.

Conventions: the operator kernel is K(x, y) = sum_xi dxi e^{2 i pi (x-y).xi}
a((x+y)/2, xi) over the discrete dual lattice of the x-grid, and the matrix
stores dx^{n/2} K dx^{n/2} so that its operator norm on C^{N^n} approximates
the L^2 operator norm.  With this choice the constant symbol quantizes to
the exact identity matrix.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np


class AliasingError(RuntimeError):
    """The symbol carries too much mass beyond the grid's Nyquist band."""


class IterationBudgetError(RuntimeError):
    """A spectral iteration failed to converge within its budget."""


@dataclass(frozen=True)
class Discretization:
    """Dense-grid discretization of R^n with its discrete Fourier dual.

    n        spatial dimension (1 or 2)
    L        box half-width; the x-grid covers [-L, L)
    N        points per axis, a power of two

    The xi-grid is the discrete dual with step 1/(2L) and Nyquist range
    N/(4L) per axis.  The fine grid halves both steps; midpoints of x-grid
    pairs lie exactly on the fine x-grid.
    """

    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two, at least 8")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.n == 2 and self.N > 48:
            raise ValueError("dense n = 2 matrices are limited to N <= 48")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return 1.0 / (2.0 * self.L)

    @property
    def nyquist(self) -> float:
        return self.N / (4.0 * self.L)

    @property
    def fine_m(self) -> int:
        return 2 * self.N

    def x_axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dx

    def xi_axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dxi

    def xi_axes(self):
        return [self.xi_axis()] * self.n

    def fine_x_axis(self) -> np.ndarray:
        M = self.fine_m
        return (np.arange(M) - M // 2) * (self.dx / 2.0)

    def fine_xi_axis(self) -> np.ndarray:
        M = self.fine_m
        return (np.arange(M) - M // 2) * (self.dxi / 2.0)

    def fine_axes(self, space: bool = False):
        if space:
            return [self.fine_x_axis()] * self.n
        return [self.fine_x_axis()] * self.n + [self.fine_xi_axis()] * self.n

    def fine_steps(self):
        return [self.dx / 2.0] * self.n + [self.dxi / 2.0] * self.n

    def fine_index(self, X) -> np.ndarray:
        """Indices of points on the fine phase grid; rejects off-grid points."""
        X = np.asarray(X, float)
        M = self.fine_m
        steps = np.array(self.fine_steps())
        idx = X / steps + M // 2
        near = np.rint(idx)
        if not np.allclose(idx, near, atol=1e-6):
            raise ValueError("point does not lie on the fine phase grid")
        return near.astype(int)

    def interior_probes(self, margin: float = 0.25):
        """Base phase-grid points at relative margin from the box edges."""
        keep_x = np.abs(self.x_axis()) <= (1 - margin) * self.L
        keep_xi = np.abs(self.xi_axis()) <= (1 - margin) * self.nyquist
        axes = [self.x_axis()[keep_x]] * self.n + [self.xi_axis()[keep_xi]] * self.n
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return mesh.reshape(-1, 2 * self.n)


def aliasing_ratio(symbol, disc: Discretization, extend: float = 4.0) -> float:
    """Out-of-band vs in-band mass of the symbol along the central xi-slice."""
    worst = 0.0
    for axis in range(disc.n):
        xi = np.linspace(-extend * disc.nyquist, extend * disc.nyquist,
                         8 * disc.N + 1)
        pts = np.zeros((len(xi), 2 * disc.n))
        pts[:, disc.n + axis] = xi
        vals = np.abs(np.asarray(symbol.value_at(pts), complex))
        inside = np.abs(xi) <= disc.nyquist
        mass_in = float(np.sum(vals[inside]))
        mass_out = float(np.sum(vals[~inside]))
        worst = max(worst, mass_out / max(mass_in, 1e-300))
    return worst


def quantize(symbol, disc: Discretization, certify: str = "auto",
             aliasing_tol: float = 1e-8) -> "OperatorMatrix":
    """Dense matrix of the phase-space operator attached to a symbol.

    The dual integral is sampled on the fine xi-lattice (half step, same
    Nyquist range): the kernel is then periodic in x - y with twice the box
    period, so no physical lag aliases onto another and the constant symbol
    quantizes to the exact identity.

    certify: "auto" runs the out-of-band mass check unless the symbol
    declares polynomial xi-growth; "always" forces it; "never" skips it.
    """
    if certify not in ("auto", "always", "never"):
        raise ValueError("certify must be auto, always, or never")
    run_check = certify == "always" or (
        certify == "auto" and not getattr(symbol, "xi_polynomial", False)
    )
    if run_check:
        ratio = aliasing_ratio(symbol, disc)
        if not np.isfinite(ratio) or ratio > aliasing_tol:
            raise AliasingError(
                f"out-of-band symbol mass ratio {ratio:.3e} exceeds {aliasing_tol:.1e}"
            )
    N = disc.N
    M = disc.fine_m
    if disc.n == 1:
        Q = np.asarray(symbol.sample_fine(disc), complex)
        if not np.all(np.isfinite(Q)):
            raise ValueError("symbol produced non-finite samples")
        P = np.fft.ifft(Q, axis=1)  # rows: midpoint fine index s; lags d mod M
        jj, kk = np.indices((N, N))
        d = jj - kk
        A = P[jj + kk, d % M] * np.where(d % 2, -1.0, 1.0)
    else:
        A = _quantize_2d(symbol, disc)
    return OperatorMatrix(matrix=A, disc=disc)


def _quantize_2d(symbol, disc: Discretization) -> np.ndarray:
    """Antidiagonal-slab assembly keeping the sample tensor out of memory."""
    N = disc.N
    M = disc.fine_m
    fx = disc.fine_x_axis()
    fxi = disc.fine_xi_axis()
    A = np.zeros((N * N, N * N), complex)
    jj, kk = np.indices((N, N))
    d2 = jj - kk
    lag2 = d2 % M
    sign2 = np.where(d2 % 2, -1.0, 1.0)
    mesh = np.stack(np.meshgrid(fx, fxi, fxi, indexing="ij"), axis=-1)
    slab_pts = np.zeros(mesh.shape[:-1] + (4,))
    slab_pts[..., 1] = mesh[..., 0]
    slab_pts[..., 2] = mesh[..., 1]
    slab_pts[..., 3] = mesh[..., 2]
    for s1 in range(M - 1):
        slab_pts[..., 0] = fx[s1]
        vals = np.asarray(symbol.value_at(slab_pts), complex)
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol produced non-finite samples")
        P = np.fft.ifft2(vals)  # (s2, lag1, lag2) after the two xi axes
        j1_lo = max(0, s1 - (N - 1))
        for j1 in range(j1_lo, min(N, s1 + 1)):
            k1 = s1 - j1
            d1 = j1 - k1
            block = P[jj + kk, d1 % M, lag2] * sign2 * (-1.0 if d1 % 2 else 1.0)
            A[j1 * N : j1 * N + N, k1 * N : k1 * N + N] = block
    return A


def _power_norm(matvec, dim, tol, max_iter, label):
    v = np.ones(dim, complex) + 1e-3 * np.sin(np.arange(dim))
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        if abs(s - prev) <= tol * max(s, 1e-300):
            return float(s)
        prev = s
    raise IterationBudgetError(f"{label} did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense discretized operator with dx^n quadrature weight folded in."""

    matrix: np.ndarray
    disc: Discretization

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint_defect(self) -> float:
        A = self.matrix
        nrm = np.linalg.norm(A)
        return float(np.linalg.norm(A - A.conj().T) / max(nrm, 1e-300))

    def norm(self, tol: float = 1e-8, max_iter: int = 20000) -> float:
        """Largest singular value by power iteration on A* A."""
        A = self.matrix
        AH = A.conj().T

        def matvec(v):
            return AH @ (A @ v)

        s2 = _power_norm(matvec, self.dim, tol, max_iter, "operator norm")
        return float(np.sqrt(s2))

    def min_eig_symmetric(self, tol: float = 1e-8, max_iter: int = 40000) -> float:
        """Smallest eigenvalue of the Hermitian part, by shifted power iteration."""
        H = 0.5 * (self.matrix + self.matrix.conj().T)
        rho = _power_norm(lambda v: H @ v, self.dim, tol, max_iter, "spectral radius")
        if rho == 0.0:
            return 0.0
        v = np.ones(self.dim, complex) + 1e-3 * np.cos(np.arange(self.dim))
        v /= np.linalg.norm(v)
        prev = np.inf
        for _ in range(max_iter):
            w = rho * v - H @ v
            s = np.linalg.norm(w)
            if s == 0.0:
                return float(rho)
            v = w / s
            lam = float(np.real(np.vdot(v, H @ v)))
            if abs(lam - prev) <= tol * max(abs(lam), 1.0):
                return lam
            prev = lam
        raise IterationBudgetError(f"min-eig iteration exceeded {max_iter} steps")

    def save(self, path):
        """Flat binary export: magic, n, N, L header then complex doubles."""
        with open(path, "wb") as f:
            f.write(b"WEYLOP01")
            f.write(struct.pack("<qqd", self.disc.n, self.disc.N, self.disc.L))
            f.write(np.ascontiguousarray(self.matrix, np.complex128).tobytes())

    @classmethod
    def load(cls, path) -> "OperatorMatrix":
        with open(path, "rb") as f:
            magic = f.read(8)
            if magic != b"WEYLOP01":
                raise ValueError("not an operator matrix file")
            n, N, L = struct.unpack("<qqd", f.read(24))
            disc = Discretization(n=int(n), L=float(L), N=int(N))
            dim = N**n
            data = np.frombuffer(f.read(), np.complex128).reshape(dim, dim)
        return cls(matrix=data.copy(), disc=disc)

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix + other.matrix, self.disc)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix - other.matrix, self.disc)
        return NotImplemented

    def __mul__(self, c):
        return OperatorMatrix(self.matrix * complex(c), self.disc)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.matrix @ other.matrix, self.disc)
        return NotImplemented
