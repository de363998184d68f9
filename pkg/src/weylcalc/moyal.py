"""Composition of symbols: oscillatory double integral, expansion, remainders.

The composition is evaluated as a Riemann sum of the twisted double integral
over the discretization's fine phase grid (half steps in every variable; the
phase oscillates at twice the base frequencies, so the doubled grid is what
makes the quadrature alias-free).  The inner integral is one fast Fourier
transform of the right factor; the outer one is a family of circular
correlations, one per dual column.  On this toroidal model the unit symbol
is an exact left and right unit and symbols of xi alone multiply exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .forms import QuadraticForm
from .quantize import Discretization
from .symbols import (
    GridSymbol,
    PartialSymbol,
    ProductSymbol,
    ScaledSymbol,
    SumSymbol,
    Symbol,
)

TWO_I_PI = 2j * np.pi


class TailMassError(RuntimeError):
    """A factor carries too much mass at the edge of the composition box."""


def _centered_fft(u, steps):
    """Continuum Fourier transform on centered grids, all axes.

    Exact identity for even sizes: F[k] = sum_i u[i] e^{-2 i pi x_i . Xi_k}
    prod(steps), with x_i = (i - M/2) step and Xi_k = (k - M/2)/(M step).
    """
    axes = tuple(range(u.ndim))
    v = np.fft.ifftshift(u, axes=axes)
    v = np.fft.fftn(v, axes=axes)
    v = np.fft.fftshift(v, axes=axes)
    return v * np.prod(steps)


def boundary_mass_ratio(values: np.ndarray, shell: int = 2) -> float:
    """Mass of the outermost cells relative to the total, per |values|."""
    mag = np.abs(values)
    total = float(mag.sum())
    if total == 0.0:
        return 0.0
    inner = mag
    for ax in range(mag.ndim):
        sl = [slice(None)] * mag.ndim
        sl[ax] = slice(shell, mag.shape[ax] - shell)
        inner = inner[tuple(sl)]
    return float((total - inner.sum()) / total)


def compose_integral(a: Symbol, b: Symbol, disc: Discretization,
                     check_tails: bool = True, tail_tol: float = 1e-8,
                     chunk: int = 16) -> GridSymbol:
    """Twisted product of two symbols, sampled on the fine phase grid."""
    A = np.asarray(a.sample_fine(disc), complex)
    B = np.asarray(b.sample_fine(disc), complex)
    if check_tails:
        for name, vals in (("left", A), ("right", B)):
            ratio = boundary_mass_ratio(vals)
            if ratio > tail_tol:
                raise TailMassError(
                    f"{name} factor has boundary mass ratio {ratio:.3e} > {tail_tol:.1e}"
                )
    n = disc.n
    if n == 1:
        out = _compose_1d(A, B, disc, chunk)
    else:
        out = _compose_nd(A, B, disc)
    return GridSymbol(disc, out)


def _compose_1d(A, B, disc, chunk):
    M = disc.fine_m
    h = disc.dx / 2.0
    eta = disc.dxi / 2.0
    x = disc.fine_x_axis()
    xi = disc.fine_xi_axis()
    Bh = _centered_fft(B, (h, eta))
    # inner integral: b-hat at the J-rotated doubled argument; on this grid
    # the dual step is twice the fine step, so the column map is the identity
    # and the row map a reflection, folded into the correlation kernel below
    phase1 = np.exp(-4j * np.pi * x[:, None] * xi[None, :])
    out_inner = np.zeros((M, M), complex)
    cols = np.arange(M)
    for start in range(0, M, chunk):
        j = np.arange(start, min(start + chunk, M))
        dv = j - M // 2
        shift_idx = (cols[None, :] + dv[:, None]) % M
        Ashift = A[:, shift_idx]            # (y1, C, xi)
        Ashift = np.moveaxis(Ashift, 1, 0)  # (C, y1, xi)
        f = Ashift * phase1[None, :, :]
        # kernel per column: kr_c[m] = Bh[j_c, (m + M/2) % M]
        kr = Bh[j][:, (np.arange(M) + M // 2) % M]  # (C, M)
        fh = np.fft.fft(f, axis=1)
        kh = np.fft.fft(kr, axis=1)
        I = np.fft.ifft(fh * kh[:, :, None], axis=1)
        phase2 = np.exp(4j * np.pi * x[None, :] * (xi[j])[:, None])  # (C, x)
        out_inner += np.einsum("cx,cxj->xj", phase2, I)
    pref = 4.0 * h * eta
    return pref * np.exp(4j * np.pi * x[:, None] * xi[None, :]) * out_inner


def _compose_nd(A, B, disc):
    """Generic-n twisted product; quadratic in the number of dual columns."""
    n = disc.n
    M = disc.fine_m
    if M > 32:
        raise ValueError("n = 2 composition is limited to N <= 16")
    h = disc.dx / 2.0
    eta = disc.dxi / 2.0
    x = disc.fine_x_axis()
    xi = disc.fine_xi_axis()
    Bh = _centered_fft(B, (h,) * n + (eta,) * n)
    xaxes = tuple(range(n))
    # phase e^{-4 i pi sum_a xi_a y_a} over (y-axes, xi-axes)
    ph = np.zeros((M,) * 2 * n)
    for a in range(n):
        sy = [None] * 2 * n
        sy[a] = slice(None)
        sxi = [None] * 2 * n
        sxi[n + a] = slice(None)
        ph = ph + x[tuple(sy)] * xi[tuple(sxi)]
    phase1 = np.exp(-4j * np.pi * ph)
    out_inner = np.zeros((M,) * 2 * n, complex)
    lag = (np.arange(M) + M // 2) % M
    for jidx in itertools.product(range(M), repeat=n):
        dv = [j - M // 2 for j in jidx]
        Ashift = np.roll(A, [-d for d in dv], axis=tuple(range(n, 2 * n)))
        f = Ashift * phase1
        kr = Bh[jidx]
        kr = kr[np.ix_(*([lag] * n))]
        fh = np.fft.fftn(f, axes=xaxes)
        kh = np.fft.fftn(kr, axes=tuple(range(n)))
        shape = (M,) * n + (1,) * n
        I = np.fft.ifftn(fh * kh.reshape(shape), axes=xaxes)
        v2 = np.array([xi[j] for j in jidx])
        xphase = np.zeros((M,) * n)
        for a in range(n):
            s = [None] * n
            s[a] = slice(None)
            xphase = xphase + x[tuple(s)] * v2[a]
        out_inner += np.exp(4j * np.pi * xphase).reshape((M,) * n + (1,) * n) * I
    xxi = np.zeros((M,) * 2 * n)
    for a in range(n):
        sy = [None] * 2 * n
        sy[a] = slice(None)
        sxi = [None] * 2 * n
        sxi[n + a] = slice(None)
        xxi = xxi + x[tuple(sy)] * xi[tuple(sxi)]
    pref = (4.0 * h * eta) ** n
    return pref * np.exp(4j * np.pi * xxi) * out_inner


# ---------------------------------------------------------------------------
# asymptotic expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionTerm:
    """Graded term of the composition expansion, available as a symbol."""

    order: int
    symbol: Symbol


def _multi_indices(n, total):
    if n == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _multi_indices(n - 1, total - head):
            yield (head,) + rest


def expansion_term(a: Symbol, b: Symbol, k: int) -> ExpansionTerm:
    """Exact order-k term: 2^{-k} sum over |alpha|+|beta|=k of
    (-1)^{|beta|}/(alpha! beta!) (D_xi^alpha d_x^beta a)(D_xi^beta d_x^alpha b),
    with D = (2 i pi)^{-1} d."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    n = a.n
    if k > min(a.max_order, b.max_order):
        raise ValueError(f"expansion order {k} exceeds available derivatives")
    terms = []
    coeffs = []
    for ka in range(k + 1):
        kb = k - ka
        for alpha in _multi_indices(n, ka):
            for beta in _multi_indices(n, kb):
                fact = 1.0
                for v in alpha:
                    fact *= math.factorial(v)
                for v in beta:
                    fact *= math.factorial(v)
                coef = (
                    2.0**-k
                    * (-1.0) ** sum(beta)
                    / fact
                    / (TWO_I_PI) ** k
                )
                da = PartialSymbol(a, tuple(beta) + tuple(alpha))
                db = PartialSymbol(b, tuple(alpha) + tuple(beta))
                terms.append(ProductSymbol(da, db))
                coeffs.append(coef)
    if len(terms) == 1:
        sym = ScaledSymbol(coeffs[0], terms[0])
    else:
        sym = SumSymbol(tuple(terms), tuple(coeffs))
    return ExpansionTerm(order=k, symbol=sym)


def poisson_bracket(a: Symbol, b: Symbol) -> Symbol:
    """{a, b} = sum_j d_xi_j a d_x_j b - d_x_j a d_xi_j b."""
    n = a.n
    terms = []
    coeffs = []
    for j in range(n):
        ex = [0] * (2 * n)
        exi = [0] * (2 * n)
        ex[j] = 1
        exi[n + j] = 1
        terms.append(ProductSymbol(PartialSymbol(a, tuple(exi)), PartialSymbol(b, tuple(ex))))
        coeffs.append(1.0)
        terms.append(ProductSymbol(PartialSymbol(a, tuple(ex)), PartialSymbol(b, tuple(exi))))
        coeffs.append(-1.0)
    return SumSymbol(tuple(terms), tuple(coeffs))


# ---------------------------------------------------------------------------
# remainders
# ---------------------------------------------------------------------------


def confinement_gain(g1: QuadraticForm, g2: QuadraticForm) -> float:
    """inf over directions of (g1^sigma(T)/g2(T))^{1/2}; symmetric in (g1, g2)."""
    import scipy.linalg as sla

    from .forms import dual_form

    mu = sla.eigh(dual_form(g1).matrix, g2.matrix, eigvals_only=True)
    return float(np.sqrt(mu[0]))


@dataclass(frozen=True)
class RemainderMeasurement:
    """Sampled sup of a truncation remainder over an interior probe set."""

    order: int
    sup: float
    arg_max: np.ndarray
    gain: float | None
    probes: int


def remainder(a: Symbol, b: Symbol, p: int, disc: Discretization,
              probe_margin: float = 0.25, forms: tuple | None = None,
              check_tails: bool = True,
              composed: GridSymbol | None = None) -> RemainderMeasurement:
    """r_p = (a # b) - sum_{k<p} w_k(a, b), measured on interior probes."""
    if composed is None:
        composed = compose_integral(a, b, disc, check_tails=check_tails)
    probes = disc.interior_probes(margin=probe_margin)
    total = np.asarray(composed.value_at(probes), complex)
    for k in range(p):
        term = expansion_term(a, b, k).symbol
        total = total - np.asarray(term.value_at(probes), complex)
    i = int(np.argmax(np.abs(total)))
    lam = confinement_gain(*forms) if forms is not None else None
    return RemainderMeasurement(order=p, sup=float(np.abs(total[i])),
                                arg_max=probes[i], gain=lam, probes=len(probes))
