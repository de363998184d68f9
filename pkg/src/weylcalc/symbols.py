"""Phase-space symbols with exact derivative access and their norms.

A symbol is a smooth function on R^{2n} (coordinates x_1..x_n, xi_1..xi_n)
exposing multilinear derivatives a^{(k)}(X)(T_1,...,T_k).  The built-in
corpus is backed by symbolic differentiation; cutoff-based symbols carry
exact jets of the window profile; grid symbols hold samples produced by
the composition machinery.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from . import windows
from .forms import QuadraticForm, dual_form
from .metrics import Ball, MetricField, WeightField, point_ball_distance
from .sampling import SampleSpec, metric_unit_directions, sample_points

TWO_PI_I = 2j * np.pi


class DerivativeOrderError(ValueError):
    """A derivative beyond the symbol's available order was requested."""


def _as_batch(X):
    X = np.asarray(X, float)
    if X.ndim == 1:
        return X[None, :], True
    return X, False


class Symbol:
    """Base class; subclasses implement value_at and partial_at."""

    n: int = 1
    max_order: int = 10
    xi_polynomial: bool = False  # polynomially bounded in xi (no xi-decay)

    @property
    def dim(self) -> int:
        return 2 * self.n

    # -- evaluation ----------------------------------------------------
    def value_at(self, X):
        raise NotImplementedError

    def partial_at(self, alpha, X):
        """Mixed partial d^alpha a at points X; alpha is a 2n multi-index."""
        raise NotImplementedError

    def derivative_at(self, X, dirs):
        """a^{(k)}(X)(T_1..T_k) for direction tuples dirs of shape (.., k, 2n)."""
        return _contract_partials(self, X, dirs)

    # -- grid sampling --------------------------------------------------
    def sample_fine(self, disc):
        axes = disc.fine_axes()
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return np.asarray(self.value_at(mesh), complex)

    # -- algebra ----------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, Symbol):
            return ProductSymbol(self, other)
        return ScaledSymbol(complex(other), self)

    __rmul__ = __mul__

    def __add__(self, other):
        return SumSymbol((self, other), (1.0, 1.0))

    def __sub__(self, other):
        return SumSymbol((self, other), (1.0, -1.0))

    def conj(self):
        return ConjSymbol(self)


def _contract_partials(sym: Symbol, X, dirs):
    """Multilinear derivative via mixed partials and tensor contraction."""
    Xb, single = _as_batch(X)
    dirs = np.asarray(dirs, float)
    if dirs.ndim == 2:
        dirs = np.broadcast_to(dirs, (len(Xb),) + dirs.shape)
    k = dirs.shape[-2]
    if k > sym.max_order:
        raise DerivativeOrderError(f"order {k} > max_order {sym.max_order}")
    if k == 0:
        v = np.asarray(sym.value_at(Xb), complex)
        return v[0] if single else v
    d = sym.dim
    cache = {}
    acc = np.zeros(len(Xb), complex)
    slots = np.arange(k)
    for tup in itertools.product(range(d), repeat=k):
        ms = tuple(sorted(tup))
        if ms not in cache:
            alpha = [0] * d
            for i in ms:
                alpha[i] += 1
            cache[ms] = np.asarray(sym.partial_at(tuple(alpha), Xb), complex)
        acc = acc + cache[ms] * np.prod(dirs[:, slots, list(tup)], axis=1)
    return acc[0] if single else acc


def coordinate_symbols(n: int):
    return sp.symbols(
        [f"x{i}" for i in range(n)] + [f"xi{i}" for i in range(n)], real=True
    )


class SympySymbol(Symbol):
    """Symbol defined by a closed-form expression; partials are generated
    symbolically once per multi-index and evaluated vectorized."""

    def __init__(self, expr, n=1, max_order=10, xi_polynomial=False, name=""):
        self.n = n
        self.max_order = max_order
        self.xi_polynomial = xi_polynomial
        self.name = name
        self.coords = coordinate_symbols(n)
        self.expr = sp.sympify(expr)
        self._funcs = {}

    def _fn(self, alpha):
        if alpha not in self._funcs:
            e = self.expr
            for c, a in zip(self.coords, alpha):
                if a:
                    e = sp.diff(e, c, a)
            self._funcs[alpha] = sp.lambdify(self.coords, e, modules="numpy")
        return self._funcs[alpha]

    def _eval(self, alpha, X):
        Xb, single = _as_batch(X)
        cols = [Xb[..., i] for i in range(self.dim)]
        v = self._fn(alpha)(*cols)
        v = np.asarray(v, complex)
        if v.shape != Xb.shape[:-1]:
            v = np.broadcast_to(v, Xb.shape[:-1]).copy()
        return v[0] if single else v

    def value_at(self, X):
        # evaluate on broadcastable point arrays of shape (..., 2n)
        X = np.asarray(X, float)
        cols = [X[..., i] for i in range(self.dim)]
        v = np.asarray(self._fn((0,) * self.dim)(*cols), complex)
        if v.shape != X.shape[:-1]:
            v = np.broadcast_to(v, X.shape[:-1]).copy()
        return v

    def partial_at(self, alpha, X):
        if sum(alpha) > self.max_order:
            raise DerivativeOrderError(f"order {sum(alpha)} > max_order {self.max_order}")
        return self._eval(tuple(alpha), X)


class ScaledSymbol(Symbol):
    def __init__(self, c, a):
        self.c = complex(c)
        self.a = a
        self.n = a.n
        self.max_order = a.max_order
        self.xi_polynomial = a.xi_polynomial

    def value_at(self, X):
        return self.c * np.asarray(self.a.value_at(X), complex)

    def partial_at(self, alpha, X):
        return self.c * np.asarray(self.a.partial_at(alpha, X), complex)

    def derivative_at(self, X, dirs):
        return self.c * np.asarray(self.a.derivative_at(X, dirs), complex)


class SumSymbol(Symbol):
    def __init__(self, terms, coeffs):
        self.terms = tuple(terms)
        self.coeffs = tuple(complex(c) for c in coeffs)
        self.n = self.terms[0].n
        self.max_order = min(t.max_order for t in self.terms)
        self.xi_polynomial = any(t.xi_polynomial for t in self.terms)

    def value_at(self, X):
        return sum(c * np.asarray(t.value_at(X), complex)
                   for c, t in zip(self.coeffs, self.terms))

    def partial_at(self, alpha, X):
        return sum(c * np.asarray(t.partial_at(alpha, X), complex)
                   for c, t in zip(self.coeffs, self.terms))

    def derivative_at(self, X, dirs):
        return sum(c * np.asarray(t.derivative_at(X, dirs), complex)
                   for c, t in zip(self.coeffs, self.terms))


class ProductSymbol(Symbol):
    """Pointwise product with Leibniz-rule partials."""

    def __init__(self, a, b):
        if a.n != b.n:
            raise ValueError("dimension mismatch in symbol product")
        self.a = a
        self.b = b
        self.n = a.n
        self.max_order = min(a.max_order, b.max_order)
        self.xi_polynomial = a.xi_polynomial or b.xi_polynomial

    def value_at(self, X):
        return np.asarray(self.a.value_at(X), complex) * np.asarray(
            self.b.value_at(X), complex
        )

    def partial_at(self, alpha, X):
        alpha = tuple(alpha)
        acc = None
        for beta in itertools.product(*[range(a + 1) for a in alpha]):
            coef = 1.0
            for ai, bi in zip(alpha, beta):
                coef *= math.comb(ai, bi)
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            term = coef * np.asarray(self.a.partial_at(beta, X), complex) * np.asarray(
                self.b.partial_at(gamma, X), complex
            )
            acc = term if acc is None else acc + term
        return acc


class ConjSymbol(Symbol):
    def __init__(self, a):
        self.a = a
        self.n = a.n
        self.max_order = a.max_order
        self.xi_polynomial = a.xi_polynomial

    def value_at(self, X):
        return np.conj(self.a.value_at(X))

    def partial_at(self, alpha, X):
        return np.conj(self.a.partial_at(alpha, X))

    def derivative_at(self, X, dirs):
        return np.conj(self.a.derivative_at(X, dirs))


class ShiftedSymbol(Symbol):
    """Translate of a symbol: value_at(X) = a(X - shift)."""

    def __init__(self, a, shift):
        self.a = a
        self.shift = np.asarray(shift, float)
        self.n = a.n
        self.max_order = a.max_order
        self.xi_polynomial = a.xi_polynomial

    def value_at(self, X):
        return self.a.value_at(np.asarray(X, float) - self.shift)

    def partial_at(self, alpha, X):
        return self.a.partial_at(alpha, np.asarray(X, float) - self.shift)

    def derivative_at(self, X, dirs):
        return self.a.derivative_at(np.asarray(X, float) - self.shift, dirs)


class PartialSymbol(Symbol):
    """A fixed mixed partial of another symbol, as a symbol."""

    def __init__(self, a, alpha):
        self.a = a
        self.alpha = tuple(alpha)
        self.n = a.n
        self.max_order = a.max_order - sum(alpha)
        self.xi_polynomial = a.xi_polynomial
        if self.max_order < 0:
            raise DerivativeOrderError("base symbol lacks the requested order")

    def value_at(self, X):
        return self.a.partial_at(self.alpha, X)

    def partial_at(self, beta, X):
        total = tuple(a + b for a, b in zip(self.alpha, beta))
        return self.a.partial_at(total, X)


def cutoff_jet_values(delta, Gs, dirs, kmax, jet_fn=windows.bump_jets):
    """Directional derivatives of chi0(delta^T Gs delta) up to order kmax.

    delta: (P, d) offsets X - center; Gs: (d, d) or (P, d, d) scaled form;
    dirs: (P, k, d).  Returns array (kmax+1, P) of orders 0..kmax evaluated
    with the full direction tuple at order kmax and prefixes below -- only
    the order-kmax entry uses all directions; lower rows are internal.
    """
    delta = np.asarray(delta, float)
    P = delta.shape[0]
    q = np.einsum("pi,...ij,pj->p", delta, Gs, delta)
    jets = jet_fn(q, kmax)
    if kmax == 0:
        return jets[0].astype(complex)[None]
    q1 = 2.0 * np.einsum("pi,...ij,pkj->pk", delta, Gs, dirs)  # (P, k)
    q2 = 2.0 * np.einsum("pki,...ij,plj->pkl", dirs, Gs, dirs)  # (P, k, k)
    out = np.zeros((kmax + 1, P), complex)
    out[0] = jets[0]
    for k in range(1, kmax + 1):
        acc = np.zeros(P)
        for singles, pairs in windows.pairings(k):
            m = len(singles) + len(pairs)
            term = jets[m].copy()
            for s in singles:
                term = term * q1[:, s]
            for a, b in pairs:
                term = term * q2[:, a, b]
            acc += term
        out[k] = acc
    return out


class QuadraticCutoffSymbol(Symbol):
    """chi0(scale * g(X - center)) with exact jets of every order."""

    def __init__(self, center, form_matrix, scale=1.0, n=None, max_order=8):
        self.center = np.asarray(center, float)
        self.form_matrix = np.asarray(form_matrix, float)
        self.scale = float(scale)
        self.n = n if n is not None else len(self.center) // 2
        self.max_order = max_order
        self.Gs = self.scale * self.form_matrix

    def value_at(self, X):
        X = np.asarray(X, float)
        delta = X - self.center
        q = np.einsum("...i,ij,...j->...", delta, self.Gs, delta)
        return windows.bump(q).astype(complex)

    def derivative_at(self, X, dirs):
        Xb, single = _as_batch(X)
        dirs = np.asarray(dirs, float)
        if dirs.ndim == 2:
            dirs = np.broadcast_to(dirs, (len(Xb),) + dirs.shape)
        k = dirs.shape[-2]
        if k > self.max_order:
            raise DerivativeOrderError(f"order {k} > max_order {self.max_order}")
        vals = cutoff_jet_values(Xb - self.center, self.Gs, dirs, k)[k]
        return vals[0] if single else vals

    def partial_at(self, alpha, X):
        Xb, single = _as_batch(X)
        k = sum(alpha)
        dirs = np.zeros((k, self.dim))
        pos = 0
        for i, a in enumerate(alpha):
            for _ in range(a):
                dirs[pos, i] = 1.0
                pos += 1
        v = self.derivative_at(Xb, dirs)
        return v[0] if single else v

    def support_ball(self) -> Ball:
        """Ball outside which the symbol vanishes: scale * g <= 1."""
        return Ball(
            center=self.center,
            radius=1.0 / math.sqrt(self.scale),
            form=QuadraticForm(self.form_matrix),
        )


class GridSymbol(Symbol):
    """Symbol known through its samples on a discretization's fine grid."""

    max_order = 0

    def __init__(self, disc, values):
        self.disc = disc
        self.values = np.asarray(values, complex)
        self.n = disc.n

    def value_at(self, X):
        Xb, single = _as_batch(X)
        idx = self.disc.fine_index(Xb)
        v = self.values[tuple(idx.T)]
        return v[0] if single else v

    def partial_at(self, alpha, X):
        if sum(alpha) == 0:
            return self.value_at(X)
        raise DerivativeOrderError("grid symbols do not carry derivatives")

    def sample_fine(self, disc):
        if disc is not self.disc and disc != self.disc:
            raise ValueError("grid symbol sampled on a different discretization")
        return self.values


# ---------------------------------------------------------------------------
# built-in corpus
# ---------------------------------------------------------------------------


def _gaussian_expr(coords, center, width):
    q = sum((c - m) ** 2 for c, m in zip(coords, center))
    return sp.exp(-sp.pi * q / width**2)


def builtin_symbols(name: str, n: int = 1, max_order: int = 10, **params) -> Symbol:
    """Construct a named test symbol.

    Names: one, coordinate, gaussian, gauss_projector, oscillatory,
    s10_sample, fp_test, sigma_tau, lorentz_bump, windowed_poly.
    """
    coords = coordinate_symbols(n)
    x, xi = coords[:n], coords[n:]
    if name == "one":
        return SympySymbol(sp.Integer(1), n, max_order, name="one")
    if name == "coordinate":
        axis = int(params.pop("axis", 0))
        _check_params(name, params)
        return SympySymbol(coords[axis], n, max_order,
                           xi_polynomial=axis >= n, name=f"coordinate[{axis}]")
    if name == "gaussian":
        center = np.asarray(params.pop("center", np.zeros(2 * n)), float)
        width = float(params.pop("width", 1.0))
        amp = complex(params.pop("amplitude", 1.0))
        _check_params(name, params)
        return SympySymbol(amp * _gaussian_expr(coords, center, width), n,
                           max_order, name="gaussian")
    if name == "gauss_projector":
        _check_params(name, params)
        q = sum(c**2 for c in coords)
        return SympySymbol(2**n * sp.exp(-2 * sp.pi * q), n, max_order,
                           name="gauss_projector")
    if name == "oscillatory":
        tau = float(params.pop("tau", 0.0))
        radius = params.pop("window_radius", None)
        _check_params(name, params)
        expr = sp.sin(x[0]) * sp.cos(xi[0] / (1 + tau))
        base = SympySymbol(expr, n, max_order, name=f"oscillatory[tau={tau}]")
        if radius is None:
            return base
        window = QuadraticCutoffSymbol(np.zeros(2 * n), np.eye(2 * n),
                                       scale=1.0 / float(radius) ** 2,
                                       max_order=max_order)
        return ProductSymbol(base, window)
    if name == "s10_sample":
        m = float(params.pop("m", 0.0))
        _check_params(name, params)
        expr = (1 + sum(c**2 for c in xi)) ** (sp.Rational(1, 2) * m)
        return SympySymbol(expr, n, max_order, xi_polynomial=m >= 0,
                           name=f"s10_sample[m={m}]")
    if name == "fp_test":
        _check_params(name, params)
        return SympySymbol(sp.sin(x[0]) ** 2 * xi[0] ** 2, n, max_order,
                           xi_polynomial=True, name="fp_test")
    if name == "sigma_tau":
        tau = float(params.pop("tau", 0.0))
        _check_params(name, params)
        expr = sum(c**2 for c in xi) + tau**2 * sp.sin(x[0]) ** 2
        return SympySymbol(expr, n, max_order, xi_polynomial=True,
                           name=f"sigma_tau[tau={tau}]")
    if name == "lorentz_bump":
        center = np.asarray(params.pop("center", np.zeros(2 * n)), float)
        m = int(params.pop("m", 3))
        _check_params(name, params)
        qx = sum((c - mu) ** 2 for c, mu in zip(x, center[:n]))
        qxi = sum((c - mu) ** 2 for c, mu in zip(xi, center[n:]))
        expr = (1 + qx) ** (-m) * sp.exp(-sp.pi * qxi)
        return SympySymbol(expr, n, max_order, name=f"lorentz_bump[m={m}]")
    if name == "windowed_poly":
        # polynomial times a wide plateau window, for expansion-termination tests
        coeffs = params.pop("exponents", ((1,) + (0,) * (2 * n - 1),))
        plateau = float(params.pop("plateau", 4.0))
        _check_params(name, params)
        expr = sp.Integer(0)
        for expo in coeffs:
            term = sp.Integer(1)
            for c, e in zip(coords, expo):
                term *= c**e
            expr += term
        base = SympySymbol(expr, n, max_order, name="poly")
        return ProductSymbol(base, plateau_window(n, plateau, max_order))
    raise ValueError(f"unknown builtin symbol {name!r}")


def plateau_window(n, plateau, max_order=8):
    """Radial window, 1 on |X| <= plateau, 0 outside |X| >= sqrt(2) plateau."""
    return QuadraticCutoffSymbol(np.zeros(2 * n), np.eye(2 * n),
                                 scale=0.5 / plateau**2, max_order=max_order)


def _check_params(name, params):
    if params:
        raise ValueError(f"unknown parameters for {name!r}: {sorted(params)}")


# ---------------------------------------------------------------------------
# semi-norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemiNormReport:
    """Sampled S(m, g) semi-norm up to order l."""

    order: int
    value: float
    per_order: tuple
    arg_max: np.ndarray
    arg_order: int
    spec: SampleSpec

    def __float__(self):
        return self.value


def seminorm(a: Symbol, m, g: MetricField, l: int, spec: SampleSpec) -> SemiNormReport:
    """Sampled sup over points and g-unit direction tuples of
    |a^{(k)}(X)(T_1..T_k)| / m(X), maximized over k <= l."""
    if l > a.max_order:
        raise DerivativeOrderError(f"order {l} > max_order {a.max_order}")
    X = sample_points(spec)
    G = g.matrices(X)
    mv = np.ones(len(X)) if m is None else np.asarray(m.values(X), float)
    rng = spec.rng(11)
    vals0 = np.abs(np.asarray(a.value_at(X), complex)) / mv
    i0 = int(np.argmax(vals0))
    per_order = [float(vals0[i0])]
    best, best_arg, best_k = float(vals0[i0]), X[i0], 0
    for k in range(1, l + 1):
        sup_k = -np.inf
        arg_k = X[0]
        for _ in range(spec.dirs):
            dirs = metric_unit_directions(G, rng, k)  # (P, k, 2n) tuple per point
            v = np.abs(np.asarray(a.derivative_at(X, dirs), complex)) / mv
            i = int(np.argmax(v))
            if v[i] > sup_k:
                sup_k, arg_k = float(v[i]), X[i]
        per_order.append(sup_k)
        if sup_k > best:
            best, best_arg, best_k = sup_k, arg_k, k
    return SemiNormReport(order=l, value=float(best), per_order=tuple(per_order),
                          arg_max=np.asarray(best_arg), arg_order=best_k, spec=spec)


# ---------------------------------------------------------------------------
# confinement norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfinementReport:
    """Table of weighted-decay derivative sups relative to a ball."""

    order: int
    table: np.ndarray  # (l+1, l+1): [k, N]
    combined: float  # max_k table[k, l]
    truncation_radius: float
    certified: bool


class NotConfinedError(RuntimeError):
    """Weighted sup kept growing as the sampling domain expanded."""


def confinement_norms(a: Symbol, g: QuadraticForm, U: Ball, l: int,
                      spec: SampleSpec | None = None, max_shells: int = 12,
                      dirs_per_point: int = 6, seed: int = 0) -> ConfinementReport:
    """Sampled ||a||^{(k,N)}_{g,U} for k, N <= l and the combined norm."""
    gs = dual_form(g)
    margin = np.linalg.eigvalsh(gs.matrix - g.matrix)
    if margin[0] < -1e-10:
        raise ValueError("confinement requires g <= g^sigma")
    if l > a.max_order:
        raise DerivativeOrderError(f"order {l} > max_order {a.max_order}")
    d = 2 * g.dim_n
    rng = np.random.default_rng(seed)
    axis_scale = 1.0 / np.sqrt(np.diag(g.matrix))
    table = np.zeros((l + 1, l + 1))
    prev_shell_max = np.inf
    certified = False
    radius = 0.0
    for shell in range(max_shells):
        r_in = U.radius + 2.0 * shell
        r_out = U.radius + 2.0 * (shell + 1)
        pts = U.center + (rng.random((220, d)) * 2 - 1) * r_out * axis_scale
        db = g(pts - U.center)
        if shell > 0:
            pts = pts[db > r_in**2]
        if len(pts) == 0:
            continue
        w = 1.0 + point_ball_distance(gs.matrix, U, pts)
        shell_max = 0.0
        Tpool = g.unit_directions(rng, dirs_per_point)
        for k in range(l + 1):
            if k == 0:
                base = np.abs(np.asarray(a.value_at(pts), complex))
            else:
                base = np.zeros(len(pts))
                for t in range(dirs_per_point):
                    dirs = np.tile(Tpool[t][None, None, :], (len(pts), k, 1))
                    base = np.maximum(
                        base, np.abs(np.asarray(a.derivative_at(pts, dirs), complex))
                    )
            for N in range(l + 1):
                vals = base * w ** (N / 2.0)
                m = float(np.max(vals)) if len(vals) else 0.0
                table[k, N] = max(table[k, N], m)
                if N == l:
                    shell_max = max(shell_max, m)
        radius = r_out
        top = np.max(table[:, l]) + 1e-300
        if shell > 0 and shell_max <= 1e-3 * top and prev_shell_max <= 1e-3 * top:
            certified = True
            break
        prev_shell_max = shell_max
    else:
        if not certified:
            raise NotConfinedError(
                "weighted sup did not decay within the truncation budget"
            )
    combined = float(np.max(table[:, l]))
    return ConfinementReport(order=l, table=table, combined=combined,
                             truncation_radius=radius, certified=certified)


# ---------------------------------------------------------------------------
# lattice-window (Sjostrand-class) norm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeWindowGrid:
    """Sampling plan for the windowed-transform envelope norm (n = 1)."""

    extent: int = 5          # windows centered on integer points in [-extent, extent]^2
    samples_per_unit: int = 16
    pad: int = 4


def sjostrand_norm(a: Symbol, grid: LatticeWindowGrid | None = None) -> float:
    """Discretized L^1 norm of the envelope sup_j |F(chi_j a)|.

    Windows are unit-lattice translates of a fixed tensor window with
    sum_j chi_j = 1; the Fourier convention is F u (Xi) = int e^{-2 i pi X.Xi} u.
    """
    if a.n != 1:
        raise NotImplementedError("lattice-window norm implemented for n = 1")
    grid = grid or LatticeWindowGrid()
    s = grid.samples_per_unit
    delta = 1.0 / s
    t = (np.arange(2 * s) - s) * delta  # [-1, 1) local window grid
    w1 = windows.lattice_window_1d(t)
    W = np.outer(w1, w1)
    P = grid.pad * 2 * s
    dxi = 1.0 / (P * delta)
    env = None
    centers = range(-grid.extent, grid.extent + 1)
    XX, YY = np.meshgrid(t, t, indexing="ij")
    for jx in centers:
        for jxi in centers:
            pts = np.stack([XX + jx, YY + jxi], axis=-1)
            vals = np.asarray(a.value_at(pts), complex) * W
            pad = np.zeros((P, P), complex)
            pad[: 2 * s, : 2 * s] = vals
            F = np.fft.fft2(pad) * delta**2
            mag = np.abs(F)
            env = mag if env is None else np.maximum(env, mag)
    return float(np.sum(env) * dxi**2)


def fourth_derivative_window_norm(a: Symbol, grid: LatticeWindowGrid | None = None) -> float:
    """Max over fourth-order mixed partials of their lattice-window norms."""
    worst = 0.0
    d = 2 * a.n
    for alpha in itertools.combinations_with_replacement(range(d), 4):
        multi = [0] * d
        for i in alpha:
            multi[i] += 1
        worst = max(worst, sjostrand_norm(PartialSymbol(a, tuple(multi)), grid))
    return worst
