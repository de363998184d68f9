"""Metric-adapted partitions of unity and symbol splitting.

The construction follows the classical recipe: bumps chi0(r^{-2} g_Y(X - Y))
on a lattice of centers, normalized by their weighted lattice sum.  Because
the normalizer is the same lattice sum, the reconstruction identity
sum_Y w_Y phi_Y(X) sqrt(det g_Y) = 1 holds exactly wherever the sum is
positive; lattice refinement is checked through the convergence of the
normalizer field itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import windows
from .metrics import MeshError, MetricField, metric_mesh
from .sampling import SampleSpec
from .symbols import (
    ProductSymbol,
    QuadraticCutoffSymbol,
    SemiNormReport,
    Symbol,
    cutoff_jet_values,
    seminorm,
)


class CoverageError(RuntimeError):
    """The lattice normalizer dropped below its positive floor in-domain."""


class OmegaField(Symbol):
    """Weighted lattice sum of member bumps; the partition normalizer."""

    max_order = 8

    def __init__(self, centers, weights, det_sqrts, forms_scaled, n):
        self.centers = np.asarray(centers, float)
        self.weights = np.asarray(weights, float) * np.asarray(det_sqrts, float)
        self.forms_scaled = np.asarray(forms_scaled, float)  # (K, d, d), r^-2 g_Y
        self.n = n

    def _active(self, X):
        """Pairs (point index, member index) with X inside the member support."""
        q = np.einsum(
            "pki,kij,pkj->pk",
            X[:, None, :] - self.centers[None, :, :],
            self.forms_scaled,
            X[:, None, :] - self.centers[None, :, :],
        )
        return q <= 1.0

    def value_at(self, X):
        X = np.asarray(X, float)
        shape = X.shape[:-1]
        pts = X.reshape(-1, 2 * self.n)
        out = np.zeros(len(pts))
        chunk = max(1, 2_000_000 // max(len(self.centers), 1))
        for s in range(0, len(pts), chunk):
            blk = pts[s : s + chunk]
            q = np.einsum(
                "pki,kij,pkj->pk",
                blk[:, None, :] - self.centers[None, :, :],
                self.forms_scaled,
                blk[:, None, :] - self.centers[None, :, :],
            )
            out[s : s + chunk] = windows.bump(q) @ self.weights
        return out.astype(complex).reshape(shape)

    def derivative_at(self, X, dirs):
        Xb = np.atleast_2d(np.asarray(X, float))
        dirs = np.asarray(dirs, float)
        if dirs.ndim == 2:
            dirs = np.broadcast_to(dirs, (len(Xb),) + dirs.shape)
        k = dirs.shape[-2]
        if k == 0:
            v = self.value_at(Xb)
            return v if np.asarray(X).ndim > 1 else v[0]
        act = self._active(Xb)
        p_idx, k_idx = np.nonzero(act)
        out = np.zeros(len(Xb), complex)
        if len(p_idx):
            delta = Xb[p_idx] - self.centers[k_idx]
            G = self.forms_scaled[k_idx]
            vals = cutoff_jet_values(delta, G, dirs[p_idx], k)[k]
            np.add.at(out, p_idx, vals * self.weights[k_idx])
        return out if np.asarray(X).ndim > 1 else out[0]

    def partial_at(self, alpha, X):
        k = sum(alpha)
        d = 2 * self.n
        ds = np.zeros((k, d))
        pos = 0
        for i, a in enumerate(alpha):
            for _ in range(a):
                ds[pos, i] = 1.0
                pos += 1
        return self.derivative_at(X, ds)

    def subset_derivatives(self, X, dirs, k):
        """Directional derivatives for every subset of the direction tuple.

        Returns dict mapping sorted index tuples (subsets of range(k)) to
        arrays over X; the empty subset maps to the field values.
        """
        Xb = np.atleast_2d(np.asarray(X, float))
        out = {(): np.asarray(self.value_at(Xb), complex)}
        for size in range(1, k + 1):
            for sub in itertools.combinations(range(k), size):
                out[sub] = np.asarray(
                    self.derivative_at(Xb, dirs[:, list(sub), :]), complex
                )
        return out


class PartitionMemberSymbol(Symbol):
    """phi_Y = bump_Y / omega, with exact derivatives of every order.

    Derivatives combine the member bump's jets (Leibniz over direction
    subsets) with the reciprocal of the normalizer (Faa di Bruno over set
    partitions).
    """

    max_order = 8

    def __init__(self, window: QuadraticCutoffSymbol, omega: OmegaField):
        self.window = window
        self.omega = omega
        self.n = window.n

    def value_at(self, X):
        w = np.asarray(self.window.value_at(X), complex)
        om = np.asarray(self.omega.value_at(X), complex)
        return w / om

    def derivative_at(self, X, dirs):
        Xb = np.atleast_2d(np.asarray(X, float))
        dirs = np.asarray(dirs, float)
        if dirs.ndim == 2:
            dirs = np.broadcast_to(dirs, (len(Xb),) + dirs.shape)
        k = dirs.shape[-2]
        if k == 0:
            v = self.value_at(Xb)
            return v if np.asarray(X).ndim > 1 else v[0]
        subs = self.omega.subset_derivatives(Xb, dirs, k)
        u = subs[()]
        inv_cache = {(): 1.0 / u}

        def inv_deriv(subset):
            if subset in inv_cache:
                return inv_cache[subset]
            acc = np.zeros_like(u)
            m = len(subset)
            for part in windows.set_partitions(m):
                nb = len(part)
                term = (-1.0) ** nb * math.factorial(nb) / u ** (nb + 1)
                for block in part:
                    key = tuple(sorted(subset[i] for i in block))
                    term = term * subs[key]
                acc = acc + term
            inv_cache[subset] = acc
            return acc

        win_cache = {}

        def win_deriv(subset):
            if subset in win_cache:
                return win_cache[subset]
            if len(subset) == 0:
                v = np.asarray(self.window.value_at(Xb), complex)
            else:
                v = np.asarray(
                    self.window.derivative_at(Xb, dirs[:, list(subset), :]), complex
                )
            win_cache[subset] = v
            return v

        total = np.zeros(len(Xb), complex)
        for size in range(k + 1):
            for sub in itertools.combinations(range(k), size):
                comp = tuple(i for i in range(k) if i not in sub)
                total = total + win_deriv(sub) * inv_deriv(comp)
        return total if np.asarray(X).ndim > 1 else total[0]

    def partial_at(self, alpha, X):
        k = sum(alpha)
        d = 2 * self.n
        ds = np.zeros((k, d))
        pos = 0
        for i, a in enumerate(alpha):
            for _ in range(a):
                ds[pos, i] = 1.0
                pos += 1
        return self.derivative_at(X, ds)


@dataclass(frozen=True)
class PartitionMember:
    center: np.ndarray
    weight: float
    det_sqrt: float
    window: QuadraticCutoffSymbol       # bump on U_{Y,r}
    plateau: QuadraticCutoffSymbol      # 1 on U_{Y,r}, supported in U_{Y,2r}
    phi: PartitionMemberSymbol


@dataclass(frozen=True)
class PartitionGrid:
    """Lattice of centers with quadrature weights, members, and normalizer."""

    metric: MetricField
    radius: float
    bounds: tuple
    centers: np.ndarray
    weights: np.ndarray
    det_sqrts: np.ndarray
    members: tuple
    omega: OmegaField
    floor: float
    eta: float

    @property
    def size(self) -> int:
        return len(self.centers)

    def reconstruction_values(self, X) -> np.ndarray:
        """sum_Y w_Y phi_Y(X) sqrt(det g_Y); equals 1 wherever omega > 0."""
        X = np.asarray(X, float)
        total = np.zeros(X.shape[:-1], complex)
        for m in self.members:
            total = total + m.weight * m.det_sqrt * m.phi.value_at(X)
        return total

    def interior_mask(self, X, margin_factor: float = 2.0) -> np.ndarray:
        """Points whose margin_factor * r ball stays inside the domain box."""
        X = np.atleast_2d(np.asarray(X, float))
        G = self.metric.matrices(X)
        reach = margin_factor * self.radius / np.sqrt(
            np.einsum("pii->pi", G)
        )
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((X - reach >= lo) & (X + reach <= hi), axis=1)


def build_partition(metric: MetricField, r: float, bounds, eta: float = 0.5,
                    c0: float | None = None, max_cells: int = 200_000,
                    floor_safety: float = 0.05) -> PartitionGrid:
    """Construct the partition lattice and its members over a box domain.

    r must not exceed 1/sqrt(c0) when c0 is supplied.  The lattice covers
    the box extended by the bump reach so that the normalizer stays bounded
    below on the domain itself.
    """
    if c0 is not None and r > 1.0 / math.sqrt(c0) + 1e-12:
        raise ValueError(f"radius {r} exceeds admitted 1/sqrt(c0) = {1.0 / math.sqrt(c0):.4f}")
    lo = np.array([b[0] for b in bounds], float)
    hi = np.array([b[1] for b in bounds], float)
    d = len(lo)

    # extend the box by the local bump reach so edge points stay covered
    probe_axes = [np.linspace(lo[a], hi[a], 7) for a in range(d)]
    probes = np.stack(np.meshgrid(*probe_axes, indexing="ij"), axis=-1).reshape(-1, d)
    Gp = metric.matrices(probes)
    reach = 1.25 * r / np.sqrt(np.einsum("pii->pi", Gp).min(axis=0))
    ext = [(lo[a] - reach[a], hi[a] + reach[a]) for a in range(d)]

    centers, volumes = metric_mesh(metric, ext, eta * r, max_cells=max_cells)
    G = metric.matrices(centers)
    dets = np.sqrt(np.linalg.det(G))
    forms_scaled = G / r**2
    omega = OmegaField(centers, volumes, dets, forms_scaled, metric.dim_n)

    members = []
    for i in range(len(centers)):
        window = QuadraticCutoffSymbol(centers[i], G[i], scale=1.0 / r**2)
        plateau = QuadraticCutoffSymbol(centers[i], G[i], scale=0.5 / r**2)
        members.append(
            PartitionMember(
                center=centers[i],
                weight=float(volumes[i]),
                det_sqrt=float(dets[i]),
                window=window,
                plateau=plateau,
                phi=PartitionMemberSymbol(window, omega),
            )
        )

    # positive floor on the domain: reference value for the exact integral
    # of the bump against a frozen metric, discounted by slow variation
    spec = SampleSpec(bounds=tuple(bounds), lattice=512, cloud=64, seed=7)
    from .sampling import sample_points

    pts = sample_points(spec)
    om = np.real(omega.value_at(pts))
    ref = bump_plane_integral(metric.dim_n) * r ** (2 * metric.dim_n)
    if c0 is not None:
        ref *= c0 ** (-2 * metric.dim_n)
    floor = floor_safety * ref
    if np.min(om) < floor:
        raise CoverageError(
            f"normalizer minimum {np.min(om):.3e} below floor {floor:.3e}; "
            "lattice too coarse or domain extension too small"
        )
    return PartitionGrid(
        metric=metric, radius=r, bounds=tuple(bounds), centers=centers,
        weights=volumes, det_sqrts=dets, members=tuple(members), omega=omega,
        floor=float(floor), eta=eta,
    )


def bump_plane_integral(n: int) -> float:
    """integral of chi0(|Z|^2) over R^{2n}, by radial quadrature."""
    from scipy.integrate import quad

    # int chi0(|Z|^2) dZ = vol(S^{2n-1}) int_0^inf chi0(rho^2) rho^{2n-1} drho
    surf = 2 * np.pi**n / math.factorial(n - 1)
    val, _ = quad(lambda rho: windows.bump(np.array([rho**2]))[0] * rho ** (2 * n - 1),
                  0.0, 1.0, limit=200)
    return surf * val


def member_seminorms(member: PartitionMember, metric: MetricField, l: int,
                     seed: int = 0, points: int = 160) -> SemiNormReport:
    """Frozen-domain S(1, g) semi-norm of phi_Y, sampled near its support."""
    G = metric.matrices(member.center[None, :])[0]
    axis = 1.0 / np.sqrt(np.diag(G))
    r_eff = 1.0 / math.sqrt(member.window.scale)
    b = [
        (member.center[a] - 1.3 * r_eff * axis[a], member.center[a] + 1.3 * r_eff * axis[a])
        for a in range(len(member.center))
    ]
    spec = SampleSpec(bounds=tuple(b), lattice=points, cloud=points // 4,
                      seed=seed, dirs=4)
    return seminorm(member.phi, None, metric, l, spec)


def split_symbol(a: Symbol, grid: PartitionGrid, mu: float | None = None):
    """Members a_Y = phi_Y a of the partition splitting of a symbol.

    Requires r <= 1/sqrt(mu) for the weight constant when supplied; the
    reconstruction sum_Y w_Y a_Y sqrt(det g_Y) reproduces a wherever the
    normalizer is positive.
    """
    if mu is not None and grid.radius > 1.0 / math.sqrt(mu) + 1e-12:
        raise ValueError("partition radius exceeds the weight's admitted radius")
    return tuple(ProductSymbol(m.phi, a) for m in grid.members)
