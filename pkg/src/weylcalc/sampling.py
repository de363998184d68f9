"""Deterministic sample plans: low-discrepancy lattices plus pinned-seed clouds.

Suprema and infima over the whole phase space are not computable; every
estimator in the package works on a reproducible finite sample and labels
its output as a sampled bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class SampleSpec:
    """Reproducible sampling plan over a phase-space box.

    bounds       per-axis (lo, hi) over the 2n phase coordinates
    lattice      number of low-discrepancy (Halton) points
    cloud        number of pinned-seed uniform random points
    seed         base seed for every random draw derived from this spec
    dirs         directions drawn per sample point in direction-based sups
    pair_scales  metric radii at which estimator point pairs are generated
    """

    bounds: tuple
    lattice: int = 384
    cloud: int = 128
    seed: int = 0
    dirs: int = 6
    pair_scales: tuple = (0.05, 0.15, 0.3, 0.45, 0.6, 0.8, 1.0, 1.2)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed * 9973 + salt)


def box_spec(half_widths, **kwargs) -> SampleSpec:
    """SampleSpec over a box symmetric about the origin."""
    bounds = tuple((-float(h), float(h)) for h in np.atleast_1d(half_widths))
    return SampleSpec(bounds=bounds, **kwargs)


def sample_points(spec: SampleSpec) -> np.ndarray:
    """Halton lattice plus random cloud inside the spec's box, shape (P, 2n)."""
    lo = np.array([b[0] for b in spec.bounds])
    hi = np.array([b[1] for b in spec.bounds])
    if np.any(hi <= lo):
        raise ValueError("sample box is empty")
    halton = qmc.Halton(d=spec.dim, scramble=True, seed=spec.seed)
    u = halton.random(spec.lattice)
    v = spec.rng(1).random((spec.cloud, spec.dim))
    return lo + np.vstack([u, v]) * (hi - lo)


def unit_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((count, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def metric_unit_directions(G: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """Directions T with T^T G T = 1 for a batch of form matrices G (P, d, d).

    Returns shape (P, count, d); uniform on each metric unit sphere.
    """
    G = np.asarray(G, float)
    P, d = G.shape[0], G.shape[-1]
    u = unit_sphere(rng, P * count, d).reshape(P, count, d)
    L = np.linalg.cholesky(G)  # G = L L^T
    # solve L^T T = u  => T = L^{-T} u, giving T^T G T = |u|^2 = 1
    return np.linalg.solve(np.swapaxes(L, -1, -2)[:, None], u[..., None])[..., 0]


def metric_pairs(spec: SampleSpec, matrices_of) -> tuple[np.ndarray, np.ndarray]:
    """Estimator pairs (X, Y): metric-scaled offsets plus long-range pairs.

    ``matrices_of`` maps points (P, 2n) to form matrices (P, 2n, 2n); near
    pairs are placed at the spec's pair_scales measured in each g_X, along
    random directions and along the metric axes (where the extreme ratios of
    the built-in families live), far pairs are independent box draws.
    """
    X0 = sample_points(spec)
    G = matrices_of(X0)
    rng = spec.rng(2)
    rand_dirs = metric_unit_directions(G, rng, max(2, spec.dirs // 2))
    diag = np.sqrt(np.einsum("pii->pi", G))
    eye = np.eye(spec.dim)
    axis_dirs = eye[None, :, :] / diag[:, :, None]
    dirs = np.concatenate([rand_dirs, axis_dirs, -axis_dirs], axis=1)
    scales = np.asarray(spec.pair_scales)
    Y_near = (X0[:, None, None, :] + scales[None, :, None, None] * dirs[:, None, :, :])
    X_near = np.broadcast_to(X0[:, None, None, :], Y_near.shape)

    # absolute-scale axis offsets: long-range constants are often decided at
    # unit Euclidean separations regardless of the local metric scale
    abs_scales = np.array([0.3, 1.0, 3.0])
    Y_abs = (X0[:, None, None, :]
             + abs_scales[None, :, None, None] * eye[None, None, :, :])
    X_abs = np.broadcast_to(X0[:, None, None, :], Y_abs.shape)

    far = spec.rng(3).permutation(len(X0))
    X = np.vstack([X_near.reshape(-1, spec.dim), X_abs.reshape(-1, spec.dim), X0])
    Y = np.vstack([Y_near.reshape(-1, spec.dim), Y_abs.reshape(-1, spec.dim), X0[far]])
    keep = np.linalg.norm(X - Y, axis=1) > 1e-12
    return X[keep], Y[keep]
