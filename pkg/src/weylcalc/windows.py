"""Smooth compactly supported cutoff profiles with exact derivative jets.

The canonical profile is

    chi0(t) = f(1-t) / (f(1-t) + f(t-1/2)),   f(s) = exp(-1/s) for s > 0,

non-increasing, identically 1 on t <= 1/2 and 0 on t >= 1.  On the open
transition band it equals the logistic sigmoid of w(t) = 1/(1-t) - 1/(t-1/2),
which gives numerically stable derivatives of every order: sigmoid
derivatives are integer polynomials in the sigmoid itself, and w has simple
closed-form derivatives, combined by the Faa di Bruno formula.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MAX_JET_ORDER = 12
_EXP_GUARD = 500.0


@lru_cache(maxsize=None)
def _sigmoid_polys(kmax: int):
    """Coefficients (low->high) of P_k with d^k sigma/dz^k = P_k(sigma)."""
    from numpy.polynomial import polynomial as poly

    polys = [np.array([0.0, 1.0])]
    for _ in range(kmax):
        dp = poly.polyder(polys[-1])
        polys.append(poly.polymul(dp, np.array([0.0, -1.0, 1.0])))
    return polys


def _sigmoid_jets(z: np.ndarray, kmax: int) -> np.ndarray:
    """[sigma, sigma', ..., sigma^(kmax)] at z for sigma(z) = 1/(1+e^z)."""
    from numpy.polynomial import polynomial as poly

    z = np.asarray(z, float)
    out = np.zeros((kmax + 1,) + z.shape)
    s = np.empty_like(z)
    mid = np.abs(z) <= _EXP_GUARD
    s[mid] = 1.0 / (1.0 + np.exp(z[mid]))
    s[z > _EXP_GUARD] = 0.0
    s[z < -_EXP_GUARD] = 1.0
    out[0] = s
    polys = _sigmoid_polys(kmax)
    for k in range(1, kmax + 1):
        out[k] = poly.polyval(s, polys[k])
    return out


def _w_jets(t: np.ndarray, kmax: int) -> np.ndarray:
    """Derivatives of w(t) = 1/(1-t) - 1/(t-1/2) on the open band (1/2, 1)."""
    t = np.asarray(t, float)
    out = np.empty((kmax + 1,) + t.shape)
    a = 1.0 - t
    b = t - 0.5
    for j in range(kmax + 1):
        fac = math.factorial(j)
        out[j] = fac / a ** (j + 1) - fac * (-1.0) ** j / b ** (j + 1)
    return out


@lru_cache(maxsize=None)
def _bell_splits(k: int, m: int):
    """Index data for the partial Bell polynomial recurrence B_{k,m}."""
    return [(j, math.comb(k - 1, j - 1)) for j in range(1, k - m + 2)]


def _compose_jets(outer: np.ndarray, inner: np.ndarray, kmax: int) -> np.ndarray:
    """Faa di Bruno: jets of f(g(t)) from jets of f at g(t) and jets of g."""
    shape = inner.shape[1:]
    # bell[k][m] = B_{k,m}(g', g'', ...)
    bell = [[None] * (kmax + 1) for _ in range(kmax + 1)]
    bell[0][0] = np.ones(shape)
    for k in range(1, kmax + 1):
        for m in range(1, k + 1):
            acc = np.zeros(shape)
            for j, c in _bell_splits(k, m):
                prev = bell[k - j][m - 1]
                if prev is not None:
                    acc += c * inner[j] * prev
            bell[k][m] = acc
    out = np.empty((kmax + 1,) + shape)
    out[0] = outer[0]
    for k in range(1, kmax + 1):
        acc = np.zeros(shape)
        for m in range(1, k + 1):
            acc += outer[m] * bell[k][m]
        out[k] = acc
    return out


def bump_jets(t: np.ndarray, kmax: int) -> np.ndarray:
    """Values and t-derivatives of chi0 up to order kmax, shape (kmax+1, ...).

    Exact plateaus: chi0 = 1 with zero jets for t <= 1/2, chi0 = 0 for t >= 1.
    """
    if kmax > MAX_JET_ORDER:
        raise ValueError(f"jet order {kmax} exceeds supported {MAX_JET_ORDER}")
    t = np.asarray(t, float)
    out = np.zeros((kmax + 1,) + t.shape)
    out[0][t <= 0.5] = 1.0
    band = (t > 0.5) & (t < 1.0)
    if np.any(band):
        tb = t[band]
        wj = _w_jets(tb, kmax)
        sj = _sigmoid_jets(wj[0], kmax)
        comp = _compose_jets(sj, wj, kmax)
        for k in range(kmax + 1):
            out[k][band] = comp[k]
    return out


def bump(t: np.ndarray) -> np.ndarray:
    """chi0 values alone."""
    return bump_jets(t, 0)[0]


def ramp(u: np.ndarray) -> np.ndarray:
    """Smooth ramp rising 0 -> 1 on [0, 1] with ramp(u) + ramp(1-u) = 1."""
    u = np.asarray(u, float)
    out = np.zeros(u.shape)
    out[u >= 1.0] = 1.0
    band = (u > 0.0) & (u < 1.0)
    if np.any(band):
        ub = u[band]
        v = 1.0 / ub - 1.0 / (1.0 - ub)
        v = np.clip(v, -_EXP_GUARD, _EXP_GUARD)
        out[band] = 1.0 / (1.0 + np.exp(v))
    return out


def lattice_window_1d(t: np.ndarray) -> np.ndarray:
    """Window p with sum_{k in Z} p(t - k) = 1, supported in [-1, 1]."""
    return ramp(1.0 - np.abs(np.asarray(t, float)))


@lru_cache(maxsize=None)
def set_partitions(k: int):
    """All partitions of {0..k-1} into nonempty blocks (tuples of tuples)."""
    if k == 0:
        return ((),)
    out = []
    for part in set_partitions(k - 1):
        first = k - 1
        out.append(part + ((first,),))
        for i, block in enumerate(part):
            out.append(part[:i] + (block + (first,),) + part[i + 1 :])
    return tuple(out)


@lru_cache(maxsize=None)
def pairings(k: int):
    """Partitions of {0..k-1} into singletons and pairs.

    Returns tuples (singles, pairs); used to differentiate compositions with
    a quadratic inner function, whose jets beyond order two vanish.
    """
    if k == 0:
        return (((), ()),)
    out = []
    for singles, prs in pairings(k - 1):
        first = k - 1
        out.append(((first,) + singles, prs))
        for i, s in enumerate(singles):
            rest = singles[:i] + singles[i + 1 :]
            out.append((rest, prs + ((s, first),)))
    return tuple(out)
