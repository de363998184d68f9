"""Phase-space metric fields, weights, structure constants, and distances.

A metric field maps X in R^{2n} to a positive-definite quadratic form g_X.
Slowness and temperance constants are estimated on reproducible samples and
reported as lower bounds of the true constants; suprema over the whole
space are not computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .forms import (
    QuadraticForm,
    dual_matrix,
    gain_matrix,
    harmonic_mean_matrix,
)
from .sampling import SampleSpec, metric_pairs, sample_points


class EstimationError(RuntimeError):
    """An estimator could not certify a constant on the given samples."""


class QuadratureError(RuntimeError):
    """A truncated quadrature failed its tail criterion."""


class MeshError(RuntimeError):
    """A metric-adapted mesh could not satisfy its resolution target."""


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricField:
    """Field X -> g_X of positive-definite forms, with batched evaluation."""

    dim_n: int
    name: str
    params: tuple
    _matrices: callable = field(repr=False)
    is_constant: bool = False

    def matrices(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        G = self._matrices(X)
        return np.asarray(G, float)

    def form(self, X) -> QuadraticForm:
        return QuadraticForm(self.matrices(np.asarray(X, float)[None, :])[0])

    def dual_matrices(self, X) -> np.ndarray:
        return dual_matrix(self.matrices(X))

    def gain_values(self, X) -> np.ndarray:
        return gain_matrix(self.matrices(X))

    def det_sqrt(self, X) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.matrices(X)))

    def value(self, X, T) -> np.ndarray:
        """g_X(T) batched over matching leading axes."""
        G = self.matrices(X)
        T = np.asarray(T, float)
        return np.einsum("...i,...ij,...j->...", T, G, T)


@dataclass(frozen=True)
class WeightField:
    """Positive function on phase space used to grade symbol classes."""

    dim_n: int
    name: str
    _values: callable = field(repr=False)

    def values(self, X) -> np.ndarray:
        v = np.asarray(self._values(np.asarray(X, float)), float)
        if np.any(v <= 0):
            raise ValueError(f"weight {self.name} is not strictly positive")
        return v


def gain_weight(metric: MetricField, s: float) -> WeightField:
    """The weight gain(g)^s attached to a metric field."""
    return WeightField(
        dim_n=metric.dim_n,
        name=f"gain^{s}",
        _values=lambda X: metric.gain_values(X) ** s,
    )


def constant_weight(dim_n: int, c: float = 1.0) -> WeightField:
    return WeightField(dim_n, f"const[{c}]", lambda X: np.full(np.asarray(X).shape[:-1], float(c)))


@dataclass(frozen=True)
class Family:
    """A named metric together with its natural weight scale."""

    metric: MetricField
    weight_kind: str  # "xi_power" | "gain_power"

    def sample_spec(self, x_half: float = 6.0, xi_half: float = 30.0,
                    **kwargs) -> "SampleSpec":
        """Sampling box adapted to the family's natural scale.

        For the tau family the xi-extent grows with 1 + tau: in the scaled
        coordinate xi/(1 + tau) the metric is parameter-free, so scaled boxes
        make estimates comparable (and essentially equal) across tau.
        """
        n = self.metric.dim_n
        scale = 1.0
        if self.metric.name == "sigma_tau":
            scale = 1.0 + dict(self.metric.params)["tau"]
        bounds = tuple([(-x_half, x_half)] * n + [(-xi_half * scale, xi_half * scale)] * n)
        return SampleSpec(bounds=bounds, **kwargs)

    def weight(self, order: float) -> WeightField:
        if self.weight_kind == "gain_power":
            return gain_weight(self.metric, order)
        name = self.metric.name
        params = dict(self.metric.params)
        n = self.metric.dim_n
        if name == "s10":
            fn = lambda X: (1.0 + np.abs(X[..., n:]).sum(axis=-1)) ** order
        else:  # sigma_tau
            tau = params["tau"]
            fn = lambda X: (1.0 + np.abs(X[..., n:]).sum(axis=-1) + tau) ** order
        return WeightField(n, f"{name}_weight[{order}]", fn)


def builtin_family(name: str, dim_n: int = 1, **params) -> Family:
    """Named metric families with their matching weights.

    constant (matrix), s10, sigma_tau (tau >= 0), shubin, semiclassical
    (0 < h <= 1).
    """
    n = dim_n
    d = 2 * n

    def _diag_xi(profile):
        def mats(X):
            X = np.asarray(X, float)
            lam = profile(X)
            G = np.zeros(X.shape[:-1] + (d, d))
            idx = np.arange(n)
            G[..., idx, idx] = 1.0
            G[..., n + idx, n + idx] = (1.0 / lam**2)[..., None]
            return G

        return mats

    if name == "constant":
        G0 = np.asarray(params.pop("matrix", np.eye(d)), float)
        _reject_params(name, params)
        QuadraticForm(G0)  # validates
        metric = MetricField(n, "constant", (("matrix", G0.tobytes()),),
                             lambda X: np.broadcast_to(G0, np.asarray(X).shape[:-1] + (d, d)).copy(),
                             is_constant=True)
        return Family(metric, "gain_power")
    if name == "s10":
        _reject_params(name, params)
        profile = lambda X: np.sqrt(1.0 + (X[..., n:] ** 2).sum(axis=-1))
        metric = MetricField(n, "s10", (), _diag_xi(profile))
        return Family(metric, "xi_power")
    if name == "sigma_tau":
        tau = float(params.pop("tau", 0.0))
        _reject_params(name, params)
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        profile = lambda X: 1.0 + np.abs(X[..., n:]).sum(axis=-1) + tau
        metric = MetricField(n, "sigma_tau", (("tau", tau),), _diag_xi(profile))
        return Family(metric, "xi_power")
    if name == "shubin":
        _reject_params(name, params)

        def mats(X):
            X = np.asarray(X, float)
            mu = 1.0 / (1.0 + (X**2).sum(axis=-1))
            return mu[..., None, None] * np.eye(d)

        return Family(MetricField(n, "shubin", (), mats), "gain_power")
    if name == "semiclassical":
        h = float(params.pop("h", 1.0))
        _reject_params(name, params)
        if not 0 < h <= 1:
            raise ValueError("h must lie in (0, 1]")
        metric = MetricField(
            n, "semiclassical", (("h", h),),
            lambda X: np.broadcast_to(h * np.eye(d), np.asarray(X).shape[:-1] + (d, d)).copy(),
            is_constant=True)
        return Family(metric, "gain_power")
    raise ValueError(f"unknown metric family {name!r}")


def _reject_params(name, params):
    if params:
        raise ValueError(f"unknown parameters for {name!r}: {sorted(params)}")


# ---------------------------------------------------------------------------
# structure constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyReport:
    passed: bool
    worst_margin: float
    worst_point: np.ndarray


def check_uncertainty(metric: MetricField, spec: SampleSpec) -> UncertaintyReport:
    """Verify g_X <= g_X^sigma at every sample; margin is the most negative
    eigenvalue of g^sigma - g found."""
    X = sample_points(spec)
    G = metric.matrices(X)
    D = metric.dual_matrices(X)
    eigs = np.linalg.eigvalsh(D - G)
    worst = int(np.argmin(eigs[:, 0]))
    margin = float(eigs[worst, 0])
    return UncertaintyReport(passed=margin >= -1e-10, worst_margin=margin,
                             worst_point=X[worst])


def _pair_ratio_extremes(GX, GY):
    """Per pair: max and min over T of g_X(T)/g_Y(T) (pencil eigenvalues)."""
    L = np.linalg.cholesky(GY)
    Linv = np.linalg.inv(L)
    K = Linv @ GX @ np.swapaxes(Linv, -1, -2)
    mu = np.linalg.eigvalsh(K)
    return mu[..., -1], mu[..., 0]


@dataclass(frozen=True)
class SlownessEstimate:
    """Smallest sampled C such that g_X(X-Y) <= 1/C forces ratio bounds C.

    A lower bound of the true constant; ratio_sup is the largest two-sided
    ratio seen among admitted pairs.
    """

    c0: float
    ratio_sup: float
    cut: float
    pairs: int


def estimate_slowness(metric: MetricField, spec: SampleSpec) -> SlownessEstimate:
    X, Y = metric_pairs(spec, metric.matrices)
    GX = metric.matrices(X)
    GY = metric.matrices(Y)
    d2 = np.einsum("pi,pij,pj->p", X - Y, GX, X - Y)
    hi, lo = _pair_ratio_extremes(GX, GY)
    rho = np.maximum(hi, 1.0 / lo)
    order = np.argsort(d2)
    d2s = d2[order]
    prefix = np.maximum.accumulate(rho[order])
    # candidate C at cut k: every pair with d2 <= d2s[k] must satisfy the
    # ratio bound, and the cut must admit the ball radius 1/C
    cand = np.maximum.reduce([prefix, 1.0 / np.maximum(d2s, 1e-300),
                              np.ones_like(d2s)])
    k = int(np.argmin(cand))
    if not np.isfinite(cand[k]):
        raise EstimationError("no admissible pairs for slowness estimation")
    return SlownessEstimate(c0=float(cand[k]), ratio_sup=float(prefix[-1]),
                            cut=float(np.sqrt(d2s[k])), pairs=len(d2s))


@dataclass(frozen=True)
class TemperanceEstimate:
    """Least certified exponent and companion constant for the long-range
    ratio bound; c0 is the sampled sup of ratio / distance^n0."""

    c0: float
    n0: int
    slope: float
    certified: bool
    worst_pair: tuple


def _temperance_scan(s, D, pairs_xy, candidates, growth_slack=1.10):
    big = D >= 2.0
    lo = np.log(D[D > 1.2]) if np.any(D > 1.2) else None
    slope = 0.0
    if lo is not None and len(lo) > 8:
        ls = np.log(s[D > 1.2])
        A = np.vstack([lo, np.ones_like(lo)]).T
        slope = float(np.linalg.lstsq(A, ls, rcond=None)[0][0])
    for n0 in candidates:
        ratio = s / D**n0
        c0 = float(np.max(ratio))
        i = int(np.argmax(ratio))
        if not np.any(big):
            return c0, n0, slope, True, (pairs_xy[0][i], pairs_xy[1][i])
        Dbig = D[big]
        med = np.median(Dbig)
        near_mask = ~big | (D <= med)
        far_mask = big & (D > med)
        c_near = np.max(ratio[near_mask]) if np.any(near_mask) else 0.0
        c_far = np.max(ratio[far_mask]) if np.any(far_mask) else 0.0
        if c_far <= growth_slack * max(c_near, 1e-300):
            return c0, n0, slope, True, (pairs_xy[0][i], pairs_xy[1][i])
    ratio = s / D ** candidates[-1]
    i = int(np.argmax(ratio))
    return float(np.max(ratio)), candidates[-1], slope, False, (
        pairs_xy[0][i], pairs_xy[1][i])


def estimate_temperance(metric: MetricField, spec: SampleSpec,
                        candidates=tuple(range(9))) -> TemperanceEstimate:
    X0, Y0 = metric_pairs(spec, metric.matrices)
    X = np.vstack([X0, Y0])
    Y = np.vstack([Y0, X0])
    GX = metric.matrices(X)
    GY = metric.matrices(Y)
    hi, _ = _pair_ratio_extremes(GX, GY)
    H = harmonic_mean_matrix(dual_matrix(GX), dual_matrix(GY))
    D = 1.0 + np.einsum("pi,pij,pj->p", X - Y, H, X - Y)
    c0, n0, slope, certified, worst = _temperance_scan(hi, D, (X, Y), list(candidates))
    if not certified:
        raise EstimationError(
            f"no exponent in {list(candidates)} certifies temperance; "
            f"worst pair {worst[0]} / {worst[1]}"
        )
    return TemperanceEstimate(c0=c0, n0=n0, slope=slope, certified=certified,
                              worst_pair=worst)


@dataclass(frozen=True)
class WeightEstimate:
    mu: float
    nu: int
    slope: float
    certified: bool


def weight_constants(m: WeightField, g: MetricField, spec: SampleSpec,
                     candidates=tuple(range(9))) -> WeightEstimate:
    """Sampled slow-variation and long-range constants of a weight."""
    X, Y = metric_pairs(spec, g.matrices)
    mX = m.values(X)
    mY = m.values(Y)
    GX = g.matrices(X)
    d2 = np.einsum("pi,pij,pj->p", X - Y, GX, X - Y)
    r = np.maximum(mX / mY, mY / mX)
    order = np.argsort(d2)
    prefix = np.maximum.accumulate(r[order])
    cand = np.maximum.reduce([prefix, 1.0 / np.maximum(d2[order], 1e-300),
                              np.ones_like(prefix)])
    mu = float(np.min(cand))
    # long-range: both orderings of every pair
    Xb = np.vstack([X, Y])
    Yb = np.vstack([Y, X])
    s = np.concatenate([mX / mY, mY / mX])
    H = harmonic_mean_matrix(dual_matrix(g.matrices(Xb)), dual_matrix(g.matrices(Yb)))
    D = 1.0 + np.einsum("pi,pij,pj->p", Xb - Yb, H, Xb - Yb)
    _, nu, slope, certified, worst = _temperance_scan(s, D, (Xb, Yb), list(candidates))
    if not certified:
        raise EstimationError(f"weight temperance not certified; worst pair {worst}")
    return WeightEstimate(mu=mu, nu=nu, slope=slope, certified=certified)


@dataclass(frozen=True)
class StructureConstants:
    """Sampled structure constants of a metric (and optionally a weight).

    c0_slow and c0_temper are reported separately and c0 is their max; the
    two roles are not merged beyond that.
    """

    c0: float
    n0: int
    c0_slow: float
    c0_temper: float
    mu_m: float | None = None
    nu_m: int | None = None

    def __post_init__(self):
        if self.c0 < 1.0:
            raise ValueError("c0 must be >= 1")


def structure_constants(metric: MetricField, spec: SampleSpec,
                        weight: WeightField | None = None) -> StructureConstants:
    slow = estimate_slowness(metric, spec)
    temper = estimate_temperance(metric, spec)
    mu = nu = None
    if weight is not None:
        west = weight_constants(weight, metric, spec)
        mu, nu = west.mu, west.nu
    return StructureConstants(
        c0=max(1.0, slow.c0, temper.c0),
        n0=temper.n0,
        c0_slow=slow.c0,
        c0_temper=temper.c0,
        mu_m=mu,
        nu_m=nu,
    )


# ---------------------------------------------------------------------------
# balls and distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Metric ball {X : form(X - center) <= radius^2}."""

    center: np.ndarray
    radius: float
    form: QuadraticForm

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, float))

    def contains(self, X) -> np.ndarray:
        return self.form(np.asarray(X, float) - self.center) <= self.radius**2


def _project_to_ball(A, ball: Ball, P, iters=90):
    """Minimizers over the ball of (u - p)^T A (u - p), batched over points.

    A: (d, d) or (K, d, d); P: (K, d).  Newton-free bisection on the
    Lagrange multiplier; exact for interior points.
    """
    P = np.atleast_2d(np.asarray(P, float))
    K, d = P.shape
    B = ball.form.matrix
    c = ball.center
    rho2 = ball.radius**2
    inside = ball.form(P - c) <= rho2
    out = P.copy()
    act = ~inside
    if not np.any(act):
        return out
    Aact = np.broadcast_to(A, (K, d, d))[act]
    Pact = P[act]
    rhs0 = np.einsum("kij,kj->ki", Aact, Pact)
    Bc = B @ c

    def x_of(lam):
        M = Aact + lam[:, None, None] * B
        rhs = rhs0 + lam[:, None] * Bc
        return np.linalg.solve(M, rhs[..., None])[..., 0]

    def phi(lam):
        x = x_of(lam)
        return np.einsum("ki,ij,kj->k", x - c, B, x - c) - rho2

    lo = np.zeros(act.sum())
    hi = np.ones(act.sum())
    for _ in range(80):
        bad = phi(hi) > 0
        if not np.any(bad):
            break
        hi[bad] *= 4.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = phi(mid) > 0
        lo[pos] = mid[pos]
        hi[~pos] = mid[~pos]
    out[act] = x_of(0.5 * (lo + hi))
    return out


def point_ball_distance(A, ball: Ball, X) -> np.ndarray:
    """inf over u in the ball of (X - u)^T A (X - u), batched over X."""
    Xb = np.atleast_2d(np.asarray(X, float))
    proj = _project_to_ball(np.asarray(A, float), ball, Xb)
    diff = Xb - proj
    vals = np.einsum("ki,ij,kj->k", diff, np.asarray(A, float), diff)
    vals = np.where(ball.form(Xb - ball.center) <= ball.radius**2, 0.0, vals)
    return vals if np.asarray(X).ndim > 1 else float(vals[0])


def ball_distance(b1: Ball, b2: Ball, form: QuadraticForm,
                  max_sweeps: int = 200, tol: float = 1e-13) -> float:
    """inf of form(u - v) over u in b1, v in b2, by alternating projection."""
    vals = _ball_distances_batch(
        np.asarray(form.matrix, float)[None],
        b1.center[None], np.array([b1.radius]), b1.form.matrix[None],
        b2.center[None], np.array([b2.radius]), b2.form.matrix[None],
        max_sweeps=max_sweeps, tol=tol,
    )
    return float(vals[0])


def _ball_distances_batch(F, c1, r1, G1, c2, r2, G2, max_sweeps=80, tol=1e-12):
    """Batched alternating projection between ellipsoid pairs.

    F: (K, d, d) objective forms; balls given by centers (K, d), radii (K,),
    and form matrices (K, d, d).
    """
    K, d = c1.shape
    u = c1.copy()
    v = c2.copy()
    prev = np.full(K, np.inf)
    scale = np.einsum("ki,kij,kj->k", c1 - c2, F, c1 - c2) + 1.0
    for _ in range(max_sweeps):
        u = _project_pair(F, G1, c1, r1, v)
        v = _project_pair(F, G2, c2, r2, u)
        val = np.einsum("ki,kij,kj->k", u - v, F, u - v)
        if np.all(np.abs(val - prev) <= tol * np.maximum(val, 1.0)):
            prev = val
            break
        prev = val
    val = np.where(prev < 1e-10 * scale, 0.0, prev)
    return val


def _project_pair(F, G, c, r, p):
    """Batched projection of points p onto balls (c, r, G) in metrics F."""
    K, d = p.shape
    rho2 = r**2
    vals = np.einsum("ki,kij,kj->k", p - c, G, p - c)
    act = vals > rho2
    out = p.copy()
    if not np.any(act):
        return out
    Fa, Ga, ca, pa = F[act], G[act], c[act], p[act]
    rhoa = rho2[act]
    rhs0 = np.einsum("kij,kj->ki", Fa, pa)
    Bc = np.einsum("kij,kj->ki", Ga, ca)

    def x_of(lam):
        M = Fa + lam[:, None, None] * Ga
        rhs = rhs0 + lam[:, None] * Bc
        return np.linalg.solve(M, rhs[..., None])[..., 0]

    def phi(lam):
        x = x_of(lam)
        return np.einsum("ki,kij,kj->k", x - ca, Ga, x - ca) - rhoa

    lo = np.zeros(act.sum())
    hi = np.ones(act.sum())
    for _ in range(80):
        bad = phi(hi) > 0
        if not np.any(bad):
            break
        hi[bad] *= 4.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        pos = phi(mid) > 0
        lo[pos] = mid[pos]
        hi[~pos] = mid[~pos]
    out[act] = x_of(0.5 * (lo + hi))
    return out


def ball_separations(metric: MetricField, X, Ys, r: float) -> np.ndarray:
    """delta_r(X, Y) = 1 + (g_X^s ^ g_Y^s)(U_{X,r} - U_{Y,r}) for a batch of Y."""
    X = np.asarray(X, float)
    Ys = np.atleast_2d(np.asarray(Ys, float))
    K = len(Ys)
    GX = metric.matrices(X[None, :])[0]
    GYs = metric.matrices(Ys)
    DX = dual_matrix(GX[None])[0]
    DYs = dual_matrix(GYs)
    F = harmonic_mean_matrix(np.broadcast_to(DX, DYs.shape), DYs)
    # fast path: identical ball forms and objective proportional to them
    if np.allclose(GYs, GX, rtol=1e-12, atol=1e-14):
        c = np.trace(F, axis1=-2, axis2=-1) / np.trace(GX)
        if np.allclose(F, c[:, None, None] * GX, rtol=1e-10, atol=1e-12):
            dist_g = np.sqrt(np.einsum("ki,ij,kj->k", Ys - X, GX, Ys - X))
            gap = np.maximum(dist_g - 2.0 * r, 0.0)
            return 1.0 + c * gap**2
    c1 = np.broadcast_to(X, Ys.shape).copy()
    vals = _ball_distances_batch(
        F, c1, np.full(K, r), np.broadcast_to(GX, GYs.shape).copy(),
        Ys, np.full(K, r), GYs,
    )
    return 1.0 + vals


def ball_separation(metric: MetricField, X, Y, r: float) -> float:
    """Main distance 1 + harmonic-dual gap between the r-balls at X and Y."""
    return float(ball_separations(metric, X, np.asarray(Y, float)[None, :], r)[0])


# ---------------------------------------------------------------------------
# metric-adapted meshes and the integrability quadrature
# ---------------------------------------------------------------------------


def metric_mesh(metric: MetricField, bounds, target, max_cells: int = 600_000):
    """Axis-aligned mesh with cells of g-size <= target along every axis.

    Returns (centers, volumes).  Cells split recursively along their worst
    axis, so anisotropic metrics get anisotropic cells.  ``target`` may be a
    callable of the cell center, which allows distance-graded meshes.
    """
    lo = np.array([b[0] for b in bounds], float)
    hi = np.array([b[1] for b in bounds], float)
    d = len(lo)
    target_fn = target if callable(target) else (lambda c: target)
    boxes = [(lo, hi)]
    centers = []
    volumes = []
    while boxes:
        blo, bhi = boxes.pop()
        c = 0.5 * (blo + bhi)
        G = metric.matrices(c[None, :])[0]
        sizes = (bhi - blo) * np.sqrt(np.diag(G))
        worst = int(np.argmax(sizes))
        if sizes[worst] <= target_fn(c):
            centers.append(c)
            volumes.append(np.prod(bhi - blo))
        else:
            mid = 0.5 * (blo[worst] + bhi[worst])
            hi_left = bhi.copy()
            hi_left[worst] = mid
            lo_right = blo.copy()
            lo_right[worst] = mid
            boxes.append((blo, hi_left))
            boxes.append((lo_right, bhi))
        if len(centers) + len(boxes) > max_cells:
            raise MeshError(f"mesh exceeded {max_cells} cells at target {target}")
    return np.array(centers), np.array(volumes)


@dataclass(frozen=True)
class IntegrabilityResult:
    value: float
    n1: int
    tail_fraction: float
    half_width: float
    cells: int


def integrability_constant(metric: MetricField, X, r: float, n1: int,
                           tail_tol: float = 1e-6, mesh_target: float = 0.1,
                           grading: float = 0.25, max_doublings: int = 8,
                           base_half_width: float = 6.0) -> IntegrabilityResult:
    """Quadrature of the inverse-power-of-distance density over Y.

    Integrates delta_r(X, Y)^{-n1} sqrt(det g_Y) dY over boxes doubling in
    metric size until the last shell contributes less than tail_tol of the
    total.  Cells grow linearly with distance from X (the integrand's
    relative variation scale), so far tails stay affordable.
    """
    X = np.asarray(X, float)
    GX = metric.matrices(X[None, :])[0]
    axis = 1.0 / np.sqrt(np.diag(GX))

    def target_fn(c):
        dist = np.sqrt(np.einsum("i,ij,j->", c - X, GX, c - X))
        return mesh_target * max(1.0, grading * dist)

    prev = None
    result = None
    for k in range(max_doublings + 1):
        half = base_half_width * 2**k
        bounds = [(X[a] - half * axis[a], X[a] + half * axis[a]) for a in range(len(X))]
        centers, vols = metric_mesh(metric, bounds, target_fn)
        dets = metric.det_sqrt(centers)
        deltas = ball_separations(metric, X, centers, r)
        total = float(np.sum(vols * dets * deltas ** (-float(n1))))
        if prev is not None:
            tail = abs(total - prev) / max(total, 1e-300)
            if tail < tail_tol:
                result = IntegrabilityResult(value=total, n1=n1, tail_fraction=tail,
                                             half_width=half, cells=len(centers))
                break
        prev = total
    if result is None:
        tail = abs(total - prev) / max(total, 1e-300) if prev is not None else np.inf
        raise QuadratureError(
            f"integrability quadrature not converged (tail {tail:.2e} "
            f"after {max_doublings} doublings)"
        )
    return result


def default_partition_radius(c0: float, mu: float | None = None) -> float:
    """Half of the largest radius admitted by the structure constants."""
    r = 1.0 / math.sqrt(c0)
    if mu is not None:
        r = min(r, 1.0 / math.sqrt(mu))
    return 0.5 * r
