"""Verification harness: almost-orthogonality bounds, decay fits, and the
operator-norm / lower-bound sweeps with their uniformity verdicts.

The constants asserted by the underlying estimates are not computable; every
check here is either a ratio-uniformity regression across a parameter sweep
or a comparison against a budget calibrated once on a pinned configuration
and frozen below.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .forms import QuadraticForm, dual_form, harmonic_mean
from .metrics import (
    Ball,
    MetricField,
    gain_weight,
    point_ball_distance,
    weight_constants,
)
from .moyal import compose_integral, expansion_term
from .partition import PartitionGrid
from .quantize import Discretization, OperatorMatrix, quantize
from .sampling import SampleSpec
from .symbols import GridSymbol, SemiNormReport, ShiftedSymbol, Symbol, seminorm

# Budgets for the unknowable constants, calibrated once on the pinned
# reference configurations in tests/test_acceptance.py and regressed with a
# 2x drift allowance thereafter.
GOLDEN_BUDGETS = {
    # aggregate remainder norm / symbol semi-norm, s10 pipeline at L=3, N=32
    "fp_remainder_ratio": 0.35,
    # norm of the aggregated squared-plateau operators, same configuration
    "fp_plateau_pair_norm": 1.6,
}
DRIFT_ALLOWANCE = 2.0


def _power_norm_pair(A: np.ndarray, B: np.ndarray, tol=1e-10, max_iter=4000) -> float:
    """Spectral norm of A @ B without forming the product."""
    dim = B.shape[1]
    v = np.ones(dim, complex) + 1e-3 * np.sin(np.arange(dim))
    v /= np.linalg.norm(v)
    AH = A.conj().T
    BH = B.conj().T
    prev = 0.0
    for _ in range(max_iter):
        w = BH @ (AH @ (A @ (B @ v)))
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        if abs(s - prev) <= tol * max(s, 1e-300):
            return float(np.sqrt(s))
        prev = s
    return float(np.sqrt(prev))


@dataclass(frozen=True)
class CotlarInput:
    """Finite operator family with quadrature weights for the sum."""

    matrices: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, float))
        if len(self.matrices) != len(self.weights):
            raise ValueError("one weight per matrix required")


@dataclass(frozen=True)
class CotlarReport:
    bound: float
    assembled_norm: float
    table_star_left: np.ndarray
    table_star_right: np.ndarray

    @property
    def consistent(self) -> bool:
        return self.assembled_norm <= self.bound + 1e-8


def cotlar_bound(inp: CotlarInput, threads: int = 1) -> CotlarReport:
    """Almost-orthogonality bound: max of the two weighted sup-row-sums of
    the square-rooted cross norms, checked against the assembled sum."""
    mats = [m.matrix if isinstance(m, OperatorMatrix) else np.asarray(m) for m in inp.matrices]
    K = len(mats)
    T1 = np.zeros((K, K))
    T2 = np.zeros((K, K))

    def fill(i):
        for j in range(i, K):
            T1[i, j] = math.sqrt(_power_norm_pair(mats[i].conj().T, mats[j]))
            T2[i, j] = math.sqrt(_power_norm_pair(mats[i], mats[j].conj().T))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(fill, range(K)))
    else:
        for i in range(K):
            fill(i)
    T1 = np.maximum(T1, T1.T)
    T2 = np.maximum(T2, T2.T)
    w = inp.weights
    M = max(float(np.max(T1 @ w)), float(np.max(T2 @ w)))
    total = sum(wi * m for wi, m in zip(w, mats))
    disc = inp.matrices[0].disc if isinstance(inp.matrices[0], OperatorMatrix) else None
    if disc is not None:
        assembled = OperatorMatrix(total, disc).norm()
    else:
        assembled = float(np.linalg.svd(total, compute_uv=False)[0])
    return CotlarReport(bound=M, assembled_norm=assembled,
                        table_star_left=T1, table_star_right=T2)


# ---------------------------------------------------------------------------
# biconfinement decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    separations: np.ndarray
    sups: np.ndarray
    slope: float
    exponents_required: dict
    passed: bool
    weighted_sups: dict


def biconfinement_decay(a1: Symbol, g1: QuadraticForm, U1: Ball,
                        a2: Symbol, g2: QuadraticForm, U2: Ball,
                        N_list, disc: Discretization, separations,
                        probe_margin: float = 0.25,
                        slack: float = 0.25,
                        check_tails: bool = True) -> DecayReport:
    """Decay of the composed symbol in the separation of its factors.

    The factors and their balls are translated to -s/2 and +s/2 along the
    first space axis; the sup of the composition over interior probes is
    fitted against log(1 + s^2) and the fitted decay exponent must reach
    N/2 - slack for every requested N.
    """
    for g in (g1, g2):
        if np.min(np.linalg.eigvalsh(dual_form(g).matrix - g.matrix)) < -1e-10:
            raise ValueError("confinement requires g <= g^sigma")
    F = harmonic_mean(dual_form(g1), dual_form(g2))
    probes = disc.interior_probes(margin=probe_margin)
    seps = np.asarray(separations, float)
    sups = np.zeros(len(seps))
    weighted = {int(N): np.zeros(len(seps)) for N in N_list}
    d = 2 * disc.n
    for i, s in enumerate(seps):
        shift = np.zeros(d)
        shift[0] = s / 2.0
        left = ShiftedSymbol(a1, -shift)
        right = ShiftedSymbol(a2, shift)
        B1 = Ball(U1.center - shift, U1.radius, U1.form)
        B2 = Ball(U2.center + shift, U2.radius, U2.form)
        comp = compose_integral(left, right, disc, check_tails=check_tails)
        vals = np.abs(np.asarray(comp.value_at(probes), complex))
        sups[i] = float(np.max(vals))
        wdist = (1.0 + point_ball_distance(F.matrix, B1, probes)
                 + point_ball_distance(F.matrix, B2, probes))
        for N in N_list:
            weighted[int(N)][i] = float(np.max(vals * wdist ** (N / 2.0)))
    logw = np.log(1.0 + seps**2)
    A = np.vstack([logw, np.ones_like(logw)]).T
    slope = float(np.linalg.lstsq(A, np.log(np.maximum(sups, 1e-300)), rcond=None)[0][0])
    required = {int(N): N / 2.0 - slack for N in N_list}
    passed = all(-slope >= req for req in required.values())
    return DecayReport(separations=seps, sups=sups, slope=slope,
                       exponents_required=required, passed=passed,
                       weighted_sups=weighted)


# ---------------------------------------------------------------------------
# sweep reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """One sweep row: a measured operator quantity against a semi-norm."""

    label: str
    params: dict
    measured: float
    seminorm_value: float
    order: int

    @property
    def ratio(self) -> float:
        return self.measured / max(self.seminorm_value, 1e-300)


@dataclass(frozen=True)
class SweepVerdict:
    rows: tuple
    budget: float
    spread: float
    passed: bool


def _uniformity(values, budget, floor=1e-12):
    vals = np.asarray(values, float)
    if np.all(vals <= floor):
        return 1.0, True
    lo = max(float(np.min(vals)), floor)
    spread = float(np.max(vals)) / lo
    return spread, spread <= budget


def verify_l2(entries, l: int | None = None, budget: float = 2.0,
              spec: SampleSpec | None = None, threads: int = 1) -> SweepVerdict:
    """Operator-norm / semi-norm ratios across a sweep, with uniformity verdict.

    entries: iterable of (label, params, symbol, metric, disc).
    """
    entries = list(entries)

    def run(entry):
        label, params, a, g, d = entry
        order = l if l is not None else 2 * d.n + 1
        sspec = spec or _default_phase_spec(d)
        sn = seminorm(a, None, g, order, sspec)
        nrm = quantize(a, d).norm()
        return BoundReport(label=label, params=dict(params), measured=nrm,
                           seminorm_value=sn.value, order=order)

    rows = _run_sweep(run, entries, threads)
    spread, ok = _uniformity([r.ratio for r in rows], budget)
    return SweepVerdict(rows=tuple(rows), budget=budget, spread=spread, passed=ok)


def verify_fp(entries, l: int | None = None, budget: float = 2.0,
              spec: SampleSpec | None = None, threads: int = 1,
              nonneg_tol: float = 1e-12) -> SweepVerdict:
    """Lower bounds of nonnegative symbols against their gain-squared
    semi-norms, with the per-sweep constants compared for uniformity."""
    entries = list(entries)

    def run(entry):
        label, params, a, g, d = entry
        order = l if l is not None else 2 * d.n + 1
        sspec = spec or _default_phase_spec(d)
        probes = d.interior_probes(margin=0.0)
        vals = np.real(np.asarray(a.value_at(probes), complex))
        if np.min(vals) < -nonneg_tol:
            raise ValueError(f"symbol is not nonnegative on the grid ({np.min(vals):.3e})")
        sn = seminorm(a, gain_weight(g, 2.0), g, order, sspec)
        low = quantize(a, d).min_eig_symmetric()
        return BoundReport(label=label, params=dict(params), measured=max(-low, 0.0),
                           seminorm_value=sn.value, order=order)

    rows = _run_sweep(run, entries, threads)
    spread, ok = _uniformity([r.ratio for r in rows], budget, floor=1e-9)
    return SweepVerdict(rows=tuple(rows), budget=budget, spread=spread, passed=ok)


def _run_sweep(run, entries, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(run, entries))
    return [run(e) for e in entries]


def _default_phase_spec(d: Discretization) -> SampleSpec:
    b = ((-d.L, d.L),) * d.n + ((-d.nyquist, d.nyquist),) * d.n
    return SampleSpec(bounds=b, lattice=256, cloud=64, seed=1, dirs=4)


def fp_sweep_order(entries, orders, spec=None, stabilize: float = 1.05):
    """Semi-norm order sweep: smallest order whose sweep ratio stabilizes."""
    tables = {}
    for order in orders:
        verdict = verify_fp(entries, l=order, spec=spec)
        tables[order] = [r.ratio for r in verdict.rows]
    orders = sorted(tables)
    chosen = orders[-1]
    for lo, hi in zip(orders, orders[1:]):
        a = np.asarray(tables[lo])
        b = np.asarray(tables[hi])
        if np.all(np.abs(a - b) <= (stabilize - 1.0) * np.maximum(b, 1e-12)):
            chosen = lo
            break
    return chosen, tables


# ---------------------------------------------------------------------------
# the plateau-conjugation pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpPipelineReport:
    members: int
    reassembly_rel_error: float
    remainder_norm: float
    plateau_pair_norm: float
    symbol_seminorm: float
    remainder_ratio: float
    bracket_residuals: float
    member_decay_sup: float

    def within_budgets(self, budgets=None, drift=DRIFT_ALLOWANCE) -> bool:
        b = budgets or GOLDEN_BUDGETS
        return (
            self.remainder_ratio <= drift * b["fp_remainder_ratio"]
            and self.plateau_pair_norm <= drift * b["fp_plateau_pair_norm"]
        )


def fp_decompose(a: Symbol, metric: MetricField, grid: PartitionGrid,
                 disc: Discretization, l: int = 3,
                 decay_orders=(2, 4), seminorm_spec: SampleSpec | None = None) -> FpPipelineReport:
    """Split a symbol through the partition, conjugate each piece by its
    plateau under the twisted product, and measure the aggregate remainder.

    Edge members wrap on the composition torus by construction, so tail
    checks are disabled here; the quantizer sees the same wrapped samples,
    which keeps the operator-level bookkeeping exact.
    """
    axes = disc.fine_axes()
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    a_vals = np.asarray(a.value_at(mesh), complex)
    om_vals = np.asarray(grid.omega.value_at(mesh), complex)

    A_ref = quantize(a, disc, certify="never")
    dim = A_ref.dim
    R_total = np.zeros((dim, dim), complex)
    S2_total = np.zeros((dim, dim), complex)
    recon = np.zeros_like(a_vals)
    identity_sum = np.zeros((dim, dim), complex)
    probes = disc.interior_probes(margin=0.3)
    member_decay = 0.0
    bracket_worst = 0.0
    gs_dual_cache = {}

    for m in grid.members:
        w = m.weight * m.det_sqrt
        win_vals = np.asarray(m.window.value_at(mesh), complex)
        aY_vals = win_vals / om_vals * a_vals
        aY = GridSymbol(disc, aY_vals)
        psi_vals = np.asarray(m.plateau.value_at(mesh), complex)
        psi = GridSymbol(disc, psi_vals)
        c1 = compose_integral(psi, aY, disc, check_tails=False)
        c2 = compose_integral(c1, psi, disc, check_tails=False)
        rY_vals = c2.values - aY_vals
        recon += w * aY_vals
        QaY = quantize(aY, disc, certify="never")
        QrY = quantize(GridSymbol(disc, rY_vals), disc, certify="never")
        Qc2 = quantize(c2, disc, certify="never")
        R_total += w * QrY.matrix
        identity_sum += w * (Qc2.matrix - QrY.matrix)
        s2 = compose_integral(psi, psi, disc, check_tails=False)
        S2_total += w * quantize(s2, disc, certify="never").matrix
        # remainder decay against the plateau's support ball
        ball = m.plateau.support_ball()
        gs = dual_form(QuadraticForm(m.window.form_matrix))
        wdist = 1.0 + point_ball_distance(gs.matrix, ball, probes)
        rY_probe = np.abs(np.asarray(GridSymbol(disc, rY_vals).value_at(probes), complex))
        for N in decay_orders:
            member_decay = max(member_decay, float(np.max(rY_probe * wdist ** float(N))))
        # first expansion term of (plateau, piece) vanishes where the
        # plateau is flat on the piece's support
        bracket = expansion_term_values(m, a, probes)
        bracket_worst = max(bracket_worst, bracket)

    a_norm = A_ref.norm()
    ident_err = OperatorMatrix(A_ref.matrix - identity_sum, disc).norm() / max(a_norm, 1e-300)
    rem_norm = OperatorMatrix(R_total, disc).norm()
    s2_norm = OperatorMatrix(S2_total, disc).norm()
    spec = seminorm_spec or _default_phase_spec(disc)
    sn = seminorm(a, gain_weight(metric, 2.0), metric, l, spec)
    interior = grid.interior_mask(mesh.reshape(-1, 2 * disc.n))
    flat_recon = recon.reshape(-1)
    flat_a = a_vals.reshape(-1)
    scale = float(np.max(np.abs(flat_a[interior]))) if np.any(interior) else 1.0
    recon_err = float(np.max(np.abs(flat_recon[interior] - flat_a[interior]))) / max(scale, 1e-300)
    return FpPipelineReport(
        members=grid.size,
        reassembly_rel_error=max(recon_err, ident_err),
        remainder_norm=rem_norm,
        plateau_pair_norm=s2_norm,
        symbol_seminorm=sn.value,
        remainder_ratio=rem_norm / max(sn.value, 1e-300),
        bracket_residuals=bracket_worst,
        member_decay_sup=member_decay,
    )


def expansion_term_values(member, a: Symbol, probes) -> float:
    """Sup of the first expansion term of (plateau, phi a) on probes; zero
    when the plateau is flat on the support of the piece."""
    from .symbols import ProductSymbol

    aY = ProductSymbol(member.phi, a)
    term = expansion_term(member.plateau, aY, 1).symbol
    vals = np.abs(np.asarray(term.value_at(np.atleast_2d(probes)), complex))
    return float(np.max(vals)) if len(vals) else 0.0


# ---------------------------------------------------------------------------
# gain-power weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainWeightReport:
    s: float
    mu: float
    nu: int
    mu_cap: float
    nu_cap: float
    passed: bool


def verify_lambda_weight(metric: MetricField, s: float, spec: SampleSpec,
                         c0: float, n0: int, mu_slack: float = 1.1) -> GainWeightReport:
    """Certify gain^s as an admissible weight within the caps implied by the
    metric's structure constants: mu <= slack * c0^{|s|}, nu <= |s| n0."""
    west = weight_constants(gain_weight(metric, s), metric, spec)
    mu_cap = mu_slack * c0 ** abs(s)
    nu_cap = abs(s) * n0
    passed = west.mu <= mu_cap and west.nu <= nu_cap + 1e-9
    return GainWeightReport(s=s, mu=west.mu, nu=west.nu, mu_cap=mu_cap,
                            nu_cap=nu_cap, passed=passed)
