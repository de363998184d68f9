"""Batch driver: configure families, run estimators and verifications, emit reports.

Configs are JSON with a versioned schema; every run writes a structured
report (report.json) and a flat table (table.csv) whose bytes depend only on
the config and seed.  Exit codes: 0 all rows pass, 1 some row failed,
2 config error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import (
    EstimationError,
    MeshError,
    QuadratureError,
    builtin_family,
    check_uncertainty,
    default_partition_radius,
    estimate_slowness,
    estimate_temperance,
    integrability_constant,
    structure_constants,
)
from .moyal import TailMassError, compose_integral
from .partition import CoverageError, build_partition
from .quantize import AliasingError, Discretization, IterationBudgetError, quantize
from .sampling import SampleSpec
from .symbols import builtin_symbols
from .verify import fp_decompose, verify_fp, verify_l2

SCHEMA_VERSION = 1
EXPERIMENTS = (
    "check-metric",
    "partition",
    "quantize",
    "compose",
    "verify-l2",
    "verify-fp",
    "full-suite",
)
NUMERICAL_ERRORS = (
    AliasingError,
    IterationBudgetError,
    TailMassError,
    EstimationError,
    MeshError,
    QuadratureError,
    CoverageError,
    np.linalg.LinAlgError,
)


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def validate(config: dict) -> list:
    """Static diagnostics; empty list means the config is runnable."""
    diags = []
    if not isinstance(config, dict):
        return ["config must be a JSON object"]
    if config.get("schema") != SCHEMA_VERSION:
        diags.append(f"schema must be {SCHEMA_VERSION}")
    exp = config.get("experiment")
    if exp not in EXPERIMENTS:
        diags.append(f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    metric = config.get("metric", {})
    fam = metric.get("family", "constant")
    try:
        builtin_family(fam, dim_n=int(metric.get("dim_n", 1)),
                       **metric.get("params", {}))
    except (ValueError, TypeError) as e:
        diags.append(f"metric: {e}")
    sym = config.get("symbol")
    if sym is not None:
        try:
            builtin_symbols(sym.get("name", ""), n=int(metric.get("dim_n", 1)),
                            **sym.get("params", {}))
        except (ValueError, TypeError) as e:
            diags.append(f"symbol: {e}")
    sym2 = config.get("symbol2")
    if sym2 is not None:
        try:
            builtin_symbols(sym2.get("name", ""), n=int(metric.get("dim_n", 1)),
                            **sym2.get("params", {}))
        except (ValueError, TypeError) as e:
            diags.append(f"symbol2: {e}")
    disc = config.get("disc")
    if disc is not None:
        try:
            Discretization(n=int(disc.get("n", 1)), L=float(disc.get("L", 6.0)),
                           N=int(disc.get("N", 128)))
        except (ValueError, TypeError) as e:
            diags.append(f"disc: {e}")
    sweep = config.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or len(sweep) != 1:
            diags.append("sweep must map exactly one parameter to a list")
        else:
            values = next(iter(sweep.values()))
            if not isinstance(values, list) or not values:
                diags.append("sweep must be non-empty")
    needs_symbol = exp in ("quantize", "compose", "verify-l2", "verify-fp")
    if needs_symbol and sym is None:
        diags.append(f"experiment {exp!r} requires a symbol")
    if exp == "compose" and sym2 is None:
        diags.append("experiment 'compose' requires symbol2")
    return diags


def _sweep_points(config):
    sweep = config.get("sweep")
    if not sweep:
        return [dict()]
    key, values = next(iter(sweep.items()))
    return [{key: v} for v in values]


def _family_at(config, point):
    metric = config.get("metric", {})
    params = dict(metric.get("params", {}))
    for k, v in point.items():
        if k in ("tau", "h"):
            params[k] = v
    return builtin_family(metric.get("family", "constant"),
                          dim_n=int(metric.get("dim_n", 1)), **params)


def _symbol_at(config, key, point, n):
    sym = config.get(key)
    params = dict(sym.get("params", {}))
    name = sym.get("name")
    if "tau" in point and name in ("oscillatory", "sigma_tau"):
        params["tau"] = point["tau"]
    return builtin_symbols(name, n=n, **params)


def _disc(config):
    d = config.get("disc", {})
    return Discretization(n=int(d.get("n", 1)), L=float(d.get("L", 6.0)),
                          N=int(d.get("N", 128)))


def _sample_spec(config, family, seed):
    s = config.get("sample", {})
    n = family.metric.dim_n
    hw = s.get("half_widths", [6.0] * n + [20.0] * n)
    bounds = tuple((-float(h), float(h)) for h in hw)
    return SampleSpec(bounds=bounds, lattice=int(s.get("lattice", 384)),
                      cloud=int(s.get("cloud", 128)), seed=seed,
                      dirs=int(s.get("dirs", 6)))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def run_check_metric(config, seed, threads):
    rows = []
    c0s = []
    for point in _sweep_points(config):
        fam = _family_at(config, point)
        spec = _sample_spec(config, fam, seed)
        unc = check_uncertainty(fam.metric, spec)
        slow = estimate_slowness(fam.metric, spec)
        temper = estimate_temperance(fam.metric, spec)
        ok = unc.passed and temper.certified
        c0s.append(max(slow.c0, temper.c0))
        rows.append({
            **point,
            "uncertainty_margin": unc.worst_margin,
            "c0_slow": slow.c0,
            "c0_temper": temper.c0,
            "n0": temper.n0,
            "pass": ok,
        })
    budget = float(config.get("budgets", {}).get("c0_uniformity", 1.25))
    if len(c0s) > 1:
        spread = max(c0s) / min(c0s)
        for r in rows:
            r["pass"] = bool(r["pass"] and spread <= budget)
    return rows


def run_partition(config, seed, threads):
    fam = _family_at(config, {})
    spec = _sample_spec(config, fam, seed)
    slow = estimate_slowness(fam.metric, spec)
    pconf = config.get("partition", {})
    c0 = max(1.0, slow.c0)
    r = pconf.get("radius") or default_partition_radius(c0)
    n = fam.metric.dim_n
    hw = pconf.get("bounds_half", [3.0] * 2 * n)
    bounds = tuple((-float(h), float(h)) for h in hw)
    grid = build_partition(fam.metric, r, bounds, eta=float(pconf.get("eta", 0.5)), c0=c0)
    pts = SampleSpec(bounds=bounds, lattice=1000, cloud=0, seed=seed)
    from .sampling import sample_points

    X = sample_points(pts)
    inside = grid.interior_mask(X)
    recon = grid.reconstruction_values(X[inside])
    defect = float(np.max(np.abs(recon - 1.0))) if np.any(inside) else np.nan
    fine = build_partition(fam.metric, r, bounds, eta=float(pconf.get("eta", 0.5)) / 2.0, c0=c0)
    om_c = np.real(grid.omega.value_at(X[inside]))
    om_f = np.real(fine.omega.value_at(X[inside]))
    drift = float(np.max(np.abs(om_c - om_f) / om_f))
    row = {
        "members": grid.size,
        "radius": r,
        "reconstruction_defect": defect,
        "normalizer_refinement_drift": drift,
        "pass": bool(defect <= 1e-6),
    }
    return [row]


def run_quantize(config, seed, threads):
    fam = _family_at(config, {})
    d = _disc(config)
    a = _symbol_at(config, "symbol", {}, fam.metric.dim_n)
    A = quantize(a, d)
    rows = []
    if config.get("symbol", {}).get("name") == "oscillator_check" or config.get(
        "oscillator_table", False
    ):
        eigs = np.linalg.eigvalsh(0.5 * (A.matrix + A.matrix.conj().T))
        for k in range(6):
            target = (2 * k + 1) / (2 * np.pi)
            rel = abs(eigs[k] - target) / target
            rows.append({"level": k, "eig": float(eigs[k]), "target": target,
                         "rel_error": rel, "pass": bool(rel <= 1e-3)})
    else:
        rows.append({
            "norm": A.norm(),
            "adjoint_defect": A.adjoint_defect(),
            "pass": bool(A.adjoint_defect() <= 1e-10),
        })
    return rows


def run_compose(config, seed, threads):
    fam = _family_at(config, {})
    d = _disc(config)
    a = _symbol_at(config, "symbol", {}, fam.metric.dim_n)
    b = _symbol_at(config, "symbol2", {}, fam.metric.dim_n)
    c = compose_integral(a, b, d)
    Qc = quantize(c, d, certify="never")
    Qa = quantize(a, d, certify="never")
    Qb = quantize(b, d, certify="never")
    prod = Qa.matrix @ Qb.matrix
    err = float(np.linalg.norm(Qc.matrix - prod) / max(np.linalg.norm(prod), 1e-300))
    tol = float(config.get("budgets", {}).get("compose_rel_error", 1e-5))
    return [{"defining_rel_error": err, "tolerance": tol, "pass": bool(err <= tol)}]


def _sweep_entries(config, seed):
    entries = []
    for point in _sweep_points(config):
        fam = _family_at(config, point)
        d = _disc(config)
        a = _symbol_at(config, "symbol", point, fam.metric.dim_n)
        label = ",".join(f"{k}={fmt(v)}" for k, v in point.items()) or "base"
        entries.append((label, point, a, fam.metric, d))
    return entries


def run_verify_l2(config, seed, threads):
    budget = float(config.get("budgets", {}).get("uniformity", 2.0))
    verdict = verify_l2(_sweep_entries(config, seed), budget=budget, threads=threads)
    rows = []
    for r in verdict.rows:
        rows.append({**r.params, "label": r.label, "operator_norm": r.measured,
                     "seminorm": r.seminorm_value, "ratio": r.ratio,
                     "spread": verdict.spread, "pass": bool(verdict.passed)})
    return rows


def run_verify_fp(config, seed, threads):
    budget = float(config.get("budgets", {}).get("uniformity", 2.0))
    verdict = verify_fp(_sweep_entries(config, seed), budget=budget, threads=threads)
    rows = []
    for r in verdict.rows:
        rows.append({**r.params, "label": r.label, "lower_bound_deficit": r.measured,
                     "seminorm": r.seminorm_value, "ratio": r.ratio,
                     "spread": verdict.spread, "pass": bool(verdict.passed)})
    return rows


def run_full_suite(config, seed, threads):
    rows = []
    sub = {
        "schema": 1,
        "experiment": "check-metric",
        "metric": {"family": "sigma_tau", "dim_n": 1},
        "sweep": {"tau": [0.0, 1.0, 10.0, 100.0]},
        "sample": {"half_widths": [6.0, 30.0]},
    }
    for r in run_check_metric(sub, seed, threads):
        rows.append({"stage": "admissibility", **r})
    sub = {
        "schema": 1,
        "experiment": "partition",
        "metric": {"family": "s10", "dim_n": 1},
        "partition": {"bounds_half": [3.0, 3.0]},
        "sample": {"half_widths": [4.0, 4.0]},
    }
    for r in run_partition(sub, seed, threads):
        rows.append({"stage": "partition", **r})
    sub = {
        "schema": 1,
        "experiment": "verify-l2",
        "metric": {"family": "sigma_tau", "dim_n": 1},
        "sweep": {"tau": [0.0, 1.0, 10.0, 100.0]},
        "symbol": {"name": "oscillatory", "params": {"window_radius": 3.5}},
        "disc": {"n": 1, "L": 6.0, "N": 128},
    }
    for r in run_verify_l2(sub, seed, threads):
        rows.append({"stage": "l2", **r})
    sub = {
        "schema": 1,
        "experiment": "verify-fp",
        "metric": {"family": "sigma_tau", "dim_n": 1},
        "sweep": {"tau": [0.0, 1.0, 10.0, 100.0]},
        "symbol": {"name": "sigma_tau"},
        "disc": {"n": 1, "L": 3.0, "N": 256},
    }
    for r in run_verify_fp(sub, seed, threads):
        rows.append({"stage": "fp", **r})
    return rows


RUNNERS = {
    "check-metric": run_check_metric,
    "partition": run_partition,
    "quantize": run_quantize,
    "compose": run_compose,
    "verify-l2": run_verify_l2,
    "verify-fp": run_verify_fp,
    "full-suite": run_full_suite,
}


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------


def write_outputs(out_dir: Path, config, rows, elapsed):
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "config": config,
        "rows": rows,
        "environment": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_clock_s": elapsed,
        "all_pass": all(bool(r.get("pass", True)) for r in rows),
    }
    with open(out_dir / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True, default=_json_default)
    keys = sorted({k for r in rows for k in r})
    with open(out_dir / "table.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(keys)
        for r in rows:
            w.writerow([fmt(r.get(k, "")) for k in keys])
    return report


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, bool):
        return v
    return str(v)


def write_error(out_dir: Path, kind: str, message: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "error.json", "w") as f:
        json.dump({"error": {"class": kind, "message": message}}, f, indent=2)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="weylcalc",
                                description="phase-space calculus workbench")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True, type=Path)
        q.add_argument("--out", type=Path, default=Path("weylcalc-out"))
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--threads", type=int, default=None)
        q.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        write_error(args.out, "config", str(e))
        return 2
    diags = validate(config)
    if args.command == "validate":
        for d in diags:
            print(d)
        return 0 if not diags else 2
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        write_error(args.out, "config", "; ".join(diags))
        return 2
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    threads = args.threads or int(os.environ.get("WEYLCALC_THREADS", "1"))
    t0 = time.perf_counter()
    try:
        rows = RUNNERS[config["experiment"]](config, seed, threads)
    except NUMERICAL_ERRORS as e:
        print(f"numerical error: {e}", file=sys.stderr)
        write_error(args.out, "numerical", str(e))
        return 3
    elapsed = time.perf_counter() - t0
    report = write_outputs(args.out, config, rows, elapsed)
    if args.verbose:
        for r in rows:
            print(" ".join(f"{k}={fmt(v)}" for k, v in r.items()))
    print(f"{config['experiment']}: {'PASS' if report['all_pass'] else 'FAIL'} "
          f"({len(rows)} rows, {elapsed:.1f}s)")
    return 0 if report["all_pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
