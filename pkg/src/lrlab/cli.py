"""Command-line driver: `lrlab <subcommand> --config <path> [--seed N]
[--threads N] [--out DIR] [--override-guards]`.

Exit status: 0 all checks pass, 1 some check fails, 2 bad config,
3 resource guard (Fock dimension above 2^12 or tree order above 9).
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import bounds, response, trees
from .fock import max_entry, spectral_norm
from .lattice import DecayFunction

SCHEMA_VERSION = 1
MAX_MODES = 12
MAX_TREE_ORDER = 9
CSV_HEADER = ["case_id", "theorem", "lhs", "rhs", "margin", "pass"]

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_GUARD = 0, 1, 2, 3

_MODEL = {"L": 2, "d": 1, "ip_strength": 0.5, "beta": 1.0, "l": 1}
_FIELD = {"amplitude": [1.0], "duration": 2.0}

DEFAULTS = {
    "verify-lr": {"batch": {"count": 100, "sites": [6, 10], "t_max": 2.0}},
    "verify-multicomm": {"batch": {"count": 30, "k_values": [2, 3], "sites": [6, 9], "s_max": 0.3, "exp_sigma": 0.25}},
    "tree-suite": {"batch": {"k_max": 7, "injective_max": 6, "degree_max": 5, "composition_max": 10, "tree_sum_max": 6, "d_values": [1, 2], "varsigma": 0.5, "stirling_max": 50}},
    "convergence": {"batch": {"count": 20, "L1_values": [2, 3], "gap": 2, "t_max": 1.5, "sweep_L1": [1, 2, 3], "sweep_t": 1.0}},
    "telescoping": {"batch": {"m_values": [0, 1], "max_sites": 9, "n_per_m": 3, "t_max": 1.0}},
    "nonauto": {"batch": {"count": 10, "L": 3, "L1": 1, "L2": 3, "span": 1.0, "amp": 0.5, "dynamics_count": 5, "dynamics_sites": 4}},
    "conductivity": {
        "model": _MODEL,
        "field": _FIELD,
        "batch": {"lambdas": [0.0, 0.5], "realizations": 32, "t_max": 4.0, "n_times": 16, "response_t": 2.6, "response_eta": 1e-3},
    },
    "ac-measure": {"model": _MODEL, "batch": {"lambdas": [0.0, 0.5], "realizations": 32, "t_max": 4.0, "n_times": 16, "max_moment": 8}},
    "increments": {
        "model": _MODEL,
        "field": _FIELD,
        "batch": {"lambdas": [0.0, 0.5], "s": 0.0, "t": 2.2, "etas": [0.1, 0.01, 0.001], "max_order": 2, "step": 1e-5},
    },
}
SUITES = tuple(DEFAULTS)
TOP_KEYS = {"schema_version", "subcommand", "seed", "threads", "output", "decay", "model", "field", "batch", "tolerances"}
TOLERANCES = {
    "slack": 1e-10,
    "xi_zero": 0.0,
    "imag": 1e-9,
    "linear_response_rel": 1e-3,
    "reconstruction": 1e-8,
    "psd": 1e-9,
    "symmetry": 1e-9,
    "odd_moment": 1e-9,
    "derivative": 1e-6,
    "slope_excess": 0.9,
    "identity": 1e-10,
}


class ConfigError(Exception):
    pass


class GuardError(Exception):
    pass


@dataclass
class Row:
    case_id: str
    theorem: str
    lhs: float
    rhs: float
    margin: float
    passed: bool


def _bound_row(r: bounds.BoundReport, slack: float) -> Row:
    return Row(r.case_id, r.theorem, r.lhs, r.rhs, r.margin, r.margin >= -slack)


def _le(case_id, theorem, lhs, rhs, slack=0.0) -> Row:
    lhs, rhs = float(lhs), float(rhs)
    return Row(case_id, theorem, lhs, rhs, rhs - lhs, rhs - lhs >= -slack)


def _eq(case_id, theorem, lhs, rhs) -> Row:
    lhs, rhs = float(lhs), float(rhs)
    return Row(case_id, theorem, lhs, rhs, -abs(lhs - rhs) or 0.0, lhs == rhs)


# config


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _check_block(name: str, given: dict, defaults: dict):
    _require(isinstance(given, dict), f"'{name}' must be a mapping")
    unknown = set(given) - set(defaults)
    _require(not unknown, f"unknown keys in '{name}': {sorted(unknown)}")
    for key, value in given.items():
        ref = defaults[key]
        where = f"{name}.{key}"
        if isinstance(ref, bool):
            _require(isinstance(value, bool), f"{where} must be a boolean")
        elif _is_int(ref):
            _require(_is_int(value), f"{where} must be an integer")
        elif isinstance(ref, float):
            _require(_is_real(value), f"{where} must be a real number")
        elif isinstance(ref, list):
            _require(isinstance(value, list), f"{where} must be a list")
            _require(all(_is_real(v) for v in value), f"{where} must hold numbers")
            if all(_is_int(v) for v in ref):
                _require(all(_is_int(v) for v in value), f"{where} must hold integers")


def load_config(path: str | None, suite: str) -> dict:
    raw = {"schema_version": SCHEMA_VERSION}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
    _require(isinstance(raw, dict), "config must be a mapping")
    unknown = set(raw) - TOP_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    _require(raw.get("schema_version") == SCHEMA_VERSION, f"schema_version must be {SCHEMA_VERSION}")
    if "subcommand" in raw:
        _require(raw["subcommand"] == suite, f"config is for '{raw['subcommand']}', not '{suite}'")
    defaults = _merge(
        {"seed": 0, "threads": 1, "output": {"dir": "lrlab-out"}, "decay": {"kind": "polynomial", "epsilon": 1.0, "sigma": 0.25}, "tolerances": TOLERANCES},
        DEFAULTS[suite],
    )
    for block in ("batch", "model", "field"):
        if block in raw:
            _require(block in defaults, f"'{block}' is not used by {suite}")
            _check_block(block, raw[block], defaults[block])
    _check_block("tolerances", raw.get("tolerances", {}), TOLERANCES)
    _check_block("output", raw.get("output", {}), {"dir": ""})
    if "output" in raw and "dir" in raw["output"]:
        _require(isinstance(raw["output"]["dir"], str), "output.dir must be a string")
    decay = raw.get("decay", {})
    _require(isinstance(decay, dict), "'decay' must be a mapping")
    _require(set(decay) <= {"kind", "epsilon", "sigma"}, f"unknown keys in 'decay': {sorted(set(decay) - {'kind', 'epsilon', 'sigma'})}")
    for key in ("seed", "threads"):
        if key in raw:
            _require(_is_int(raw[key]), f"{key} must be an integer")
    cfg = _merge(defaults, raw)
    _require(cfg["seed"] >= 0, "seed must be nonnegative")
    _require(cfg["threads"] >= 1, "threads must be at least 1")
    _require(cfg["decay"]["kind"] in ("polynomial", "exponential"), "decay.kind must be polynomial or exponential")
    try:
        _decay(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad decay block: {exc}") from exc
    _validate_suite(suite, cfg)
    return cfg


def _decay(cfg) -> DecayFunction:
    dec = cfg["decay"]
    if dec["kind"] == "polynomial":
        return DecayFunction.polynomial(1, float(dec["epsilon"]))
    return DecayFunction.exponential(1, float(dec["epsilon"]), float(dec["sigma"]))


def _validate_suite(suite: str, cfg: dict):
    b = cfg["batch"]
    if "count" in b:
        _require(b["count"] >= 0, "batch.count must be nonnegative")
    if suite in ("verify-lr", "verify-multicomm"):
        lo, hi = b["sites"]
        _require(len(b["sites"]) == 2 and 2 <= lo <= hi, "batch.sites must be [lo, hi] with 2 <= lo <= hi")
    if suite == "verify-multicomm":
        _require(all(k >= 1 for k in b["k_values"]), "k_values must be positive")
    if suite == "tree-suite":
        _require(b["k_max"] >= 1, "k_max must be positive")
        _require(1 <= b["composition_max"] <= 12, "composition_max must lie in 1..12")
        _require(b["tree_sum_max"] <= 6 and all(d in (1, 2) for d in b["d_values"]), "tree sums need k <= 6 and d in {1, 2}")
    if suite == "convergence":
        _require(b["gap"] >= 1 and min(b["L1_values"] + b["sweep_L1"], default=1) >= 1, "need L1 >= 1 and gap >= 1")
    if suite == "telescoping":
        _require(b["max_sites"] >= 3, "max_sites must be at least 3")
    if suite == "nonauto":
        _require(b["L2"] > b["L1"] >= 0 and b["L"] >= 1, "need L >= 1 and L2 > L1 >= 0")
    if suite in ("conductivity", "ac-measure", "increments"):
        m = cfg["model"]
        _require(m["L"] >= 1 and 0 <= m["l"] <= m["L"] - 1, "need 0 <= model.l <= model.L - 1")
        _require(m["beta"] > 0, "model.beta must be positive")
        _require(all(lam >= 0 for lam in b["lambdas"]), "lambdas must be nonnegative")
        if "realizations" in b:
            _require(b["realizations"] >= 1, "batch.realizations must be positive")
        if "field" in cfg:
            _require(len(cfg["field"]["amplitude"]) == m["d"], "field.amplitude needs one entry per axis")


def check_guards(suite: str, cfg: dict):
    b = cfg["batch"]
    modes = 0
    order = 0
    if suite in ("verify-lr", "verify-multicomm"):
        modes = b["sites"][1]
        order = max(b.get("k_values", [0]), default=0)
    elif suite == "convergence":
        modes = 2 * (max(b["L1_values"] + b["sweep_L1"], default=0) + b["gap"]) + 1
    elif suite == "telescoping":
        modes = b["max_sites"]
    elif suite == "nonauto":
        modes = max(2 * max(b["L"], b["L2"]) + 1, b["dynamics_sites"])
    elif suite == "tree-suite":
        order = b["k_max"]
    else:
        modes = (2 * cfg["model"]["L"] + 1) ** cfg["model"]["d"]
    if modes > MAX_MODES:
        raise GuardError(f"Fock dimension 2^{modes} exceeds 2^{MAX_MODES}")
    if order > MAX_TREE_ORDER:
        raise GuardError(f"tree order {order} exceeds {MAX_TREE_ORDER}")


# suites


def _suite_verify_lr(cfg, threads, override):
    b = cfg["batch"]
    cases = bounds.lr_cases(b["count"], cfg["seed"], sites=tuple(b["sites"]), t_max=b["t_max"], F=_decay(cfg))
    return [_bound_row(r, cfg["tolerances"]["slack"]) for r in bounds.run_batch(bounds.verify_lr, cases, threads)]


def _suite_multicomm(cfg, threads, override):
    b = cfg["batch"]
    F = _decay(cfg)
    F_poly = F if F.kind == "polynomial" else F.underlying_polynomial()
    F_exp = DecayFunction.exponential(1, F_poly.epsilon, b["exp_sigma"])
    rows = []
    for k in b["k_values"]:
        cases = bounds.multicomm_cases(b["count"], cfg["seed"], k, n_sites=tuple(b["sites"]), s_max=b["s_max"], F_poly=F_poly, F_exp=F_exp)
        rows += [_bound_row(r, cfg["tolerances"]["slack"]) for r in bounds.run_batch(bounds.verify_multicomm, cases, threads)]
    return rows


def _suite_trees(cfg, threads, override):
    b = cfg["batch"]
    max_k = b["k_max"] if override else trees.MAX_K
    rows = []
    for k in range(1, b["k_max"] + 1):
        T = trees.enumerate_trees(k, max_k=max_k)
        rows.append(_eq(f"count-k{k}", "tree-count", len(T), math.factorial(k)))
        rows.append(_le(f"degsum-k{k}", "degree-sum", max(abs(sum(trees.degrees(t)) - 2 * k) for t in T), 0))
        if k <= b["injective_max"]:
            rows.append(_eq(f"code-k{k}", "code-injective", len({trees.code(t) for t in T}), len(T)))
        if k <= b["degree_max"]:
            worst = max(ex - bd for ex, bd in (trees.count_by_degree(k, d) for d in itertools.product(range(1, k + 1), repeat=k + 1)))
            rows.append(_le(f"bydeg-k{k}", "count-by-degree", worst, 0.0, 1e-9))
    for k in range(1, b["composition_max"] + 1):
        n, bound = trees.composition_count(k)
        rows.append(_eq(f"compeq-k{k}", "composition-count", n, math.comb(2 * k - 1, k)))
        rows.append(_le(f"comp-k{k}", "composition-bound", n, bound))
    for k in range(1, min(b["tree_sum_max"], b["k_max"]) + 1):
        for d in b["d_values"]:
            rep = trees.tree_sum_bound_check(k, d, b["varsigma"])
            rows.append(_le(f"treesum-k{k}-d{d}", "tree-sum", rep.lhs, rep.rhs))
            if d == b["d_values"][0]:
                rows.append(_le(f"degfact-k{k}", "degree-factorial", rep.sum_degree_factorial, math.factorial(k) * (4 * math.e**2) ** k))
    for g in range(1, b["stirling_max"] + 1):
        lo, mid, hi = trees.stirling_bounds(g)
        rows.append(_le(f"stirling-g{g}", "stirling", max(lo - mid, mid - hi), 0.0))
    return rows


def _suite_convergence(cfg, threads, override):
    b = cfg["batch"]
    slack = cfg["tolerances"]["slack"]
    F = _decay(cfg)
    cases = bounds.convergence_cases(b["count"], cfg["seed"], L1_values=tuple(b["L1_values"]), gap=b["gap"], t_max=b["t_max"], F=F)
    rows = [_bound_row(r, slack) for r in bounds.run_batch(bounds.convergence_rate_check, cases, threads)]
    sweep = bounds.run_batch(bounds.convergence_rate_check, bounds.convergence_sweep(cfg["seed"], tuple(b["sweep_L1"]), b["gap"], b["sweep_t"]), threads)
    rows += [_bound_row(r, slack) for r in sweep]
    for a, c in zip(sweep, sweep[1:]):
        rows.append(_le(f"{c.case_id}-monotone", "convergence-monotone", c.lhs, a.lhs))
    return rows


def _suite_telescoping(cfg, threads, override):
    b = cfg["batch"]
    tol = cfg["tolerances"]
    cases = bounds.telescoping_cases(cfg["seed"], tuple(b["m_values"]), b["max_sites"], b["t_max"], b["n_per_m"], F=_decay(cfg))
    rows = [_bound_row(r, tol["slack"]) for r in bounds.run_batch(bounds.telescoping_bound_check, cases, threads)]
    for c in cases:
        ident, top = bounds.telescoping_identity_defects(c)
        rows.append(_le(f"{c.case_id}-sum", "telescoping-identity", ident, tol["identity"]))
        rows.append(_le(f"{c.case_id}-base", "telescoping-base", top, tol["identity"]))
    return rows


def _suite_nonauto(cfg, threads, override):
    b = cfg["batch"]
    slack = cfg["tolerances"]["slack"]
    cases = bounds.nonauto_cases(b["count"], cfg["seed"], b["L"], b["L1"], b["L2"], b["span"], b["amp"], F=_decay(cfg))
    rows = [_bound_row(r, slack) for r in bounds.run_batch(bounds.nonautonomous_variants, cases, threads)]
    dyn = bounds.dynamics_cases(b["dynamics_count"], cfg["seed"], b["dynamics_sites"])
    rows += [_bound_row(r, slack) for r in bounds.run_batch(bounds.dynamics_checks, dyn, threads)]
    return rows


def _family(cfg, lam: float) -> response.ModelFamily:
    m = cfg["model"]
    return response.ModelFamily(m["L"], m["d"], lam, cfg["seed"], m["ip_strength"], m["beta"], m["l"])


def _field(cfg, eta: float = 1.0) -> response.FieldProtocol:
    f = cfg["field"]
    return response.FieldProtocol(tuple(f["amplitude"]), f["duration"], eta, cfg["model"]["l"])


def _times(b) -> np.ndarray:
    return np.linspace(0.0, b["t_max"], b["n_times"])


def _suite_conductivity(cfg, threads, override, out_dir: Path):
    b = cfg["batch"]
    tol = cfg["tolerances"]
    times = _times(b)
    rows, series, provenance = [], [], {}
    for lam in b["lambdas"]:
        fam = _family(cfg, lam)
        res = response.xi_p(fam, np.concatenate([[0.0], times]), b["realizations"], threads)
        tag = f"cond-lam{lam:g}"
        rows.append(_le(f"{tag}-xi0", "xi-at-zero", float(np.max(np.abs(res.mean[0]))), tol["xi_zero"]))
        rows.append(_le(f"{tag}-imag", "xi-real", res.max_imag, tol["imag"]))
        model = fam.realization(0)
        t, h = b["response_t"], b["response_eta"]
        jp = response.linear_response_current(model, _field(cfg), t)
        fd = (response.full_current_increment(model, _field(cfg, h), t) - response.full_current_increment(model, _field(cfg, -h), t)) / (2 * h)
        scale = float(np.max(np.abs(jp)))
        rows.append(_le(f"{tag}-linresp", "linear-response", float(np.max(np.abs(fd - jp))), tol["linear_response_rel"] * scale))
        for i, tt in enumerate(times, start=1):
            series.append((lam, tt, res.mean[i], res.stderr[i]))
        provenance[f"{lam:g}"] = res.provenance
    d = cfg["model"]["d"]
    idx = [(k, q) for k in range(d) for q in range(d)]
    with open(out_dir / "conductivity_timeseries.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "t"] + [f"xi_{k}{q}" for k, q in idx] + [f"stderr_{k}{q}" for k, q in idx])
        for lam, tt, mean, err in series:
            w.writerow([_fmt(lam), _fmt(tt)] + [_fmt(mean[k, q]) for k, q in idx] + [_fmt(err[k, q]) for k, q in idx])
    _write_json(out_dir / "conductivity_provenance.json", provenance)
    return rows


def _suite_ac_measure(cfg, threads, override, out_dir: Path):
    b = cfg["batch"]
    tol = cfg["tolerances"]
    times = _times(b)
    rows = []
    for lam in b["lambdas"]:
        fam = _family(cfg, lam)
        mu = response.ac_measure(fam, b["realizations"], threads)
        ref = response.xi_p(fam, times, b["realizations"], threads)
        tag = f"ac-lam{lam:g}"
        rows.append(_le(f"{tag}-recon", "levy-khintchine", float(np.max(np.abs(mu.reconstruct(times) - ref.mean))), tol["reconstruction"]))
        rows.append(_le(f"{tag}-psd", "weights-psd", mu.psd_defect(), tol["psd"]))
        rows.append(_le(f"{tag}-sym", "measure-symmetric", mu.symmetry_defect(), tol["symmetry"]))
        rep = response.moment_report(mu, b["max_moment"])
        rows.append(_le(f"{tag}-odd", "odd-moments", rep["odd_defect"], tol["odd_moment"]))
        rows.append(_le(f"{tag}-even", "even-moments-psd", rep["psd_defect"], tol["psd"]))
        rows.append(_eq(f"{tag}-finite", "moments-finite", float(rep["finite"]), 1.0))
        _write_json(out_dir / f"ac-measure_lam{lam:g}.json", mu.to_json())
    return rows


def _suite_increments(cfg, threads, override, out_dir: Path):
    b = cfg["batch"]
    tol = cfg["tolerances"]
    s, t = b["s"], b["t"]
    rows = []
    for lam in b["lambdas"]:
        model = _family(cfg, lam).realization(0)
        Phi = model.full_interaction
        fp = _field(cfg)
        tag = f"inc-lam{lam:g}"
        rows.append(_le(f"{tag}-eta0", "increment-eta-zero", max_entry(response.increment(model, fp, Phi, s, t, 0.0)), 0.0))
        rows.append(_le(f"{tag}-tis", "increment-equal-times", max_entry(response.increment(model, fp, Phi, t, t, 1.0)), 0.0))
        D1 = response.increment_derivative_integral(model, fp, Phi, s, t)
        h = b["step"]
        cd = (response.increment(model, fp, Phi, s, t, h).matrix - response.increment(model, fp, Phi, s, t, -h).matrix) / (2 * h)
        rows.append(_le(f"{tag}-deriv", "increment-derivative", float(np.max(np.abs(cd - D1.matrix))), tol["derivative"] * max(1.0, spectral_norm(D1))))
        rep = response.taylor_slopes(model, fp, Phi, s, t, tuple(b["etas"]), b["max_order"])
        for m, slope in rep["slopes"].items():
            rows.append(_le(f"{tag}-slope{m}", "taylor-slope", m + tol["slope_excess"], slope))
    return rows


RUNNERS = {
    "verify-lr": _suite_verify_lr,
    "verify-multicomm": _suite_multicomm,
    "tree-suite": _suite_trees,
    "convergence": _suite_convergence,
    "telescoping": _suite_telescoping,
    "nonauto": _suite_nonauto,
    "conductivity": _suite_conductivity,
    "ac-measure": _suite_ac_measure,
    "increments": _suite_increments,
}
_WITH_ARTIFACTS = {"conductivity", "ac-measure", "increments"}


# output


def _fmt(x) -> str:
    return "%.17g" % float(x)


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summary(suite: str, rows: list[Row], wall_time: float) -> dict:
    return {
        "suite": suite,
        "n_cases": len(rows),
        "n_pass": sum(r.passed for r in rows),
        "worst_margin": _finite_or_none(min((r.margin for r in rows), default=None)),
        "wall_time": wall_time,
    }


def emit_report(suite: str, rows: list[Row], out_dir: Path, wall_time: float) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{suite}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.case_id, r.theorem, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin), "true" if r.passed else "false"])
    summ = summary(suite, rows, wall_time)
    _write_json(out_dir / f"{suite}.json", summ)
    return summ


def _print_table(suite: str, rows: list[Row], summ: dict, stream):
    by_theorem: dict[str, list[Row]] = {}
    for r in rows:
        by_theorem.setdefault(r.theorem, []).append(r)
    print(f"{suite}: {summ['n_pass']}/{summ['n_cases']} pass, worst margin {summ['worst_margin']}, {summ['wall_time']:.1f}s", file=stream)
    for th, rs in by_theorem.items():
        worst = min(r.margin for r in rs)
        print(f"  {th:<26} {sum(r.passed for r in rs):>5}/{len(rs):<5} worst margin {worst:.3e}", file=stream)


def _threads(arg: int | None, cfg: dict) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("LRLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"LRLAB_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("LRLAB_THREADS must be at least 1")
        return n
    return cfg["threads"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrlab", description="Exact small-lattice certification runs.")
    p.add_argument("subcommand", choices=SUITES)
    p.add_argument("--config", help="YAML config (defaults are used for anything omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--override-guards", action="store_true")
    p.add_argument("--quiet", action="store_true")
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    suite = args.subcommand
    try:
        cfg = load_config(args.config, suite)
        if args.seed is not None:
            _require(args.seed >= 0, "seed must be nonnegative")
            cfg["seed"] = args.seed
        if args.threads is not None:
            _require(args.threads >= 1, "threads must be at least 1")
        threads = _threads(args.threads, cfg)
    except ConfigError as exc:
        print(f"lrlab: config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if not args.override_guards:
            check_guards(suite, cfg)
    except GuardError as exc:
        print(f"lrlab: resource guard: {exc} (use --override-guards)", file=sys.stderr)
        return EXIT_GUARD
    out_dir = Path(args.out if args.out is not None else cfg["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    runner = RUNNERS[suite]
    if suite in _WITH_ARTIFACTS:
        rows = runner(cfg, threads, args.override_guards, out_dir)
    else:
        rows = runner(cfg, threads, args.override_guards)
    summ = emit_report(suite, rows, out_dir, time.perf_counter() - start)
    if not args.quiet:
        _print_table(suite, rows, summ, sys.stdout)
    return EXIT_OK if summ["n_pass"] == summ["n_cases"] else EXIT_FAIL


def main(argv: list[str] | None = None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
