"""Command-line front end.

Economies are described in YAML files carrying ``schema_version: 1``; see
``configs/`` for examples. Exit codes: 0 success, 1 verification failure,
2 bad config or input file, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import continuum as ct
from . import oracle
from . import primitives
from . import two_type as tt
from .prior import ChainParams, DomainError, TwoTypePrior, transition
from .valuation import Experiment, cross_value

SCHEMA_VERSION = 1
SCHEDULE_COLUMNS = ("theta", "pi_g", "pi_b", "price", "rent")
REGION_COLUMNS = ("u", "p", "regime", "t_l", "t_h", "pi_lg", "pi_lb", "revenue")


class ConfigError(ValueError):
    """Problem with a config or menu file; the message names the field."""


# ---------------------------------------------------------------- config parsing

def _num(section: dict, key: str, where: str, default=None) -> float:
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"missing field '{where}{key}'")
    raw = section[key]
    try:
        if isinstance(raw, str):
            return float(Fraction(raw.strip()))
        if isinstance(raw, bool):
            raise TypeError
        return float(raw)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"field '{where}{key}' must be a number, got {raw!r}") from None


def _section(doc: dict, key: str, required=True) -> dict:
    sec = doc.get(key)
    if sec is None:
        if required:
            raise ConfigError(f"missing field '{key}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"field '{key}' must be a mapping")
    return sec


def load_config(path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version' must be {SCHEMA_VERSION}, got {version!r}")
    if doc.get("kind") not in ("two_type", "continuum"):
        raise ConfigError(f"field 'kind' must be 'two_type' or 'continuum', got {doc.get('kind')!r}")
    return doc


def _prior_section(doc):
    prior = _section(doc, "prior")
    mu = _num(prior, "mu", "prior.")
    wanted, other = ("p", "lambda_b") if doc["kind"] == "two_type" else ("lambda_b", "p")
    if other in prior:
        raise ConfigError(f"field 'prior.{other}' is not allowed for kind {doc['kind']}")
    return mu, _num(prior, wanted, "prior.")


def two_type_economy(doc) -> tt.TwoTypeEconomy:
    mu, p = _prior_section(doc)
    try:
        prior = TwoTypePrior(mu, p)
        return tt.TwoTypeEconomy(prior, _num(doc, "rho", ""), _num(doc, "u_l", ""),
                                 _num(doc, "u_h", ""))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _payoff(doc) -> primitives.Payoff:
    spec = dict(_section(doc, "payoff"))
    family = spec.pop("family", None)
    if family == "table":
        try:
            return primitives.tabulated(spec["theta"], spec["u"])
        except KeyError as exc:
            raise ConfigError(f"missing field 'payoff.{exc.args[0]}'") from None
        except DomainError as exc:
            raise ConfigError(f"field 'payoff': {exc}") from None
    if family not in primitives.PAYOFF_FAMILIES:
        raise ConfigError(f"field 'payoff.family' must be one of "
                          f"{sorted(primitives.PAYOFF_FAMILIES) + ['table']}, got {family!r}")
    kwargs = {k: _num(spec, k, "payoff.") for k in spec}
    try:
        return primitives.PAYOFF_FAMILIES[family](**kwargs)
    except TypeError as exc:
        raise ConfigError(f"field 'payoff': {exc}") from None
    except DomainError as exc:
        raise ConfigError(f"field 'payoff': {exc}") from None


def _distribution(doc, theta_max) -> primitives.TypeDistribution:
    spec = dict(_section(doc, "distribution", required=False)) or {"family": "uniform"}
    family = spec.pop("family", "uniform")
    if family not in primitives.DISTRIBUTION_FAMILIES:
        raise ConfigError(f"field 'distribution.family' must be one of "
                          f"{sorted(primitives.DISTRIBUTION_FAMILIES)}, got {family!r}")
    kwargs = {k: _num(spec, k, "distribution.") for k in spec}
    try:
        return primitives.DISTRIBUTION_FAMILIES[family](theta_max, **kwargs)
    except (TypeError, DomainError) as exc:
        raise ConfigError(f"field 'distribution': {exc}") from None


def continuum_economy(doc) -> ct.ContinuumEconomy:
    mu, lambda_b = _prior_section(doc)
    theta_max = _num(doc, "theta_max", "", default=2.0)
    try:
        params = ChainParams(mu, lambda_b)
        return ct.ContinuumEconomy(theta_max, params, _payoff(doc), _distribution(doc, theta_max))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def economy_from_config(doc):
    return two_type_economy(doc) if doc["kind"] == "two_type" else continuum_economy(doc)


def grid_size(doc) -> int:
    size = int(_num(_section(doc, "grid", required=False), "size", "grid.", default=401))
    if size < 3:
        raise ConfigError("field 'grid.size' must be at least 3")
    return size


def _tolerance(doc, args) -> float:
    if args.tolerance is not None:
        return args.tolerance
    return _num(doc, "tolerance", "", default=oracle.IC_TOL)


def _seed(doc, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(_num(doc, "seed", "", default=0))


# ---------------------------------------------------------------- file formats

def _fmt(x) -> str:
    return format(float(x), ".17g")


def header_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_schedule(schedule: ct.MenuSchedule, path) -> None:
    path = Path(path)
    cols = schedule.columns()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCHEDULE_COLUMNS)
        for row in zip(*(cols[c] for c in SCHEDULE_COLUMNS)):
            w.writerow([_fmt(v) for v in row])
    header = {"schema_version": SCHEMA_VERSION, "kind": "continuum", **schedule.header()}
    header_path(path).write_text(json.dumps(header, indent=2) + "\n")


def read_schedule(path) -> ct.MenuSchedule:
    path = Path(path)
    try:
        text = path.read_text()
        header = json.loads(header_path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read schedule {exc.filename}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schedule header is not valid JSON: {exc}") from None
    if header.get("kind") != "continuum":
        raise ConfigError(f"menu kind {header.get('kind')!r} does not match config kind 'continuum'")
    rows = list(csv.reader(text.splitlines()))
    if not rows or tuple(rows[0]) != SCHEDULE_COLUMNS or len(rows) < 2:
        raise ConfigError(f"schedule CSV must have header {','.join(SCHEDULE_COLUMNS)} and rows")
    try:
        data = np.array(rows[1:], dtype=float)
    except ValueError:
        raise ConfigError("schedule CSV contains non-numeric entries") from None
    extra = {k: v for k, v in header.items()
             if k not in ("schema_version", "kind", "regime", "theta_star_low", "theta_star_high",
                          "theta_G", "revenue", "grid_size")}
    try:
        return ct.MenuSchedule(*data.T, float(header["theta_star_low"]),
                               float(header["theta_star_high"]), header["theta_G"],
                               float(header["revenue"]), header["regime"], extra)
    except KeyError as exc:
        raise ConfigError(f"schedule header is missing field '{exc.args[0]}'") from None


def read_two_type_menu(path) -> tt.TwoTypeMenu:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read menu {path}: {exc.strerror}") from None
    if not text.strip():
        raise ConfigError("menu file is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"menu is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") != "two_type":
        kind = doc.get("kind") if isinstance(doc, dict) else None
        raise ConfigError(f"menu kind {kind!r} does not match config kind 'two_type'")
    try:
        return tt.TwoTypeMenu.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed menu document: {exc}") from None


def _write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    doc = load_config(args.config)
    econ = economy_from_config(doc)
    if doc["kind"] == "two_type":
        menu = tt.solve(econ)
        _write_json({"schema_version": SCHEMA_VERSION, **menu.to_dict(econ)}, args.out)
        print(f"regime={menu.regime.value} revenue={menu.revenue(econ.rho):.12g}")
        return 0
    n = grid_size(doc)
    if econ.params.lambda_b == 0.0:
        schedule = ct.posted_price_schedule(econ, n)
    else:
        schedule = ct.solve_menu(econ, n)
    write_schedule(schedule, args.out)
    print(f"regime={schedule.regime} revenue={schedule.revenue:.12g} "
          f"theta_star_low={schedule.theta_star_low:.10g} "
          f"theta_star_high={schedule.theta_star_high:.10g} theta_G={schedule.theta_G}")
    return 0


def _axis(sec, name, lo_default, hi_default, step_default):
    lo = _num(sec, f"{name}_min", "region_map.", default=lo_default)
    hi = _num(sec, f"{name}_max", "region_map.", default=hi_default)
    step = _num(sec, f"{name}_step", "region_map.", default=step_default)
    if step <= 0 or hi < lo:
        raise ConfigError(f"field 'region_map.{name}_*' describes an empty range")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count), hi


def cmd_region_map(args) -> int:
    doc = load_config(args.config)
    if doc["kind"] != "two_type":
        raise ConfigError("region-map needs kind 'two_type'")
    prior = _section(doc, "prior")
    mu = _num(prior, "mu", "prior.")
    rho = _num(doc, "rho", "")
    u_l = _num(doc, "u_l", "", default=1.0)
    sec = _section(doc, "region_map", required=False)
    top = tt.admissible_p_max(mu)
    u_values, _ = _axis(sec, "u", 1.0, 2.6, 0.01)
    p_values, p_hi = _axis(sec, "p", 0.0, top, 0.005)
    if p_hi > top + 1e-12:
        raise ConfigError(f"field 'region_map.p_max'={p_hi} exceeds (1-mu)/mu={top:.6g}")
    p_values = np.minimum(p_values, top)
    try:
        rows = tt.region_map(mu, rho, u_l, u_values, p_values)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_COLUMNS)
        for r in rows:
            w.writerow([r["regime"] if c == "regime" else _fmt(r[c]) for c in REGION_COLUMNS])
    bpath = out.with_name(out.stem + "_boundaries.csv")
    with bpath.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("u", "p_full_surplus", "p_rents"))
        for b in tt.boundary_curves(mu, rho, u_values):
            w.writerow([_fmt(b["u"]), _fmt(b["p_full_surplus"]), _fmt(b["p_rents"])])
    counts = tt.regime_counts(rows)
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return 0


def _mc_spot_checks(econ, schedule, seed, n_draws=100_000):
    """Simulate a few products at a few distances; largest |empirical - analytic|."""
    idx = np.linspace(0, schedule.grid.size - 1, 3).astype(int)
    worst = 0.0
    for k, i in enumerate(idx):
        exp = Experiment(float(schedule.pi_g[i]), float(schedule.pi_b[i]))
        for m, delta in enumerate((0.0, 0.25 * econ.theta_max)):
            u = float(econ.u(schedule.grid[i])) or 1.0
            emp, _ = oracle.simulate_value(exp, econ.params, econ.mu, u, delta, n_draws,
                                           seed + 10 * k + m)
            exact = float(cross_value(exp, econ.mu, u, transition(econ.params, delta)))
            worst = max(worst, abs(emp - exact))
    return worst


def cmd_verify(args) -> int:
    doc = load_config(args.config)
    econ = economy_from_config(doc)
    tol = _tolerance(doc, args)
    menu_path = Path(args.menu)
    if doc["kind"] == "two_type":
        if menu_path.suffix == ".csv":
            raise ConfigError("menu kind 'continuum' does not match config kind 'two_type'")
        menu = read_two_type_menu(menu_path)
        report = oracle.audit_menu(menu, econ, tol)
    else:
        if menu_path.exists() and not menu_path.read_text().strip():
            raise ConfigError("menu file is empty")
        if menu_path.suffix == ".json":
            raise ConfigError("menu kind 'two_type' does not match config kind 'continuum'")
        schedule = read_schedule(menu_path)
        report = oracle.audit_menu(schedule, econ, tol)
        gap = None
        if schedule.regime != "POSTED_PRICE":
            gap = oracle.mirrlees_check(schedule, econ)
        mc = _mc_spot_checks(econ, schedule, _seed(doc, args))
        report = oracle.VerificationReport(report.ic_violations, report.ir_violations,
                                           report.revenue_closed_form, None, report.monotone,
                                           mc, gap, tol)
    text = report.to_json(indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} ic_violations={len(report.ic_violations)} "
          f"ir_violations={len(report.ir_violations)} worst_ic={report.worst_ic:.3g} "
          f"monotone={report.monotone}")
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    sec = _section(doc, "simulate")
    mu = _num(_section(doc, "prior"), "mu", "prior.")
    exp = Experiment(_num(sec, "pi_g", "simulate."), _num(sec, "pi_b", "simulate."))
    u = _num(sec, "u", "simulate.", default=1.0)
    n = int(_num(sec, "n_draws", "simulate.", default=100_000))
    seed = _seed(doc, args)
    if doc["kind"] == "continuum":
        params = ChainParams(mu, _prior_section(doc)[1])
        delta = _num(sec, "delta", "simulate.", default=0.0)
    else:
        p = _prior_section(doc)[1]
        params = ChainParams(mu, 1.0)
        delta = oracle.matching_delta(params, p)
    emp, se = oracle.simulate_value(exp, params, mu, u, delta, n, seed)
    exact = float(cross_value(exp, mu, u, transition(params, delta)))
    z = (emp - exact) / se if se > 0 else (0.0 if emp == exact else math.inf)
    out = {"schema_version": SCHEMA_VERSION, "experiment": exp.to_dict(), "delta": delta,
           "u": u, "n_draws": n, "seed": seed, "empirical": emp, "std_error": se,
           "analytic": exact, "z": z}
    if args.out:
        _write_json(out, args.out)
    print(f"empirical={emp:.6g} se={se:.3g} analytic={exact:.6g} z={z:.3g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infoprice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", required=True, help="economy YAML file")
        p.add_argument("--out", required=out_required, help="output path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--tolerance", type=float, default=None, help="override audit tolerance")

    p = sub.add_parser("solve", help="solve for the optimal menu")
    common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("region-map", help="two-type regime map over (u, p)")
    common(p)
    p.set_defaults(func=cmd_region_map)
    p = sub.add_parser("verify", help="audit a menu file against its economy")
    common(p, out_required=False)
    p.add_argument("--menu", required=True, help="menu JSON (two-type) or schedule CSV")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("simulate", help="Monte Carlo value of an experiment")
    common(p, out_required=False)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, DomainError, ct.AssumptionError, ct.WrongRegimeError,
            ct.ConsistencyError, tt.IncentiveError, RuntimeError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
