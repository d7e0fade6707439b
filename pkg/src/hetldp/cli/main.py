"""``hetldp`` command line.

Exit status: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation. On failure a JSON record
``{"error": {"code", "kind", "message", ...}}`` is written to stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import __version__, dist_learn, multidim_mech, scalar_mech
from .._backend import BACKEND
from ..core import DomainError, InputError, PrivacyBudgets
from ..harness import (
    REPORT_COLUMNS,
    ConfigError,
    ExperimentConfig,
    Mechanism,
    audit_duchi,
    audit_laplace,
    audit_rr,
    matrix_seed,
    simulate,
)
from . import datafiles as df
from .configfile import parse_config_document, serialize_config

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
SEED_ENV = "HETLDP_SEED"
U64_MAX = 2**64 - 1
AUDIT_GRID = np.arange(-1000, 1001) * 0.01

PLOT_SCRIPT = '''\
"""Plot empirical error quantiles against the fitted reference shape.

Usage: python plot_quantiles.py [report.csv] [out.png]
"""
import csv
import math
import sys

import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "report.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "quantiles.png"
with open(src, newline="") as fh:
    rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
rows.sort(key=lambda row: row["beta"], reverse=True)
x = [math.log(1.0 / row["beta"]) for row in rows]
plt.plot(x, [row["empirical_quantile"] for row in rows], "o-", label="empirical quantile")
plt.plot(x, [row["fitted_constant"] * row["shape"] for row in rows], "s--", label="fitted constant x shape")
plt.xlabel("log(1/beta)")
plt.ylabel("error")
plt.legend()
plt.savefig(dst, dpi=150)
'''


class InvariantViolation(RuntimeError):
    """A computed result broke a property the code guarantees."""


# ---------------------------------------------------------------- arguments


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise ConfigError("seed", f"not an integer: {text!r}") from None
    if not 0 <= value <= U64_MAX:
        raise ConfigError("seed", f"must lie in [0, 2^64 - 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _epsilon_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or not all(math.isfinite(v) and v > 0 for v in values):
        raise argparse.ArgumentTypeError("epsilons must be positive and finite")
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment file (INI sections [experiment], [budgets], [data])")
    common.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
    common.add_argument("--seed", metavar="U64", help=f"master seed; overrides the config, falls back to ${SEED_ENV}, then 0")
    common.add_argument("--trials", metavar="N", type=_positive_int, help="override the number of trials")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (default csv)")
    common.add_argument("--no-clamp", action="store_true", help="report raw estimates without projecting to the domain")
    common.add_argument("--simplex-project", action="store_true", help="project learned distributions onto the simplex")
    common.add_argument("--gamma-variant", choices=("proof", "algorithm"), help="accuracy parameter formula for distribution learning")

    parser = _Parser(prog="hetldp", description="Locally private estimation with heterogeneous privacy budgets.")
    parser.add_argument("--version", action="version", version=f"hetldp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("privatize", parents=[common], help="privatize every user of a data file")
    p.add_argument("--input", metavar="PATH", required=True,
                   help="user data: CSV value,epsilon (scalar, item) or JSONL {\"x\": [...], \"epsilon\": e}")
    p = sub.add_parser("estimate", parents=[common], help="aggregate a report file")
    p.add_argument("--input", metavar="PATH", required=True, help="reports written by privatize")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo trials and bound-shape fit")
    p = sub.add_parser("audit", parents=[common], help="analytic privacy audits of every mechanism")
    p.add_argument("--epsilons", type=_epsilon_list, default=[0.1, 0.5, 1.0], help="comma-separated privacy budgets")
    p.add_argument("--mc-draws", type=int, default=0, help="Monte Carlo draws for the hemisphere-mass check")
    p = sub.add_parser("learn-dist", parents=[common], help="learn an item distribution end to end")
    p.add_argument("--input", metavar="PATH", required=True, help="CSV value,epsilon with items 0..d-1 (empty or null: no item)")
    p = sub.add_parser("report", parents=[common], help="re-render tables and the plot script from a simulate directory")
    p.add_argument("--from", dest="source", metavar="DIR", required=True, help="directory written by simulate")
    return parser


# ----------------------------------------------------------------- context


def _resolve_seed(flag, cfg_seed, seed_given) -> int:
    if flag is not None:
        return _u64(flag)
    if seed_given:
        return cfg_seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        return _u64(env.strip())
    return 0


def _load_config(args, required=True) -> ExperimentConfig | None:
    if args.config is None:
        if required:
            raise ConfigError("config", "--config PATH is required for this command")
        return None
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {args.config} ({exc.strerror})") from None
    parsed = parse_config_document(text)
    cfg = parsed.config
    overrides = {"seed": _resolve_seed(args.seed, cfg.seed, parsed.seed_given)}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.no_clamp:
        overrides["clamp"] = False
    if args.simplex_project:
        overrides["simplex_project"] = True
    if args.gamma_variant is not None:
        overrides["gamma_variant"] = args.gamma_variant
    return replace(cfg, **overrides)


def _out_dir(args) -> Path:
    if args.out is None:
        raise ConfigError("out", "--out DIR is required for this command")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"cannot create {out} ({exc.strerror})") from None
    return out


def _write_manifest(out: Path, command: str, args, cfg, seed, files) -> None:
    manifest = {
        "tool": "hetldp",
        "version": __version__,
        "command": command,
        "config_path": args.config,
        "config": serialize_config(cfg) if cfg is not None else None,
        "out": str(out),
        "format": args.format,
        "seed": seed,
        "backend": BACKEND,
        "files": [{"path": name, "sha256": df.sha256_file(out / name)} for name in sorted(files)],
    }
    df.write_json(out / "manifest.json", manifest)


def _table(out: Path, stem: str, fmt: str, header, rows) -> str:
    if fmt == "json":
        name = f"{stem}.json"
        df.write_json(out / name, [dict(zip(header, row)) for row in rows])
    else:
        name = f"{stem}.csv"
        df.write_csv(out / name, header, rows)
    return name


def _projection(cfg: ExperimentConfig, budgets: PrivacyBudgets):
    gamma, m = dist_learn.jl_params(budgets, cfg.jl_beta, cfg.d, cfg.gamma_variant)
    return gamma, dist_learn.generate_projection(m, cfg.d, matrix_seed(cfg.seed))


# ---------------------------------------------------------------- commands


def cmd_privatize(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    mech = cfg.mechanism
    if cfg.is_scalar:
        xs, budgets = df.ingest_dataset(args.input, "scalar", binary=mech is Mechanism.RR)
        reports = scalar_mech.privatize_batch(mech.value, xs, budgets, cfg.seed)
        name = "reports.csv"
        df.write_scalar_reports(out / name, reports)
    elif mech is Mechanism.DUCHI:
        xs, budgets = df.ingest_dataset(args.input, "vector", r=cfg.r, d=cfg.d)
        reports = multidim_mech.privatize_batch(xs, budgets, cfg.r, cfg.seed, cfg.radius_variant)
        name = "reports.jsonl"
        df.write_duchi_reports(out / name, reports)
    else:
        items, budgets = df.ingest_dataset(args.input, "item", d=cfg.d)
        _, proj = _projection(cfg, budgets)
        reports = dist_learn.privatize_batch(items, budgets, proj, cfg.seed)
        name = "reports.csv"
        df.write_sparse_reports(out / name, reports)
        df.write_json(out / "projection.json", {"m": proj.m, "d": proj.d, "seed_hash": proj.seed_hash})
        _write_manifest(out, "privatize", args, cfg, cfg.seed, [name, "projection.json"])
        return EXIT_OK
    _write_manifest(out, "privatize", args, cfg, cfg.seed, [name])
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    mech = cfg.mechanism
    summary = {"mechanism": mech.value}
    if cfg.is_scalar:
        reports = df.read_scalar_reports(args.input, mech.value)
        budgets = PrivacyBudgets(reports.epsilons)
        est = scalar_mech.estimate(reports, budgets, clamp=cfg.clamp)
        header, rows = ["estimate", "raw"], [[est.theta_hat, est.theta_raw]]
        summary.update(estimate=est.theta_hat, raw=est.theta_raw, clamped=est.clamped, n=budgets.n)
    elif mech is Mechanism.DUCHI:
        reports = df.read_duchi_reports(
            args.input, cfg.r, lambda d, eps: multidim_mech.duchi_radii(d, cfg.r, eps, cfg.radius_variant)
        )
        budgets = PrivacyBudgets(reports.epsilons)
        est = multidim_mech.multidim_estimate(reports, budgets, cap=cfg.clamp)
        header = ["coordinate", "estimate", "raw"]
        rows = [[i, e, r] for i, (e, r) in enumerate(zip(est.theta_hat.tolist(), est.theta_raw.tolist()))]
        summary.update(estimate=est.theta_hat.tolist(), raw=est.theta_raw.tolist(), norm_capped=est.norm_capped, n=budgets.n)
    else:
        header, rows, extra = _dist_estimate(args, cfg)
        summary.update(extra)
    name = _table(out, "estimate", args.format, header, rows)
    df.write_json(out / "estimate_summary.json", summary)
    _write_manifest(out, "estimate", args, cfg, cfg.seed, [name, "estimate_summary.json"])
    return EXIT_OK


def _dist_estimate(args, cfg):
    # budgets travel with the reports, so the projection can be rebuilt from them
    reports = df.read_sparse_reports(args.input, cfg.d)
    budgets = PrivacyBudgets(reports.epsilons)
    gamma, proj = _projection(cfg, budgets)
    reports = df.check_sparse_reports(args.input, reports, proj.m, proj.seed_hash)
    meta = Path(args.input).with_name("projection.json")
    if meta.exists():
        tag = json.loads(meta.read_text(encoding="utf-8")).get("seed_hash")
        if tag != proj.seed_hash:
            raise df.DataError(args.input, None, "reports were built against a different projection (seed or budgets differ)")
    est = dist_learn.estimate_distribution(dist_learn.aggregate_reports(reports, budgets), proj, gamma)
    raw = est.p_hat
    if cfg.simplex_project:
        est = dist_learn.project_to_simplex(est)
    rows = [[v, p, q] for v, (p, q) in enumerate(zip(est.p_hat.tolist(), raw.tolist()))]
    extra = {"gamma": gamma, "m": proj.m, "d": proj.d, "seed_hash": proj.seed_hash,
             "simplex_projected": est.simplex_projected, "n": budgets.n}
    return ["item", "estimate", "raw"], rows, extra


def _check_result(result) -> None:
    errors = result.sample.errors
    if errors.shape[0] != result.config.trials or not np.all(errors >= 0) or not np.isfinite(errors).all():
        raise InvariantViolation("error sample must hold one finite non-negative error per trial")
    q = [r.empirical_quantile for r in sorted(result.rows, key=lambda r: r.beta)]
    if any(a < b for a, b in zip(q, q[1:])):
        raise InvariantViolation("empirical quantiles are not monotone in beta")


def _render_report(out: Path, fmt: str, summary: dict) -> list[str]:
    rows = [[row[k] for k in REPORT_COLUMNS] for row in summary["rows"]]
    name = _table(out, "report", fmt, REPORT_COLUMNS, rows)
    df.write_text(out / "plot_quantiles.py", PLOT_SCRIPT)
    return [name, "plot_quantiles.py"]


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    result = simulate(cfg)
    _check_result(result)
    summary = result.summary()
    files = _render_report(out, args.format, summary)
    df.write_json(out / "summary.json", summary)
    df.write_csv(out / "errors.csv", ["trial", "seed", "error"],
                 [[t, int(s), float(e)] for t, (s, e) in enumerate(zip(result.sample.seeds, result.sample.errors))])
    _write_manifest(out, "simulate", args, cfg, cfg.seed, files + ["summary.json", "errors.csv"])
    return EXIT_OK


def cmd_audit(args) -> int:
    header = ["epsilon", "rr", "laplace", "duchi", "hemisphere_mass", "passed"]
    rows = []
    for eps in args.epsilons:
        seed = _resolve_seed(args.seed, 0, False)
        results = [audit_rr(eps), audit_laplace(eps, AUDIT_GRID), audit_duchi(eps, mc_draws=args.mc_draws, seed=seed)]
        passed = all(r.passed for r in results)
        rows.append([eps] + [r.max_log_ratio for r in results] + [results[2].details["hemisphere_mass"], passed])
        if not passed:
            raise InvariantViolation(f"audit at epsilon={eps!r} exceeded the budget: {[r.max_log_ratio for r in results]}")
    if args.out is None:
        if args.format == "csv":
            sys.stdout.write(df.csv_text(header, rows))
        else:
            sys.stdout.write(json.dumps([dict(zip(header, row)) for row in rows], indent=2) + "\n")
        return EXIT_OK
    out = _out_dir(args)
    name = _table(out, "audit", args.format, header, rows)
    _write_manifest(out, "audit", args, None, None, [name])
    return EXIT_OK


def cmd_learn_dist(args) -> int:
    cfg = _load_config(args)
    if cfg.mechanism is not Mechanism.DIST_LEARN:
        raise ConfigError("mechanism", f"learn-dist needs mechanism = dist_learn, got {cfg.mechanism.value}")
    out = _out_dir(args)
    items, budgets = df.ingest_dataset(args.input, "item", d=cfg.d)
    est, proj, reports = dist_learn.learn_distribution(
        items, budgets, cfg.jl_beta, cfg.d, cfg.seed, matrix_seed(cfg.seed), cfg.gamma_variant, cfg.simplex_project
    )
    if cfg.simplex_project and (np.any(est.p_hat < 0) or abs(math.fsum(est.p_hat.tolist()) - 1.0) > 1e-9):
        raise InvariantViolation("simplex projection left the simplex")
    name = _table(out, "distribution", args.format, ["item", "p_hat"], [[v, p] for v, p in enumerate(est.p_hat.tolist())])
    df.write_json(out / "learn_summary.json", {
        "gamma": est.gamma, "m": proj.m, "d": proj.d, "seed_hash": proj.seed_hash, "n": budgets.n,
        "simplex_projected": est.simplex_projected, "sum_eps_squared": budgets.sum_squares,
    })
    _write_manifest(out, "learn-dist", args, cfg, cfg.seed, [name, "learn_summary.json"])
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.source)
    try:
        summary = json.loads((src / "summary.json").read_text(encoding="utf-8"))
        rows = summary["rows"]
        for row in rows:
            for key in REPORT_COLUMNS:
                float(row[key])
    except OSError as exc:
        raise df.DataError(src / "summary.json", None, f"cannot read ({exc.strerror})") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise df.DataError(src / "summary.json", None, f"not a simulate summary ({exc})") from None
    out = _out_dir(args) if args.out is not None else src
    files = _render_report(out, args.format, summary)
    if out != src:
        df.write_json(out / "summary.json", summary)
        files.append("summary.json")
    _write_manifest(out, "report", args, None, summary.get("seed"), files)
    return EXIT_OK


COMMANDS = {
    "privatize": cmd_privatize,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "learn-dist": cmd_learn_dist,
    "report": cmd_report,
}


def _fail(code: int, kind: str, message: str, **extra) -> int:
    record = {"code": code, "kind": kind, "message": message}
    record.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps({"error": record}, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), field=exc.field, line=exc.line)
    except df.DataError as exc:
        return _fail(EXIT_DATA, "data", str(exc), path=exc.path, row=exc.row)
    except (InputError, DomainError) as exc:
        return _fail(EXIT_DATA, "data", str(exc))
    except InvariantViolation as exc:
        return _fail(EXIT_INTERNAL, "invariant", str(exc))
    except Exception as exc:  # noqa: BLE001 - every failure must leave a record
        return _fail(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}")
