"""Command line entry point.

    glwire run <cfg>
    glwire sweep <cfg> --param kappa --values 4,8,16,32 [--jobs N]
    glwire spectral theta0|sector|mu|lambda [args]
    glwire report <dir>

Exit codes: 0 success, 2 configuration error, 3 solver error (the failing
stage is named), 4 a registered check failed.  GLWIRE_OUT overrides the
output root.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis as an
from . import spectral
from .config import RunConfig, load_config
from .errors import ConfigError, EigSolveError, GlwireError
from .io import content_hash, dumps, read_csv, write_csv, write_json
from .pipeline import StageError, run_case, write_case

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4
SWEEP_PARAMS = {"kappa": ("physics", "kappa"), "c": ("physics", "c"),
                "J0": ("current", "amplitude"), "delta": ("analysis", "delta"), "eps": None}
SPECTRAL_CSV = "spectral.csv"
SPECTRAL_HEADER = ["quantity", "param1", "param2", "param3", "value", "residual"]


def output_root(cfg: RunConfig | None = None) -> Path:
    env = os.environ.get("GLWIRE_OUT")
    if env:
        return Path(env)
    return Path(cfg.output.directory if cfg is not None else "out")


def _err(msg: str) -> None:
    print(f"glwire: {msg}", file=sys.stderr)


# -------------------------------------------------------------------- run

def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out = output_root(cfg)
    try:
        res = run_case(cfg, out)
        summary = write_case(res, out)
    except StageError as exc:
        _err(f"solver error in stage '{exc.stage}': {exc.cause}")
        return EXIT_SOLVER
    except GlwireError as exc:
        _err(f"solver error in stage 'analysis': {exc}")
        return EXIT_SOLVER
    print(f"status={summary['status']} fixed_point={summary['fixed_point']} t={summary['t']:.6g} "
          f"norm2={summary['norm2']:.6e} sup={summary['sup']:.6f} -> {out}")
    return EXIT_OK


# ------------------------------------------------------------------ sweep

def parse_values(text: str) -> list:
    """Comma-separated numbers; fractions such as 1/8 are allowed."""
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            vals.append(float(Fraction(tok)))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"--values: cannot parse {tok!r}") from None
    return vals


def _sweep_row(job) -> dict:
    """One sweep point in its own output directory (runs in a worker)."""
    cfg, param, value, out = job
    row = {"param": param, "value": value}
    try:
        if param == "eps":
            res = run_case(cfg, out, large_domain_eps=value)
            summary = write_case(res, out)
            ld = an.large_domain_from_state(value, cfg.analysis.gamma, res.model, res.state,
                                            res.report, cfg.analysis.delta)
            w = an.w_comparison(ld)
            row.update(d_delta=ld.d_delta, w_defect=w["defect"], w_ok=w["ok"])
            try:
                fit = an.agmon_large_domain(ld, _cached_theta0(out.parent))
                row.update(decay_rate=fit.slope, decay_r2=fit.r_squared, predicted_rate=fit.predicted)
            except (GlwireError, ValueError) as exc:
                row.update(decay_rate=float("nan"), decay_error=type(exc).__name__)
        else:
            res = run_case(cfg, out)
            summary = write_case(res, out)
        row.update(status=summary["status"], fixed_point=summary["fixed_point"],
                   norm2=summary["norm2"], sup=summary["sup"], t=summary["t"],
                   energy_defect=summary["identities_relative"]["energy"],
                   ratio_omega_delta_2=summary["ratio_omega_delta_2"], ok=True)
    except (StageError, GlwireError) as exc:
        row.update(ok=False, error=f"{type(exc).__name__}: {exc}")
    return row


SWEEP_COLUMNS = ["value", "ok", "status", "fixed_point", "t", "norm2", "sup", "energy_defect",
                 "ratio_omega_delta_2", "d_delta", "w_defect", "w_ok", "decay_rate", "decay_r2",
                 "predicted_rate"]


def sweep_checks(param: str, rows: list, cfg: RunConfig) -> dict:
    """Property checks registered for each sweep type (name -> bool)."""
    good = [r for r in rows if r.get("ok")]
    checks = {}
    if param == "kappa" and len(good) >= 4:
        res = an.summarize_sweep([dict(kappa=r["value"], norm2=r["norm2"]) for r in good],
                                 cfg.physics.c)
        checks["kappa_bound"] = res.bound_ok
        checks["kappa_monotone"] = res.monotone_ok
    if param == "eps" and good:
        ds = np.array([r["d_delta"] for r in good])
        eps = np.array([r["value"] for r in good])
        dc = an.d_delta_checks(eps, ds)
        checks["d_delta_ge_C_eps"] = dc["d_delta_ge_C_eps"]
        checks["d_delta_ge_C"] = dc["d_delta_ge_C"]
        checks["w_comparison"] = all(bool(r["w_ok"]) for r in good)
        order = np.argsort(-eps)
        rates = np.array([r.get("decay_rate", np.nan) for r in good])[order]
        checks["decay_rate_grows"] = bool(np.all(np.isfinite(rates)) and np.all(np.diff(rates) > 0))
    return checks


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.param not in SWEEP_PARAMS:
            raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
        values = parse_values(args.values)
        if not values:
            raise ConfigError("--values: empty value list")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        jobs = []
        root = output_root(cfg)
        for v in sorted(values):
            key = SWEEP_PARAMS[args.param]
            c = cfg if key is None else cfg.with_value(*key, v)
            if key is None and not 0 < v < 1:
                raise ConfigError(f"--values: eps must lie in (0, 1), got {v}")
            jobs.append((c, args.param, v, root / f"{args.param}_{v!r}"))
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    if args.param == "eps":
        _cached_theta0(root)
    if args.jobs == 1:
        rows = [_sweep_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    table = [[r.get(c, "") for c in SWEEP_COLUMNS] for r in rows]
    write_csv(root / f"sweep_{args.param}.csv", SWEEP_COLUMNS, table, cfg.as_dict())
    checks = sweep_checks(args.param, rows, cfg)
    errors = {repr(r["value"]): r["error"] for r in rows if not r.get("ok")}
    write_json(root / f"sweep_{args.param}.json", {"checks": checks, "errors": errors},
               dict(cfg.as_dict(), sweep={"param": args.param, "values": sorted(values)}))
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    for v, e in errors.items():
        print(f"row {v} failed: {e}")
    if not any(r.get("ok") for r in rows):
        return EXIT_SOLVER
    return EXIT_CHECK if not all(checks.values()) else EXIT_OK


# --------------------------------------------------------------- spectral

def _cached_theta0(root: Path) -> float:
    """Theta0 from the cache file in ``root``; computed and stored if absent."""
    path = Path(root) / "theta0.json"
    if path.exists():
        return float(json.loads(path.read_text())["data"]["value"])
    res = spectral.de_gennes_theta0()
    write_json(path, {"value": res.value, "xi0": res.xi0, "T": res.T, "h": res.h})
    return res.value


def _append_spectral(root: Path, row: list) -> None:
    path = root / SPECTRAL_CSV
    rows = read_csv(path)[1] if path.exists() else []
    rows.append(row)
    write_csv(path, SPECTRAL_HEADER, rows)


def cmd_spectral(args) -> int:
    root = output_root()
    try:
        if args.what == "theta0":
            res = spectral.de_gennes_theta0(T=args.T, h=args.h)
            root.mkdir(parents=True, exist_ok=True)
            write_json(root / "theta0.json", {"value": res.value, "xi0": res.xi0, "T": res.T,
                                              "h": res.h})
            _append_spectral(root, ["theta0", args.T, args.h, "", res.value,
                                    res.stationarity_defect])
            print(f"theta0 {res.value!r} xi0 {res.xi0!r}")
        elif args.what == "sector":
            alpha = args.alpha_deg * math.pi / 180.0
            r = spectral.sector_dn_ground(spectral.SectorProblem(alpha, args.R, args.h))
            th = _cached_theta0(root)
            _append_spectral(root, ["sector", args.alpha_deg, args.R, args.h, r.value, r.residual])
            print(f"sector alpha={args.alpha_deg}deg {r.value!r} ratio_to_theta0 {r.value / th!r}")
        elif args.what == "mu":
            from .domain import build_wire_domain
            n = args.n
            _, grid = build_wire_domain(1.0, 1.0, n + 1, n + 1)
            # symmetric gauge of the unit field
            ax = -0.5 * (np.ones(grid.nx - 1)[:, None] * grid.y[None, :])
            ay = 0.5 * (grid.x[:, None] * np.ones(grid.ny - 1)[None, :])
            D = np.ones(grid.shape, bool)
            r = spectral.mu_eps(grid, ax, ay, D, args.eps)
            _append_spectral(root, ["mu", args.eps, n, "", r.value, r.residual])
            print(f"mu_eps eps={args.eps} {r.value!r} over eps {r.value / args.eps!r}")
        elif args.what == "lambda":
            lam, lamD = spectral.lambda_vs_lambdaD(args.Lx, args.Ly, args.h)
            _append_spectral(root, ["lambda", args.Lx, args.Ly, args.h, lam, ""])
            _append_spectral(root, ["lambdaD", args.Lx, args.Ly, args.h, lamD, ""])
            print(f"lambda {lam!r} lambdaD {lamD!r} rel_diff {abs(lam - lamD) / lamD!r}")
    except EigSolveError as exc:
        _err(f"solver error in stage 'spectral {args.what}': {exc}")
        return EXIT_SOLVER
    except GlwireError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


# ----------------------------------------------------------------- report

def cmd_report(args) -> int:
    """Summarise every run report under a directory and verify its hash."""
    root = Path(args.directory)
    reports = sorted(root.rglob("report.json"))
    if not reports:
        _err(f"no report.json under {root}")
        return EXIT_CONFIG
    bad = 0
    for p in reports:
        doc = json.loads(p.read_text())
        ok = content_hash(dumps(doc["data"])) == doc["sha256"]
        d = doc["data"]
        bad += not ok
        print(f"{p.parent}: status={d['status']} fixed_point={d['fixed_point']} "
              f"norm2={d['norm2']:.6e} sup={d['sup']:.6f} hash={'ok' if ok else 'MISMATCH'}")
    return EXIT_CHECK if bad else EXIT_OK


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glwire", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="single simulation from a config file")
    r.add_argument("config", type=Path)
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="independent runs over one parameter")
    s.add_argument("config", type=Path)
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated, e.g. 4,8,16,32 or 1/8,1/16")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("spectral", help="magnetic ground-state constants")
    ssub = sp.add_subparsers(dest="what", required=True)
    t = ssub.add_parser("theta0")
    t.add_argument("--T", type=float, default=10.0)
    t.add_argument("--h", type=float, default=0.01)
    sc = ssub.add_parser("sector")
    sc.add_argument("--alpha-deg", type=float, default=90.0)
    sc.add_argument("--R", type=float, default=12.0)
    sc.add_argument("--h", type=float, default=0.05)
    mu = ssub.add_parser("mu")
    mu.add_argument("--eps", type=float, default=0.1)
    mu.add_argument("--n", type=int, default=64)
    la = ssub.add_parser("lambda")
    la.add_argument("--Lx", type=float, default=1.0)
    la.add_argument("--Ly", type=float, default=1.0)
    la.add_argument("--h", type=float, default=1.0 / 64)
    sp.set_defaults(func=cmd_spectral)
    rp = sub.add_parser("report", help="summarise run reports under a directory")
    rp.add_argument("directory", type=Path)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
