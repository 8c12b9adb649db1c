"""Command line entry point: ``recgame solve|sweep|calibrate|validate``.

Exit codes: 0 ok, 1 validation failed, 2 bad input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import calibration
from .bargaining import PARTICIPATION, BargainingSolution, solve_bargaining
from .game import Model
from .incentive import w
from .payoffs import j_b, j_h
from .scenario import ScenarioError, load
from .simulation import (InfiniteVariance, McConfig, TruncationTooShort,
                         simulate_payoff, simulate_w_killed, simulate_w_tau)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
Z_LIMIT = 3.0

SOLUTION_COLUMNS = ("beta_star", "y_h", "y_b", "case", "community_formed",
                    "j_h", "j_b", "d_h", "d_b", "nash_product")
SWEEP_COLUMNS = ("parameter", "value", "status") + SOLUTION_COLUMNS + ("error",)

log = logging.getLogger("recgame")


class InputError(Exception):
    pass


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def solution_row(sol: BargainingSolution) -> dict:
    return {
        "beta_star": sol.beta_star,
        "y_h": sol.outcome.y_h,
        "y_b": sol.outcome.y_b,
        "case": sol.outcome.case.value,
        "community_formed": sol.community_formed,
        "j_h": sol.j_h_star,
        "j_b": sol.j_b_star,
        "d_h": sol.d_h,
        "d_b": sol.d_b,
        "nash_product": sol.nash_product,
    }


def render(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        clean = [{c: (None if isinstance(r.get(c), float) and not math.isfinite(r[c]) else r.get(c))
                  for c in columns} for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(columns)
    for r in rows:
        out.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(path):
    if not path:
        raise InputError("--scenario is required")
    return load(path)


def _solve(s, args) -> BargainingSolution:
    return solve_bargaining(s, alpha=args.alpha, participation=args.participation)


# --------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    s = _scenario(args.scenario)
    Model.build(s)  # rate violations are input errors
    try:
        sol = _solve(s, args)
    except ScenarioError:
        raise
    except Exception as exc:  # noqa: BLE001
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(render([solution_row(sol)], SOLUTION_COLUMNS, args.format), args.out)
    return EXIT_OK


def _parse_values(items) -> list[float]:
    vals = []
    for item in items or []:
        for tok in item.split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                vals.append(float(tok))
            except ValueError as exc:
                raise InputError(f"--values: {tok!r} is not a number") from exc
    if not vals:
        raise InputError("--values: empty grid")
    return vals


def sweep_rows(s, param: str, values, alpha=0.5, participation="biogas", jobs=1) -> list[dict]:
    """One row per grid value; a failing value yields a flagged row."""
    try:
        s.replace(**{param: values[0]})
    except ScenarioError as exc:
        raise InputError(str(exc)) from exc
    except TypeError as exc:
        raise InputError(f"cannot set {param}: {exc}") from exc

    def row(v):
        base = {"parameter": param, "value": v}
        try:
            sol = solve_bargaining(s.replace(**{param: v}), alpha=alpha, participation=participation)
        except Exception as exc:  # noqa: BLE001
            return {**base, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
        return {**base, "status": "ok", **solution_row(sol)}

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(row, values))
    return [row(v) for v in values]


def cmd_sweep(args) -> int:
    s = _scenario(args.scenario)
    if not args.param:
        raise InputError("--param is required")
    rows = sweep_rows(s, args.param, _parse_values(args.values), args.alpha,
                      args.participation, args.jobs)
    _emit(render(rows, SWEEP_COLUMNS, args.format), args.out)
    for r in rows:
        if r["status"] != "ok":
            log.warning("%s=%s failed: %s", r["parameter"], r["value"], r["error"])
    return EXIT_OK


def _pairs(items, what) -> dict[str, str]:
    out = {}
    for item in items or []:
        name, sep, rest = item.partition("=")
        if not sep or not name or not rest:
            raise InputError(f"{what}: expected NAME=VALUE, got {item!r}")
        out[name.strip()] = rest.strip()
    return out


def _frequencies(name: str, spec: str | None):
    if spec is None:
        return calibration.FREQUENCIES.get(name, ())
    if spec == "none":
        return ()
    if spec in calibration.FREQUENCIES:
        return calibration.FREQUENCIES[spec]
    try:
        return tuple(float(f) for f in spec.split(",") if f.strip())
    except ValueError as exc:
        raise InputError(f"--frequencies {name}: cannot parse {spec!r}") from exc


def cmd_calibrate(args) -> int:
    files = _pairs(args.csv, "--csv")
    if not files:
        raise InputError("give at least one --csv NAME=PATH")
    freq_specs = _pairs(args.frequencies, "--frequencies")
    unknown = set(freq_specs) - set(files)
    if unknown:
        raise InputError(f"--frequencies for unknown series: {', '.join(sorted(unknown))}")
    results = {}
    for name, path in files.items():
        series = calibration.read_csv(path, max_gap=args.max_gap)
        results[name] = calibration.calibrate(series, _frequencies(name, freq_specs.get(name)))
    if args.format == "json":
        payload = {n: dataclasses.asdict(r) for n, r in results.items()}
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = calibration.fragment(results, drift=args.drift)
    _emit(text, args.out)
    return EXIT_OK


def validation_checks(s, cfg: McConfig, corrupt_b1: float = 1.0) -> list[dict]:
    """Closed forms against the Monte Carlo oracle.

    Each check reports ``status`` PASS, FAIL or SKIP (the oracle cannot be
    run, e.g. an integral with unbounded variance).
    """
    m = Model.build(s)
    coeffs = m.coeffs
    if corrupt_b1 != 1.0:
        coeffs = dataclasses.replace(coeffs, B1=coeffs.B1 * corrupt_b1)
    y = (s.theta_h, s.theta_b)
    closed = w(coeffs, *y, s.d)
    checks = []

    def add(name, est, target, target_se=0.0, note=""):
        z = est.zscore(target, target_se)
        checks.append({"check": name, "status": "PASS" if z <= Z_LIMIT else "FAIL",
                       "estimate": est.mean, "se": est.standard_error, "target": target,
                       "z": z, "note": note})

    killed = simulate_w_killed(s, y, cfg)
    tau = simulate_w_tau(s, y, dataclasses.replace(cfg, seed=cfg.seed + 1))
    add("w killed vs closed form", killed, closed)
    add("w tau vs closed form", tau, closed)
    add("w tau vs killed", tau, killed.mean, killed.standard_error)

    beta = 0.5
    for i, member in enumerate(("household", "biogas")):
        fn = j_h if member == "household" else j_b
        target = float(fn(s, m.rates, m.gains, coeffs, *y, beta))
        name = f"J_{member[0]} at full capacity, beta=0.5"
        try:
            est = simulate_payoff(s, y, beta, dataclasses.replace(cfg, seed=cfg.seed + 2 + i), member)
        except InfiniteVariance as exc:
            checks.append({"check": name, "status": "SKIP", "estimate": None, "se": None,
                           "target": target, "z": None, "note": str(exc)})
            continue
        add(name, est, target)
    return checks


def cmd_validate(args) -> int:
    s = _scenario(args.scenario)
    cfg = McConfig(paths=args.paths, seed=args.seed, horizon=args.horizon, workers=args.jobs)
    checks = validation_checks(s, cfg, args.corrupt_b1)
    verdict = "FAIL" if any(c["status"] == "FAIL" for c in checks) else "PASS"
    if args.format == "json":
        text = json.dumps({"result": verdict, "paths": cfg.paths, "seed": cfg.seed,
                           "checks": checks}, indent=2) + "\n"
    else:
        lines = [f"paths={cfg.paths} seed={cfg.seed}"]
        for c in checks:
            if c["status"] == "SKIP":
                lines.append(f"SKIP  {c['check']}: {c['note']}")
            else:
                lines.append(f"{c['status']}  {c['check']}: estimate {c['estimate']:.6g} "
                             f"+- {c['se']:.3g} vs {c['target']:.6g} (z={c['z']:.2f})")
        lines.append(verdict)
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_FAIL if verdict == "FAIL" else EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario TOML file")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--paths", type=int, default=100_000)
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--alpha", type=float, default=0.5,
                      help="household share of the aggregate in a continuum equilibrium")
    game.add_argument("--participation", choices=PARTICIPATION, default="biogas",
                      help="which equilibria count as a formed community")

    p = argparse.ArgumentParser(prog="recgame", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", parents=[common, game], help="solve the coordinator's problem")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", parents=[common, game], help="solve over a parameter grid")
    sp.add_argument("--param", metavar="PATH", help="e.g. gas_price.initial_value or c_b")
    sp.add_argument("--values", nargs="+", metavar="V", help="comma or space separated grid")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("calibrate", parents=[common], help="fit GBMs to hourly CSV series")
    sp.add_argument("--csv", action="append", metavar="NAME=PATH",
                    help="series name (e.g. demand) and its timestamp,value file")
    sp.add_argument("--frequencies", action="append", metavar="NAME=LIST",
                    help="comma list in 1/h, a preset name, or 'none'; default: preset for NAME")
    sp.add_argument("--drift", choices=("martingale", "raw"), default="martingale")
    sp.add_argument("--max-gap", type=int, default=calibration.MAX_GAP_HOURS)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("validate", parents=[common], help="check closed forms by Monte Carlo")
    sp.add_argument("--horizon", type=float, default=None, help="truncation horizon in hours")
    sp.add_argument("--corrupt-b1", type=float, default=1.0, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ScenarioError, calibration.CalibrationError, TruncationTooShort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
