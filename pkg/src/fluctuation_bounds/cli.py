"""Command-line front end: run scenarios, emit CSV, verify bounds, sweep.

Exit codes: 0 success, 1 bound violation (verify), 2 operational error
(bad file, bad flags, failed run).  Every error is reported as one JSON
line on stderr so callers can parse failures without scraping text.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .bounds import TAU_BOUND
from .scenarios import (
    BUILTIN_NAMES,
    FIGURE_COLUMNS,
    ScenarioError,
    builtin_scenario_dict,
    evaluate_scenario,
    figure1_curves,
    load_scenario,
    parse_scenario,
    rows_to_csv_text,
    run_scenario,
    write_csv,
)

SWEEP_PARAMS = ("dt", "t_max", "gamma")

_FIGURE_DEFAULTS = {"gamma": 1.0, "t_max": 5.0, "dt": 0.01}


def _error(slug: str, detail: str, **extra) -> None:
    payload = {"error": slug, "detail": detail}
    payload.update(extra)
    print(json.dumps(payload), file=sys.stderr)


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _omega_hamiltonian(omega: float) -> dict:
    return {
        "terms": [
            {
                "kind": "constant",
                "value": 0.5 * omega,
                "matrix": {"re": [[1.0, 0.0], [0.0, -1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]},
            }
        ]
    }


def _apply_overrides(data: dict, dt=None, t_max=None, gamma=None, omega=None) -> dict:
    """New scenario dict with the requested fields replaced.

    gamma rewrites the rate of every jump operator, so it only applies to
    entries that carry an explicit rate; omega swaps the hamiltonian for a
    diagonal level splitting and needs a 2-level scenario.
    """
    out = json.loads(json.dumps(data))  # deep copy, JSON types only
    if dt is not None:
        out["dt"] = dt
    if t_max is not None:
        out["t_max"] = t_max
    if gamma is not None:
        jumps = out.get("jump_operators")
        if not jumps:
            raise ValueError("--gamma: scenario has no jump operators")
        for i, entry in enumerate(jumps):
            if "rate" not in entry:
                raise ValueError(
                    f"--gamma: jump_operators[{i}] has no explicit rate to override"
                )
            entry["rate"] = gamma
    if omega is not None:
        if out.get("dimension") != 2:
            raise ValueError("--omega: needs a 2-level scenario")
        out["hamiltonian"] = _omega_hamiltonian(omega)
    return out


def _verify_failures(records) -> list:
    """(kind, t, margin) for every non-skipped check that came out negative."""
    failures = []
    for rec in records:
        for rep in (rec.open_report, rec.closed_report):
            if rep is not None and not rep.skipped and not rep.satisfied:
                failures.append((rep.kind, rep.t, rep.margin))
        if rec.cs_margin is not None and rec.cs_margin < -TAU_BOUND:
            failures.append(("cauchy_schwarz", rec.row.t, rec.cs_margin))
    return failures


def _cmd_run(args) -> int:
    try:
        spec = load_scenario(args.scenario)
        rows = run_scenario(spec)
    except ScenarioError as err:
        _error("invalid-scenario", str(err), violations=list(err.violations))
        return 2
    except RuntimeError as err:
        _error("run-failed", str(err))
        return 2
    _emit(rows_to_csv_text(rows), args.out)
    return 0


def _cmd_builtin(args) -> int:
    if args.name == "figure1":
        if args.omega is not None:
            _error("override", "--omega: figure1 has no hamiltonian to replace")
            return 2
        gamma = _FIGURE_DEFAULTS["gamma"] if args.gamma is None else args.gamma
        t_max = _FIGURE_DEFAULTS["t_max"] if args.t_max is None else args.t_max
        dt = _FIGURE_DEFAULTS["dt"] if args.dt is None else args.dt
        try:
            rows = figure1_curves(gamma, t_max, dt)
        except ValueError as err:
            _error("override", str(err))
            return 2
        _emit(rows_to_csv_text(rows, FIGURE_COLUMNS), args.out)
        return 0
    try:
        data = _apply_overrides(
            builtin_scenario_dict(args.name),
            dt=args.dt, t_max=args.t_max, gamma=args.gamma, omega=args.omega,
        )
        spec = parse_scenario(data, default_name=args.name)
        rows = run_scenario(spec)
    except ValueError as err:
        if isinstance(err, ScenarioError):
            _error("invalid-scenario", str(err), violations=list(err.violations))
        else:
            _error("override", str(err))
        return 2
    except RuntimeError as err:
        _error("run-failed", str(err))
        return 2
    _emit(rows_to_csv_text(rows), args.out)
    return 0


def _cmd_verify(args) -> int:
    try:
        if args.builtin is not None:
            if args.builtin == "figure1":
                _error("invalid-scenario", "figure1 has no bound checks to verify")
                return 2
            spec = parse_scenario(builtin_scenario_dict(args.builtin), default_name=args.builtin)
        else:
            spec = load_scenario(args.scenario)
        records = evaluate_scenario(spec)
    except ScenarioError as err:
        _error("invalid-scenario", str(err), violations=list(err.violations))
        return 2
    except RuntimeError as err:
        _error("run-failed", str(err))
        return 2
    failures = _verify_failures(records)
    if failures:
        kind, t, margin = failures[0]
        _error(
            "bound-violation",
            f"{len(failures)} of {len(records)} points violate a requested bound",
            scenario=spec.name,
            first={"kind": kind, "t": t, "margin": margin},
        )
        return 1
    print(f"{spec.name}: {len(records)} points, all requested bounds satisfied")
    return 0


def _sweep_job(job) -> dict:
    """Runs in a worker process; reports failure in-band so nothing custom
    has to cross the process boundary."""
    data, param, value_text, out_path = job
    try:
        overridden = _apply_overrides(data, **{param: float(value_text)})
        spec = parse_scenario(overridden, default_name=data.get("name", "sweep"))
        rows = run_scenario(spec)
        write_csv(rows, out_path)
    except (ValueError, RuntimeError) as err:
        return {"ok": False, "param": param, "value": value_text, "detail": str(err)}
    return {"ok": True, "param": param, "value": value_text, "rows": len(rows), "out": out_path}


def _cmd_sweep(args) -> int:
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("top-level value must be an object")
        parse_scenario(data, default_name=str(args.scenario))  # fail before forking
    except (OSError, ValueError) as err:
        if isinstance(err, ScenarioError):
            _error("invalid-scenario", str(err), violations=list(err.violations))
        else:
            _error("invalid-scenario", str(err))
        return 2

    for value_text in args.values:
        try:
            float(value_text)
        except ValueError:
            _error("override", f"--values: {value_text!r} is not a number")
            return 2

    os.makedirs(args.out_dir, exist_ok=True)
    name = data.get("name", "sweep")
    jobs = [
        (data, args.param, v, os.path.join(args.out_dir, f"{name}__{args.param}_{v}.csv"))
        for v in args.values
    ]
    # one worker per value; each writes its own file, parent prints in order
    with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
        results = list(pool.map(_sweep_job, jobs))
    code = 0
    for res in results:
        if res["ok"]:
            print(f"{args.param}={res['value']}: {res['rows']} rows -> {res['out']}")
        else:
            _error("run-failed", res["detail"], param=res["param"], value=res["value"])
            code = 2
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluctuation-bounds",
        description="Run small open-system scenarios and check fluctuation bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file, emit result CSV")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_run.set_defaults(func=_cmd_run)

    p_builtin = sub.add_parser("builtin", help="run a builtin scenario or curve family")
    p_builtin.add_argument("--name", required=True, choices=BUILTIN_NAMES)
    p_builtin.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_builtin.add_argument("--dt", type=float, default=None, help="override grid step")
    p_builtin.add_argument("--t-max", type=float, default=None, help="override final time")
    p_builtin.add_argument("--gamma", type=float, default=None,
                           help="override every jump operator rate")
    p_builtin.add_argument("--omega", type=float, default=None,
                           help="replace the hamiltonian with a diagonal splitting")
    p_builtin.set_defaults(func=_cmd_builtin)

    p_verify = sub.add_parser("verify", help="exit 0 iff every requested bound holds")
    group = p_verify.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario", default=None, help="scenario JSON path")
    group.add_argument("--builtin", default=None, choices=BUILTIN_NAMES)
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="run one scenario across parameter values")
    p_sweep.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--values", required=True, nargs="+",
                         help="one or more numeric values")
    p_sweep.add_argument("--out-dir", required=True, help="directory for per-value CSVs")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:  # argparse handles usage/help printing
        return int(err.code or 0)
    return args.func(args)


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
