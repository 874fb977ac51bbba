"""Command-line front end: ``minmove <command> [flags]``.

Every command accepts ``--config FILE`` (a JSON object, or any output file
written by this tool) whose keys fill in flags not given on the command
line. The resolved config is embedded in every output file.

Exit codes: 0 ok, 2 invalid config, 3 solver error, 4 budget exceeded.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple

from . import records
from .dynamics import MMConfig, run_mm
from .errors import BudgetExceeded, InvalidInput, MinMoveError
from .homogenization import MAX_N, homogenized_velocity, pinning_threshold
from .limit_ode import convergence_study, integrate_limit
from .potentials import OscillatingEnergy, load_drive, load_potential, validate_potential

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET = 0, 2, 3, 4

# per command: dest -> (flag, type, default, help); _REQUIRED marks flags without a default
_REQUIRED = object()
COMMANDS: Dict[str, Dict[str, Tuple]] = {
    "simulate": {
        "gamma": ("--gamma", float, _REQUIRED, "ratio eps / tau"),
        "epsilon": ("--epsilon", float, _REQUIRED, "oscillation scale"),
        "x0": ("--x0", float, _REQUIRED, "initial state"),
        "steps": ("--steps", int, _REQUIRED, "number of steps"),
        "w": ("--w", str, "pwq", "potential: pwq, cosine, zero or a JSON file"),
        "h": ("--h", str, "quadratic", "drive: quadratic or poly:c0,c1,c2,..."),
    },
    "velocity": {
        "gamma": ("--gamma", float, _REQUIRED, "ratio eps / tau"),
        "T": ("--T", float, _REQUIRED, "drive slope"),
        "tol": ("--tol", float, 1e-4, "target error bound"),
        "y0": ("--y0", float, 0.0, "starting point of the orbit"),
        "max_iters": ("--max-iters", int, MAX_N, "iteration budget"),
        "w": ("--w", str, "pwq", "potential"),
    },
    "threshold": {
        "gamma": ("--gamma", float, _REQUIRED, "ratio eps / tau"),
        "method": ("--method", str, "criterion", "criterion or velocity"),
        "tol": ("--tol", float, 1e-8, "bracket width"),
        "w": ("--w", str, "pwq", "potential"),
    },
    "phase": {
        "gamma_grid": ("--gamma-grid", str, _REQUIRED, "lo:hi:n"),
        "t_grid": ("--t-grid", str, _REQUIRED, "lo:hi:m"),
        "tol": ("--tol", float, 1e-3, "velocity error bound per cell"),
        "w": ("--w", str, "pwq", "potential"),
    },
    "limit-ode": {
        "gamma": ("--gamma", float, _REQUIRED, "ratio eps / tau"),
        "x0": ("--x0", float, _REQUIRED, "initial state"),
        "t_end": ("--t-end", float, 1.0, "final time"),
        "tol": ("--tol", float, 1e-6, "local error per unit time"),
        "w": ("--w", str, "pwq", "potential"),
        "h": ("--h", str, "quadratic", "drive"),
    },
    "compare": {
        "gamma": ("--gamma", float, _REQUIRED, "ratio eps / tau"),
        "x0": ("--x0", float, _REQUIRED, "initial state"),
        "epsilons": ("--epsilons", str, _REQUIRED, "comma separated, strictly decreasing"),
        "t_end": ("--t-end", float, 1.0, "final time"),
        "tol": ("--tol", float, 1e-6, "ODE tolerance"),
        "w": ("--w", str, "pwq", "potential"),
        "h": ("--h", str, "quadratic", "drive"),
    },
    "validate-potential": {
        "w": ("--w", str, "pwq", "potential"),
        "samples": ("--samples", int, 10_000, "grid size"),
    },
    "selftest": {
        "only": ("--only", str, "", "comma separated criterion numbers (default all)"),
    },
}
# flags that never change the content of an output file
_NOT_EMBEDDED = {"config", "out", "plot", "threads", "command"}
_PLOTTABLE = {"simulate", "phase", "limit-ode", "compare"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config or previous output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized suites")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes")
    parser = argparse.ArgumentParser(prog="minmove", parents=[common], description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name, parents=[common])
        for dest, (flag, typ, _default, help_) in opts.items():
            p.add_argument(flag, dest=dest, type=typ, default=None, help=help_)
        if name != "selftest":
            p.add_argument("--out", default="-", help="output file (default stdout)")
        if name in _PLOTTABLE:
            p.add_argument("--plot", default=None, help="also render a PNG figure here")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults; raises InvalidInput."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            file_cfg = records.load_config(args.config)
        except (OSError, ValueError) as exc:
            raise InvalidInput(f"cannot read config {args.config}: {exc}") from exc
    cfg = {}
    for dest, (flag, typ, default, _) in COMMANDS[args.command].items():
        value = getattr(args, dest)
        if value is None and dest in file_cfg:
            try:
                value = typ(file_cfg[dest])
            except (TypeError, ValueError) as exc:
                raise InvalidInput(f"config key {dest!r}: {exc}") from exc
        if value is None:
            if default is _REQUIRED:
                raise InvalidInput(f"missing required {flag}")
            value = default
        cfg[dest] = value
    seed = getattr(args, "seed", None)
    cfg["seed"] = seed if seed is not None else file_cfg.get("seed", 0)
    cfg["command"] = args.command
    return cfg


def parse_grid(text: str) -> List[float]:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise InvalidInput(f"grid must be lo:hi:n, got {text!r}") from exc
    if n < 1 or (n == 1 and lo != hi) or hi < lo:
        raise InvalidInput(f"bad grid {text!r}")
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _positive(cfg, *keys):
    for k in keys:
        if not (cfg[k] > 0 and math.isfinite(cfg[k])):
            raise InvalidInput(f"{k} must be positive and finite")


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg, out, plot, threads) -> int:
    _positive(cfg, "gamma", "epsilon")
    if cfg["steps"] < 1:
        raise InvalidInput("steps must be positive")
    energy = OscillatingEnergy(load_drive(cfg["h"]), load_potential(cfg["w"]), cfg["epsilon"])
    mm = MMConfig.from_ratio(energy, cfg["gamma"], cfg["x0"], cfg["steps"])
    traj = run_mm(mm)
    rows = [(round(t / traj.tau), t, x) for t, x in zip(traj.times[1:], traj.states[1:])]
    meta = {"monotone_direction": traj.monotone_direction, "pinned_at_step": traj.pinned_at_step}
    records.write_csv(out, ["step", "t", "x"], rows, _embedded(cfg), meta)
    if plot:
        from .plotting import plot_trajectory

        plot_trajectory(plot, traj.times, traj.states)
    return EXIT_OK


def cmd_velocity(cfg, out, plot, threads) -> int:
    _positive(cfg, "gamma", "tol")
    if cfg["max_iters"] < 32:
        raise InvalidInput("max-iters must be at least 32")
    W = load_potential(cfg["w"])
    code = EXIT_OK
    try:
        est = homogenized_velocity(cfg["T"], cfg["gamma"], tol=cfg["tol"], y0=cfg["y0"], potential=W,
                                   max_n=cfg["max_iters"])
        payload = est.as_dict()
        payload["budget_exceeded"] = False
    except BudgetExceeded as exc:
        code = EXIT_BUDGET
        payload = exc.estimate.as_dict() if exc.estimate is not None else {
            "gamma": cfg["gamma"], "T": cfg["T"], "f": None, "err_bound": None, "iters": None,
            "y0": cfg["y0"], "pinned": False,
        }
        payload["budget_exceeded"] = True
        print(f"minmove: {exc}", file=sys.stderr)
    records.write_json(out, payload, _embedded(cfg))
    return code


def cmd_threshold(cfg, out, plot, threads) -> int:
    _positive(cfg, "gamma", "tol")
    if cfg["method"] not in ("criterion", "velocity"):
        raise InvalidInput("method must be criterion or velocity")
    rep = pinning_threshold(cfg["gamma"], tol=cfg["tol"], potential=load_potential(cfg["w"]), method=cfg["method"])
    records.write_json(out, rep.as_dict(), _embedded(cfg))
    return EXIT_OK


def _phase_cell(job):
    gamma, T, tol, w = job
    W = load_potential(w)
    try:
        return homogenized_velocity(T, gamma, tol=tol, potential=W), False
    except BudgetExceeded as exc:
        return exc.estimate, True


def cmd_phase(cfg, out, plot, threads) -> int:
    _positive(cfg, "tol")
    gammas = parse_grid(cfg["gamma_grid"])
    Ts = parse_grid(cfg["t_grid"])
    if min(gammas) <= 0:
        raise InvalidInput("gamma grid must be positive")
    load_potential(cfg["w"])
    jobs = [(g, T, cfg["tol"], cfg["w"]) for g in gammas for T in Ts]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_phase_cell, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        results = [_phase_cell(j) for j in jobs]
    rows, budget_hit = [], False
    for (g, T, _, _), (est, over) in zip(jobs, results):
        budget_hit = budget_hit or over
        if est is None:
            rows.append((g, T, None, None, None, False))
        else:
            rows.append((g, T, est.value, est.error_bound, est.iterations, est.pinned))
    records.write_csv(out, ["gamma", "T", "f", "err_bound", "iters", "pinned"], rows, _embedded(cfg),
                      {"budget_exceeded": budget_hit})
    if plot:
        from .plotting import plot_phase

        plot_phase(plot, [r[0] for r in rows], [r[1] for r in rows], [r[2] or 0.0 for r in rows])
    return EXIT_BUDGET if budget_hit else EXIT_OK


def cmd_limit_ode(cfg, out, plot, threads) -> int:
    _positive(cfg, "gamma", "t_end", "tol")
    run = integrate_limit(cfg["gamma"], cfg["x0"], cfg["t_end"], load_drive(cfg["h"]), load_potential(cfg["w"]),
                          tol=cfg["tol"])
    records.write_csv(out, ["t", "x"], run.rows(), _embedded(cfg), {"pinned_at": run.pinned_at})
    if plot:
        from .plotting import plot_limit

        plot_limit(plot, run)
    return EXIT_OK


def cmd_compare(cfg, out, plot, threads) -> int:
    _positive(cfg, "gamma", "t_end", "tol")
    try:
        eps = [float(e) for e in cfg["epsilons"].split(",") if e.strip()]
    except ValueError as exc:
        raise InvalidInput(f"bad epsilons {cfg['epsilons']!r}") from exc
    drive, W = load_drive(cfg["h"]), load_potential(cfg["w"])
    ode = integrate_limit(cfg["gamma"], cfg["x0"], cfg["t_end"], drive, W, tol=cfg["tol"])
    table = convergence_study(cfg["gamma"], cfg["x0"], cfg["t_end"], eps, drive, W, tol=cfg["tol"],
                              workers=threads, ode=ode)
    records.write_csv(out, ["epsilon", "sup_distance"], table, _embedded(cfg))
    if plot:
        from .plotting import plot_limit

        mm = {}
        for e in eps:
            traj = run_mm(MMConfig.from_ratio(OscillatingEnergy(drive, W, e), cfg["gamma"], cfg["x0"],
                                              max(1, math.ceil(cfg["t_end"] * cfg["gamma"] / e - 1e-9))))
            mm[e] = (traj.times, traj.states)
        plot_limit(plot, ode, mm)
    return EXIT_OK


def cmd_validate_potential(cfg, out, plot, threads) -> int:
    if cfg["samples"] < 16:
        raise InvalidInput("samples must be at least 16")
    rep = validate_potential(load_potential(cfg["w"]), samples=cfg["samples"])
    records.write_json(out, rep.as_dict(), _embedded(cfg))
    if not rep.passed:
        print(f"minmove: potential fails {', '.join(rep.failed())}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_selftest(cfg, out, plot, threads) -> int:
    from .acceptance import CRITERIA, DEFAULT_SEED, run_all

    try:
        only = [int(x) for x in cfg["only"].split(",") if x.strip()] or None
    except ValueError as exc:
        raise InvalidInput(f"bad --only {cfg['only']!r}") from exc
    if only and any(n not in CRITERIA for n in only):
        raise InvalidInput(f"criteria are numbered {min(CRITERIA)}..{max(CRITERIA)}")
    seed = cfg["seed"] or DEFAULT_SEED
    results = run_all(seed=seed, only=only, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_SOLVER


HANDLERS = {
    "simulate": cmd_simulate,
    "velocity": cmd_velocity,
    "threshold": cmd_threshold,
    "phase": cmd_phase,
    "limit-ode": cmd_limit_ode,
    "compare": cmd_compare,
    "validate-potential": cmd_validate_potential,
    "selftest": cmd_selftest,
}


def _embedded(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in _NOT_EMBEDDED}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
        threads = getattr(args, "threads", None) or 1
        if threads < 1:
            raise InvalidInput("threads must be at least 1")
        return HANDLERS[args.command](cfg, getattr(args, "out", None), getattr(args, "plot", None), threads)
    except BudgetExceeded as exc:
        print(f"minmove: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvalidInput as exc:
        print(f"minmove: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MinMoveError as exc:
        print(f"minmove: solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
