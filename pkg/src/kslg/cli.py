"""Command-line interface.

Subcommands: exponents | run | weakcheck | sweep | refine.  Exit codes:
0 when every verdict passes, 1 when any verdict fails (including blow-up
truncation and failed study gates), 2 on usage or configuration errors.
Status goes to stderr; data goes to files (or stdout for the exponent
subcommand, which has no natural file target).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .config import ConfigError, parse_config
from .diagnostics import evaluate_report, verdicts_csv_text
from .exponents import (
    ExponentSet,
    ParamConfig,
    kappa_threshold,
    prototype_kappa_threshold,
    select_exponents,
)
from .grid import fields_csv_text
from .ioutil import atomic_write_text
from .solver import SolverError, Trajectory, run
from .study import StudyError, SweepSpec, epsilon_sweep, refinement_study
from .weakcheck import evaluate_trajectory

USAGE_ERROR = 2
VERDICT_FAILURE = 1


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _rational_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslg")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="admissibility algebra and exponent selection")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=_rational_arg)
    p.add_argument("--kappa", type=_rational_arg)
    p.add_argument("--alpha", type=_rational_arg)
    p.add_argument("--mode", choices=("general", "prototype"))
    p.add_argument("--emit", choices=("verdict", "set", "region-csv"), default="verdict")
    p.add_argument("--grid-steps", type=int, default=40)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("run", help="integrate one configuration and verify it")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("weakcheck", help="generalized-solution residuals of a saved trajectory")
    p.add_argument("--traj", type=Path, required=True)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("sweep", help="truncation continuation study")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("refine", help="grid/step refinement order study")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-figures", action="store_true")
    return parser


def _cmd_exponents(args) -> int:
    if args.mode is None:
        # infer from which exponent was supplied
        if args.alpha is not None and args.s is None:
            args.mode = "prototype"
        elif args.s is not None and args.alpha is None:
            args.mode = "general"
        else:
            _log("exponents: pass --mode, or exactly one of --s / --alpha")
            return USAGE_ERROR
    if args.emit != "region-csv":
        if args.mode == "prototype" and args.alpha is None:
            _log("exponents: --mode prototype requires --alpha")
            return USAGE_ERROR
        if args.mode == "general" and args.s is None:
            _log("exponents: --mode general requires --s")
            return USAGE_ERROR

    if args.emit == "region-csv":
        lines = ["n,kappa,alpha_or_s,admissible"]
        steps = args.grid_steps
        for j in range(1, steps + 1):
            kappa = 1 + Fraction(3 * j, steps)
            for i in range(0, steps + 1):
                other = Fraction(4 * i, steps)
                if args.mode == "prototype":
                    ok = kappa > prototype_kappa_threshold(args.n, other)
                else:
                    if other == 0:
                        continue
                    ok = kappa > kappa_threshold(ParamConfig(args.n, other, kappa))
                lines.append(f"{args.n},{kappa},{other},{int(ok)}")
        text = "\n".join(lines) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
            _log(f"exponents: wrote {args.out}")
        else:
            sys.stdout.write(text)
        return 0

    if args.kappa is None:
        _log("exponents: --kappa is required for verdicts")
        return USAGE_ERROR
    if args.mode == "prototype":
        threshold = prototype_kappa_threshold(args.n, args.alpha)
        label = f"n = {args.n}, alpha = {args.alpha}"
    else:
        threshold = kappa_threshold(ParamConfig(args.n, args.s, max(args.kappa, Fraction(2))))
        label = f"n = {args.n}, s = {args.s}"
    admissible = args.kappa > threshold
    verdict = "admissible" if admissible else "inadmissible"
    print(f"{verdict}: kappa = {args.kappa} vs threshold {threshold} ({label})")
    if not admissible:
        return VERDICT_FAILURE
    if args.emit == "set":
        if args.mode == "prototype":
            _log("exponents: --emit set needs --mode general (an explicit s)")
            return USAGE_ERROR
        es: ExponentSet = select_exponents(ParamConfig(args.n, args.s, args.kappa))
        for name in ("p", "p_conj", "kappa_conj", "q", "r", "theta", "gamma",
                     "q_sup", "r_sup", "branch"):
            print(f"{name} = {getattr(es, name)}")
    return 0


def _load_config(path: Path, seed: int):
    doc = parse_config(path)
    return doc, doc.build(seed=seed)


def _cmd_run(args) -> int:
    doc, cfg = _load_config(args.config, args.seed)
    outdir = Path(args.out)
    traj, report = run(cfg, outdir=outdir)
    atomic_write_text(outdir / "config.cfg", doc.text)
    verdicts = evaluate_report(report, cfg.coefficients.mu_vals)
    atomic_write_text(outdir / "diagnostics.csv", report.csv_text(every=cfg.output_every))
    atomic_write_text(outdir / "verdicts.csv", verdicts_csv_text(verdicts))
    final = traj.final_state
    atomic_write_text(outdir / "fields.csv",
                      fields_csv_text(traj.grid, final.u.values, final.v.values))
    if not args.no_figures:
        from .figures import render_run_figures

        render_run_figures(outdir, report, traj)
    failed = [v for v in verdicts if not v.passed]
    for v in verdicts:
        _log(f"  {'pass' if v.passed else 'FAIL'} {v.check}: value {v.value:.6g} "
             f"vs bound {v.bound:.6g}")
    if not traj.completed:
        _log(f"run: truncated by the blow-up guard at t = {traj.blowup_time:.6g}")
        return VERDICT_FAILURE
    _log(f"run: {len(verdicts)} verdicts, {len(failed)} failed; outputs in {outdir}")
    return VERDICT_FAILURE if failed else 0


def _cmd_weakcheck(args) -> int:
    traj_dir = Path(args.traj)
    cfg_path = traj_dir / "config.cfg"
    if not cfg_path.exists():
        _log(f"weakcheck: no config.cfg in {traj_dir}")
        return USAGE_ERROR
    meta_path = traj_dir / "meta.txt"
    seed = 0
    if meta_path.exists():
        for line in meta_path.read_text().splitlines():
            if line.startswith("seed="):
                seed = int(line.split("=", 1)[1])
    doc, cfg = _load_config(cfg_path, seed)
    traj = Trajectory.load(traj_dir, cfg)
    residuals = evaluate_trajectory(traj, tol=args.tol)
    atomic_write_text(traj_dir / "weakcheck.csv", residuals.csv_text())
    rows = residuals.rows()
    failed = [r for r in rows if not r[-1]]
    for r in rows:
        _log(f"  {'pass' if r[-1] else 'FAIL'} relation {r[0]} [{r[1]}]: "
             f"value {r[2]:.3e} (tol {r[3]:.3e})")
    _log(f"weakcheck: {len(rows)} checks, {len(failed)} failed")
    return VERDICT_FAILURE if failed else 0


def _cmd_sweep(args) -> int:
    doc, cfg = _load_config(args.config, args.seed)
    try:
        spec = SweepSpec.geometric(cfg, args.levels)
        report = epsilon_sweep(spec)
    except (ValueError, StudyError) as exc:
        _log(f"sweep: {exc}")
        return VERDICT_FAILURE if isinstance(exc, StudyError) else USAGE_ERROR
    outdir = Path(args.out)
    atomic_write_text(outdir / "sweep.csv", report.csv_text())
    if not args.no_figures:
        from .figures import render_sweep_figure

        render_sweep_figure(outdir, report)
    onset = "none" if report.onset is None else str(report.onset)
    _log(f"sweep: onset {onset}, monotone before onset: {report.monotone_before_onset}; "
         f"outputs in {outdir}")
    return 0


def _cmd_refine(args) -> int:
    doc, cfg = _load_config(args.config, args.seed)
    outdir = Path(args.out)
    try:
        result = refinement_study(cfg, args.levels)
    except (ValueError, StudyError) as exc:
        _log(f"refine: {exc}")
        return VERDICT_FAILURE if isinstance(exc, StudyError) else USAGE_ERROR
    atomic_write_text(outdir / "refine.csv", result.csv_text())
    if not args.no_figures:
        from .figures import render_refine_figure

        render_refine_figure(outdir, result)
    order = "exact" if result.exact else f"{result.observed_order:.3f}"
    _log(f"refine: observed order {order}; outputs in {outdir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        if args.command == "exponents":
            return _cmd_exponents(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "weakcheck":
            return _cmd_weakcheck(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "refine":
            return _cmd_refine(args)
    except ConfigError as exc:
        _log(str(exc))
        return USAGE_ERROR
    except FileNotFoundError as exc:
        _log(f"{exc}")
        return USAGE_ERROR
    except SolverError as exc:
        _log(f"solver failure: {exc}")
        return VERDICT_FAILURE
    except ValueError as exc:
        _log(f"error: {exc}")
        return USAGE_ERROR
    raise AssertionError(f"unhandled command {args.command}")


def cli_entry() -> None:
    sys.exit(main(sys.argv[1:]))
