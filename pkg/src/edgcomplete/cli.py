"""Command-line interface: ``edgcomplete {solve,table,phase-diagram,coherence,verify}``.

Exit codes: 0 success/converged, 1 finished without converging (or a failed
verification), 2 configuration error, 3 input/output error, 4 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .coherence import (
    COHERENCE_EXACT_LIMIT,
    COHERENCE_SIMPLIFIED_LIMIT,
    coherence_exact,
    coherence_simplified,
    estimate_rank,
    sample_complexity,
)
from .experiments import (
    ConfigError,
    Dataset,
    ExperimentSpec,
    run_phase_diagram,
    run_table,
    summarize_phase,
    summarize_table,
    write_gnuplot,
    write_rows,
    write_trials,
)
from .geometry import center_gram_from_points, distance_matrix_from_points, procrustes_align
from .io import CSVFormatError, ensure_dir, read_observations, write_matrix, write_observations, write_points
from .sampling import corrupt, derive_noise_model, sample_observations
from .solver import DivergenceError, SolverConfig, reconstruct
from ._validation import DenseLimitError

log = logging.getLogger("edgcomplete")

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGED = 4


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _lambda(text: str):
    return "auto" if text == "auto" else float(text)


def _add_data_args(p, *, multiple=False):
    action = "append" if multiple else "store"
    p.add_argument("--input", action=action, metavar="PATH",
                   help="point cloud CSV (one point per row)")
    p.add_argument("--generator", action=action, metavar="SPEC",
                   help="sphere:n, gaussian:n:r")


def _add_solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--q", type=int, default=10, help="factor width (default 10)")
    g.add_argument("--tol", type=float, default=1e-5)
    g.add_argument("--max-iter", type=int, default=100, help="maximum outer iterations")
    g.add_argument("--bb-iter", type=int, default=50, help="BB steps per outer iteration")
    g.add_argument("--bb-rule", choices=["bb2", "bb1", "alternate"], default="bb2")
    g.add_argument("--stop-rule", choices=["reconciled", "text", "box"], default="reconciled")
    g.add_argument("--penalty", type=float, default=1.0)
    g.add_argument("--lambda", dest="lam", type=_lambda, default="auto",
                   help="noisy-scheme weight, or 'auto' for 100*rate")
    g.add_argument("--noisy", action="store_true",
                   help="corrupt observations with N(3s, s) noise and use the noisy scheme")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1)


def _solver_config(args) -> SolverConfig:
    try:
        return SolverConfig(q=args.q, penalty=args.penalty, lam=args.lam, tol=args.tol,
                            max_outer=args.max_iter, bb_inner=args.bb_iter, seed=args.seed,
                            bb_rule=args.bb_rule, stop_rule=args.stop_rule)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _config_comment(path: Path, config: dict) -> None:
    # prepend the resolved configuration as a '#' line so CSV outputs are self-describing
    body = path.read_text(encoding="utf-8")
    line = "# " + json.dumps(config, sort_keys=True, default=_json_default)
    path.write_text(line + "\n" + body, encoding="utf-8")


def _dataset_points(args, seed):
    if args.input and args.generator:
        raise ConfigError("use either --input or --generator, not both")
    if args.input:
        ds = Dataset.parse(f"file:{args.input}")
    elif args.generator:
        ds = Dataset.parse(args.generator)
    else:
        return None, None
    if ds.kind == "gaussian" and ds.r is None:
        raise ConfigError("gaussian generator needs a rank here: gaussian:n:r")
    return ds, ds.points(seed=seed)


# -- commands --------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = _solver_config(args)
    out = ensure_dir(args.output_dir)
    truth_points = None
    noise = None
    if args.obs:
        if args.input or args.generator:
            raise ConfigError("--obs cannot be combined with --input/--generator")
        obs = read_observations(args.obs, n=args.n)
        dataset = f"obs:{args.obs}"
    else:
        if args.rate is None:
            raise ConfigError("--rate is required unless --obs is given")
        if not 0.0 < args.rate <= 1.0:
            raise ConfigError(f"--rate must lie in (0, 1], got {args.rate}")
        ds, truth_points = _dataset_points(args, args.seed)
        if ds is None:
            raise ConfigError("one of --input, --generator or --obs is required")
        dataset = ds.name
        D = distance_matrix_from_points(truth_points)
        obs = sample_observations(D, args.rate, seed=args.seed)
    if args.noisy:
        model = derive_noise_model(obs)
        obs = corrupt(obs, model, seed=args.seed + 1)
        noise = dict(model.to_dict(), seed=args.seed + 1,
                     n_negative_before_clamp=obs.meta["n_negative_before_clamp"])
    d = args.dim or (truth_points.shape[1] if truth_points is not None else 3)
    truth = center_gram_from_points(truth_points) if truth_points is not None else None
    config = {
        "command": "solve", "dataset": dataset, "rate": args.rate, "n": obs.n, "m": obs.m,
        "dim": d, "noisy": args.noisy, "noise": noise, "solver": cfg.to_dict(),
        "sampling_seed": args.seed, "version": __version__,
    }
    try:
        coords, gram, report = reconstruct(obs, cfg, d, noisy=args.noisy, truth=truth)
    except DivergenceError as exc:
        payload = {"error": str(exc), "config": config}
        if exc.report is not None:
            payload["report"] = exc.report.to_dict()
        _write_json(out / "report.json", payload)
        log.error("solver diverged: %s", exc)
        return EXIT_DIVERGED
    payload = report.to_dict()
    payload["run"] = config
    if truth_points is not None:
        _, rmsd = procrustes_align(coords, truth_points - truth_points.mean(axis=0)) \
            if coords.shape[1] == truth_points.shape[1] else (None, None)
        if rmsd is not None:
            payload["rmsd"] = rmsd
    _write_json(out / "report.json", payload)
    write_points(out / "points.csv", coords)
    _config_comment(out / "points.csv", config)
    write_observations(out / "observations.csv", obs)
    _config_comment(out / "observations.csv", config)
    if args.write_gram:
        write_matrix(out / "gram.csv", gram)
        _config_comment(out / "gram.csv", config)
    msg = f"iterations={report.iterations} converged={report.converged}"
    if report.relative_error is not None:
        msg += f" relative_error={report.relative_error:.3e}"
    print(msg)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _trials(args) -> int:
    if args.trials is not None:
        return args.trials
    return 50 if args.paper_parity else 10


def cmd_table(args) -> int:
    cfg = _solver_config(args)
    datasets = [f"file:{p}" for p in (args.input or [])] + list(args.generator or [])
    if not datasets:
        raise ConfigError("at least one --input or --generator is required")
    out = ensure_dir(args.output_dir)
    summary, trials, specs = [], [], []
    for name in datasets:
        spec = ExperimentSpec(dataset=name, rates=args.rates, trials=_trials(args),
                              noisy=args.noisy, solver=cfg, seed=args.seed,
                              success_tol=args.success_tol, threads=args.threads)
        if spec.dataset.startswith("gaussian") and Dataset.parse(name).r is None:
            raise ConfigError("gaussian generator needs a rank: gaussian:n:r")
        results = run_table(spec)
        trials.extend(results)
        summary.extend(summarize_table(results))
        specs.append(spec.to_dict())
    config = {"command": "table", "experiments": specs, "threads": args.threads,
              "version": __version__}
    # CSV headers leave out the thread count so outputs match across --threads
    csv_config = {"command": "table", "experiments": [
        {k: v for k, v in s.items() if k != "threads"} for s in specs], "version": __version__}
    write_rows(out / "table.csv", summary)
    _config_comment(out / "table.csv", csv_config)
    write_trials(out / "trials.csv", trials)
    _config_comment(out / "trials.csv", csv_config)
    _write_json(out / "table_report.json", {
        "config": config, "summary": summary,
        "trials": [dict(vars(t)) for t in trials],
    })
    for row in summary:
        print(f"{row['dataset']} rate={row['rate']:g} median={row['median']:.3e} "
              f"mean={row['mean']:.3e} std={row['std']:.3e} failed={row['failed']}")
    return EXIT_OK


def cmd_phase(args) -> int:
    cfg = _solver_config(args)
    if args.input:
        raise ConfigError("the phase diagram uses a generator (gaussian:n)")
    gen = args.generator or "gaussian:300"
    ds = Dataset.parse(gen)
    if ds.kind != "gaussian":
        raise ConfigError("the phase diagram needs --generator gaussian:n")
    spec = ExperimentSpec(dataset=f"gaussian:{ds.n}", rates=args.rates, ranks=args.ranks,
                          trials=_trials(args), noisy=args.noisy, solver=cfg, seed=args.seed,
                          success_tol=args.success_tol, threads=args.threads)
    out = ensure_dir(args.output_dir)
    results = run_phase_diagram(spec)
    rows = summarize_phase(results)
    config = {"command": "phase-diagram", "experiment": spec.to_dict(), "version": __version__}
    csv_config = {"command": "phase-diagram", "experiment": spec.to_dict(runtime=False),
                  "version": __version__}
    write_rows(out / "phase.csv", rows)
    _config_comment(out / "phase.csv", csv_config)
    write_trials(out / "phase_trials.csv", results)
    _config_comment(out / "phase_trials.csv", csv_config)
    write_gnuplot(out / "phase.dat", rows)
    _write_json(out / "phase_report.json", {
        "config": config, "cells": rows, "trials": [dict(vars(t)) for t in results],
    })
    for row in rows:
        print(f"rate={row['rate']:g} rank={row['rank']} p={row['probability']:.2f}")
    return EXIT_OK


def cmd_coherence(args) -> int:
    if not args.beta > 1:
        raise ConfigError(f"--beta must be > 1, got {args.beta}")
    ds, points = _dataset_points(args, args.seed)
    if ds is None:
        raise ConfigError("one of --input or --generator is required")
    M = center_gram_from_points(points)
    n = M.shape[0]
    r = args.rank or (ds.r if ds.kind != "file" else None) or estimate_rank(M)
    try:
        if args.simplified:
            rep = coherence_simplified(M, r, max_n=args.max_n or COHERENCE_SIMPLIFIED_LIMIT)
        else:
            rep = coherence_exact(M, r, max_n=args.max_n or COHERENCE_EXACT_LIMIT)
    except DenseLimitError as exc:
        raise ConfigError(f"{exc}; use --simplified or --max-n") from None
    m_req = sample_complexity(n, r, rep.nu, args.beta)
    payload = dict(rep.to_dict(), beta=args.beta, sample_complexity=m_req,
                   n_pairs=n * (n - 1) // 2, dataset=ds.name, seed=args.seed,
                   version=__version__)
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.output_dir:
        out = ensure_dir(args.output_dir)
        (out / "coherence.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_identity_suite

    checks = run_identity_suite(range(args.n_min, args.n_max + 1), n_random=args.samples,
                                seed=args.seed)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgcomplete",
        description="Reconstruct point configurations from partial squared distances.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="reconstruct one configuration")
    _add_data_args(p)
    p.add_argument("--obs", metavar="PATH", help="observation CSV with columns i,j,d2 (1-based)")
    p.add_argument("--n", type=int, help="number of points for --obs (default: max index)")
    p.add_argument("--rate", type=float, help="sampling rate in (0, 1]")
    p.add_argument("--dim", type=int, help="embedding dimension")
    p.add_argument("--write-gram", action="store_true", help="also write gram.csv")
    p.add_argument("--output-dir", default="edg-out")
    _add_solver_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("table", help="mean/median relative error per sampling rate")
    _add_data_args(p, multiple=True)
    p.add_argument("--rates", type=_float_list, default=[0.01, 0.02, 0.03, 0.05])
    p.add_argument("--trials", type=int)
    p.add_argument("--paper-parity", action="store_true", help="50 trials instead of 10")
    p.add_argument("--success-tol", type=float, default=1e-5)
    p.add_argument("--output-dir", default="edg-out")
    _add_solver_args(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("phase-diagram", help="success probability over (rate, rank)")
    _add_data_args(p)
    p.add_argument("--rates", type=_float_list, default=[0.02, 0.05, 0.1, 0.2])
    p.add_argument("--ranks", type=_int_list, default=[2, 3, 5, 10])
    p.add_argument("--trials", type=int)
    p.add_argument("--paper-parity", action="store_true", help="50 trials instead of 10")
    p.add_argument("--success-tol", type=float, default=1e-5)
    p.add_argument("--output-dir", default="edg-out")
    _add_solver_args(p)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("coherence", help="coherence report and sample-count bound")
    _add_data_args(p)
    p.add_argument("--rank", type=int, help="rank r (default: generator rank or spectral gap)")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--simplified", action="store_true", help="use the cheaper simplified bounds")
    p.add_argument("--max-n", type=int, help="override the dense size cap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("verify", help="check the basis/dual-basis identities")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CSVFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
