"""Command-line front end.

Subcommands: nmse-sweep, verify-elimination, power-opt, train. Each
reads a JSON config, honors --seed and --out, prints a one-line
summary, and exits 0 on success. Usage problems and malformed configs
exit 2; runtime failures exit 1. Identical invocations produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import flsim, harness
from .powopt import RatioProblem, solve_projected_ascent
from .sysmodel import ConfigError, config_from_json, place_geometry


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airpfl",
        description="Surface-assisted over-the-air personalized FL simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("nmse-sweep", help="NMSE vs surface size/power/scheme")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)

    p_ver = sub.add_parser("verify-elimination", help="check statistical interference elimination")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--trials", type=int, default=100_000)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--out", default=None)

    p_pow = sub.add_parser("power-opt", help="solve a sum-of-ratios power control instance")
    p_pow.add_argument("--config", required=True)
    p_pow.add_argument("--seed", type=int, default=0)
    p_pow.add_argument("--out", default=None)

    p_train = sub.add_parser("train", help="run federated training")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--scheme", default="unbiased", choices=flsim.SCHEMES)
    p_train.add_argument("--rounds", type=int, default=100)
    p_train.add_argument("--eta", type=float, default=flsim.DEFAULT_LEARNING_RATE)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=None)

    return parser


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cli_main(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "nmse-sweep":
            return _cmd_sweep(args)
        if args.command == "verify-elimination":
            return _cmd_verify(args)
        if args.command == "power-opt":
            return _cmd_power(args)
        if args.command == "train":
            return _cmd_train(args)
        print(f"unknown subcommand {args.command!r}", file=sys.stderr)
        return 2
    except (ConfigError, json.JSONDecodeError, KeyError, FileNotFoundError) as exc:
        print(f"airpfl: bad config: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"airpfl: error: {exc}", file=sys.stderr)
        return 1


def _cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    cfg = config_from_json(json.dumps(doc["system"]))
    schemes = list(doc.get("schemes", harness.SWEEP_SCHEMES))
    n_values = [int(v) for v in doc.get("n_values", harness.DESK_N_VALUES)]
    p_values = [float(v) for v in doc.get("p_values", harness.DESK_P_VALUES)]
    trials = int(doc.get("trials", harness.DESK_TRIALS))
    seed = cfg.master_seed if args.seed is None else args.seed
    result = harness.nmse_sweep(cfg, schemes, n_values, p_values, trials, seed)
    if args.out:
        harness.export_csv(result, args.out)
    print(
        f"nmse-sweep: {len(result.cells)} cells "
        f"({len(schemes)} schemes x {len(n_values)} N x {len(p_values)} P), "
        f"trials={trials}, seed={seed}, config={result.config_digest}"
    )
    return 0


def _cmd_verify(args) -> int:
    cfg = config_from_json(json.dumps(_load_json(args.config)))
    seed = cfg.master_seed if args.seed is None else args.seed
    report = harness.verify_elimination(cfg, args.trials, seed)
    if args.out:
        harness.export_csv(report, args.out)
    npass = sum(r.passed for r in report.rows)
    cpass = sum(c.passed for c in report.corrections)
    print(
        f"verify-elimination: {npass}/{len(report.rows)} pair checks passed, "
        f"{cpass}/{len(report.corrections)} correction checks passed, "
        f"trials={report.trials}, N={report.num_elements}, seed={seed}"
    )
    return 0 if report.all_pass else 1


def _cmd_power(args) -> int:
    doc = _load_json(args.config)
    prob = RatioProblem(
        a_diag=np.asarray(doc["A"], dtype=float),
        b=np.asarray(doc["b"], dtype=float),
        c=np.asarray(doc["c"], dtype=float),
        bounds=np.asarray(doc["bounds"], dtype=float),
    )
    sol = solve_projected_ascent(prob, seed=args.seed)
    payload = {
        "q": [float(v) for v in sol.q],
        "objective": sol.objective,
        "converged": sol.converged,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"power-opt: objective={sol.objective:.12g}, converged={sol.converged}, "
        f"iterations={sol.iterations}, seed={args.seed}"
    )
    return 0


def _cmd_train(args) -> int:
    doc = _load_json(args.config)
    cfg = config_from_json(json.dumps(doc))
    seed = cfg.master_seed if args.seed is None else args.seed
    cfg = cfg.replace(master_seed=seed)
    geometry = place_geometry(cfg, seed)
    datasets, _ = flsim.synth_clustered_tasks(
        cfg,
        samples_per_device=int(doc.get("samples_per_device", 50)),
        label_noise=float(doc.get("label_noise", 0.1)),
        task_seed=seed,
    )
    history = flsim.run_training(cfg, geometry, datasets, args.scheme, args.rounds, args.eta)
    if args.out:
        harness.export_csv(history, args.out)
    final = float(history.losses[-1].sum())
    mean_nmse = float(history.nmse.mean())
    print(
        f"train[{args.scheme}]: rounds={args.rounds}, eta={args.eta}, "
        f"final summed loss={final:.12g}, mean nmse={mean_nmse:.6g}, seed={seed}"
    )
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
