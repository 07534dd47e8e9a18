"""Command-line entry point: ``paircal gen | run | report``.

Exit codes: 0 success, 2 input error, 3 runtime or numerical failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import build_run_config, load_config, synthetic_config
from .datagen import generate_pair_dataset, write_pairs_csv
from .designs import DESIGNS
from .errors import InputError, RuntimeFailure
from .harness import append_records, report, run_replications, summarize, tables_path

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


def _budgets(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty budget list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paircal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic matched-pair CSV")
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("run", help="run Monte-Carlo replications and append JSONL records")
    r.add_argument("--design", choices=DESIGNS, required=True)
    r.add_argument("--budget", type=int)
    r.add_argument("--budgets", type=_budgets,
                   help="comma-separated budgets read off a single run per seed")
    r.add_argument("--alpha", type=float)
    r.add_argument("--gamma", type=float)
    r.add_argument("--runs", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.add_argument("--config")
    r.add_argument("--data", help="matched-pair CSV to use instead of the synthetic model")
    r.add_argument("--parallelism", type=int, help="worker processes (default: all cores)")
    r.add_argument("--validation-size", type=int, default=None)
    r.add_argument("--out", required=True)

    s = sub.add_parser("report", help="aggregate a JSONL results file into CSV tables")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    return p


def _gen(args):
    params = load_config(args.config) if args.config else {}
    ds = generate_pair_dataset(synthetic_config(params), np.random.default_rng(args.seed),
                               params.get("match_tol", 0.01))
    write_pairs_csv(ds, args.out)
    print(f"wrote {len(ds)} pairs to {args.out}")


def _run(args):
    params = load_config(args.config) if args.config else {}
    if args.data:
        params["data"] = args.data
    budget = args.budget
    if args.budgets:
        budget = max(args.budgets + ([budget] if budget else []))
    cfg = build_run_config(params, design=args.design, budget=budget, alpha=args.alpha,
                           gamma=args.gamma, seed=args.seed)
    parallelism = args.parallelism or params.get("parallelism") or None
    vsize = args.validation_size or params.get("validation_size", 1000)
    budgets = sorted(set(args.budgets) | {cfg.budget}) if args.budgets else None
    records = run_replications(cfg, args.runs, parallelism, budgets, vsize)
    append_records(records, args.out)
    for s in summarize(records):
        print(f"{s.design} {s.hypothesis} B={s.budget}: rejection rate {s.rejection_rate:.3f}, "
              f"mean stop {s.stop_mean:.1f}, TPR {s.tpr_mean:.3f} over {s.n_runs} runs")


def _report(args):
    summaries = report(args.inp, args.out)
    print(f"{len(summaries)} aggregate rows -> {args.out}, {tables_path(args.out)}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"gen": _gen, "run": _run, "report": _report}[args.command]
    try:
        handler(args)
    except (InputError, OSError) as exc:
        print(f"paircal: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeFailure as exc:
        print(f"paircal: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
