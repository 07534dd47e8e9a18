"""Monte-Carlo replication, region metrics, JSONL persistence and reports.

Replication ``i`` of a configuration with master seed ``S`` runs with seed
``S + i``; everything random inside it derives from that seed, so results do
not depend on how replications are spread over worker processes.
"""
from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .datagen import PairDataset, SyntheticConfig, effect_size, generate_population
from .designs import RunConfig, dataset_split, run_design
from .errors import InputError, PaircalError, ReportError, RuntimeFailure

RECORD_FIELDS = ("design", "seed", "budget", "v", "labels_used", "tpr", "precision",
                 "accuracy", "ratio", "wealth_final", "hypothesis")
SUMMARY_FIELDS = ("design", "hypothesis", "budget", "n_runs", "rejection_rate", "stop_mean",
                  "stop_std", "tpr_mean", "precision_mean", "accuracy_mean", "ratio_mean",
                  "wealth_mean")
TABLE_METRICS = ("rejection_rate", "stop_mean", "stop_std", "tpr_mean", "precision_mean",
                 "accuracy_mean", "ratio_mean")


@dataclass(frozen=True)
class ValidationSet:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        lab = np.asarray(self.labels).astype(bool)
        if len(pts) == 0 or len(pts) != len(lab):
            raise InputError("validation set needs matching, non-empty points and labels")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())


def synthetic_validation(scfg: SyntheticConfig, gamma: float, size: int, rng) -> ValidationSet:
    pts = generate_population(replace(scfg, population_size=size), rng)
    return ValidationSet(pts, np.asarray(effect_size(pts, scfg)) >= gamma)


def csv_validation(ds: PairDataset, holdout: float, seed: int, gamma: float) -> ValidationSet:
    """Held-out rows labelled by the gamma rule on their potential outcomes."""
    _, val = dataset_split(len(ds), holdout, seed)
    return ValidationSet(ds.left[val], (ds.y1[val] - ds.y0[val]) >= gamma)


def validation_for(cfg: RunConfig, size: int = 1000) -> ValidationSet:
    """The validation set owned by the replication with ``cfg.seed``."""
    if cfg.data is not None:
        return csv_validation(cfg.data, cfg.holdout, cfg.seed, cfg.gamma)
    return synthetic_validation(cfg.synthetic, cfg.gamma, size, np.random.default_rng([cfg.seed, 1]))


def _model_of(run):
    return getattr(run, "model", run)


def region_metrics(run, val: ValidationSet):
    """``(tpr, precision, accuracy)`` of a run's enrollment region on ``val``.

    ``run`` may be a RunResult, a Checkpoint or a bare region model. TPR is
    NaN when ``val`` has no positives.
    """
    model = _model_of(run)
    enrolled = np.asarray(model.region_mask(val.points), dtype=bool)
    hit = int(np.sum(enrolled & val.labels))
    tpr = hit / val.n_positive if val.n_positive else math.nan
    n_enr = int(enrolled.sum())
    precision = hit / n_enr if n_enr else 0.0
    accuracy = float(np.mean(np.asarray(model.predict_region(val.points), dtype=bool) == val.labels))
    return tpr, precision, accuracy


def ratio_region(run, val: ValidationSet) -> float:
    if not val.n_positive:
        return math.nan
    return float(np.sum(_model_of(run).region_mask(val.points))) / val.n_positive


def _hypothesis(cfg: RunConfig) -> str:
    return "data" if cfg.data is not None else cfg.synthetic.hypothesis


def _clean(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def replicate(cfg: RunConfig, validation_size: int = 1000) -> list[dict]:
    """Run one replication; one record per checkpointed budget."""
    try:
        run = run_design(cfg)
    except PaircalError as exc:
        raise type(exc)(f"replication with seed {cfg.seed} failed: {exc}") from exc
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise RuntimeFailure(f"replication with seed {cfg.seed} failed: {exc}") from exc
    val = validation_for(cfg, validation_size)
    out = []
    for b in sorted(run.checkpoints):
        cp = run.checkpoints[b]
        tpr, prec, acc = region_metrics(cp, val)
        out.append({
            "design": cfg.design, "seed": cfg.seed, "budget": b, "v": cp.decision,
            "labels_used": cp.labels_used, "tpr": _clean(tpr), "precision": prec,
            "accuracy": acc, "ratio": _clean(ratio_region(cp, val)),
            "wealth_final": cp.wealth, "hypothesis": _hypothesis(cfg)})
    return out


def _replicate_args(args):
    return replicate(*args)


def run_replications(cfg: RunConfig, n_runs: int, parallelism: int = 1, budgets=None,
                     validation_size: int = 1000) -> list[dict]:
    """Records for seeds ``cfg.seed .. cfg.seed + n_runs - 1``, in seed order."""
    if n_runs < 1:
        raise InputError("n_runs must be at least 1")
    if budgets:
        budgets = sorted(set(int(b) for b in budgets))
        cfg = replace(cfg, budget=budgets[-1], checkpoints=tuple(budgets[:-1]))
    jobs = [(replace(cfg, seed=cfg.seed + i), validation_size) for i in range(n_runs)]
    workers = parallelism or os.cpu_count() or 1
    if workers <= 1 or n_runs == 1:
        chunks = [_replicate_args(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_runs)) as ex:
            chunks = list(ex.map(_replicate_args, jobs, chunksize=max(1, n_runs // (4 * workers))))
    return [rec for chunk in chunks for rec in chunk]


@dataclass(frozen=True)
class MetricsSummary:
    design: str
    hypothesis: str
    budget: int
    n_runs: int
    rejection_rate: float
    stop_mean: float
    stop_std: float
    tpr_mean: float
    precision_mean: float
    accuracy_mean: float
    ratio_mean: float
    wealth_mean: float

    @property
    def power(self):
        return self.rejection_rate if self.hypothesis != "H0" else None

    @property
    def type1(self):
        return self.rejection_rate if self.hypothesis == "H0" else None


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else math.nan


def summarize(records) -> list[MetricsSummary]:
    """One summary per (design, hypothesis, budget), sorted by that key."""
    groups = defaultdict(list)
    for r in records:
        groups[(r["design"], r["hypothesis"], int(r["budget"]))].append(r)
    out = []
    for (design, hyp, budget), rs in sorted(groups.items()):
        stops = np.array([r["labels_used"] for r in rs], dtype=float)
        out.append(MetricsSummary(
            design=design, hypothesis=hyp, budget=budget, n_runs=len(rs),
            rejection_rate=sum(int(r["v"]) for r in rs) / len(rs),
            stop_mean=float(stops.mean()), stop_std=float(stops.std()),
            tpr_mean=_mean(r["tpr"] for r in rs),
            precision_mean=_mean(r["precision"] for r in rs),
            accuracy_mean=_mean(r["accuracy"] for r in rs),
            ratio_mean=_mean(r["ratio"] for r in rs),
            wealth_mean=_mean(r["wealth_final"] for r in rs)))
    return out


def monte_carlo(cfg: RunConfig, n_runs: int, parallelism: int = 1) -> MetricsSummary:
    records = run_replications(cfg, n_runs, parallelism)
    return summarize(records)[0]


# -- persistence ---------------------------------------------------------------

def append_records(records, path) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({k: r[k] for k in RECORD_FIELDS}) + "\n")


def read_records(path) -> list[dict]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"results file not found: {p}")
    records = []
    with open(p, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReportError(f"line {lineno}: not JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or set(rec) != set(RECORD_FIELDS):
                raise ReportError(f"line {lineno}: fields do not match the results schema")
            records.append(rec)
    return records


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return x


def write_summary_csv(summaries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for s in summaries:
            row = asdict(s)
            w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])


def write_tables_csv(summaries, path) -> None:
    """Wide layout: one row per (metric, design, hypothesis), one column per budget."""
    budgets = sorted({s.budget for s in summaries})
    cells = {(s.design, s.hypothesis, s.budget): asdict(s) for s in summaries}
    keys = sorted({(s.design, s.hypothesis) for s in summaries})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "design", "hypothesis"] + [str(b) for b in budgets])
        for metric in TABLE_METRICS:
            for design, hyp in keys:
                row = [cells.get((design, hyp, b), {}).get(metric, math.nan) for b in budgets]
                w.writerow([metric, design, hyp] + [_fmt(float(v)) for v in row])


def tables_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_tables" + (out.suffix or ".csv"))


def report(in_path, out_path) -> list[MetricsSummary]:
    """Aggregate a results file into ``out_path`` plus a ``*_tables.csv`` companion."""
    summaries = summarize(read_records(in_path))
    write_summary_csv(summaries, out_path)
    write_tables_csv(summaries, tables_path(out_path))
    return summaries
