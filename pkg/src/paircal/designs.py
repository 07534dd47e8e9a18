"""Experiment engines: active matched-pair design and its comparators.

All practical designs share one loop. Each iteration picks a pool point,
forms a matched pair, randomises treatment, labels both units with the
gamma rule, feeds the left unit to the sequential test and stops on
rejection or when the label budget is spent. The designs differ only in how
the next point is picked:

* ``robustcal``: uniformly from the pool points that at least one member of
  a bootstrapped committee calls positive, else uniformly from the pool;
* ``conventional``: uniformly from the pool;
* ``regression``: uniformly from ``{x : f_t(x) - f_c(x) >= gamma}`` using
  separate treated/control regressors, else uniformly;
* ``tau-bald``: the pool point with the largest GP posterior variance of the
  within-pair outcome difference.

Budgets count labeled examples: each pair adds two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifiers import KINDS, Committee, DecisionTree, KNN, RidgeRegression, bootstrap_committee
from .datagen import PairDataset, SyntheticConfig, generate_population, sample_outcome, uniform_sampler
from .errors import InputError, PoolExhausted
from .gp import GPRegressor
from .matching import ExperimentRecord, MatchedPair, assign_and_run, find_match, label_pair
from .seqtest import OnlinePredictor, SequentialTest

DESIGNS = ("robustcal", "conventional", "regression", "tau-bald", "theory")
REGRESSORS = ("gp", "tree", "knn", "linear")


@dataclass(frozen=True)
class UbarConfig:
    c_hat: float = 2.0
    a: float = 1.0
    rho: float = 1.0
    beta: float = 0.0
    theta: float = 4.0
    d_vc: float = 1.0
    delta: float = 0.05

    def __post_init__(self):
        if not self.c_hat > 1:
            raise InputError("ubar.c_hat must exceed 1")
        if not self.a >= 1:
            raise InputError("ubar.a must be >= 1")
        if not 0 <= self.rho <= 1 or not 0 <= self.beta <= 1:
            raise InputError("ubar.rho and ubar.beta must lie in [0, 1]")
        if not 0 < self.delta < 1:
            raise InputError("ubar.delta must lie in (0, 1)")
        if not self.theta >= 1:
            raise InputError("ubar.theta must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    design: str = "robustcal"
    budget: int = 500
    alpha: float = 0.05
    gamma: float = 0.2
    classifier: str = "logreg"
    n_committee: int = 10
    n_init: int = 50
    seed: int = 0
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    data: Optional[PairDataset] = None
    holdout: float = 0.3
    match_tol: float = 0.01
    refit_every: int = 1
    count_init_in_budget: bool = True
    lambda_init: float = 0.0
    lambda_clamp: float = 0.5
    predictor: str = "logreg"
    predictor_refit_full_until: int = 200
    predictor_refit_stride: int = 10
    solver: str = "newton"
    regressor: Optional[str] = None
    stop_on_reject: bool = True
    checkpoints: tuple = ()
    ubar: UbarConfig = field(default_factory=UbarConfig)
    theory_thresholds: int = 101
    theory_candidates: int = 20000
    theory_eval_size: int = 1000

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise InputError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if not math.isfinite(self.gamma):
            raise InputError("gamma must be finite")
        if self.n_init < 2:
            raise InputError("n_init must be at least 2")
        if self.budget <= (self.n_init if self.count_init_in_budget else 0):
            raise InputError("budget must exceed n_init")
        if self.classifier not in KINDS or self.predictor not in KINDS:
            raise InputError(f"classifier kinds must be one of {KINDS}")
        if self.n_committee < 1 or self.refit_every < 1:
            raise InputError("n_committee and refit_every must be positive")
        if self.match_tol < 0:
            raise InputError("match_tol must be non-negative")
        if self.regressor is not None and self.regressor not in REGRESSORS:
            raise InputError(f"regressor must be one of {REGRESSORS}")
        if abs(self.lambda_init) > self.lambda_clamp:
            raise InputError("lambda_init must lie within the clamp")
        if not 0 < self.holdout < 1:
            raise InputError("holdout must lie in (0, 1)")
        if any(b > self.budget for b in self.checkpoints):
            raise InputError("checkpoints cannot exceed the budget")

    @property
    def init_pairs(self) -> int:
        return (self.n_init + 1) // 2

    def classifier_hyper(self) -> dict:
        return {"solver": self.solver} if self.classifier == "logreg" else {}


# -- data sources ----------------------------------------------------------------

class SyntheticSource:
    """Finite population from the synthetic model; partners drawn fresh."""

    def __init__(self, cfg: RunConfig, rng):
        self.scfg = cfg.synthetic
        self.tol = cfg.match_tol
        self.pool = generate_population(self.scfg, rng)

    def _outcome(self, x, a, rng):
        return sample_outcome(x, a, self.scfg, rng)

    def run_pair(self, i, rng, index) -> ExperimentRecord:
        x = self.pool[i]
        partner = find_match(x, uniform_sampler, self.tol, rng=rng, exact=self.tol == 0)
        return assign_and_run(MatchedPair(x, partner, self.tol), self._outcome, rng, index)


def dataset_split(n_rows: int, holdout: float, seed: int):
    """Deterministic (train, validation) row split for a CSV dataset."""
    perm = np.random.default_rng([seed, 2]).permutation(n_rows)
    n_val = int(round(holdout * n_rows))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


class TableSource:
    """Pre-formed pairs from a PairDataset; the pool is the left units."""

    def __init__(self, ds: PairDataset, rows):
        self.ds = ds
        self.rows = np.asarray(rows)
        self.pool = ds.left[self.rows]

    def run_pair(self, i, rng, index) -> ExperimentRecord:
        r = self.rows[i]
        left, right = self.ds.left[r], self.ds.right[r]
        y0, y1 = self.ds.y0[r], self.ds.y1[r]
        pair = MatchedPair(left, right, float(np.linalg.norm(left - right)))
        return assign_and_run(pair, lambda x, a, _rng: y1 if a else y0, rng, index)


def make_source(cfg: RunConfig, rng):
    if cfg.data is None:
        return SyntheticSource(cfg, rng)
    train, _ = dataset_split(len(cfg.data), cfg.holdout, cfg.seed)
    return TableSource(cfg.data, train)


# -- enrollment-region models of the baselines -------------------------------------

@dataclass
class RegressionRegion:
    """``{x : f_t(x) - f_c(x) >= gamma}`` from two fitted regressors."""

    treated: object
    control: object
    gamma: float

    def effect(self, X):
        return self.treated.predict_value(X) - self.control.predict_value(X)

    def region_mask(self, X):
        return self.effect(X) >= self.gamma

    predict_region = region_mask


@dataclass
class EffectRegion:
    """``{x : g(x) >= gamma}`` from a regressor of the within-pair difference."""

    model: object
    gamma: float

    def region_mask(self, X):
        return self.model.predict_value(X) >= self.gamma

    predict_region = region_mask


class EverythingRegion:
    """Region of a design that enrolls from the whole population."""

    def region_mask(self, X):
        return np.ones(len(np.atleast_2d(X)), dtype=bool)

    predict_region = region_mask


def make_regressor(name: str):
    if name == "gp":
        return GPRegressor()
    if name == "tree":
        return DecisionTree(task="regress")
    if name == "knn":
        return KNN()
    if name == "linear":
        return RidgeRegression()
    raise InputError(f"unknown regressor {name!r}")


# -- results -------------------------------------------------------------------------

@dataclass
class Checkpoint:
    """State a run would have returned had its budget been ``budget``."""

    budget: int
    decision: int
    labels_used: int
    model: object
    wealth: float


@dataclass
class RunResult:
    design: str
    seed: int
    decision: int
    labels_used: int
    queried_x: np.ndarray
    queried_z: np.ndarray
    model: object
    trajectory: list
    wealth_final: float
    n_pairs: int
    min_factor: float
    checkpoints: dict = field(default_factory=dict)
    monitor: list = field(default_factory=list)

    def at_budget(self, budget: int) -> Checkpoint:
        if budget in self.checkpoints:
            return self.checkpoints[budget]
        raise KeyError(f"no checkpoint recorded for budget {budget}")


# -- the shared loop -------------------------------------------------------------------

class _Experiment:
    def __init__(self, cfg: RunConfig, rng, source=None):
        self.cfg = cfg
        self.rng = rng
        self.source = source if source is not None else make_source(cfg, rng)
        self.pool = self.source.pool
        self.available = np.ones(len(self.pool), dtype=bool)
        self.q_x: list = []
        self.q_z: list = []
        self.init_records: list[ExperimentRecord] = []
        self.records: list[ExperimentRecord] = []
        predictor = OnlinePredictor(cfg.predictor, cfg.predictor_refit_full_until,
                                    cfg.predictor_refit_stride,
                                    **({"solver": cfg.solver} if cfg.predictor == "logreg" else {}))
        self.test = SequentialTest(cfg.alpha, cfg.lambda_init, cfg.lambda_clamp, predictor)
        self.labels_used = 0
        self.checkpoints: dict[int, Checkpoint] = {}
        self.pending = sorted(set(cfg.checkpoints) | {cfg.budget})

    def _take(self, i, index) -> ExperimentRecord:
        if not self.available[i]:
            raise AssertionError("pool point queried twice")
        rec = self.source.run_pair(i, self.rng, index)
        left, right = label_pair(rec, self.cfg.gamma)
        self.q_x += [left.x, right.x]
        self.q_z += [left.z, right.z]
        self.available[i] = False
        return rec

    def draw_uniform(self) -> int:
        cand = np.flatnonzero(self.available)
        if cand.size == 0:
            raise PoolExhausted("population exhausted before the budget")
        return int(cand[self.rng.integers(cand.size)])

    def initialise(self):
        for k in range(self.cfg.init_pairs):
            self.init_records.append(self._take(self.draw_uniform(), k + 1))
        if self.cfg.count_init_in_budget:
            self.labels_used = 2 * self.cfg.init_pairs

    def run(self, design) -> RunResult:
        cfg = self.cfg
        design.refit(self)
        iteration = 0
        while True:
            self._snapshot(design, final=False)
            if self.labels_used + 2 > cfg.budget:
                break
            i = design.select(self)
            rec = self._take(i, len(self.records) + 1)
            self.records.append(rec)
            self.labels_used += 2
            assert self.labels_used <= cfg.budget
            v = self.test.step(rec)
            if v and cfg.stop_on_reject:
                break
            iteration += 1
            if iteration % cfg.refit_every == 0:
                design.refit(self)
        self._snapshot(design, final=True)
        top = self.checkpoints[cfg.budget]
        return RunResult(
            design=cfg.design, seed=cfg.seed, decision=top.decision,
            labels_used=top.labels_used, queried_x=np.array(self.q_x), queried_z=np.array(self.q_z),
            model=top.model, trajectory=self.test.trajectory, wealth_final=self.test.wealth,
            n_pairs=len(self.records), min_factor=self.test.min_factor,
            checkpoints=self.checkpoints)

    def _snapshot(self, design, final):
        while self.pending and (final or self.labels_used + 2 > self.pending[0]):
            b = self.pending.pop(0)
            self.checkpoints[b] = Checkpoint(b, int(self.test.rejected), self.labels_used,
                                             design.region_model(self, b), self.test.wealth)
        if self.test.rejected and self.cfg.stop_on_reject:
            # a stopped run returns the same state at every larger budget
            while self.pending:
                b = self.pending.pop(0)
                self.checkpoints[b] = Checkpoint(b, 1, self.labels_used,
                                                 design.region_model(self, b), self.test.wealth)

    # training views
    def labeled(self):
        return np.asarray(self.q_x), np.asarray(self.q_z, dtype=float)

    def all_records(self):
        return self.init_records + self.records


class _RobustCAL:
    def __init__(self):
        self.committee = None
        self.enroll = None

    def refit(self, exp: _Experiment):
        X, z = exp.labeled()
        cfg = exp.cfg
        self.committee = bootstrap_committee(X, z, cfg.classifier, cfg.n_committee, exp.rng,
                                             **cfg.classifier_hyper())
        self.enroll = self.committee.enroll_mask(exp.pool)

    def select(self, exp: _Experiment) -> int:
        cand = np.flatnonzero(self.enroll & exp.available)
        if cand.size == 0:
            return exp.draw_uniform()
        return int(cand[exp.rng.integers(cand.size)])

    def region_model(self, exp, budget):
        return self.committee


class _Conventional:
    """Random enrollment. The region model is a passive committee on the same labels."""

    def refit(self, exp):
        pass

    def select(self, exp):
        return exp.draw_uniform()

    def region_model(self, exp, budget):
        X, z = exp.labeled()
        if len(z) == 0:
            return EverythingRegion()
        cfg = exp.cfg
        rng = np.random.default_rng([cfg.seed, 3, budget])
        return bootstrap_committee(X, z, cfg.classifier, cfg.n_committee, rng,
                                   **cfg.classifier_hyper())


def _default_regressor(cfg: RunConfig) -> str:
    if cfg.regressor is not None:
        return cfg.regressor
    return "gp" if cfg.data is None else "tree"


class _Regression:
    def refit(self, exp):
        recs = exp.all_records()
        xt, yt, xc, yc = [], [], [], []
        for r in recs:
            treated_left = r.assignment_left == 1
            xt.append(r.pair.left if treated_left else r.pair.right)
            xc.append(r.pair.right if treated_left else r.pair.left)
            yt.append(r.treated_outcome)
            yc.append(r.control_outcome)
        name = _default_regressor(exp.cfg)
        ft = make_regressor(name).fit(np.array(xt), np.array(yt))
        fc = make_regressor(name).fit(np.array(xc), np.array(yc))
        self.region = RegressionRegion(ft, fc, exp.cfg.gamma)
        self.enroll = self.region.region_mask(exp.pool)

    select = _RobustCAL.select

    def region_model(self, exp, budget):
        return self.region


class _TauBald:
    def refit(self, exp):
        recs = exp.all_records()
        X = np.array([r.pair.left for r in recs])
        g = np.array([r.difference for r in recs])
        self.gp = GPRegressor().fit(X, g)
        self.region = EffectRegion(self.gp, exp.cfg.gamma)
        self.variance = None

    def select(self, exp):
        cand = np.flatnonzero(exp.available)
        if cand.size == 0:
            raise PoolExhausted("population exhausted before the budget")
        _, var = self.gp.predict(exp.pool[cand])
        return int(cand[np.argmax(var)])

    def region_model(self, exp, budget):
        return self.region


_ENGINES = {"robustcal": _RobustCAL, "conventional": _Conventional,
            "regression": _Regression, "tau-bald": _TauBald}


def _run_practical(cfg: RunConfig, design_name: str, rng=None, source=None) -> RunResult:
    if cfg.design != design_name:
        from dataclasses import replace
        cfg = replace(cfg, design=design_name)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    exp = _Experiment(cfg, rng, source)
    if design_name != "conventional":
        exp.initialise()
    return exp.run(_ENGINES[design_name]())


def run_conventional(cfg: RunConfig, rng=None, source=None) -> RunResult:
    return _run_practical(cfg, "conventional", rng, source)


def run_mped_robustcal(cfg: RunConfig, rng=None, source=None) -> RunResult:
    return _run_practical(cfg, "robustcal", rng, source)


def run_regression_active(cfg: RunConfig, rng=None, source=None) -> RunResult:
    return _run_practical(cfg, "regression", rng, source)


def run_tau_bald(cfg: RunConfig, rng=None, source=None) -> RunResult:
    return _run_practical(cfg, "tau-bald", rng, source)


def run_design(cfg: RunConfig, rng=None) -> RunResult:
    if cfg.design == "theory":
        from .theory import run_theoretical_robustcal
        return run_theoretical_robustcal(cfg, rng=rng)
    return _run_practical(cfg, cfg.design, rng)
