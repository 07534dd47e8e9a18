"""Sequential predictive two-sample test by betting.

A bettor starts with wealth 1 and, for each new pair, stakes a fraction
``lambda`` of its wealth on an online classifier's guess of the left unit's
assignment from its (covariates, outcome). The payoff is
``(2a - 1) * (2p - 1)``; ``lambda`` is chosen by online Newton steps. Under
H0 the assignment is a fair coin independent of everything the bettor sees,
so wealth is a non-negative martingale and crossing ``1/alpha`` has
probability at most ``alpha``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .classifiers import fit as fit_classifier
from .errors import InputError, SequencingError
from .matching import ExperimentRecord

ONS_SCALE = 2.0 / (2.0 - math.log(3.0))


@dataclass(frozen=True)
class WealthState:
    alpha: float
    wealth: float = 1.0
    lam: float = 0.0
    ons_accum: float = 1.0
    step_count: int = 0
    lambda_clamp: float = 0.5
    stopped: bool = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if not 0 < self.lambda_clamp <= 1:
            raise InputError("lambda_clamp must lie in (0, 1]")
        if abs(self.lam) > self.lambda_clamp:
            raise InputError("initial lambda outside the clamp interval")

    @property
    def threshold(self) -> float:
        return 1.0 / self.alpha


def payoff(prob: float, a: int) -> float:
    if not 0.0 <= prob <= 1.0:
        raise InputError(f"probability {prob} outside [0, 1]")
    return (2 * a - 1) * (2.0 * prob - 1.0)


def ons_update(state: WealthState, L: float) -> tuple[float, float]:
    """One online Newton step on ``log(1 + lambda * L)``; returns ``(lambda, accumulator)``."""
    z = L / (1.0 + state.lam * L)
    acc = state.ons_accum + z * z
    lam = state.lam + ONS_SCALE * z / acc
    c = state.lambda_clamp
    return min(max(lam, -c), c), acc


class OnlinePredictor:
    """Classifier predicting assignment from (covariates, outcome).

    Each past pair contributes two rows: the left unit labelled with its
    assignment and the right unit with the opposite. The model is refit after
    every record up to ``refit_full_until`` records, then every
    ``refit_stride`` records. Before any data it predicts 0.5.
    """

    def __init__(self, kind="logreg", refit_full_until=200, refit_stride=10, **hyper):
        self.kind = kind
        self.refit_full_until = refit_full_until
        self.refit_stride = refit_stride
        self.hyper = hyper
        self.rows: list[np.ndarray] = []
        self.labels: list[int] = []
        self.n_seen = 0
        self.model = None

    @staticmethod
    def features(x, y) -> np.ndarray:
        return np.append(np.asarray(x, float), y)

    def predict_proba(self, features) -> float:
        if self.model is None:
            return 0.5
        return float(self.model.predict_proba(np.atleast_2d(features))[0])

    def update(self, record: ExperimentRecord) -> "OnlinePredictor":
        if record.index != self.n_seen + 1:
            raise SequencingError(f"expected record {self.n_seen + 1}, got {record.index}")
        a = record.assignment_left
        self.rows.append(self.features(record.pair.left, record.y_left))
        self.labels.append(a)
        self.rows.append(self.features(record.pair.right, record.y_right))
        self.labels.append(1 - a)
        self.n_seen += 1
        n = self.n_seen
        if n <= self.refit_full_until or n % self.refit_stride == 0:
            self.model = fit_classifier(self.kind, np.vstack(self.rows),
                                        np.asarray(self.labels, float), **self.hyper)
        return self

    @property
    def n_rows(self) -> int:
        return len(self.labels)


def predictor_update(predictor: OnlinePredictor, record: ExperimentRecord) -> OnlinePredictor:
    return predictor.update(record)


def wealth_step(state: WealthState, record: ExperimentRecord,
                predictor: OnlinePredictor) -> tuple[WealthState, int, float]:
    """Bet on the left unit of ``record``; returns ``(state, decision, payoff)``.

    Once the threshold has been crossed the state is frozen.
    """
    if state.stopped:
        return state, 1, 0.0
    p = predictor.predict_proba(OnlinePredictor.features(record.pair.left, record.y_left))
    L = payoff(p, record.assignment_left)
    factor = 1.0 + state.lam * L
    assert factor > 0, "betting factor must stay positive"
    wealth = state.wealth * factor
    lam, acc = ons_update(state, L)
    v = int(wealth >= state.threshold)
    new = replace(state, wealth=wealth, lam=lam, ons_accum=acc,
                  step_count=state.step_count + 1, stopped=bool(v))
    return new, v, L


class SequentialTest:
    """Wealth state, online predictor and the exported trajectory for one run."""

    def __init__(self, alpha=0.05, lambda_init=0.0, lambda_clamp=0.5, predictor=None):
        self.state = WealthState(alpha=alpha, lam=lambda_init, lambda_clamp=lambda_clamp)
        self.predictor = predictor if predictor is not None else OnlinePredictor()
        self.trajectory: list[tuple] = []
        self.min_factor = math.inf

    def step(self, record: ExperimentRecord) -> int:
        if self.state.stopped:
            return 1
        lam_used = self.state.lam
        old = self.state.wealth
        self.state, v, L = wealth_step(self.state, record, self.predictor)
        if old > 0:
            self.min_factor = min(self.min_factor, self.state.wealth / old)
        self.trajectory.append((self.state.step_count, self.state.wealth, lam_used, L, v))
        self.predictor.update(record)
        return v

    @property
    def wealth(self) -> float:
        return self.state.wealth

    @property
    def rejected(self) -> bool:
        return self.state.stopped


TRAJECTORY_COLUMNS = ("n", "wealth", "lambda", "payoff", "decision")


def write_trajectory_csv(trajectory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for row in trajectory:
            w.writerow([row[0], repr(float(row[1])), repr(float(row[2])), repr(float(row[3])), row[4]])
