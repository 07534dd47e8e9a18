"""Exact finite-class version of the active matched-pair design.

The hypothesis class is the threshold family ``h_t(x) = 1[x1 + t < x2]``
over a grid of ``t``. A candidate is experimented on only when some
surviving member calls it positive, which is exactly ``DIS(C) | POS(C)``.
At every power-of-two candidate count ``m`` the members whose excess
mistake count exceeds ``Ubar(m) * m`` are removed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .datagen import effect_size, sample_outcome, uniform_sampler
from .designs import Checkpoint, RunConfig, RunResult, UbarConfig
from .errors import AlgorithmFailure, InputError
from .matching import MatchedPair, assign_and_run, find_match, label_pair
from .seqtest import OnlinePredictor, SequentialTest


@dataclass
class FiniteClass:
    """Threshold classifiers with per-member active flags."""

    thresholds: np.ndarray
    active: np.ndarray = None

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=float)
        if self.thresholds.ndim != 1 or self.thresholds.size == 0:
            raise InputError("finite class needs at least one threshold")
        if self.active is None:
            self.active = np.ones(self.thresholds.size, dtype=bool)

    @classmethod
    def grid(cls, n: int = 101) -> "FiniteClass":
        return cls(np.linspace(0.0, 1.0, n))

    def __len__(self):
        return self.thresholds.size

    def index_of(self, t: float):
        hit = np.flatnonzero(np.isclose(self.thresholds, t, rtol=0, atol=1e-12))
        return int(hit[0]) if hit.size else None

    def predictions(self, X, active_only=True) -> np.ndarray:
        """(members, points) 0/1 matrix."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        T = self.thresholds[self.active] if active_only else self.thresholds
        return (X[None, :, 0] + T[:, None] < X[None, :, 1]).astype(np.int8)

    def pos_mask(self, X):
        return self.predictions(X).all(axis=0)

    def dis_mask(self, X):
        P = self.predictions(X)
        return P.any(axis=0) & ~P.all(axis=0)

    def region_mask(self, X):
        return self.predictions(X).any(axis=0)

    def predict_region(self, X):
        return self.predictions(X).mean(axis=0) >= 0.5

    def copy(self) -> "FiniteClass":
        return FiniteClass(self.thresholds.copy(), self.active.copy())


def compute_ubar(m: int, ubar: UbarConfig) -> float:
    """``U(m, delta_m)`` with ``delta_m = delta / log2(2m)^2`` and a constant theta."""
    if m < 1:
        raise InputError("m must be >= 1")
    delta_m = ubar.delta / math.log2(2 * m) ** 2
    core = ubar.d_vc * math.log(ubar.theta) + math.log(1.0 / delta_m)
    first = (ubar.a * core / m) ** (1.0 / (2.0 - ubar.rho))
    second = core / m + math.sqrt(ubar.beta * core / m)
    return ubar.c_hat * min(first, second)


@dataclass
class DoublingSnapshot:
    m: int
    queried: int
    n_active: int
    truth_active: bool
    dis_mass: float
    enrolled_mass: float
    ratio: float
    enclosure: bool


def _snapshot(fc: FiniteClass, m, queried, truth_idx, eval_pool, positive) -> DoublingSnapshot:
    P = fc.predictions(eval_pool)
    enrolled = P.any(axis=0)
    dis = enrolled & ~P.all(axis=0)
    n_pos = int(positive.sum())
    return DoublingSnapshot(
        m=m, queried=queried, n_active=int(fc.active.sum()),
        truth_active=bool(truth_idx is not None and fc.active[truth_idx]),
        dis_mass=float(dis.mean()), enrolled_mass=float(enrolled.mean()),
        ratio=float(enrolled.sum() / n_pos) if n_pos else math.nan,
        enclosure=bool(np.all(enrolled[positive])))


def run_theoretical_robustcal(cfg: RunConfig, finite_class: FiniteClass = None,
                              ubar: UbarConfig = None, rng=None, eval_pool=None,
                              candidates=None) -> RunResult:
    """Run the finite-class algorithm; ``cfg.budget`` counts queried pairs."""
    if cfg.data is not None:
        raise InputError("the finite-class engine needs the synthetic source")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    fc = finite_class.copy() if finite_class is not None else FiniteClass.grid(cfg.theory_thresholds)
    ubar = ubar if ubar is not None else cfg.ubar
    scfg = cfg.synthetic
    if candidates is None:
        candidates = rng.random((cfg.theory_candidates, 2))
    if eval_pool is None:
        eval_pool = np.random.default_rng([cfg.seed, 5]).random((cfg.theory_eval_size, 2))
    positive = np.asarray(effect_size(eval_pool, scfg)) >= cfg.gamma
    truth_idx = fc.index_of(scfg.s) if scfg.hypothesis == "H1" else None

    predictor = OnlinePredictor(cfg.predictor, cfg.predictor_refit_full_until,
                                cfg.predictor_refit_stride)
    test = SequentialTest(cfg.alpha, cfg.lambda_init, cfg.lambda_clamp, predictor)
    outcome = lambda x, a, r: sample_outcome(x, a, scfg, r)  # noqa: E731
    mistakes = np.zeros(len(fc), dtype=np.int64)
    q_x, q_z, monitor = [], [], []
    m = 0
    stop_m = 2 ** cfg.budget if cfg.budget < 63 else math.inf
    while len(q_z) < cfg.budget and m < stop_m and m < len(candidates):
        x = candidates[m]
        m += 1
        if fc.region_mask(x)[0]:
            partner = find_match(x, uniform_sampler, cfg.match_tol, rng=rng,
                                 exact=cfg.match_tol == 0)
            rec = assign_and_run(MatchedPair(x, partner, cfg.match_tol), outcome, rng,
                                 len(q_z) + 1)
            z = label_pair(rec, cfg.gamma)[0].z
            q_x.append(x)
            q_z.append(z)
            mistakes += fc.predictions(x, active_only=False)[:, 0] != z
            if test.step(rec) and cfg.stop_on_reject:
                break
        if m & (m - 1) == 0:
            bound = compute_ubar(m, ubar) * m
            best = mistakes[fc.active].min()
            fc.active &= (mistakes - best) <= bound
            if not fc.active.any():
                raise AlgorithmFailure("every class member was eliminated")
            monitor.append(_snapshot(fc, m, len(q_z), truth_idx, eval_pool, positive))

    cp = Checkpoint(cfg.budget, int(test.rejected), len(q_z), fc, test.wealth)
    return RunResult(
        design="theory", seed=cfg.seed, decision=cp.decision, labels_used=len(q_z),
        queried_x=np.array(q_x).reshape(-1, 2), queried_z=np.array(q_z, dtype=float),
        model=fc, trajectory=test.trajectory, wealth_final=test.wealth, n_pairs=len(q_z),
        min_factor=test.min_factor, checkpoints={cfg.budget: cp}, monitor=monitor)
