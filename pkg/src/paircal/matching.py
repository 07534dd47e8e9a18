"""Pair formation, within-pair randomisation and the gamma-threshold label."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.stats import norm

from .datagen import SyntheticConfig, effect_size
from .errors import InputError, MatchFailure

Sampler = Callable[[np.random.Generator, int], np.ndarray]

DEFAULT_MAX_DRAWS = 10**6
_BATCH = 4096


@dataclass(frozen=True)
class MatchedPair:
    left: np.ndarray
    right: np.ndarray
    match_tol: float = 0.0

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.asarray(self.left) - np.asarray(self.right)))


@dataclass(frozen=True)
class ExperimentRecord:
    """One experimented pair: left unit got ``assignment_left``, right got the opposite."""

    pair: MatchedPair
    assignment_left: int
    y_left: float
    y_right: float
    index: int

    @property
    def treated_outcome(self) -> float:
        return self.y_left if self.assignment_left == 1 else self.y_right

    @property
    def control_outcome(self) -> float:
        return self.y_right if self.assignment_left == 1 else self.y_left

    @property
    def difference(self) -> float:
        return self.treated_outcome - self.control_outcome


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    z: int


def find_match(x, source: Union[Sampler, np.ndarray], tol: float, rng=None,
               exact: bool = False, max_draws: int = DEFAULT_MAX_DRAWS) -> np.ndarray:
    """Return a partner for ``x`` within Euclidean distance ``tol``.

    ``source`` is either a sampler ``(rng, n) -> (n, d)`` that is drawn from
    until a point lands within ``tol`` (at most ``max_draws`` draws), or a
    finite pool whose nearest in-tolerance point is returned.
    """
    x = np.asarray(x, dtype=float)
    if tol < 0:
        raise InputError("tol must be non-negative")
    if exact:
        return x.copy()
    if callable(source):
        if rng is None:
            raise InputError("sampler mode needs an rng")
        drawn = 0
        while drawn < max_draws:
            n = min(_BATCH, max_draws - drawn)
            cand = source(rng, n)
            d = np.linalg.norm(cand - x, axis=1)
            hit = np.flatnonzero(d <= tol)
            if hit.size:
                return cand[hit[0]].copy()
            drawn += n
        raise MatchFailure(f"no match within {tol} after {max_draws} draws")
    pool = np.asarray(source, dtype=float)
    if pool.ndim != 2 or len(pool) == 0:
        raise InputError("pool must be a non-empty (n, d) array")
    d = np.linalg.norm(pool - x, axis=1)
    j = int(np.argmin(d))
    if not d[j] <= tol:
        raise MatchFailure(f"nearest pool point is {d[j]:.4g} away, tolerance {tol}")
    return pool[j].copy()


def assign_and_run(pair: MatchedPair, outcome: Callable, rng: np.random.Generator,
                   index: int) -> ExperimentRecord:
    """Randomise treatment within the pair and observe both units.

    ``outcome(x, a, rng)`` returns ``Y^a(x)``.
    """
    a = int(rng.random() < 0.5)
    y_left = float(outcome(pair.left, a, rng))
    y_right = float(outcome(pair.right, 1 - a, rng))
    return ExperimentRecord(pair, a, y_left, y_right, index)


def label_pair(record: ExperimentRecord, gamma: float) -> tuple[LabeledExample, LabeledExample]:
    if not np.isfinite(gamma):
        raise InputError("gamma must be finite")
    z = int(record.difference >= gamma)
    return LabeledExample(record.pair.left, z), LabeledExample(record.pair.right, z)


# -- label noise of the synthetic model ------------------------------------

def label_probability(x, cfg: SyntheticConfig, gamma: float):
    """P(Z=1 | x) for exact matches: effect(x) + N(0, 2 sigma2) >= gamma."""
    eff = np.asarray(effect_size(x, cfg))
    p = norm.sf((gamma - eff) / np.sqrt(2.0 * cfg.sigma2))
    return float(p) if p.ndim == 0 else p


def empirical_label_rate(x, cfg: SyntheticConfig, gamma: float, n_labelings: int,
                         rng: np.random.Generator):
    """Monte-Carlo estimate of P(Z=1 | x) from repeated exact-match labelings.

    Each labeling draws an independent treated and control outcome and applies
    the gamma rule; returns one rate per row of ``x``.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    eff = np.asarray(effect_size(pts, cfg))
    sd = cfg.noise_sd
    rates = np.empty(len(pts))
    for start in range(0, len(pts), 64):
        e = eff[start:start + 64, None]
        e_t = rng.normal(0.0, sd, size=(len(e), n_labelings))
        e_c = rng.normal(0.0, sd, size=(len(e), n_labelings))
        rates[start:start + 64] = np.mean(e + e_t - e_c >= gamma, axis=1)
    return rates


def bounded_noise_constant(eta) -> float:
    """Smallest ``a`` with ``|eta - 1/2| >= 1/(2a)`` on every supplied value."""
    margin = float(np.min(np.abs(np.asarray(eta) - 0.5)))
    return np.inf if margin == 0 else 1.0 / (2.0 * margin)
