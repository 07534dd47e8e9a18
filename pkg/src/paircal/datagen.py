"""Synthetic populations, outcome model and the matched-pair CSV format.

Outcomes follow ``Y^a(x) = a * effect(x) + f(x) + e`` with ``e ~ N(0, sigma2)``.
Under H1 the effect is 1 on the triangle ``x1 + s < x2`` of the unit square
and 0 elsewhere; under H0 it is 0 everywhere.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError, SchemaError

HYPOTHESES = ("H0", "H1")
F_VARIANTS = ("literal", "x2_reading")


@dataclass(frozen=True)
class SyntheticConfig:
    hypothesis: str = "H1"
    s: float = 0.5
    sigma2: float = 0.1
    population_size: int = 1000
    f_variant: str = "literal"
    dimension: int = 2

    def __post_init__(self):
        if self.hypothesis not in HYPOTHESES:
            raise InputError(f"hypothesis must be one of {HYPOTHESES}, got {self.hypothesis!r}")
        if not 0.0 <= self.s <= 1.0:
            raise InputError(f"s must lie in [0, 1], got {self.s}")
        if not self.sigma2 > 0:
            raise InputError(f"sigma2 must be positive, got {self.sigma2}")
        if self.population_size < 2:
            raise InputError("population_size must be at least 2")
        if self.f_variant not in F_VARIANTS:
            raise InputError(f"f_variant must be one of {F_VARIANTS}")
        if self.dimension != 2:
            raise InputError("the synthetic model is two-dimensional")

    @property
    def noise_sd(self) -> float:
        return math.sqrt(self.sigma2)

    def positive_rate(self) -> float:
        """Probability mass of the effect region under uniform covariates."""
        if self.hypothesis == "H0":
            return 0.0
        return (1.0 - self.s) ** 2 / 2.0


def _as_points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"expected covariates of dimension 2, got shape {np.shape(x)}")
    return arr


def _unwrap(values: np.ndarray, x):
    return float(values[0]) if np.ndim(x) == 1 else values


def effect_size(x, cfg: SyntheticConfig):
    """Treatment effect at ``x`` (a single point or an ``(n, 2)`` array)."""
    pts = _as_points(x)
    if cfg.hypothesis == "H0":
        eff = np.zeros(len(pts))
    else:
        eff = (pts[:, 0] + cfg.s < pts[:, 1]).astype(float)
    return _unwrap(eff, x)


def control_response(x, variant: str = "literal"):
    """Noise-free control outcome f(x).

    ``literal`` evaluates ``x1 + 2*x1 - x1*x2`` as printed; ``x2_reading``
    uses ``x1 + 2*x2 - x1*x2``.
    """
    pts = _as_points(x)
    x1, x2 = pts[:, 0], pts[:, 1]
    if variant == "literal":
        f = x1 + 2.0 * x1 - x1 * x2
    elif variant == "x2_reading":
        f = x1 + 2.0 * x2 - x1 * x2
    else:
        raise InputError(f"unknown f_variant {variant!r}")
    return _unwrap(f, x)


def mean_outcome(x, a, cfg: SyntheticConfig):
    return np.asarray(a) * effect_size(x, cfg) + control_response(x, cfg.f_variant)


def sample_outcome(x, a, cfg: SyntheticConfig, rng: np.random.Generator):
    """Draw ``Y^a(x)``; vectorised over rows of ``x`` (and ``a`` if an array)."""
    a_arr = np.asarray(a)
    if not np.all((a_arr == 0) | (a_arr == 1)):
        raise InputError("assignment must be 0 or 1")
    mean = mean_outcome(x, a_arr, cfg)
    noise = rng.normal(0.0, cfg.noise_sd, size=np.shape(mean))
    out = mean + noise
    return float(out) if np.ndim(out) == 0 else out


def generate_population(cfg: SyntheticConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=(cfg.population_size, cfg.dimension))


def uniform_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
    """Covariate sampler for the synthetic model, used for fresh-draw matching."""
    return rng.uniform(0.0, 1.0, size=(n, 2))


# -- matched-pair datasets ------------------------------------------------

@dataclass
class PairDataset:
    """Matched pairs with both potential outcomes of the pair.

    ``y1`` is observed on whichever unit is treated, ``y0`` on the control unit.
    """

    pair_ids: list
    left: np.ndarray
    right: np.ndarray
    y0: np.ndarray
    y1: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        self.y0 = np.asarray(self.y0, dtype=float)
        self.y1 = np.asarray(self.y1, dtype=float)
        n = len(self.pair_ids)
        if self.left.shape != self.right.shape or self.left.ndim != 2 or len(self.left) != n:
            raise SchemaError("left/right covariate arrays must both be (n_pairs, d)")
        if self.y0.shape != (n,) or self.y1.shape != (n,):
            raise SchemaError("outcome arrays must have one entry per pair")
        if len(set(self.pair_ids)) != n:
            raise SchemaError("pair_ids must be unique")
        for name in ("left", "right", "y0", "y1"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise SchemaError(f"non-finite values in {name}")

    def __len__(self):
        return len(self.pair_ids)

    @property
    def dimension(self) -> int:
        return self.left.shape[1]

    @property
    def exact_match(self) -> bool:
        return bool(np.array_equal(self.left, self.right))

    def subset(self, idx) -> "PairDataset":
        idx = np.asarray(idx)
        return PairDataset([self.pair_ids[i] for i in idx], self.left[idx],
                           self.right[idx], self.y0[idx], self.y1[idx])


def csv_header(d: int) -> list[str]:
    return (["pair_id"] + [f"x{j}" for j in range(1, d + 1)] + ["y0", "y1"]
            + [f"x{j}_r" for j in range(1, d + 1)])


def _num(v) -> str:
    return repr(float(v))  # shortest exact round-trip form


def write_pairs_csv(ds: PairDataset, path) -> None:
    d = ds.dimension
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(d))
        for i, pid in enumerate(ds.pair_ids):
            w.writerow([pid, *map(_num, ds.left[i]), _num(ds.y0[i]), _num(ds.y1[i]),
                        *map(_num, ds.right[i])])


def load_pairs_csv(path) -> PairDataset:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        left_cols = [h for h in header if h.startswith("x") and not h.endswith("_r")]
        d = len(left_cols)
        if d == 0 or header != csv_header(d):
            raise SchemaError(f"{path}: header does not match pair_id,x1..xd,y0,y1,x1_r..xd_r")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for name, cell in zip(header[1:], row[1:]):
                cell = cell.strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"row {lineno}: field {name!r} missing or not a number") from None
                if not math.isfinite(v):
                    raise ParseError(f"row {lineno}: field {name!r} is not finite")
                vals.append(v)
            ids.append(row[0].strip())
            rows.append(vals)
    arr = np.asarray(rows, dtype=float).reshape(len(rows), 2 * d + 2)
    return PairDataset(ids, arr[:, :d], arr[:, d + 2:], arr[:, d], arr[:, d + 1])


def generate_pair_dataset(cfg: SyntheticConfig, rng: np.random.Generator,
                          match_tol: float = 0.01) -> PairDataset:
    """Synthetic surrogate in the CSV pair format, one row per population member.

    ``match_tol == 0`` gives an exact-match dataset (right == left).
    """
    from .matching import find_match

    left = generate_population(cfg, rng)
    if match_tol == 0:
        right = left.copy()
    else:
        right = np.vstack([find_match(x, uniform_sampler, match_tol, rng=rng) for x in left])
    y0 = sample_outcome(left, np.zeros(len(left), dtype=int), cfg, rng)
    y1 = sample_outcome(left, np.ones(len(left), dtype=int), cfg, rng)
    ids = [str(i) for i in range(len(left))]
    return PairDataset(ids, left, right, y0, y1)
