"""From-scratch learners and the bootstrapped committee.

Every classifier exposes ``predict_proba(X) -> (n,)`` and ``predict(X)``
with ``predict(x) == 1`` exactly when ``predict_proba(x) >= 0.5``. Fitted
models are not mutated afterwards, so committees can be shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InputError

KINDS = ("logreg", "tree", "knn")


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or len(X) != len(y):
        raise InputError("expected X of shape (n, d) and y of shape (n,)")
    if len(X) == 0:
        raise InputError("cannot fit on an empty training set")
    return X, y


class ConstantClassifier:
    """Stand-in for a fit on single-class data."""

    degenerate = True

    def __init__(self, label: int):
        self.label = int(label)

    def predict_proba(self, X):
        return np.full(len(np.atleast_2d(X)), float(self.label))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


# -- logistic regression ------------------------------------------------------

def _standardize(X, w):
    """Weighted mean/std per feature; constant features get unit scale."""
    tot = w.sum(axis=1, keepdims=True)
    mean = (w @ X) / tot
    var = (w @ X**2) / tot - mean**2
    std = np.sqrt(np.maximum(var, 0.0))
    std[std < 1e-12] = 1.0
    return mean, std


def _losses(Xs, y, w, tot, W, l2):
    Z = np.einsum("knp,kp->kn", Xs, W)
    ll = np.logaddexp(0.0, Z) - y * Z
    return np.sum(w * ll, axis=1) / tot + 0.5 * l2 * np.sum(W[:, :-1] ** 2, axis=1)


def fit_logistic_batch(X, y, weights, l2=1e-4, solver="newton", step=0.1, epochs=500,
                       tol=1e-9, max_iter=100):
    """Fit ``k`` L2-penalised logistic regressions sharing rows of ``X``.

    ``weights`` is ``(k, n)``: integer counts reproduce a fit on the
    resampled multiset exactly. Inputs are standardised per model; the bias
    is unpenalised. Returns ``(coef (k, d+1), mean (k, d), std (k, d), loss_history)``.
    """
    X, y = _check_xy(X, y)
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    k, n = w.shape
    mean, std = _standardize(X, w)
    Xs = np.concatenate([(X[None] - mean[:, None]) / std[:, None], np.ones((k, n, 1))], axis=2)
    p = Xs.shape[2]
    tot = w.sum(axis=1)
    reg = np.full(p, l2)
    reg[-1] = 0.0
    W = np.zeros((k, p))
    history = [_losses(Xs, y, w, tot, W, l2)]

    def grad(W):
        P = expit(np.einsum("knp,kp->kn", Xs, W))
        G = np.einsum("kn,knp->kp", w * (P - y), Xs) / tot[:, None] + reg * W
        return P, G

    if solver == "gd":
        for _ in range(epochs):
            _, G = grad(W)
            W = W - step * G
            history.append(_losses(Xs, y, w, tot, W, l2))
    elif solver == "newton":
        for _ in range(max_iter):
            P, G = grad(W)
            live = np.max(np.abs(G), axis=1) >= tol
            if not live.any():
                break
            G = G * live[:, None]
            S = w * P * (1.0 - P) / tot[:, None]
            H = np.einsum("knp,kn,knq->kpq", Xs, S, Xs) + np.diag(reg + 1e-12)
            D = np.linalg.solve(H, G[..., None])[..., 0]
            f0 = history[-1]
            slope = np.sum(G * D, axis=1)
            t = np.ones(k)
            for _ in range(40):
                cand = W - t[:, None] * D
                f1 = _losses(Xs, y, w, tot, cand, l2)
                bad = (f1 > f0 - 1e-4 * t * slope) & live
                if not bad.any():
                    break
                t[bad] *= 0.5
            better = f1 < f0
            if not better.any():
                break  # float floor reached
            W = np.where(better[:, None], cand, W)
            history.append(np.where(better, f1, f0))
    else:
        raise InputError(f"unknown solver {solver!r}")
    return W, mean, std, np.array(history)


class LogisticRegression:
    """Binary logistic regression on standardised inputs.

    ``solver="gd"`` runs plain full-batch gradient descent for ``epochs``
    steps of size ``step``; ``solver="newton"`` runs damped Newton to
    convergence on the same penalised loss.
    """

    degenerate = False

    def __init__(self, l2=1e-4, solver="newton", step=0.1, epochs=500):
        self.l2 = l2
        self.solver = solver
        self.step = step
        self.epochs = epochs
        self.coef_ = None
        self.loss_history_ = None

    def fit(self, X, y, sample_weight=None):
        X, y = _check_xy(X, y)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
        W, mean, std, hist = fit_logistic_batch(X, y, w[None], l2=self.l2, solver=self.solver,
                                                step=self.step, epochs=self.epochs)
        self._set(W[0], mean[0], std[0])
        self.loss_history_ = hist[:, 0]
        return self

    def _set(self, coef, mean, std):
        self.coef_, self.mean_, self.std_ = coef, mean, std
        return self

    def decision_function(self, X):
        Xs = (np.atleast_2d(np.asarray(X, float)) - self.mean_) / self.std_
        return Xs @ self.coef_[:-1] + self.coef_[-1]

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


# -- decision tree --------------------------------------------------------------

class DecisionTree:
    """CART tree. ``task="classify"`` splits on Gini impurity and stores the
    class-1 fraction per leaf; ``task="regress"`` splits on squared error and
    stores the leaf mean.

    Split thresholds are midpoints between consecutive distinct values; ties
    go to the lowest feature index, then the smallest threshold.
    """

    degenerate = False

    def __init__(self, max_depth=6, min_leaf=3, task="classify"):
        if task not in ("classify", "regress"):
            raise InputError(f"unknown task {task!r}")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.task = task

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        self.feature_, self.threshold_, self.left_, self.right_, self.value_ = [], [], [], [], []
        self._grow(X, y, 0)
        for name in ("feature_", "threshold_", "left_", "right_", "value_"):
            setattr(self, name, np.asarray(getattr(self, name)))
        return self

    def _impurity(self, s1, s2, n):
        # s1: running sum of y, s2: running sum of y**2
        if self.task == "classify":
            p = s1 / n
            return 2.0 * p * (1.0 - p)
        return s2 / n - (s1 / n) ** 2

    def _best_split(self, X, y):
        n = len(y)
        parent = self._impurity(y.sum(), (y**2).sum(), n)
        best = (parent - 1e-12, None, None)
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs, ys = X[order, j], y[order]
            c1, c2 = np.cumsum(ys), np.cumsum(ys**2)
            nl = np.arange(1, n)
            valid = (xs[:-1] < xs[1:]) & (nl >= self.min_leaf) & (n - nl >= self.min_leaf)
            if not valid.any():
                continue
            nl_v = nl[valid]
            l1, l2 = c1[:-1][valid], c2[:-1][valid]
            r1, r2 = c1[-1] - l1, c2[-1] - l2
            imp = (nl_v * self._impurity(l1, l2, nl_v)
                   + (n - nl_v) * self._impurity(r1, r2, n - nl_v)) / n
            i = int(np.argmin(imp))
            if imp[i] < best[0]:
                pos = np.flatnonzero(valid)[i]
                best = (imp[i], j, 0.5 * (xs[pos] + xs[pos + 1]))
        return best[1], best[2]

    def _grow(self, X, y, depth):
        node = len(self.value_)
        self.feature_.append(-1)
        self.threshold_.append(0.0)
        self.left_.append(-1)
        self.right_.append(-1)
        self.value_.append(float(np.mean(y)))
        if depth >= self.max_depth or len(y) < 2 * self.min_leaf or np.all(y == y[0]):
            return node
        j, thr = self._best_split(X, y)
        if j is None:
            return node
        mask = X[:, j] <= thr
        self.feature_[node], self.threshold_[node] = j, thr
        self.left_[node] = self._grow(X[mask], y[mask], depth + 1)
        self.right_[node] = self._grow(X[~mask], y[~mask], depth + 1)
        return node

    def apply(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        node = np.zeros(len(X), dtype=int)
        for _ in range(self.max_depth + 1):
            f = self.feature_[node]
            inner = f >= 0
            if not inner.any():
                break
            go_left = X[np.arange(len(X)), np.where(inner, f, 0)] <= self.threshold_[node]
            node = np.where(inner, np.where(go_left, self.left_[node], self.right_[node]), node)
        return node

    def predict_value(self, X):
        return self.value_[self.apply(X)]

    def predict_proba(self, X):
        return self.predict_value(X)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


# -- k nearest neighbours ------------------------------------------------------------

class KNN:
    """k-NN by Euclidean distance. Vote ties resolve to class 1."""

    degenerate = False

    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y):
        self.X_, self.y_ = _check_xy(X, y)
        return self

    def _neighbours(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        d2 = (np.sum(X**2, 1)[:, None] - 2.0 * X @ self.X_.T + np.sum(self.X_**2, 1)[None])
        k = min(self.k, len(self.y_))
        return np.argsort(d2, axis=1, kind="stable")[:, :k]

    def predict_value(self, X):
        return self.y_[self._neighbours(X)].mean(axis=1)

    def predict_proba(self, X):
        return self.predict_value(X)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


class RidgeRegression:
    """Linear least squares with a small ridge; regression mode for ``logreg``."""

    def __init__(self, l2=1e-4):
        self.l2 = l2

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        Xb = np.hstack([X, np.ones((len(X), 1))])
        reg = np.full(Xb.shape[1], self.l2)
        reg[-1] = 0.0
        self.coef_ = np.linalg.solve(Xb.T @ Xb + np.diag(reg + 1e-12), Xb.T @ y)
        return self

    def predict_value(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        return X @ self.coef_[:-1] + self.coef_[-1]


# -- fitting entry points ---------------------------------------------------------------

def make_classifier(kind: str, **hyper):
    if kind == "logreg":
        return LogisticRegression(**hyper)
    if kind == "tree":
        return DecisionTree(**hyper)
    if kind == "knn":
        return KNN(**hyper)
    raise InputError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")


def fit(kind: str, X, y, rng=None, **hyper):
    """Fit a classifier of ``kind``; single-class data gives a ConstantClassifier.

    The learners are deterministic, ``rng`` is accepted for interface symmetry.
    """
    X, y = _check_xy(X, y)
    labels = np.unique(y)
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise InputError("labels must be 0/1")
    if len(labels) == 1:
        return ConstantClassifier(int(labels[0]))
    return make_classifier(kind, **hyper).fit(X, y)


@dataclass
class Committee:
    """Ensemble of fitted classifiers with DIS/POS-style region queries."""

    members: list

    def member_predictions(self, X) -> np.ndarray:
        """``(n_members, n)`` matrix of hard 0/1 predictions."""
        X = np.atleast_2d(np.asarray(X, float))
        out = np.empty((len(self.members), len(X)), dtype=int)
        logit = [j for j, m in enumerate(self.members) if isinstance(m, LogisticRegression)]
        if logit:
            ms = [self.members[j] for j in logit]
            Xs = (X[None] - np.stack([m.mean_ for m in ms])[:, None]) / \
                np.stack([m.std_ for m in ms])[:, None]
            C = np.stack([m.coef_ for m in ms])
            Z = np.einsum("knp,kp->kn", Xs, C[:, :-1]) + C[:, -1:]
            out[logit] = expit(Z) >= 0.5
        for j, m in enumerate(self.members):
            if j not in logit:
                out[j] = m.predict(X)
        return out

    def predict_proba(self, X):
        return np.mean([m.predict_proba(X) for m in self.members], axis=0)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)

    def enroll_mask(self, X):
        """True where at least one member predicts 1."""
        return self.member_predictions(X).any(axis=0)

    def dis_mask(self, X):
        P = self.member_predictions(X)
        return P.any(axis=0) & ~P.all(axis=0)

    def pos_mask(self, X):
        return self.member_predictions(X).all(axis=0)

    # region interface shared with the regression baselines
    def region_mask(self, X):
        return self.enroll_mask(X)

    def predict_region(self, X):
        return self.predict(X).astype(bool)


def bootstrap_committee(X, y, kind: str, n_committee: int, rng: np.random.Generator,
                        **hyper) -> Committee:
    """Fit ``n_committee`` members, each on a with-replacement resample of the data."""
    if n_committee < 1:
        raise InputError("n_committee must be >= 1")
    X, y = _check_xy(X, y)
    n = len(y)
    idx = rng.integers(0, n, size=(n_committee, n))
    if kind != "logreg":
        return Committee([fit(kind, X[i], y[i], **hyper) for i in idx])
    counts = np.stack([np.bincount(i, minlength=n) for i in idx]).astype(float)
    pos = counts @ y
    single = (pos == 0) | (pos == counts.sum(axis=1))
    members: list = [None] * n_committee
    for j in np.flatnonzero(single):
        members[j] = ConstantClassifier(int(pos[j] > 0))
    live = np.flatnonzero(~single)
    if live.size:
        opts = {k: v for k, v in hyper.items() if k in ("l2", "solver", "step", "epochs")}
        W, mean, std, _ = fit_logistic_batch(X, y, counts[live], **opts)
        for r, j in enumerate(live):
            members[j] = LogisticRegression(**opts)._set(W[r], mean[r], std[r])
    return Committee(members)


def enrollment_set(members, pool) -> np.ndarray:
    """Indices of pool points on which at least one member predicts 1."""
    com = members if isinstance(members, Committee) else Committee(list(members))
    if not com.members:
        raise InputError("committee has no members")
    return np.flatnonzero(com.enroll_mask(pool))


@dataclass
class CommitteeState:
    """Bookkeeping of the practical design: committee, labeled set, pool, enrollment."""

    members: list
    q_x: np.ndarray
    q_z: np.ndarray
    pool: np.ndarray
    available: np.ndarray
    enrollment: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def check(self):
        assert set(self.enrollment.tolist()) <= set(np.flatnonzero(self.available).tolist())
