"""Comparison classifiers: NN, CM, LRC, CRC, SRC and TPTSSR.

All of them follow :class:`pvrc.base.Classifier`. Class-specific methods (NN,
CM, LRC) keep one model per class; the pooled methods (CRC, SRC, TPTSSR)
keep the Gram matrix of all prototypes and update only the blocks of a
retrained class.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import kernels
from .base import Classifier, ClassifierDecision, as_rows

#: condition estimate above which a Gram matrix gets the ridge term
RIDGE_COND = 1e12
#: ridge added to a singular Gram matrix
RIDGE = 0.01


@dataclass(frozen=True)
class ClassMatrix:
    """Prototypes of one class stacked as the columns of a ``(q, N_c)`` matrix."""

    class_id: int
    columns: np.ndarray

    @classmethod
    def from_rows(cls, class_id, rows) -> "ClassMatrix":
        return cls(int(class_id), np.ascontiguousarray(as_rows(rows).T))


@dataclass(frozen=True)
class PooledMatrix:
    """All prototypes side by side, classes in ascending id order."""

    columns: np.ndarray
    class_ids: tuple[int, ...]
    boundaries: tuple[tuple[int, int], ...]

    @classmethod
    def from_classes(cls, classes: Mapping[int, object]) -> "PooledMatrix":
        ids = sorted(int(c) for c in classes)
        blocks = [as_rows(classes[c]) for c in ids]
        bounds, start = [], 0
        for b in blocks:
            bounds.append((start, start + b.shape[0]))
            start += b.shape[0]
        return cls(np.ascontiguousarray(np.vstack(blocks).T), tuple(ids), tuple(bounds))

    def as_classes(self) -> dict[int, np.ndarray]:
        return {c: self.columns[:, lo:hi].T for c, (lo, hi) in zip(self.class_ids, self.boundaries)}


@dataclass(frozen=True)
class GramFactor:
    """Cholesky (or LU) factor of a Gram matrix, possibly ridge-loaded."""

    factor: tuple
    kind: str
    ridge: float
    cond_estimate: float

    def solve(self, rhs):
        if self.kind == "cholesky":
            return scipy.linalg.cho_solve(self.factor, rhs)
        return scipy.linalg.lu_solve(self.factor, rhs)


def _cho_cond(gram):
    """Cholesky factor and 1-norm condition estimate, or ``(None, inf)``."""
    try:
        c, lower = scipy.linalg.cho_factor(gram, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        return None, math.inf
    anorm = float(np.abs(gram).sum(axis=0).max())
    rcond, info = lapack.dpocon(c, anorm)
    if info != 0 or rcond <= 0.0:
        return (c, lower), math.inf
    return (c, lower), 1.0 / rcond


def factor_gram(gram, ridge: float | None = None, cond_limit: float = RIDGE_COND) -> GramFactor:
    """Factor ``gram``; load it with ``RIDGE * I`` when it is numerically singular.

    With ``ridge`` given the loading is applied unconditionally.
    """
    gram = np.asarray(gram, dtype=np.float64)
    n = gram.shape[0]
    applied = 0.0
    if ridge is None:
        fac, cond = _cho_cond(gram)
        if fac is not None and cond <= cond_limit:
            return GramFactor(fac, "cholesky", 0.0, cond)
        applied = RIDGE
    else:
        applied = float(ridge)
    loaded = gram + applied * np.eye(n)
    fac, cond = _cho_cond(loaded)
    if fac is not None:
        return GramFactor(fac, "cholesky", applied, cond)
    return GramFactor(scipy.linalg.lu_factor(loaded), "lu", applied, cond)


def _decide(clf: Classifier, test) -> ClassifierDecision:
    return clf.decide(np.asarray(test, dtype=np.float64))


# ---------------------------------------------------------------------------
# class-specific methods


class NearestNeighbor(Classifier):
    """Score of a class: distance to its closest prototype."""

    name = "nn"

    def _finalize(self, changed=None):
        blocks = [self._models[c] for c in self.class_ids]
        self._protos = np.ascontiguousarray(np.vstack(blocks))
        counts = [b.shape[0] for b in blocks]
        self._starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)

    def _scores(self, x):
        return np.sqrt(kernels.class_min_sq_dists(x, self._protos, self._starts)), {}


class ClassMean(Classifier):
    """Score of a class: distance to the mean of its prototypes."""

    name = "cm"

    def _fit_class(self, class_id, rows):
        return rows.mean(axis=0)

    def _finalize(self, changed=None):
        self._means = np.ascontiguousarray(np.vstack([self._models[c] for c in self.class_ids]))

    def _scores(self, x):
        return np.sqrt(kernels.sq_dists(x, self._means)), {}


def lrc_distance(test, cls: ClassMatrix) -> float:
    """Distance from ``test`` to its least-squares projection on the class span.

    The Gram matrix is formed for every query, as in plain linear regression
    classification; it gets ``0.01 I`` added when numerically singular.
    """
    X = np.asarray(cls.columns, dtype=np.float64)
    x = np.asarray(test, dtype=np.float64).ravel()
    if X.shape[0] != x.shape[0]:
        raise ValueError(f"test vector has dimension {x.shape[0]}, class has {X.shape[0]}")
    fac = factor_gram(X.T @ X)
    beta = fac.solve(X.T @ x)
    return float(np.linalg.norm(x - X @ beta))


class LinearRegression(Classifier):
    name = "lrc"

    def _fit_class(self, class_id, rows):
        return ClassMatrix(class_id, np.ascontiguousarray(rows.T))

    def _scores(self, x):
        return np.array([lrc_distance(x, self._models[c]) for c in self.class_ids]), {}


# ---------------------------------------------------------------------------
# pooled methods


class _Pooled(Classifier):
    """Keeps stacked prototypes ``X`` (rows) and their Gram matrix ``X X^T``."""

    def _finalize(self, changed=None):
        blocks = [self._models[c] for c in self.class_ids]
        counts = np.array([b.shape[0] for b in blocks], dtype=np.intp)
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)
        rows = np.ascontiguousarray(np.vstack(blocks))
        old = getattr(self, "_gram", None)
        if changed is None or old is None or list(self._gram_ids) != self.class_ids:
            gram = rows @ rows.T
        else:
            gram = self._update_gram(old, changed, rows, starts)
        self._rows, self._starts, self._counts = rows, starts, counts
        self._gram, self._gram_ids = gram, tuple(self.class_ids)
        self._owner = np.repeat(np.arange(len(self.class_ids)), counts)
        self._prepare()

    def _update_gram(self, old, changed, rows, starts):
        k = self.class_ids.index(changed)
        old_starts = self._starts
        keep_old, keep_new = [], []
        for c in range(len(self.class_ids)):
            if c == k:
                continue
            keep_old.append(np.arange(old_starts[c], old_starts[c + 1]))
            keep_new.append(np.arange(starts[c], starts[c + 1]))
        keep_old = np.concatenate(keep_old) if keep_old else np.empty(0, np.intp)
        keep_new = np.concatenate(keep_new) if keep_new else np.empty(0, np.intp)
        n = rows.shape[0]
        gram = np.empty((n, n))
        gram[np.ix_(keep_new, keep_new)] = old[np.ix_(keep_old, keep_old)]
        lo, hi = starts[k], starts[k + 1]
        cross = rows @ rows[lo:hi].T
        gram[:, lo:hi] = cross
        gram[lo:hi, :] = cross.T
        return gram

    def _prepare(self):
        pass

    def pooled(self) -> PooledMatrix:
        bounds = tuple((int(self._starts[i]), int(self._starts[i + 1])) for i in range(len(self.class_ids)))
        return PooledMatrix(np.ascontiguousarray(self._rows.T), tuple(self.class_ids), bounds)


class CollaborativeRepresentation(_Pooled):
    """Regularized-residual rule ``|x - X_c b_c| / |b_c|`` over a pooled solve."""

    name = "crc"

    def _prepare(self):
        self._factor = factor_gram(self._gram)

    def coefficients(self, x) -> np.ndarray:
        return self._factor.solve(self._rows @ x)

    def _scores(self, x):
        beta = self.coefficients(x)
        scores = np.empty(len(self.class_ids))
        any_nonzero = False
        for i in range(len(self.class_ids)):
            lo, hi = self._starts[i], self._starts[i + 1]
            b = beta[lo:hi]
            norm = float(np.linalg.norm(b))
            if norm == 0.0:
                scores[i] = math.inf
                continue
            any_nonzero = True
            scores[i] = np.linalg.norm(x - b @ self._rows[lo:hi]) / norm
        if not any_nonzero:
            raise ValueError("CRC coefficients are zero for every class")
        return scores, {"ridge": self._factor.ridge}


@dataclass(frozen=True)
class SrcParams:
    """Iterative shrinkage settings. ``lam=None`` uses ``lam_scale * |X^T x|_inf``."""

    lam: float | None = None
    lam_scale: float = 1e-3
    tol: float = 1e-8
    max_iter: int = 5000


@dataclass(frozen=True)
class L1Solution:
    coef: np.ndarray
    objective: float
    iterations: int
    converged: bool
    lam: float


def l1_penalized_gram(gram, xty, yty, lam, *, tol=1e-8, max_iter=5000) -> L1Solution:
    """Minimize ``0.5 |X g - y|^2 + lam |g|_1`` given ``X^T X``, ``X^T y``, ``y^T y``.

    Accelerated proximal gradient with backtracking on the step size; stops
    when the relative change of the objective drops below ``tol``. The best
    iterate seen is returned either way.
    """
    gram = np.asarray(gram, dtype=np.float64)
    xty = np.asarray(xty, dtype=np.float64)
    n = xty.shape[0]

    def smooth(g):
        gg = gram @ g
        return 0.5 * float(g @ gg) - float(g @ xty) + 0.5 * yty, gg - xty

    def objective(g):
        return smooth(g)[0] + lam * float(np.abs(g).sum())

    g = np.zeros(n)
    z = g.copy()
    t = 1.0
    step_l = max(float(np.max(np.diag(gram))) if n else 1.0, 1e-300)
    f_prev = objective(g)
    best, best_f = g.copy(), f_prev
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fz, grad = smooth(z)
        while True:
            u = z - grad / step_l
            g_new = np.sign(u) * np.maximum(np.abs(u) - lam / step_l, 0.0)
            diff = g_new - z
            f_new_smooth = smooth(g_new)[0]
            bound = fz + float(grad @ diff) + 0.5 * step_l * float(diff @ diff)
            if f_new_smooth <= bound + 1e-12 * max(abs(bound), 1.0):
                break
            step_l *= 2.0
        f_new = f_new_smooth + lam * float(np.abs(g_new).sum())
        if f_new > f_prev:
            # restart momentum when the objective goes up
            t = 1.0
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = g_new + ((t - 1.0) / t_new) * (g_new - g)
        g, t = g_new, t_new
        if f_new < best_f:
            best, best_f = g.copy(), f_new
        if abs(f_prev - f_new) <= tol * max(abs(f_new), 1e-300):
            converged = True
            break
        f_prev = f_new
    return L1Solution(best, best_f, it, converged, float(lam))


class SparseRepresentation(_Pooled):
    """L1-regularized representation over unit-norm pooled columns."""

    name = "src"

    def __init__(self, params: SrcParams | None = None):
        super().__init__()
        self.solver_params = params or SrcParams()

    def params(self):
        p = self.solver_params
        return {"lam": p.lam, "lam_scale": p.lam_scale, "tol": p.tol, "max_iter": p.max_iter}

    def _prepare(self):
        norms = np.sqrt(np.maximum(np.diag(self._gram), 0.0))
        inv = np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 0.0)
        self._inv_norms = inv
        self._ngram = inv[:, None] * self._gram * inv[None, :]

    def solve(self, x) -> L1Solution:
        xty = (self._rows @ x) * self._inv_norms
        p = self.solver_params
        lam = p.lam if p.lam is not None else p.lam_scale * float(np.max(np.abs(xty)))
        return l1_penalized_gram(self._ngram, xty, float(x @ x), lam, tol=p.tol, max_iter=p.max_iter)

    def _scores(self, x):
        sol = self.solve(x)
        coef = sol.coef * self._inv_norms
        scores = np.empty(len(self.class_ids))
        for i in range(len(self.class_ids)):
            lo, hi = self._starts[i], self._starts[i + 1]
            scores[i] = np.linalg.norm(x - coef[lo:hi] @ self._rows[lo:hi])
        flags = {"converged": sol.converged, "iterations": sol.iterations, "lam": sol.lam}
        return scores, flags


class TwoPhaseSparse(_Pooled):
    """Two-phase test sample representation.

    Phase 1 represents the test vector over every prototype with a ridge
    solve and keeps the ``k`` prototypes whose single-term reconstruction
    ``a_i x_i`` lies closest to it. Phase 2 repeats the ridge solve over the
    kept prototypes and scores each class by the residual of its share of the
    reconstruction. Classes without a kept prototype score ``+inf``.
    """

    name = "tptssr"

    def __init__(self, k: int = 10, ridge: float = RIDGE):
        super().__init__()
        if int(k) != k or k < 1:
            raise ValueError(f"k must be a positive integer, got {k!r}")
        self.k = int(k)
        self.ridge = float(ridge)

    def params(self):
        return {"k": self.k, "ridge": self.ridge}

    def _prepare(self):
        if self.k > self._rows.shape[0]:
            raise ValueError(
                f"k={self.k} exceeds the {self._rows.shape[0]} available prototypes"
            )
        self._factor = factor_gram(self._gram, ridge=self.ridge)

    def phase_one(self, x) -> np.ndarray:
        """Indices of the ``k`` kept prototypes, best first (ties by index)."""
        a = self._factor.solve(self._rows @ x)
        # |x - a_i x_i|^2 = |x|^2 - 2 a_i x.x_i + a_i^2 |x_i|^2
        xx = self._rows @ x
        dev = float(x @ x) - 2.0 * a * xx + a * a * np.diag(self._gram)
        return np.argsort(dev, kind="stable")[: self.k]

    def _scores(self, x):
        kept = np.sort(self.phase_one(x))
        sub = self._gram[np.ix_(kept, kept)]
        beta = factor_gram(sub, ridge=self.ridge).solve(self._rows[kept] @ x)
        owner = self._owner[kept]
        scores = np.full(len(self.class_ids), math.inf)
        for c in np.unique(owner):
            sel = owner == c
            scores[c] = np.linalg.norm(x - beta[sel] @ self._rows[kept[sel]])
        return scores, {}


# ---------------------------------------------------------------------------
# functional forms


def nn_classify(test, classes: Mapping[int, object]) -> ClassifierDecision:
    return _decide(NearestNeighbor().fit(classes), test)


def cm_classify(test, classes: Mapping[int, object]) -> ClassifierDecision:
    return _decide(ClassMean().fit(classes), test)


def lrc_classify(test, classes: Mapping[int, object]) -> ClassifierDecision:
    return _decide(LinearRegression().fit(classes), test)


def _pooled_classes(pooled):
    return pooled.as_classes() if isinstance(pooled, PooledMatrix) else pooled


def crc_classify(test, pooled) -> ClassifierDecision:
    return _decide(CollaborativeRepresentation().fit(_pooled_classes(pooled)), test)


def src_classify(test, pooled, solver_params: SrcParams | None = None) -> ClassifierDecision:
    return _decide(SparseRepresentation(solver_params).fit(_pooled_classes(pooled)), test)


def tptssr_classify(test, pooled, k: int) -> ClassifierDecision:
    return _decide(TwoPhaseSparse(k).fit(_pooled_classes(pooled)), test)
