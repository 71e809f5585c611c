"""Polyhedron volume ratio classifier.

Each class keeps the Cayley-Menger matrix of its prototypes and an inverse of
it. A test vector is scored from its squared distances to the prototypes
alone: with ``B = [d_1 ... d_k 1]`` the quantity ``xi = |B Q^-1 B^T|`` is the
Schur complement of the prototype block in the Cayley-Menger matrix of
test plus prototypes, so that

    (v_with_test / v_prototypes)^2 = xi / (2 k^2)

for ``k`` prototypes. ``sqrt(xi / 2)`` is the distance from the test vector
to the affine hull of the prototypes.

The bordered matrix mixes squared distances with a border of ones, which
makes its raw condition number grow with the square of the feature scale.
Every matrix is therefore balanced as ``T Q T`` with
``T = diag(s^-1/2, ..., s^-1/2, s^1/2)`` and ``s`` the mean prototype squared
distance before it is tested, regularized or inverted.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import geometry, kernels
from .base import Classifier, argmin_class, as_rows

#: balanced-matrix condition estimate above which the diagonal is loaded
REGULARIZE_COND = 1e12
#: loading is this fraction of ``||Q||_F / size``
REGULARIZE_RTOL = 1e-8

NORMALIZATIONS = ("derived", "paper")


class DegenerateClassError(ValueError):
    """A class whose prototypes cannot support a volume ratio."""


@dataclass(frozen=True, eq=False)
class CMSolver:
    """Inverse of a scale-balanced Cayley-Menger matrix.

    ``balanced_inverse`` inverts ``T Q T + eps I``; the unbalanced inverse is
    ``T balanced_inverse T``.
    """

    scale: float
    balanced_inverse: np.ndarray

    @property
    def size(self) -> int:
        return self.balanced_inverse.shape[0]

    def _t(self) -> np.ndarray:
        t = np.full(self.size, 1.0 / math.sqrt(self.scale))
        t[-1] = math.sqrt(self.scale)
        return t

    def inverse(self) -> np.ndarray:
        t = self._t()
        return t[:, None] * self.balanced_inverse * t[None, :]

    def quad_form(self, border) -> float:
        """``border @ Q^-1 @ border`` for a border vector ending in 1."""
        b = np.asarray(border, dtype=np.float64) / self.scale
        b[-1] = 1.0
        return float(b @ (self.balanced_inverse @ b)) * self.scale


@dataclass(frozen=True, eq=False)
class ClassModel:
    class_id: int
    prototypes: np.ndarray
    q_matrix: np.ndarray
    q_solver: CMSolver
    regularization_applied: float
    condition_estimate: float

    @property
    def n_prototypes(self) -> int:
        return self.prototypes.shape[0]

    @property
    def n_points(self) -> int:
        """Points of the test-plus-prototypes simplex."""
        return self.prototypes.shape[0] + 1

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def regularized(self) -> bool:
        return self.regularization_applied > 0.0

    def effective_matrix(self) -> np.ndarray:
        """The matrix ``q_solver`` actually inverts, in unbalanced units."""
        t = self.q_solver._t()
        eps = self.regularization_applied
        return self.q_matrix + eps * np.diag(1.0 / t**2)

    def inverse_residual(self) -> float:
        """Relative Frobenius error of ``M M^-1 - I`` for the solved matrix."""
        t = self.q_solver._t()
        balanced = t[:, None] * self.effective_matrix() * t[None, :]
        eye = np.eye(self.q_solver.size)
        err = balanced @ self.q_solver.balanced_inverse - eye
        return float(np.linalg.norm(err) / np.linalg.norm(eye))


@dataclass(frozen=True)
class PvrcScore:
    class_id: int
    xi: float
    rho_sq: float

    @property
    def rho(self) -> float:
        return math.sqrt(self.rho_sq)


def _balance_scale(sq_dist: np.ndarray) -> float:
    n = sq_dist.shape[0]
    s = float(sq_dist[np.triu_indices(n, 1)].mean())
    return s if s > 0.0 and math.isfinite(s) else 1.0


def train_class(class_id: int, prototypes: Sequence) -> ClassModel:
    """Build and invert the Cayley-Menger matrix of one class.

    Raises
    ------
    DegenerateClassError
        If fewer than two prototypes are given, or the matrix stays singular
        after diagonal loading.
    """
    try:
        protos = geometry.as_point_set(as_rows(prototypes))
    except ValueError as exc:
        raise DegenerateClassError(f"class {class_id}: {exc}") from exc
    sq = geometry.pairwise_sq_dist(protos)
    q_matrix = geometry.cm_matrix(sq)
    q_matrix.flags.writeable = False
    scale = _balance_scale(sq)
    size = q_matrix.shape[0]
    t = np.full(size, 1.0 / math.sqrt(scale))
    t[-1] = math.sqrt(scale)
    balanced = t[:, None] * q_matrix * t[None, :]

    cond = float(np.linalg.cond(balanced))
    eps = 0.0
    if not math.isfinite(cond) or cond > REGULARIZE_COND:
        eps = REGULARIZE_RTOL * float(np.linalg.norm(balanced)) / size
        balanced = balanced + eps * np.eye(size)
        after = float(np.linalg.cond(balanced))
        if not math.isfinite(after) or after > REGULARIZE_COND:
            raise DegenerateClassError(
                f"class {class_id}: Cayley-Menger matrix is singular even after "
                f"regularization (condition estimate {after:.3g})"
            )
    inv = np.linalg.inv(balanced)
    # the matrix is symmetric; keep its inverse exactly symmetric too
    inv = np.ascontiguousarray(0.5 * (inv + inv.T))
    inv.flags.writeable = False
    return ClassModel(
        class_id=int(class_id),
        prototypes=protos,
        q_matrix=q_matrix,
        q_solver=CMSolver(scale, inv),
        regularization_applied=eps,
        condition_estimate=cond,
    )


def rho_sq_from_xi(xi: float, n_prototypes: int) -> float:
    return xi / (2.0 * n_prototypes**2)


def published_size_factor(n_prototypes: int) -> float:
    """Size correction ``4 (n-1)^4`` for unequal classes, as published."""
    return 4.0 * n_prototypes**4


def score(test, model: ClassModel) -> PvrcScore:
    """Volume-ratio score of ``test`` against one class model."""
    x = np.ascontiguousarray(test, dtype=np.float64).ravel()
    if x.shape[0] != model.dim:
        raise ValueError(f"test vector has dimension {x.shape[0]}, class has {model.dim}")
    xi = float(
        kernels.pvrc_xi(
            x,
            np.ascontiguousarray(model.prototypes),
            np.array([0, model.n_prototypes], dtype=np.intp),
            model.q_solver.balanced_inverse.ravel(),
            np.zeros(1, dtype=np.intp),
            np.array([model.q_solver.scale]),
            np.array([not model.regularized], dtype=np.uint8),
        )[0]
    )
    return PvrcScore(model.class_id, xi, rho_sq_from_xi(xi, model.n_prototypes))


def naive_ratio(test, prototypes) -> float:
    """``v(test + prototypes) / v(prototypes)`` from two full determinants."""
    protos = as_rows(prototypes)
    x = np.asarray(test, dtype=np.float64).ravel()
    base = geometry.simplex_volume_info(protos)
    if base.degenerate:
        raise DegenerateClassError("prototypes span a degenerate simplex (zero base volume)")
    top = geometry.simplex_sq_volume(np.vstack([x[None, :], protos]))
    return math.sqrt(top / base.sq_volume)


def comparable_scores(xis, counts, normalization: str = "derived") -> np.ndarray:
    """Scores that can be compared across classes.

    With equal prototype counts the raw ``xi`` values are returned. Otherwise
    ``derived`` divides by ``2 k^2`` (the squared volume ratio) and ``paper``
    multiplies by ``4 k^4``.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}")
    xis = np.asarray(xis, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 0 or np.all(counts == counts[0]):
        return xis
    if normalization == "derived":
        return xis / (2.0 * counts**2)
    return xis * published_size_factor(counts)


def classify(test, models: Sequence[ClassModel], normalization: str = "derived") -> int:
    """Class with the smallest volume ratio; ties go to the lowest class id."""
    if not models:
        raise ValueError("no class models given")
    ordered = sorted(models, key=lambda m: m.class_id)
    scores = [score(test, m) for m in ordered]
    comp = comparable_scores(
        [s.xi for s in scores], [m.n_prototypes for m in ordered], normalization
    )
    return argmin_class([m.class_id for m in ordered], comp)


class PvrcClassifier(Classifier):
    """Batch PVRC over all classes with prototypes packed for the kernel."""

    name = "pvrc"
    min_prototypes = 2

    def __init__(self, normalization: str = "derived"):
        super().__init__()
        if normalization not in NORMALIZATIONS:
            raise ValueError(
                f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}"
            )
        self.normalization = normalization

    def params(self):
        return {"normalization": self.normalization}

    def models(self) -> list[ClassModel]:
        return [self._models[c] for c in self.class_ids]

    def _fit_class(self, class_id, rows):
        return train_class(class_id, rows)

    def _finalize(self, changed=None):
        models = self.models()
        counts = np.array([m.n_prototypes for m in models], dtype=np.intp)
        self._counts = counts
        self._starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.intp)
        self._protos = np.ascontiguousarray(np.vstack([m.prototypes for m in models]))
        sizes = (counts + 1) ** 2
        self._qinv_starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
        self._qinv = np.concatenate([m.q_solver.balanced_inverse.ravel() for m in models])
        self._scales = np.array([m.q_solver.scale for m in models])
        self._shift = np.array([not m.regularized for m in models], dtype=np.uint8)
        self._flags = {
            "regularized_classes": int(sum(m.regularized for m in models)),
            "prototypes_exceed_dim": bool(np.any(counts > self.dim)),
        }

    def xi(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64).ravel()
        return kernels.pvrc_xi(
            x, self._protos, self._starts, self._qinv, self._qinv_starts, self._scales, self._shift
        )

    def _scores(self, x):
        return comparable_scores(self.xi(x), self._counts, self.normalization), self._flags
