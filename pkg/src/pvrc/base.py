"""Common interface shared by PVRC and the comparison classifiers."""

from __future__ import annotations

import copy
import time
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ClassifierDecision:
    """Outcome of one query.

    ``per_class_scores`` is ordered by ascending class id; lower is better and
    ``chosen_class`` attains the minimum (ties go to the lowest id).
    """

    chosen_class: int
    per_class_scores: tuple[tuple[int, float], ...]
    timing_ns: int = 0
    flags: Mapping[str, object] = field(default_factory=dict)

    def score_of(self, class_id: int) -> float:
        for cid, s in self.per_class_scores:
            if cid == class_id:
                return s
        raise KeyError(class_id)


def argmin_class(class_ids, scores) -> int:
    """Lowest-scoring class; NaN scores never win and ties go to the first id."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("no classes to choose from")
    safe = np.where(np.isnan(scores), np.inf, scores)
    return int(class_ids[int(np.argmin(safe))])


def as_rows(prototypes, dim: int | None = None) -> np.ndarray:
    """Stack prototype vectors as rows of a C-contiguous float64 array."""
    arr = np.ascontiguousarray(np.atleast_2d(np.asarray(prototypes, dtype=np.float64)))
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("a class needs at least one prototype vector")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"prototype dimension {arr.shape[1]} does not match {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("prototypes contain non-finite values")
    return arr


class Classifier:
    """Base class: per-class models keyed by integer class id.

    Subclasses implement :meth:`_fit_class` (build one class's model),
    optionally :meth:`_finalize` (derived state spanning all classes), and
    :meth:`_scores` (per-class scores of one test vector). Instances are not
    mutated after :meth:`fit`; :meth:`with_class` returns a modified copy.
    """

    name = "base"
    #: smallest prototype count per class the classifier accepts
    min_prototypes = 1

    def __init__(self):
        self.class_ids: list[int] = []
        self.dim: int | None = None
        self._models: dict[int, object] = {}

    def params(self) -> dict:
        return {}

    def fit(self, classes: Mapping[int, object]) -> "Classifier":
        if not classes:
            raise ValueError("no classes given")
        rows = {int(c): as_rows(p) for c, p in classes.items()}
        dims = {r.shape[1] for r in rows.values()}
        if len(dims) != 1:
            raise ValueError(f"classes have mismatched dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        self.class_ids = sorted(rows)
        self._models = {}
        for cid in self.class_ids:
            self._check_size(cid, rows[cid])
            self._models[cid] = self._fit_class(cid, rows[cid])
        self._finalize()
        return self

    def with_class(self, class_id: int, prototypes) -> "Classifier":
        """Copy of this classifier with one class retrained on ``prototypes``."""
        if self.dim is None:
            raise RuntimeError("classifier is not fitted")
        rows = as_rows(prototypes, self.dim)
        class_id = int(class_id)
        self._check_size(class_id, rows)
        other = copy.copy(self)
        other._models = dict(self._models)
        other._models[class_id] = self._fit_class(class_id, rows)
        if class_id not in self.class_ids:
            other.class_ids = sorted(self.class_ids + [class_id])
        other._finalize(changed=class_id)
        return other

    def decide(self, x) -> ClassifierDecision:
        if self.dim is None:
            raise RuntimeError("classifier is not fitted")
        x = np.ascontiguousarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"test vector has dimension {x.shape[0]}, expected {self.dim}")
        t0 = time.perf_counter_ns()
        scores, flags = self._scores(x)
        chosen = argmin_class(self.class_ids, scores)
        elapsed = time.perf_counter_ns() - t0
        pairs = tuple((cid, float(s)) for cid, s in zip(self.class_ids, scores))
        return ClassifierDecision(chosen, pairs, elapsed, flags)

    def predict(self, x) -> int:
        return self.decide(x).chosen_class

    def _check_size(self, class_id, rows):
        if rows.shape[0] < self.min_prototypes:
            raise ValueError(
                f"{self.name} needs at least {self.min_prototypes} prototypes per class; "
                f"class {class_id} has {rows.shape[0]}"
            )

    def _fit_class(self, class_id: int, rows: np.ndarray):
        return rows

    def _finalize(self, changed: int | None = None) -> None:
        """Rebuild derived state; ``changed`` names the only retrained class."""

    def _scores(self, x: np.ndarray):
        raise NotImplementedError
