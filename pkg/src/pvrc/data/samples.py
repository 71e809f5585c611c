from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Sample:
    """One labeled feature vector and where it came from."""

    class_id: int
    features: np.ndarray
    source_id: str


def group_by_class(samples: Iterable[Sample]) -> dict[int, list[Sample]]:
    """Samples per class, classes ascending, listed order kept within a class."""
    groups: dict[int, list[Sample]] = {}
    for s in samples:
        groups.setdefault(int(s.class_id), []).append(s)
    return {c: groups[c] for c in sorted(groups)}


def class_arrays(samples: Iterable[Sample]) -> dict[int, np.ndarray]:
    return {c: np.vstack([s.features for s in group]) for c, group in group_by_class(samples).items()}
