"""Polyhedron volume ratio classification and comparison baselines."""

from .base import ClassifierDecision
from .baselines import (
    ClassMean,
    CollaborativeRepresentation,
    LinearRegression,
    NearestNeighbor,
    SparseRepresentation,
    TwoPhaseSparse,
)
from .classifier import PvrcClassifier, classify, naive_ratio, score, train_class

__version__ = "0.1.0"

__all__ = [
    "ClassMean",
    "ClassifierDecision",
    "CollaborativeRepresentation",
    "LinearRegression",
    "NearestNeighbor",
    "PvrcClassifier",
    "SparseRepresentation",
    "TwoPhaseSparse",
    "classify",
    "naive_ratio",
    "score",
    "train_class",
]
