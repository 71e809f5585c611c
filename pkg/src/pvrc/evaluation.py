"""Leave-one-out and first-N protocols, recognition rates and query timing."""

from __future__ import annotations

import csv
import io
import json
import os
import platform
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .base import Classifier, ClassifierDecision
from .baselines import (
    ClassMean,
    CollaborativeRepresentation,
    LinearRegression,
    NearestNeighbor,
    SparseRepresentation,
    SrcParams,
    TwoPhaseSparse,
)
from .classifier import PvrcClassifier
from .data.samples import Sample, class_arrays

LEAVE_ONE_OUT = "leave_one_out"
FIRST_N = "first_n"

#: untimed queries run before timing starts
WARMUP_QUERIES = 1
#: serialized timed queries when decisions are computed in parallel
MIN_TIMED_QUERIES = 30

CSV_FIELDS = (
    "dataset",
    "protocol",
    "n",
    "classifier",
    "params",
    "recognition_rate",
    "correct",
    "total",
    "time_mean_s",
    "time_median_s",
    "time_p95_s",
    "timed_queries",
    "flags",
)


class EvaluationError(ValueError):
    """Dataset or protocol cannot be evaluated as requested."""


@dataclass(frozen=True)
class Protocol:
    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind not in (LEAVE_ONE_OUT, FIRST_N):
            raise EvaluationError(f"unknown protocol {self.kind!r}")
        if self.kind == FIRST_N and (self.n is None or self.n < 2):
            raise EvaluationError(
                f"first_n needs n >= 2 prototypes per class (a volume needs two points), got {self.n}"
            )

    @property
    def label(self) -> str:
        return "leave-one-out" if self.kind == LEAVE_ONE_OUT else f"first-{self.n}"


def _build_src(params):
    keys = {"lam", "lam_scale", "tol", "max_iter"}
    unknown = set(params) - keys
    if unknown:
        raise EvaluationError(f"unknown src parameters: {sorted(unknown)}")
    return SparseRepresentation(SrcParams(**params))


CLASSIFIERS = {
    "nn": lambda p: NearestNeighbor(**p),
    "cm": lambda p: ClassMean(**p),
    "lrc": lambda p: LinearRegression(**p),
    "crc": lambda p: CollaborativeRepresentation(**p),
    "src": _build_src,
    "tptssr": lambda p: TwoPhaseSparse(**p),
    "pvrc": lambda p: PvrcClassifier(**p),
}


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    params: Mapping[str, object] = field(default_factory=dict)

    def build(self) -> Classifier:
        if self.name not in CLASSIFIERS:
            raise EvaluationError(
                f"unknown classifier {self.name!r}; valid names: {', '.join(CLASSIFIERS)}"
            )
        try:
            return CLASSIFIERS[self.name](dict(self.params))
        except TypeError as exc:
            raise EvaluationError(f"bad parameters for {self.name}: {exc}") from None


@dataclass(frozen=True)
class TimingStats:
    mean: float
    median: float
    p95: float
    count: int

    @classmethod
    def from_ns(cls, values: Sequence[int]) -> "TimingStats":
        if not values:
            return cls(float("nan"), float("nan"), float("nan"), 0)
        s = np.asarray(values, dtype=np.float64) * 1e-9
        return cls(float(s.mean()), float(np.median(s)), float(np.percentile(s, 95)), len(values))


@dataclass
class ClassifierResult:
    name: str
    params: dict
    recognition_rate: float
    correct: int
    total: int
    timing: TimingStats
    flags: dict
    predictions: list[int]
    confusion: list[tuple[int, int, int]]


@dataclass
class EvalReport:
    dataset: str
    protocol: Protocol
    results: list[ClassifierResult]
    environment: str
    seed: int | None = None

    def result(self, name: str) -> ClassifierResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "protocol": {"kind": self.protocol.kind, "n": self.protocol.n},
            "environment": self.environment,
            "seed": self.seed,
            "classifiers": [
                {
                    "name": r.name,
                    "params": r.params,
                    "recognition_rate": r.recognition_rate,
                    "correct": r.correct,
                    "total": r.total,
                    "timing": asdict(r.timing),
                    "flags": r.flags,
                    "predictions": r.predictions,
                    "confusion": [list(t) for t in r.confusion],
                }
                for r in self.results
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.results:
            w.writerow(
                {
                    "dataset": self.dataset,
                    "protocol": self.protocol.kind,
                    "n": "" if self.protocol.n is None else self.protocol.n,
                    "classifier": r.name,
                    "params": json.dumps(r.params, sort_keys=True),
                    "recognition_rate": f"{r.recognition_rate:.4f}",
                    "correct": r.correct,
                    "total": r.total,
                    "time_mean_s": f"{r.timing.mean:.6g}",
                    "time_median_s": f"{r.timing.median:.6g}",
                    "time_p95_s": f"{r.timing.p95:.6g}",
                    "timed_queries": r.timing.count,
                    "flags": json.dumps(r.flags, sort_keys=True),
                }
            )
        return buf.getvalue()

    def table(self) -> str:
        rr_head = "RR" if self.protocol.kind == LEAVE_ONE_OUT else f"RR ({self.protocol.n})"
        lines = [
            f"{self.dataset} - {self.protocol.label}",
            f"{'Classifier':<12}{rr_head:>10}{'s/query':>12}{'p95 s':>12}",
        ]
        for r in self.results:
            lines.append(
                f"{r.name.upper():<12}{r.recognition_rate:>9.2f}%"
                f"{r.timing.mean:>12.5f}{r.timing.p95:>12.5f}"
            )
        return "\n".join(lines)


def environment_note() -> str:
    return (
        f"{platform.machine()} {platform.processor() or 'cpu'}; {os.cpu_count()} cpus; "
        f"python {platform.python_version()}; numpy {np.__version__}; kernels {kernels.BACKEND}"
    )


def summarize_flags(decisions: Iterable[ClassifierDecision]) -> dict:
    out: dict = {}
    for d in decisions:
        f = d.flags
        if "converged" in f:
            out["nonconverged_queries"] = out.get("nonconverged_queries", 0) + (not f["converged"])
        if "regularized_classes" in f:
            out["regularized_classes"] = max(out.get("regularized_classes", 0), f["regularized_classes"])
        if "prototypes_exceed_dim" in f:
            out["prototypes_exceed_dim"] = out.get("prototypes_exceed_dim", False) or f["prototypes_exceed_dim"]
        if "ridge" in f:
            out["ridge_queries"] = out.get("ridge_queries", 0) + (f["ridge"] > 0)
    return out


def _as_specs(spec) -> list[ClassifierSpec]:
    if isinstance(spec, ClassifierSpec):
        return [spec]
    if isinstance(spec, str):
        return [ClassifierSpec(spec)]
    return [s if isinstance(s, ClassifierSpec) else ClassifierSpec(s) for s in spec]


def _run_queries(jobs, threads: int):
    """Evaluate query thunks; timing comes from a serialized pass."""
    if not jobs:
        return [], []
    for job in jobs[:WARMUP_QUERIES]:
        job()
    if threads <= 1:
        decisions = [job() for job in jobs]
        timed = [d.timing_ns for d in decisions]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            decisions = list(pool.map(lambda job: job(), jobs))
        timed = [job().timing_ns for job in jobs[:MIN_TIMED_QUERIES]]
    # small test sets are cycled so the timing sample is never tiny
    while len(timed) < MIN_TIMED_QUERIES:
        timed.append(jobs[len(timed) % len(jobs)]().timing_ns)
    return decisions, timed


def _result(spec, clf, truths, decisions, timings) -> ClassifierResult:
    preds = [d.chosen_class for d in decisions]
    correct = sum(int(p == t) for p, t in zip(preds, truths))
    total = len(truths)
    confusion = sorted(Counter(zip(truths, preds)).items())
    return ClassifierResult(
        name=spec.name,
        params=clf.params(),
        recognition_rate=100.0 * correct / total if total else float("nan"),
        correct=correct,
        total=total,
        timing=TimingStats.from_ns(timings),
        flags=summarize_flags(decisions),
        predictions=preds,
        confusion=[(int(t), int(p), int(c)) for (t, p), c in confusion],
    )


def _check_min_prototypes(clf, n, what):
    if n < clf.min_prototypes:
        raise EvaluationError(
            f"{clf.name} needs at least {clf.min_prototypes} prototypes per class, {what} gives {n}"
        )


def run_leave_one_out(
    samples: Sequence[Sample], classifier_spec, *, dataset: str = "", threads: int = 1
) -> EvalReport:
    """Test every sample against all the others as prototypes.

    Only the held-out sample's class is retrained for each fold; the other
    class models do not depend on it.
    """
    groups = class_arrays(samples)
    for cid, X in groups.items():
        if X.shape[0] < 3:
            raise EvaluationError(f"class {cid} has {X.shape[0]} samples; leave-one-out needs at least 3")
    results = []
    for spec in _as_specs(classifier_spec):
        clf = spec.build()
        _check_min_prototypes(clf, min(X.shape[0] for X in groups.values()) - 1, "leave-one-out")
        try:
            base = clf.fit(groups)
        except ValueError as exc:
            raise EvaluationError(f"{spec.name}: {exc}") from exc
        truths, jobs = [], []
        for cid, X in groups.items():
            for i in range(X.shape[0]):
                truths.append(cid)
                jobs.append(_loo_job(base, cid, X, i))
        decisions, timings = _run_queries(jobs, threads)
        results.append(_result(spec, base, truths, decisions, timings))
    return EvalReport(dataset, Protocol(LEAVE_ONE_OUT), results, environment_note())


def _loo_job(base, cid, X, i):
    def job():
        # retraining happens outside decide(), so it is not timed
        return base.with_class(cid, np.delete(X, i, axis=0)).decide(X[i])

    return job


def split_first_n(samples: Sequence[Sample], n: int):
    """Prototypes (first ``n`` per class) and test samples (the rest)."""
    groups = class_arrays(samples)
    for cid, X in groups.items():
        if X.shape[0] <= n:
            raise EvaluationError(
                f"class {cid} has {X.shape[0]} samples; first-{n} needs more than {n}"
            )
    protos = {cid: X[:n] for cid, X in groups.items()}
    tests = [(cid, X[i]) for cid, X in groups.items() for i in range(n, X.shape[0])]
    return protos, tests


def run_first_n(
    samples: Sequence[Sample], n: int, classifier_spec, *, dataset: str = "", threads: int = 1
) -> EvalReport:
    """First ``n`` samples of every class are prototypes, the rest are tests."""
    protocol = Protocol(FIRST_N, n)
    protos, tests = split_first_n(samples, n)
    truths = [cid for cid, _ in tests]
    results = []
    for spec in _as_specs(classifier_spec):
        clf = spec.build()
        _check_min_prototypes(clf, n, f"first-{n}")
        try:
            clf.fit(protos)
        except ValueError as exc:
            raise EvaluationError(f"{spec.name}: {exc}") from exc
        jobs = [(lambda x=x: clf.decide(x)) for _, x in tests]
        decisions, timings = _run_queries(jobs, threads)
        results.append(_result(spec, clf, truths, decisions, timings))
    return EvalReport(dataset, protocol, results, environment_note())


def run_protocol(samples, protocol: Protocol, classifier_spec, *, dataset="", threads=1) -> EvalReport:
    if protocol.kind == LEAVE_ONE_OUT:
        return run_leave_one_out(samples, classifier_spec, dataset=dataset, threads=threads)
    return run_first_n(samples, protocol.n, classifier_spec, dataset=dataset, threads=threads)


def max_prototypes(samples, protocol: Protocol) -> int:
    """Smallest pooled prototype count any query of ``protocol`` sees."""
    groups = class_arrays(samples)
    if protocol.kind == FIRST_N:
        return protocol.n * len(groups)
    return sum(X.shape[0] for X in groups.values()) - 1


def sweep_tptssr(
    samples, protocol: Protocol, k_range: Iterable[int], *, dataset="", threads=1
) -> list[tuple[int, EvalReport]]:
    """One report per neighbour count ``k``."""
    ks = [int(k) for k in k_range]
    if not ks:
        raise EvaluationError("empty k range")
    limit = max_prototypes(samples, protocol)
    bad = [k for k in ks if k < 1 or k > limit]
    if bad:
        raise EvaluationError(f"k values {bad} outside 1..{limit} (available prototypes)")
    return [
        (k, run_protocol(samples, protocol, ClassifierSpec("tptssr", {"k": k}), dataset=dataset, threads=threads))
        for k in ks
    ]


def best_of_sweep(sweep: Sequence[tuple[int, EvalReport]]) -> tuple[int, EvalReport]:
    """Sweep entry with the highest recognition rate (smallest k on ties)."""
    return max(sweep, key=lambda kr: (kr[1].results[0].recognition_rate, -kr[0]))
