"""Embedded verification checks run by ``pvrc selftest``.

Every check is seeded and its report line contains no timing, so the output
is identical from run to run.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from . import classifier, geometry

SEED = 20140617


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_heron(rng) -> CheckResult:
    worst = 0.0
    for _ in range(500):
        pts = rng.standard_normal((3, rng.integers(2, 6)))
        d = geometry.pairwise_sq_dist(pts)
        worst = max(worst, _rel(geometry.simplex_sq_volume(pts), geometry.heron_sq_area(d[0, 1], d[0, 2], d[1, 2])))
    return CheckResult("heron_identity", worst <= 1e-10, f"max rel err {worst:.1e} over 500 triangles (tol 1e-10)")


def check_tetrahedron(rng) -> CheckResult:
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(8.0)
    v = math.sqrt(geometry.simplex_sq_volume(tet))
    err = abs(v - math.sqrt(2.0) / 12.0)
    return CheckResult("unit_tetrahedron", err <= 1e-12, f"volume {v:.15f}, |err| {err:.1e} (tol 1e-12)")


def check_two_point(rng) -> CheckResult:
    worst = 0.0
    for _ in range(100):
        pts = rng.standard_normal((2, 7))
        worst = max(worst, _rel(geometry.simplex_sq_volume(pts), float(np.sum((pts[0] - pts[1]) ** 2))))
    return CheckResult("two_point_distance", worst <= 1e-12, f"max rel err {worst:.1e} (tol 1e-12)")


def check_block_det(rng) -> CheckResult:
    worst = 0.0
    for _ in range(200):
        m, n = rng.integers(1, 7, size=2)
        P = rng.standard_normal((m + n, m + n))
        A, B, C, D = P[:m, :m], P[:m, m:], P[m:, :m], P[m:, m:]
        if np.linalg.cond(D) > 1e6:
            D = D + 3.0 * np.eye(n)
            P[m:, m:] = D
        worst = max(worst, _rel(geometry.block_det(A, B, C, D), np.linalg.det(P)))
    return CheckResult("block_determinant", worst <= 1e-9, f"max rel err {worst:.1e} over 200 matrices (tol 1e-9)")


def _instances(rng, count=200):
    for i in range(count):
        q = (10, 50)[i % 2]
        k = int(rng.integers(2, 8))
        yield rng.standard_normal((k, q)), rng.standard_normal(q)


def check_fast_vs_naive(rng) -> CheckResult:
    worst = 0.0
    for protos, x in _instances(rng):
        fast = classifier.score(x, classifier.train_class(0, protos)).rho_sq
        worst = max(worst, _rel(fast, classifier.naive_ratio(x, protos) ** 2))
    return CheckResult("fast_vs_naive", worst <= 1e-8, f"max rel err {worst:.1e} over 200 classes (tol 1e-8)")


def check_affine_distance(rng) -> CheckResult:
    worst = 0.0
    for protos, x in _instances(rng):
        k = protos.shape[0]
        A = (protos[1:] - protos[0]).T
        resid = (x - protos[0]) - A @ np.linalg.lstsq(A, x - protos[0], rcond=None)[0]
        rho = classifier.score(x, classifier.train_class(0, protos)).rho
        worst = max(worst, _rel(rho * k, float(np.linalg.norm(resid))))
    return CheckResult("affine_hull_distance", worst <= 1e-8, f"max rel err {worst:.1e} over 200 classes (tol 1e-8)")


CHECKS: tuple[Callable[[np.random.Generator], CheckResult], ...] = (
    check_heron,
    check_tetrahedron,
    check_two_point,
    check_block_det,
    check_fast_vs_naive,
    check_affine_distance,
)


def run_checks() -> list[CheckResult]:
    results = []
    for i, check in enumerate(CHECKS):
        rng = np.random.default_rng([SEED, i])
        try:
            results.append(check(rng))
        except Exception as exc:  # a crashing check is a failed check
            results.append(CheckResult(check.__name__.removeprefix("check_"), False, f"raised {exc!r}"))
    return results
