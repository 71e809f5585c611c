"""Distances, Cayley-Menger matrices and simplex volumes.

All routines work on squared Euclidean distances in float64 and never take
square roots internally. Determinants come from a partially pivoted LU
factorization with the sign recovered from the permutation parity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

#: relative threshold below which a squared volume is treated as zero
DEGENERACY_RTOL = 1e-10

#: condition estimate above which a block is treated as singular
SINGULAR_COND = 1e12

_EXACT_FACTOR_MAX_N = 20


class SingularBlockError(np.linalg.LinAlgError):
    """Raised when the block that must be inverted is numerically singular."""


@dataclass(frozen=True)
class SimplexVolume:
    """Squared content of a simplex plus a flag set when it was clamped to 0."""

    sq_volume: float
    degenerate: bool


def as_point_set(points) -> np.ndarray:
    """Return ``points`` as a read-only ``(n, q)`` float64 array.

    Raises
    ------
    ValueError
        If the points do not share a dimension or fewer than two are given.
    """
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
    else:
        rows = [np.atleast_1d(np.asarray(p, dtype=np.float64)) for p in points]
        dims = {r.shape for r in rows}
        if len(dims) > 1:
            raise ValueError(f"points have mismatched dimensions: {sorted(dims)}")
        arr = np.vstack(rows) if rows else np.empty((0, 0))
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D point array, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points contain non-finite values")
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


def pairwise_sq_dist(points) -> np.ndarray:
    """Squared Euclidean distance matrix of a point set.

    Entries are computed from coordinate differences, not from the
    ``|x|^2 - 2 x.y + |y|^2`` expansion, so coincident points give exact
    zeros.

    >>> pairwise_sq_dist([[0.0], [3.0]])
    array([[0., 9.],
           [9., 0.]])
    """
    ps = as_point_set(points)
    diff = ps[:, None, :] - ps[None, :, :]
    d = np.einsum("ijk,ijk->ij", diff, diff)
    # force exact symmetry and a zero diagonal
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def cm_matrix(sq_dist) -> np.ndarray:
    """Border a squared-distance matrix with ones and a zero corner."""
    d = np.asarray(sq_dist, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"squared-distance matrix must be square, got {d.shape}")
    n = d.shape[0]
    if n < 1:
        raise ValueError("empty squared-distance matrix")
    if not np.allclose(d, d.T, rtol=1e-12, atol=0.0):
        raise ValueError("squared-distance matrix is not symmetric")
    if np.any(np.diag(d) != 0.0):
        raise ValueError("squared-distance matrix has a nonzero diagonal")
    if np.any(d < 0.0):
        raise ValueError("squared-distance matrix has negative entries")
    q = np.ones((n + 1, n + 1))
    q[:n, :n] = d
    q[n, n] = 0.0
    return q


def unifying_factor(n: int) -> Fraction | float:
    """Volume normalizer ``(-1)^n / (2^(n-1) ((n-1)!)^2)`` for ``n`` points.

    Exact :class:`~fractions.Fraction` up to ``n = 20``. Beyond that a float
    is returned: the correctly rounded exact value while it is a normal
    double, and the log-space value once it underflows. Volume computations
    for large ``n`` use :func:`log_abs_unifying_factor` directly.
    """
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    sign = -1 if n % 2 else 1
    denom = 2 ** (n - 1) * math.factorial(n - 1) ** 2
    if n <= _EXACT_FACTOR_MAX_N:
        return Fraction(sign, denom)
    if math.log(denom) < 700.0:
        return float(Fraction(sign, denom))
    return sign * math.exp(-log_abs_unifying_factor(n))


def log_abs_unifying_factor(n: int) -> float:
    """``-log|c_n|``, i.e. ``(n-1) log 2 + 2 log((n-1)!)``."""
    return math.log(2 ** (n - 1) * math.factorial(n - 1) ** 2)


def lu_slogdet(m) -> tuple[float, float]:
    """Sign and log-magnitude of ``det(m)`` from a pivoted LU factorization."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"determinant needs a square matrix, got {m.shape}")
    if m.shape[0] == 0:
        return 1.0, 0.0
    with warnings.catch_warnings():
        # an exactly singular matrix is reported as det 0 below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=True)
    diag = np.diag(lu)
    if np.any(diag == 0.0):
        return 0.0, -math.inf
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    sign = (-1.0) ** swaps * float(np.prod(np.sign(diag)))
    return sign, float(np.sum(np.log(np.abs(diag))))


def lu_det(m) -> float:
    sign, logdet = lu_slogdet(m)
    return sign * math.exp(logdet) if sign else 0.0


def simplex_volume_info(points) -> SimplexVolume:
    """Squared volume of the simplex spanned by ``points`` with a clamp flag.

    The value is ``c_n * det(Q_n)`` where ``Q_n`` is the Cayley-Menger matrix
    of the ``n`` points. Results below ``1e-10`` times the squared volume of
    a regular simplex whose squared edge is the mean squared distance are
    reported as 0 with ``degenerate=True``.
    """
    d = pairwise_sq_dist(points)
    n = d.shape[0]
    sign, logdet = lu_slogdet(cm_matrix(d))
    factor = unifying_factor(n)
    if sign == 0.0:
        value = 0.0
    elif isinstance(factor, Fraction):
        value = float(factor) * sign * math.exp(logdet)
    else:
        # large n: combine magnitudes in log space
        value = math.copysign(1.0, factor) * sign * math.exp(logdet - log_abs_unifying_factor(n))
    mean_sq = float(d[np.triu_indices(n, 1)].mean())
    if mean_sq == 0.0:
        return SimplexVolume(0.0, True)
    # regular simplex: n * |c_n| * edge^(2(n-1))
    log_ref = math.log(n) - log_abs_unifying_factor(n) + (n - 1) * math.log(mean_sq)
    if value <= 0.0 or math.log(value) < math.log(DEGENERACY_RTOL) + log_ref:
        return SimplexVolume(0.0, True)
    return SimplexVolume(value, False)


def simplex_sq_volume(points) -> float:
    """Squared (n-1)-dimensional content of the simplex on ``n`` points.

    >>> round(simplex_sq_volume([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]), 9)
    36.0
    """
    return simplex_volume_info(points).sq_volume


def heron_sq_area(a2: float, b2: float, c2: float) -> float:
    """Squared triangle area from its squared side lengths.

    Uses ``(2(ab + ac + bc) - a^2 - b^2 - c^2) / 16`` in terms of the squared
    sides, which is ``-det(Q_3) / 16``.
    """
    s = 2.0 * (a2 * b2 + a2 * c2 + b2 * c2) - a2 * a2 - b2 * b2 - c2 * c2
    return max(s / 16.0, 0.0)


def block_det(A, B, C, D, *, max_cond: float = SINGULAR_COND) -> float:
    """Determinant of ``[[A, B], [C, D]]`` through the Schur complement of D.

    Returns ``det(A - B D^-1 C) * det(D)``.

    Raises
    ------
    SingularBlockError
        If the condition estimate of ``D`` exceeds ``max_cond``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    D = np.atleast_2d(np.asarray(D, dtype=np.float64))
    m, n = A.shape[0], D.shape[0]
    if A.shape != (m, m) or D.shape != (n, n):
        raise ValueError(f"A and D must be square, got {A.shape} and {D.shape}")
    if B.shape != (m, n) or C.shape != (n, m):
        raise ValueError(
            f"block shapes do not conform: A{A.shape} B{B.shape} C{C.shape} D{D.shape}"
        )
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularBlockError(f"D block is singular (condition estimate {cond:.3g})")
    lu_piv = scipy.linalg.lu_factor(D)
    schur = A - B @ scipy.linalg.lu_solve(lu_piv, C)
    s_sign, s_log = lu_slogdet(schur)
    d_sign, d_log = lu_slogdet(D)
    if s_sign == 0.0:
        return 0.0
    return s_sign * d_sign * math.exp(s_log + d_log)
