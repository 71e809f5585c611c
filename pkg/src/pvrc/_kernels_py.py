"""NumPy implementations of the per-query kernels.

Same signatures and results as the compiled ``_kernels`` module, used when the
extension is not built or ``PVRC_PURE_PYTHON`` is set.
"""

import numpy as np


def _check(x, protos):
    if x.shape[0] != protos.shape[1]:
        raise ValueError(
            f"test vector has dimension {x.shape[0]}, prototypes have {protos.shape[1]}"
        )


def sq_dists(x, protos):
    _check(x, protos)
    diff = protos - x
    return np.einsum("ij,ij->i", diff, diff)


def class_min_sq_dists(x, protos, starts):
    d = sq_dists(x, protos)
    return np.minimum.reduceat(d, starts[:-1])


def pvrc_xi(x, protos, starts, qinv, qinv_starts, scales, shift):
    d = sq_dists(x, protos)
    m = starts.shape[0] - 1
    if len(scales) != m or len(shift) != m:
        raise ValueError("scales and shift need one entry per class")
    out = np.empty(m, dtype=np.float64)
    for c in range(m):
        lo, hi = starts[c], starts[c + 1]
        size = hi - lo + 1
        inv = qinv[qinv_starts[c] : qinv_starts[c] + size * size].reshape(size, size)
        dmin = d[lo:hi].min() if shift[c] else 0.0
        b = np.empty(size)
        b[:-1] = (d[lo:hi] - dmin) / scales[c]
        b[-1] = 1.0
        out[c] = abs(b @ (inv @ b) + 2.0 * dmin / scales[c]) * scales[c]
    return out
