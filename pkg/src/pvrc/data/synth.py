from __future__ import annotations

import numpy as np

from .samples import Sample


def synth_subspace_dataset(
    M: int,
    per_class: int,
    subspace_dim: int,
    ambient_q: int,
    noise_sigma: float,
    seed: int,
    offset_scale: float = 1.0,
    coeff_scale: float = 1.0,
) -> list[Sample]:
    """Classes drawn from distinct random affine subspaces plus Gaussian noise.

    Class ``c`` (ids ``1..M``) has an orthonormal ``(ambient_q, subspace_dim)``
    basis ``U_c`` and offset ``o_c``; its samples are
    ``o_c + U_c a + noise_sigma * e`` with standard normal ``a`` and ``e``.
    """
    if M < 1:
        raise ValueError(f"need at least one class, got M={M}")
    if not 0 < subspace_dim < ambient_q:
        raise ValueError(f"need 0 < subspace_dim < ambient_q, got {subspace_dim} and {ambient_q}")
    if per_class < subspace_dim + 1:
        raise ValueError(f"per_class must be at least subspace_dim + 1 = {subspace_dim + 1}, got {per_class}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    out = []
    for c in range(1, M + 1):
        basis, _ = np.linalg.qr(rng.standard_normal((ambient_q, subspace_dim)))
        offset = offset_scale * rng.standard_normal(ambient_q)
        coeffs = coeff_scale * rng.standard_normal((per_class, subspace_dim))
        noise = noise_sigma * rng.standard_normal((per_class, ambient_q))
        points = offset + coeffs @ basis.T + noise
        out.extend(Sample(c, points[i].copy(), f"synth:{c}:{i}") for i in range(per_class))
    return out
