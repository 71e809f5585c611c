"""Image preprocessing and column-concatenation vectorization."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .netpbm import read_netpbm

COLOR_MODES = ("gray", "rgb_concat")
LUMA = np.array([0.299, 0.587, 0.114])
NETPBM_SUFFIXES = {".pgm", ".ppm", ".pnm"}


@dataclass(frozen=True)
class PreprocessParams:
    """Target size and color handling. ``crop`` is ``(x, y, width, height)``."""

    target_width: int
    target_height: int
    color_mode: str = "gray"
    crop: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        if self.target_width < 1 or self.target_height < 1:
            raise ValueError(f"target size must be positive, got {self.target_width}x{self.target_height}")
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"color mode must be one of {COLOR_MODES}, got {self.color_mode!r}")

    @property
    def feature_dim(self) -> int:
        return self.target_width * self.target_height * (1 if self.color_mode == "gray" else 3)


def _check_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"expected an (h, w) or (h, w, 3) image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("empty image")
    return arr


def vectorize(img, mode: str = "gray") -> np.ndarray:
    """Stack image columns top to bottom, left to right.

    In ``rgb_concat`` mode the R, G and B planes are vectorized separately
    and concatenated in that order.

    >>> vectorize([[1, 2], [3, 4]])
    array([1., 3., 2., 4.])
    """
    arr = _check_image(img)
    if mode == "gray":
        if arr.ndim != 2:
            raise ValueError("gray vectorization needs a single-channel image")
        return arr.ravel(order="F").copy()
    if mode == "rgb_concat":
        if arr.ndim != 3:
            raise ValueError("rgb_concat vectorization needs a 3-channel image")
        return np.concatenate([arr[:, :, c].ravel(order="F") for c in range(3)])
    raise ValueError(f"unknown color mode {mode!r}; choose from {COLOR_MODES}")


def devectorize(vec, height: int, width: int, mode: str = "gray") -> np.ndarray:
    """Inverse of :func:`vectorize` for a known image shape."""
    v = np.asarray(vec, dtype=np.float64).ravel()
    plane = height * width
    if mode == "gray":
        if v.size != plane:
            raise ValueError(f"vector of length {v.size} does not match {height}x{width}")
        return v.reshape((height, width), order="F")
    if mode == "rgb_concat":
        if v.size != 3 * plane:
            raise ValueError(f"vector of length {v.size} does not match {height}x{width}x3")
        return np.stack([v[c * plane : (c + 1) * plane].reshape((height, width), order="F") for c in range(3)], axis=2)
    raise ValueError(f"unknown color mode {mode!r}; choose from {COLOR_MODES}")


def _axis_weights(n_in: int, n_out: int):
    # half-pixel centers, clamped at the borders
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def resize_bilinear(img, height: int, width: int) -> np.ndarray:
    arr = _check_image(img)
    if arr.shape[:2] == (height, width):
        return arr.copy()
    r0, r1, fr = _axis_weights(arr.shape[0], height)
    c0, c1, fc = _axis_weights(arr.shape[1], width)
    if arr.ndim == 3:
        fr = fr[:, None, None]
        fc_b = fc[None, :, None]
    else:
        fr = fr[:, None]
        fc_b = fc[None, :]
    rows = arr[r0] * (1.0 - fr) + arr[r1] * fr
    return rows[:, c0] * (1.0 - fc_b) + rows[:, c1] * fc_b


def to_gray(img) -> np.ndarray:
    arr = _check_image(img)
    if arr.ndim == 2:
        return arr
    return arr @ LUMA


def preprocess(img, params: PreprocessParams) -> np.ndarray:
    """Crop, resize bilinearly to the target size, then convert color."""
    arr = _check_image(img)
    if params.crop is not None:
        x, y, w, h = params.crop
        if x < 0 or y < 0 or w < 1 or h < 1 or x + w > arr.shape[1] or y + h > arr.shape[0]:
            raise ValueError(
                f"crop {params.crop} is outside the {arr.shape[1]}x{arr.shape[0]} image"
            )
        arr = arr[y : y + h, x : x + w]
    arr = resize_bilinear(arr, params.target_height, params.target_width)
    if params.color_mode == "gray":
        return to_gray(arr)
    if arr.ndim != 3:
        raise ValueError("rgb_concat mode needs a color image")
    return arr


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Decode a PGM/PPM (native reader) or PNG (Pillow) file as float64 pixels."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in NETPBM_SUFFIXES:
        pixels, _ = read_netpbm(path)
        return pixels.astype(np.float64)
    if suffix == ".png":
        from PIL import Image

        with Image.open(path) as im:
            if im.mode in ("P", "RGBA", "LA", "PA"):
                im = im.convert("RGB" if im.mode != "LA" else "L")
            if im.mode not in ("L", "RGB"):
                raise ValueError(f"{path}: unsupported PNG mode {im.mode} (need 8-bit gray or RGB)")
            return np.asarray(im, dtype=np.float64)
    raise ValueError(f"{path}: unsupported image format {suffix!r}")
