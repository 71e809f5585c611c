"""Dataset manifests.

A manifest is an INI-style text file::

    [dataset]
    name = coil12
    source = image_dir        ; or: csv
    root = images             ; image_dir only, optional, relative to the manifest
    csv = features.csv        ; csv only, relative to the manifest

    [preprocess]              ; image_dir only
    width = 32
    height = 32
    color = rgb_concat        ; gray (default) or rgb_concat
    crop = 0, 0, 128, 128     ; optional x, y, width, height

    [class 1]
    files =
        obj1__0.png
        obj1__30.png

One ``[class <id>]`` section per class lists its files in the order that
defines "first N". CSV manifests take classes from the first column of the
CSV instead and carry no class sections.
"""

from __future__ import annotations

import configparser
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import COLOR_MODES, PreprocessParams, preprocess, read_image, vectorize
from .netpbm import NetpbmError
from .samples import Sample

SOURCE_KINDS = ("image_dir", "csv")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    source: str
    path: Path
    classes: tuple[tuple[int, tuple[str, ...]], ...] = ()
    preprocess: PreprocessParams | None = None
    csv_path: Path | None = None
    root: Path | None = None


def _parse_crop(text, where):
    parts = [p.strip() for p in text.replace(" ", ",").split(",") if p.strip()]
    if len(parts) != 4 or not all(p.lstrip("-").isdigit() for p in parts):
        raise ManifestError(f"{where}: crop must be four integers x, y, width, height; got {text!r}")
    return tuple(int(p) for p in parts)


def parse_manifest(path: str | os.PathLike) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"{path}: manifest not found")
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=(";",))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except configparser.DuplicateSectionError as exc:
        raise ManifestError(f"{path}: line {exc.lineno}: duplicate section [{exc.section}]") from exc
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from exc

    if not cp.has_section("dataset"):
        raise ManifestError(f"{path}: missing [dataset] section")
    ds = cp["dataset"]
    name = ds.get("name", path.stem)
    source = ds.get("source", "image_dir").strip()
    if source not in SOURCE_KINDS:
        raise ManifestError(f"{path}: source must be one of {SOURCE_KINDS}, got {source!r}")

    classes = []
    seen = {}
    for section in cp.sections():
        if not section.lower().startswith("class"):
            continue
        label = section[5:].strip()
        try:
            cid = int(label)
        except ValueError:
            raise ManifestError(f"{path}: section [{section}] needs an integer class id") from None
        if cid in seen:
            raise ManifestError(f"{path}: duplicate class id {cid} in [{seen[cid]}] and [{section}]")
        seen[cid] = section
        files = tuple(line.strip() for line in cp[section].get("files", "").splitlines() if line.strip())
        if not files:
            raise ManifestError(f"{path}: class {cid} lists no files")
        classes.append((cid, files))
    classes.sort(key=lambda c: c[0])

    base = path.parent
    if source == "csv":
        if classes:
            raise ManifestError(f"{path}: csv manifests take classes from the csv, not [class] sections")
        if "csv" not in ds:
            raise ManifestError(f"{path}: csv source needs a 'csv' key in [dataset]")
        return DatasetManifest(name, source, path, csv_path=base / ds["csv"].strip())

    if not classes:
        raise ManifestError(f"{path}: image_dir manifest has no [class <id>] sections")
    if not cp.has_section("preprocess"):
        raise ManifestError(f"{path}: image_dir manifest needs a [preprocess] section")
    pp = cp["preprocess"]
    try:
        width, height = pp.getint("width"), pp.getint("height")
    except ValueError as exc:
        raise ManifestError(f"{path}: [preprocess] width/height must be integers ({exc})") from None
    if width is None or height is None:
        raise ManifestError(f"{path}: [preprocess] needs width and height")
    color = pp.get("color", "gray").strip()
    if color not in COLOR_MODES:
        raise ManifestError(f"{path}: color must be one of {COLOR_MODES}, got {color!r}")
    crop = _parse_crop(pp["crop"], path) if "crop" in pp else None
    try:
        params = PreprocessParams(width, height, color, crop)
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    root = base / ds["root"].strip() if "root" in ds else base
    return DatasetManifest(name, source, path, tuple(classes), params, root=root)


def _parse_float(text, where):
    try:
        v = float(text)
    except ValueError:
        raise ManifestError(f"{where}: not a number: {text!r}") from None
    if not np.isfinite(v):
        raise ManifestError(f"{where}: non-finite value {text!r}")
    return v


def read_feature_csv(path: str | os.PathLike) -> list[Sample]:
    """Rows of ``class_id, f1, ..., fq``; an optional header row is skipped."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"{path}: csv file not found")
    rows = []
    dim = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            head = row[0].strip()
            if lineno == 1 and not head.lstrip("+-").isdigit():
                continue
            where = f"{path}: row {lineno}"
            if not head.lstrip("+-").isdigit():
                raise ManifestError(f"{where}: class id must be an integer, got {head!r}")
            feats = np.array([_parse_float(f, where) for f in row[1:]])
            if feats.size == 0:
                raise ManifestError(f"{where}: no feature columns")
            if dim is None:
                dim = feats.size
            elif feats.size != dim:
                raise ManifestError(f"{where}: {feats.size} features, expected {dim}")
            rows.append(Sample(int(head), feats, f"{path.name}:{lineno}"))
    if not rows:
        raise ManifestError(f"{path}: no data rows")
    # stable sort keeps file order within a class
    rows.sort(key=lambda s: s.class_id)
    return rows


def _load_image_sample(args):
    cid, file, root, params = args
    full = root / file
    if not full.is_file():
        raise ManifestError(f"{full}: image file not found (class {cid})")
    try:
        img = preprocess(read_image(full), params)
        feats = vectorize(img, params.color_mode)
    except (ManifestError, NetpbmError):
        raise
    except ValueError as exc:
        raise ManifestError(f"{full}: {exc} (class {cid})") from exc
    return Sample(cid, feats, file)


def load_manifest(path: str | os.PathLike, threads: int = 1) -> list[Sample]:
    """Load every sample of a manifest, classes ascending, listed order within."""
    m = parse_manifest(path)
    if m.source == "csv":
        return read_feature_csv(m.csv_path)
    jobs = [(cid, f, m.root, m.preprocess) for cid, files in m.classes for f in files]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_load_image_sample, jobs))
    return [_load_image_sample(j) for j in jobs]


def write_feature_csv(samples, path: str | os.PathLike) -> None:
    """Write samples as ``class_id, f1..fq`` rows with round-trip float text."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for s in samples:
            w.writerow([int(s.class_id), *(repr(float(v)) for v in s.features)])


def write_csv_manifest(path: str | os.PathLike, name: str, csv_name: str) -> None:
    text = f"[dataset]\nname = {name}\nsource = csv\ncsv = {csv_name}\n"
    Path(path).write_text(text, encoding="utf-8")
