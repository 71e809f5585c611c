"""Dataset ingestion: image decoding, preprocessing, manifests, synthetic data."""

from .image import PreprocessParams, devectorize, preprocess, read_image, resize_bilinear, vectorize
from .manifest import (
    DatasetManifest,
    ManifestError,
    load_manifest,
    parse_manifest,
    read_feature_csv,
    write_csv_manifest,
    write_feature_csv,
)
from .netpbm import NetpbmError, decode_netpbm, encode_netpbm, read_netpbm
from .samples import Sample, class_arrays, group_by_class
from .synth import synth_subspace_dataset

__all__ = [
    "DatasetManifest",
    "ManifestError",
    "NetpbmError",
    "PreprocessParams",
    "Sample",
    "class_arrays",
    "decode_netpbm",
    "devectorize",
    "encode_netpbm",
    "group_by_class",
    "load_manifest",
    "parse_manifest",
    "preprocess",
    "read_feature_csv",
    "read_image",
    "read_netpbm",
    "resize_bilinear",
    "synth_subspace_dataset",
    "vectorize",
    "write_csv_manifest",
    "write_feature_csv",
]
