"""ModelBundle: one file holding a fitted pipeline.

Layout: ``MAGIC``, an 8-byte little-endian manifest length, the JSON
manifest, then the blobs it lists (offset relative to the end of the
manifest, length, sha256). Nothing time-dependent is written, so refitting
with identical inputs and seeds reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import struct

from . import __version__
from .baselines import STAT_KINDS, StatBaselineModel, classifier_from_bytes
from .bias_stats import BiasTable
from .config import RunConfig
from .lda import LdaModel
from .pipeline import REGRESSION_METHODS, Pipeline
from .pvdbow import PvdbowModel
from .regress import LinearRegressor
from .text_features import Vocabulary

MAGIC = b"DEBIASB1"
FORMAT_VERSION = 1
_LEN = struct.Struct("<Q")


class BundleError(ValueError):
    pass


def _blobs(pipe: Pipeline) -> dict[str, bytes]:
    out = {}
    if pipe.bias is not None:
        out["bias_table"] = pipe.bias.to_json().encode()
    if pipe.vocab is not None:
        out["vocab"] = pipe.vocab.to_json().encode()
    if isinstance(pipe.feature_model, LdaModel):
        out["feature_model"] = pipe.feature_model.to_bytes()
    elif isinstance(pipe.feature_model, PvdbowModel):
        # training-document vectors are not needed to predict
        out["feature_model"] = pipe.feature_model.to_bytes(include_docs=False)
    out["predictor"] = pipe.predictor.to_bytes()
    return out


def to_bytes(pipe: Pipeline) -> bytes:
    blobs = _blobs(pipe)
    entries, offset = [], 0
    for name in sorted(blobs):
        data = blobs[name]
        entries.append({"name": name, "offset": offset, "length": len(data), "sha256": hashlib.sha256(data).hexdigest()})
        offset += len(data)
    manifest = {
        "format_version": FORMAT_VERSION,
        "creator": f"debias {__version__}",
        "method": pipe.method,
        "features": pipe.features,
        "ngrams": pipe.config.ngrams,
        "config": pipe.config.to_dict(),
        "blobs": entries,
    }
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + _LEN.pack(len(head)) + head + b"".join(blobs[e["name"]] for e in entries)


def from_bytes(data: bytes) -> Pipeline:
    if not data.startswith(MAGIC):
        raise BundleError("not a model bundle")
    (n,) = _LEN.unpack_from(data, len(MAGIC))
    start = len(MAGIC) + _LEN.size
    manifest = json.loads(data[start : start + n])
    if manifest.get("format_version") != FORMAT_VERSION:
        raise BundleError(f"unsupported bundle version {manifest.get('format_version')!r}")
    base = start + n
    blobs = {}
    for e in manifest["blobs"]:
        blob = data[base + e["offset"] : base + e["offset"] + e["length"]]
        if hashlib.sha256(blob).hexdigest() != e["sha256"]:
            raise BundleError(f"checksum mismatch in blob {e['name']!r}")
        blobs[e["name"]] = blob

    method = manifest["method"]
    config = RunConfig(**manifest["config"])
    pipe = Pipeline(method, manifest["features"], config)
    if "bias_table" in blobs:
        pipe.bias = BiasTable.from_json(blobs["bias_table"].decode())
    if "vocab" in blobs:
        pipe.vocab = Vocabulary.from_json(blobs["vocab"].decode())
    if "feature_model" in blobs:
        fm = blobs["feature_model"]
        pipe.feature_model = LdaModel.from_bytes(fm) if pipe.features == "lda" else PvdbowModel.from_bytes(fm)
    pred = blobs["predictor"]
    if method in STAT_KINDS:
        pipe.predictor = StatBaselineModel.from_bytes(pred)
    elif method in REGRESSION_METHODS:
        pipe.predictor = LinearRegressor.from_bytes(pred)
    else:
        pipe.predictor = classifier_from_bytes(pred)
    return pipe


def save_bundle(pipe: Pipeline, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(pipe))


def load_bundle(path) -> Pipeline:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
