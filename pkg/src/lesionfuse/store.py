"""On-disk containers: the FST1 feature store and the SLM1 model bundle.

FST1 is a self-describing binary: magic, a little-endian u32 header
length, a JSON header (format, version, modality groups, record count),
then per record a length-prefixed sample id and patient id, a u8 label,
and the raw float64 modality vectors in header group order.  Raw bytes
round-trip bit-exactly.

SLM1 is canonical JSON (sorted keys, compact separators) holding the
complete trained ensemble: normalizer, four base learners, isotonic
calibrators, meta weights, smoothing settings and a config echo.
Training determinism therefore shows up as byte-identical bundles.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from lesionfuse.ensemble import MetaEnsembleModel, SmoothingConfig
from lesionfuse.errors import DataError, StoreError
from lesionfuse.fusion import (
    GROUP_DIMS,
    normalize_groups,
    normalizer_from_dict,
    normalizer_to_dict,
)
from lesionfuse.learners import (
    LEARNER_KINDS,
    ExtraTreesModel,
    GbdtModel,
    IsotonicMap,
    LogisticModel,
)
from lesionfuse.learners.trees import Tree

_STORE_MAGIC = b"FST1"
_STORE_VERSION = 1
BUNDLE_FORMAT = "SLM1"
_BUNDLE_VERSION = 1


@dataclass(frozen=True)
class FeatureStore:
    """Raw (un-normalized) per-sample modality vectors plus identity."""

    sample_ids: tuple
    patient_ids: tuple
    labels: np.ndarray
    features: dict  # group -> (n, dim) float64 matrix
    groups: tuple

    def __post_init__(self):
        n = len(self.sample_ids)
        if len(set(self.sample_ids)) != n:
            raise DataError("duplicate sample_id in feature store")
        if len(self.patient_ids) != n or self.labels.shape != (n,):
            raise DataError("feature store field lengths disagree")
        for g in self.groups:
            mat = self.features[g]
            if mat.shape != (n, GROUP_DIMS[g]):
                raise DataError(f"modality dimension mismatch: {g}")

    def __len__(self):
        return len(self.sample_ids)


def write_feature_store(path, store: FeatureStore) -> None:
    header = json.dumps(
        {
            "format": "FST1",
            "version": _STORE_VERSION,
            "groups": list(store.groups),
            "count": len(store),
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_STORE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for i in range(len(store)):
            for text in (store.sample_ids[i], store.patient_ids[i]):
                raw = text.encode()
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
            fh.write(struct.pack("<B", int(store.labels[i])))
            for g in store.groups:
                fh.write(
                    np.ascontiguousarray(
                        store.features[g][i], dtype="<f8"
                    ).tobytes()
                )


def read_feature_store(path) -> FeatureStore:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _STORE_MAGIC:
        raise StoreError("not an FST1 feature store")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    try:
        header = json.loads(blob[8:8 + header_len])
    except ValueError as exc:
        raise StoreError("feature store header is not valid JSON") from exc
    groups = normalize_groups(header["groups"])
    count = header["count"]
    offset = 8 + header_len
    sample_ids, patient_ids, labels = [], [], []
    vectors = {g: [] for g in groups}
    try:
        for _ in range(count):
            texts = []
            for _ in range(2):
                (tlen,) = struct.unpack_from("<H", blob, offset)
                offset += 2
                texts.append(blob[offset:offset + tlen].decode())
                offset += tlen
            sample_ids.append(texts[0])
            patient_ids.append(texts[1])
            labels.append(blob[offset])
            offset += 1
            for g in groups:
                dim = GROUP_DIMS[g]
                end = offset + 8 * dim
                if end > len(blob):
                    raise StoreError("feature store truncated")
                vectors[g].append(np.frombuffer(blob, "<f8", dim, offset))
                offset += 8 * dim
    except struct.error as exc:
        raise StoreError("feature store truncated") from exc
    features = {
        g: np.array(vectors[g], dtype=np.float64).reshape(
            count, GROUP_DIMS[g]
        )
        for g in groups
    }
    return FeatureStore(
        sample_ids=tuple(sample_ids),
        patient_ids=tuple(patient_ids),
        labels=np.array(labels, dtype=np.int64),
        features=features,
        groups=groups,
    )


def _tree_to_doc(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_doc(doc: dict) -> Tree:
    return Tree(
        feature=np.array(doc["feature"], dtype=np.int64),
        threshold=np.array(doc["threshold"], dtype=np.float64),
        left=np.array(doc["left"], dtype=np.int64),
        right=np.array(doc["right"], dtype=np.int64),
        value=np.array(doc["value"], dtype=np.float64),
    )


def _base_to_doc(kind, model) -> dict:
    if kind == "logreg":
        return {
            "weights": model.weights.tolist(),
            "bias": model.bias.tolist(),
            "n_iter": model.n_iter,
        }
    if kind == "extra_trees":
        return {"trees": [_tree_to_doc(t) for t in model.trees]}
    return {
        "variant": model.variant,
        "f0": model.f0.tolist(),
        "learning_rate": model.learning_rate,
        "trees": [
            [_tree_to_doc(t) for t in per_class] for per_class in model.trees
        ],
    }


def _base_from_doc(kind, doc):
    if kind == "logreg":
        return LogisticModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=np.array(doc["bias"], dtype=np.float64),
            n_iter=int(doc["n_iter"]),
        )
    if kind == "extra_trees":
        return ExtraTreesModel(
            trees=tuple(_tree_from_doc(t) for t in doc["trees"])
        )
    return GbdtModel(
        variant=doc["variant"],
        f0=np.array(doc["f0"], dtype=np.float64),
        trees=tuple(
            tuple(_tree_from_doc(t) for t in per_class)
            for per_class in doc["trees"]
        ),
        learning_rate=float(doc["learning_rate"]),
    )


def bundle_to_doc(model: MetaEnsembleModel, extra=None) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "version": _BUNDLE_VERSION,
        "normalizer": normalizer_to_dict(model.normalizer),
        "base_models": {
            kind: _base_to_doc(kind, model.base_models[kind])
            for kind in LEARNER_KINDS
        },
        "calibrators": {
            kind: [
                {
                    "breakpoints": m.breakpoints.tolist(),
                    "values": m.values.tolist(),
                }
                for m in model.calibrators[kind]
            ]
            for kind in LEARNER_KINDS
        },
        "meta": _base_to_doc("logreg", model.meta),
        "smoothing": {
            "alpha": model.smoothing.alpha,
            "iterations": model.smoothing.iterations,
            "target": model.smoothing.target,
        },
        "extra": extra or {},
    }


def bundle_from_doc(doc: dict):
    if doc.get("format") != BUNDLE_FORMAT:
        raise StoreError("not an SLM1 model bundle")
    smoothing = SmoothingConfig(
        alpha=doc["smoothing"]["alpha"],
        iterations=doc["smoothing"]["iterations"],
        target=doc["smoothing"]["target"],
    )
    model = MetaEnsembleModel(
        normalizer=normalizer_from_dict(doc["normalizer"]),
        base_models={
            kind: _base_from_doc(kind, doc["base_models"][kind])
            for kind in LEARNER_KINDS
        },
        calibrators={
            kind: [
                IsotonicMap(
                    breakpoints=np.array(
                        m["breakpoints"], dtype=np.float64
                    ),
                    values=np.array(m["values"], dtype=np.float64),
                )
                for m in doc["calibrators"][kind]
            ]
            for kind in LEARNER_KINDS
        },
        meta=_base_from_doc("logreg", doc["meta"]),
        smoothing=smoothing,
    )
    return model, doc.get("extra", {})


def bundle_to_bytes(model: MetaEnsembleModel, extra=None) -> bytes:
    """Canonical encoding; equal models produce equal bytes."""
    return json.dumps(
        bundle_to_doc(model, extra), sort_keys=True, separators=(",", ":")
    ).encode()


def save_bundle(path, model: MetaEnsembleModel, extra=None) -> None:
    with open(path, "wb") as fh:
        fh.write(bundle_to_bytes(model, extra))


def load_bundle(path):
    """Returns (model, extra dict)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise StoreError("not an SLM1 model bundle") from exc
    return bundle_from_doc(doc)
