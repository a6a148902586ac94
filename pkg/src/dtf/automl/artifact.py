"""Versioned JSON artifacts for fitted models.

Every float in the parameter tree is serialized as a 17-significant-digit
decimal string, which round-trips doubles bit-exactly and keeps artifact
bytes identical across platforms. A sha256 fingerprint over the canonical
body detects tampering.
"""

from __future__ import annotations

import hashlib
import json

from ..errors import CorruptArtifact, VersionMismatch
from .models import MODEL_CLASSES
from .workflow import FittedModel, ModelSpec

FORMAT_VERSION = 1


def _encode_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return "%.17g" % obj
    if isinstance(obj, dict):
        return {k: _encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_floats(v) for v in obj]
    return obj


def _decode_floats(obj):
    if isinstance(obj, str):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _decode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_floats(v) for v in obj]
    return obj


def _canonical(body: dict) -> bytes:
    return json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _body(spec_json: dict, encoded_params, feature_names: list[str]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "spec": spec_json,
        "parameters": encoded_params,
        "feature_names": list(feature_names),
    }


def parameters_fingerprint(spec: ModelSpec, params: dict, feature_names: list[str]) -> str:
    body = _body(spec.to_json(), _encode_floats(params), feature_names)
    return hashlib.sha256(_canonical(body)).hexdigest()


def model_to_json(m: FittedModel) -> str:
    body = _body(m.spec.to_json(), _encode_floats(m.model.to_params()), m.feature_names)
    body["fingerprint"] = hashlib.sha256(_canonical({k: v for k, v in body.items() if k != "fingerprint"})).hexdigest()
    return json.dumps(body, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def model_from_json(text: str) -> FittedModel:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise CorruptArtifact(f"artifact is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptArtifact("artifact lacks a format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported format_version {doc['format_version']!r}")
    try:
        body = _body(doc["spec"], doc["parameters"], doc["feature_names"])
        expected = hashlib.sha256(_canonical(body)).hexdigest()
        stored = doc["fingerprint"]
    except (KeyError, TypeError) as exc:
        raise CorruptArtifact(f"artifact missing field: {exc}") from exc
    if stored != expected:
        raise CorruptArtifact("fingerprint mismatch: artifact bytes were altered")
    spec = ModelSpec(doc["spec"]["kind"], doc["spec"].get("hyperparams", {}), doc["spec"].get("seed", 0))
    params = _decode_floats(doc["parameters"])
    model = MODEL_CLASSES[spec.kind].from_params(dict(spec.hyperparams), params, spec.seed)
    return FittedModel(spec, model, list(doc["feature_names"]), stored)
