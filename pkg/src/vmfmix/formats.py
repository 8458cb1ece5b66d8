"""
Reading and writing corpus, model, manifest, truth, trace and feature files.

Corpus files are tab separated, one token per line::

    doc_id <TAB> label <TAB> v_1 v_2 ... v_D

The label field may be empty or omitted entirely. Lines of one document
need not be contiguous; token order within a document follows file order.
Blank lines and lines starting with ``#`` are skipped.

Model, manifest and truth files are JSON. Floats are written with
``repr`` precision so a write/read cycle reproduces every value exactly.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import Corpus, Document, ModelParams
from .features import TopicFeatures
from .generate import GroundTruth

FORMAT_VERSION = 1


class FormatError(ValueError):
    """A malformed input file."""


# ---------------------------------------------------------------------------
# corpus


def read_corpus(path) -> Corpus:
    rows: dict[str, list] = {}
    labels: dict[str, Optional[str]] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) == 2:
                doc_id, label, values = fields[0], "", fields[1]
            elif len(fields) == 3:
                doc_id, label, values = fields
            else:
                raise FormatError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields, got {len(fields)}")
            doc_id = doc_id.strip()
            if not doc_id:
                raise FormatError(f"{path}:{lineno}: empty document id")
            try:
                vec = [float(v) for v in values.split()]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(vec)}")
            label = label.strip() or None
            if doc_id in labels and labels[doc_id] != label:
                raise FormatError(f"{path}:{lineno}: document {doc_id!r} has conflicting labels")
            labels[doc_id] = label
            rows.setdefault(doc_id, []).append(vec)
    if not rows:
        raise FormatError(f"{path}: no tokens found")
    try:
        return Corpus([Document(d, np.array(v), labels[d]) for d, v in rows.items()])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_corpus(path, corpus: Corpus) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.docs:
            label = doc.label or ""
            for vec in doc.vectors:
                fh.write(f"{doc.id}\t{label}\t{' '.join(repr(float(v)) for v in vec)}\n")


# ---------------------------------------------------------------------------
# models


def _components(params: ModelParams) -> list:
    return [{"mu": [float(v) for v in mu], "kappa": float(k)} for mu, k in zip(params.mu, params.kappa)]


def _params_from(doc: dict, path) -> ModelParams:
    try:
        comps = doc["components"]
        mu = np.array([c["mu"] for c in comps], dtype=float)
        kappa = np.array([c["kappa"] for c in comps], dtype=float)
        params = ModelParams(float(doc["alpha"]), mu, kappa)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid components: {exc}") from None
    if params.K != doc.get("K", params.K) or params.dim != doc.get("D", params.dim):
        raise FormatError(f"{path}: declared K/D disagree with components")
    return params


def model_document(params: ModelParams, elbo_final: float, fit_meta: dict, label: Optional[str] = None) -> dict:
    doc = {
        "format": "vmfmix-model",
        "format_version": FORMAT_VERSION,
        "D": params.dim,
        "K": params.K,
        "alpha": float(params.alpha),
        "components": _components(params),
        "elbo_final": float(elbo_final),
        "fit": fit_meta,
    }
    if label is not None:
        doc["label"] = label
    return doc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def read_model(path) -> tuple[ModelParams, dict]:
    doc = _read_json(path)
    if doc.get("format") != "vmfmix-model":
        raise FormatError(f"{path}: not a model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {doc.get('format_version')}")
    return _params_from(doc, path), doc


def write_manifest(path, entries: list[tuple[str, str]]) -> None:
    write_json(path, {
        "format": "vmfmix-manifest",
        "format_version": FORMAT_VERSION,
        "models": [{"label": label, "path": p} for label, p in entries],
    })


def read_models(path) -> list[tuple[Optional[str], ModelParams]]:
    """Load a model file or a manifest; manifest paths are relative to the manifest."""
    doc = _read_json(path)
    if doc.get("format") == "vmfmix-manifest":
        base = Path(path).parent
        out = []
        for entry in doc.get("models", []):
            params, _ = read_model(base / entry["path"])
            out.append((entry.get("label"), params))
        if not out:
            raise FormatError(f"{path}: manifest lists no models")
        return out
    params, meta = read_model(path)
    return [(meta.get("label"), params)]


def safe_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


# ---------------------------------------------------------------------------
# truth


def write_truth(path, corpus: Corpus, truth: GroundTruth) -> None:
    write_json(path, {
        "format": "vmfmix-truth",
        "format_version": FORMAT_VERSION,
        "D": truth.params.dim,
        "K": truth.params.K,
        "alpha": float(truth.params.alpha),
        "components": _components(truth.params),
        "docs": [
            {"id": doc.id, "theta": [float(t) for t in theta], "z": [int(v) for v in z]}
            for doc, theta, z in zip(corpus.docs, truth.theta, truth.z)
        ],
    })


def read_truth(path) -> tuple[GroundTruth, list[str]]:
    doc = _read_json(path)
    if doc.get("format") != "vmfmix-truth":
        raise FormatError(f"{path}: not a truth file")
    params = _params_from(doc, path)
    try:
        ids = [d["id"] for d in doc["docs"]]
        theta = np.array([d["theta"] for d in doc["docs"]], dtype=float)
        z = [np.array(d["z"], dtype=int) for d in doc["docs"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid docs: {exc}") from None
    return GroundTruth(params, theta, z), ids


# ---------------------------------------------------------------------------
# tables


def write_trace(path, rows: Iterable[tuple], with_label: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow((["label"] if with_label else []) + ["iter", "elbo", "wall_ms"])
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_features(path, features: list[TopicFeatures]) -> None:
    K = len(features[0].proportions) if features else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["doc_id"] + [f"p_{k + 1}" for k in range(K)]) + "\n")
        for f in features:
            fh.write("\t".join([f.doc_id] + [repr(float(p)) for p in f.proportions]) + "\n")


def read_features(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").split("\t") for ln in fh if ln.strip()]
    ids = [ln[0] for ln in lines[1:]]
    return ids, np.array([[float(v) for v in ln[1:]] for ln in lines[1:]])
