"""Deterministic JSON serialization for corpora, checkpoints and reports.

Real numbers are written with 17 significant digits, which is enough to
round-trip IEEE 754 doubles exactly. The emitter is deliberately tiny and
canonical (fixed key order, fixed separators) so identical inputs always
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import AnnotationError, CheckpointError, ConfigError, NumericsError
from .synthdocs import Document, Token


def format_real(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericsError(f"cannot serialize non-finite real {x!r}")
    return "%.17g" % (x + 0.0)  # +0.0 normalizes -0.0


def dumps_canonical(obj: Any) -> str:
    """Serialize to canonical JSON (dict insertion order preserved)."""
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(format_real(float(obj)))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), parts)
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise ConfigError(f"JSON object keys must be strings, got {key!r}")
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _emit(value, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, value in enumerate(obj):
            if i:
                parts.append(",")
            _emit(value, parts)
        parts.append("]")
    else:
        raise ConfigError(f"cannot serialize object of type {type(obj).__name__}")


# ---------------------------------------------------------------------------
# corpus files: JSON Lines, one document per line

def document_to_obj(doc: Document) -> dict:
    return {
        "id": doc.id,
        "template_id": int(doc.template_id),
        "page_width": float(doc.page_width),
        "page_height": float(doc.page_height),
        "tokens": [
            {"text": t.text, "bbox": [float(v) for v in t.bbox], "label": t.label}
            for t in doc.tokens
        ],
    }


def document_from_obj(obj: Any) -> Document:
    if not isinstance(obj, dict):
        raise AnnotationError("document record must be a JSON object")
    try:
        raw_tokens = obj["tokens"]
        tokens = []
        for rt in raw_tokens:
            bbox = rt["bbox"]
            if len(bbox) != 4:
                raise AnnotationError(f"token bbox must have 4 coordinates, got {bbox!r}")
            tokens.append(Token(str(rt["text"]), tuple(float(v) for v in bbox), str(rt["label"])))
        return Document(
            id=str(obj["id"]),
            page_width=float(obj["page_width"]),
            page_height=float(obj["page_height"]),
            template_id=int(obj["template_id"]),
            tokens=tuple(tokens),
        )
    except KeyError as exc:
        raise AnnotationError(f"document record missing key {exc}") from None


def write_corpus(docs: list[Document], path: str | Path) -> None:
    lines = [dumps_canonical(document_to_obj(d)) for d in docs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_corpus(path: str | Path) -> list[Document]:
    docs = []
    text = Path(path).read_text(encoding="utf-8")
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{path}:{ln}: invalid JSON: {exc}") from None
        docs.append(document_from_obj(obj))
    if not docs:
        raise ConfigError(f"corpus file {path} contains no documents")
    return docs
