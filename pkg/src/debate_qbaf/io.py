"""QBAF and strength-map JSON serialisation."""

from __future__ import annotations

import json
import logging
from pathlib import Path as FsPath
from typing import Any

from debate_qbaf.graph import (
    Argument,
    ArgumentKind,
    Edge,
    Polarity,
    Qbaf,
    QbafMeta,
)

logger = logging.getLogger(__name__)

_TOP_KEYS = {"meta", "arguments", "edges"}
_META_KEYS = {"debate_id", "source"}
_ARG_KEYS = {"id", "kind", "text", "base_score", "order"}
_EDGE_KEYS = {"source", "target", "polarity"}


class QbafFormatError(ValueError):
    """The document is not a well-formed QBAF file."""


def _check_keys(obj: Any, allowed: set[str], where: str, strict: bool) -> None:
    if not isinstance(obj, dict):
        raise QbafFormatError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        msg = f"{where}: unknown field(s) {', '.join(extra)}"
        if strict:
            raise QbafFormatError(msg)
        logger.warning(msg)


def qbaf_from_dict(doc: Any, strict: bool = False) -> Qbaf:
    _check_keys(doc, _TOP_KEYS, "document", strict)
    meta_doc = doc.get("meta", {})
    _check_keys(meta_doc, _META_KEYS, "meta", strict)
    source = meta_doc.get("source", "original")
    if source not in ("original", "summary"):
        raise QbafFormatError(f"meta.source must be 'original' or 'summary', got {source!r}")
    meta = QbafMeta(debate_id=str(meta_doc.get("debate_id", "")), source=source)

    arguments = []
    for i, raw in enumerate(doc.get("arguments", [])):
        _check_keys(raw, _ARG_KEYS, f"arguments[{i}]", strict)
        try:
            kind = ArgumentKind(raw["kind"])
            base = raw.get("base_score")
            if base is None:
                raise QbafFormatError(f"arguments[{i}]: base_score is required")
            if isinstance(base, bool) or not isinstance(base, (int, float)):
                raise QbafFormatError(f"arguments[{i}]: base_score must be a number")
            order = raw.get("order")
            if order is not None and (isinstance(order, bool) or not isinstance(order, int)):
                raise QbafFormatError(f"arguments[{i}]: order must be an integer")
            arguments.append(
                Argument(str(raw["id"]), kind, str(raw.get("text", "")), float(base), order)
            )
        except (KeyError, ValueError) as exc:
            if isinstance(exc, QbafFormatError):
                raise
            raise QbafFormatError(f"arguments[{i}]: {exc}") from exc

    edges = []
    for i, raw in enumerate(doc.get("edges", [])):
        _check_keys(raw, _EDGE_KEYS, f"edges[{i}]", strict)
        try:
            edges.append(Edge(str(raw["source"]), str(raw["target"]), Polarity(raw["polarity"])))
        except (KeyError, ValueError) as exc:
            raise QbafFormatError(f"edges[{i}]: {exc}") from exc
    return Qbaf.build(arguments, edges, meta)


def qbaf_to_dict(qbaf: Qbaf) -> dict[str, Any]:
    args = []
    for a in qbaf.arguments:
        item: dict[str, Any] = {
            "id": a.id,
            "kind": a.kind.value,
            "text": a.text,
            "base_score": a.base_score,
        }
        if a.order is not None:
            item["order"] = a.order
        args.append(item)
    return {
        "meta": {"debate_id": qbaf.meta.debate_id, "source": qbaf.meta.source},
        "arguments": args,
        "edges": [
            {"source": e.source, "target": e.target, "polarity": e.polarity.value}
            for e in qbaf.edges
        ],
    }


def dumps(doc: Any) -> str:
    """Canonical JSON text used for every file this package writes."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_qbaf(path: str | FsPath, strict: bool = False) -> Qbaf:
    """Read a QBAF file. Raises OSError, json.JSONDecodeError or QbafFormatError."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return qbaf_from_dict(doc, strict=strict)


def save_qbaf(qbaf: Qbaf, path: str | FsPath) -> None:
    FsPath(path).write_text(dumps(qbaf_to_dict(qbaf)), encoding="utf-8")
