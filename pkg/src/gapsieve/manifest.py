"""Run manifests and cross-run trend summaries.

A manifest records what was computed (normalized argv, notes, sampling spec)
plus a fingerprint of the canonical result document.  Re-running the stored
argv must reproduce the fingerprint byte-for-byte; wall time and worker count
live in a telemetry section that is explicitly outside the comparison.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import TrendError
from .serialize import canonical_json, fingerprint

VERSION = "0.1.0"


def build_manifest(
    command: str,
    argv: list[str],
    result_doc: dict,
    notes: list[str] | None = None,
    sampling: dict | None = None,
    wall_time: float = 0.0,
    workers: int = 1,
) -> dict:
    return {
        "version": VERSION,
        "command": command,
        "argv": list(argv),
        "notes": list(notes or []),
        "sampling": dict(sampling or {}),
        "fingerprint": fingerprint(result_doc),
        "telemetry": {"wall_time_s": wall_time, "workers": workers},
    }


def manifest_spec(manifest: dict) -> dict:
    """The reproducible part: everything except telemetry."""
    return {k: v for k, v in manifest.items() if k != "telemetry"}


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(canonical_json(manifest) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# trend summaries over saved result documents
# ---------------------------------------------------------------------------

_METRICS = {
    "pure": ("ratio", 1.0),
    "twisted": ("ratio", 1.0),
    "bv": ("total_over_x", 0.0),
}


def _metric_value(doc: dict) -> float:
    kind = doc.get("kind")
    if kind in ("pure", "twisted"):
        if doc.get("ratio") is None:
            raise TrendError(f"{kind} report has no ratio (vanishing main term)")
        return float(doc["ratio"])
    if kind == "bv":
        return float(doc["total"]) / float(doc["x"])
    raise TrendError(f"no trend metric for kind {kind!r}")


def emit_trend(docs: list[dict]) -> dict:
    """Direction of a shared metric across >= 2 compatible reports."""
    if len(docs) < 2:
        raise TrendError(f"need >= 2 reports, got {len(docs)}")
    kinds = {d.get("kind") for d in docs}
    if len(kinds) != 1:
        raise TrendError(f"mixed report kinds {sorted(map(str, kinds))}")
    kind = kinds.pop()
    if kind not in _METRICS:
        raise TrendError(f"kind {kind!r} has no trend metric")
    metric, target = _METRICS[kind]
    values = [_metric_value(d) for d in docs]
    gaps = [abs(v - target) for v in values]
    if all(g == gaps[0] for g in gaps):
        direction = "flat"
    elif all(gaps[i] > gaps[i + 1] for i in range(len(gaps) - 1)):
        direction = "toward"
    elif all(gaps[i] < gaps[i + 1] for i in range(len(gaps) - 1)):
        direction = "away"
    else:
        direction = "mixed"
    return {
        "kind": "trend",
        "metric": metric,
        "target": target,
        "values": values,
        "gaps": gaps,
        "direction": direction,
    }


def load_docs(paths: list[str | Path]) -> list[dict]:
    docs = []
    for p in paths:
        doc = json.loads(Path(p).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise TrendError(f"{p}: not a report document")
        docs.append(doc)
    return docs
