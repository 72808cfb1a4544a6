"""Canonical line-delimited report records.

Reports must be byte-identical across runs given the same config and
seed, so records are rendered by a fixed serializer: insertion-ordered
keys, 12-significant-digit decimal fields, no whitespace variation, one
record per line. Ticks are logical sequence numbers, never wall clock.
"""
from __future__ import annotations

import json
import math
from typing import Any, Iterable


def _render(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("report fields must be finite numbers")
        return format(value, ".12g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, dict):
        items = ",".join(f"{json.dumps(str(k), ensure_ascii=True)}:{_render(v)}" for k, v in value.items())
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_render(v) for v in value) + "]"
    # numpy scalars and other number-likes
    if hasattr(value, "item"):
        return _render(value.item())
    raise TypeError(f"cannot render {type(value).__name__} in a report record")


def render_record(record: dict) -> str:
    """One self-describing JSON object on one line."""
    return _render(record)


def render_document(record: dict) -> str:
    """Canonical standalone JSON document (used for snapshots and codecs)."""
    return _render(record) + "\n"


class ReportWriter:
    """Collects records, assigns logical ticks, renders canonical lines."""

    def __init__(self) -> None:
        self.records: list[dict] = []

    def emit(self, kind: str, **fields: Any) -> dict:
        record = {"record": kind, "tick": len(self.records), **fields}
        self.records.append(record)
        return record

    def add(self, record: dict) -> dict:
        return self.emit(record.get("record", "event"), **{k: v for k, v in record.items() if k != "record"})

    def render(self) -> str:
        return "".join(render_record(r) + "\n" for r in self.records)


def render_records(records: Iterable[dict]) -> str:
    return "".join(render_record(r) + "\n" for r in records)
