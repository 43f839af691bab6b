"""Atomic writers for run outputs."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .telemetry import RunRecord

__all__ = ["write_atomic", "write_run", "write_json"]


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, payload) -> Path:
    return write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_run(record: RunRecord, out_dir) -> tuple[Path, Path]:
    """Write ``<label>.trace.csv`` and ``<label>.run.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    trace_path = write_atomic(out_dir / f"{record.label}.trace.csv", record.trace.to_csv())
    run_path = write_json(out_dir / f"{record.label}.run.json", record.to_dict())
    return trace_path, run_path
