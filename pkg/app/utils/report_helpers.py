from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd

from app.core.exceptions import ConfigError


# -------- writers --------
def write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as e:
        raise ConfigError(f"Cannot write {path}: {e}") from e
    return path


def write_json(path: Path, payload: Any) -> Path:
    return write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_frame_csv(path: Path, frame: pd.DataFrame) -> Path:
    return write_text(path, frame.to_csv(index=False, lineterminator="\n"))


# -------- readers --------
def read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e}") from e


def read_json(path: Path) -> Any:
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def frame_to_jsonl(frame: pd.DataFrame) -> str:
    """One JSON object per row, newline-terminated; empty frames give ''."""
    if frame.empty:
        return ""
    text = frame.to_json(orient="records", lines=True)
    return text if text.endswith("\n") else text + "\n"
