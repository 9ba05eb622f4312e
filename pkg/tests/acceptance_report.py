"""Collects one status line per acceptance criterion for the terminal
summary."""
from __future__ import annotations

LINES: dict[str, str] = {}


def record(key: str, status: str, detail: str) -> None:
    LINES[key] = f"criterion {key}: {status} - {detail}"
    print(LINES[key])
