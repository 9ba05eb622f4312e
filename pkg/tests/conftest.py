from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

SSB_ENV = "EBRATES_SSB_DIR"


def load_ssb():
    """Published violent-crime data, if a local copy is configured.

    The directory must hold ``counts.csv`` and ``population.csv`` (plus an
    optional ``header_map.json`` and ``category.txt``)."""
    from ebrates.ingestion import load_csv, load_header_map

    root = os.environ.get(SSB_ENV)
    if not root or not (Path(root) / "counts.csv").exists():
        return None
    root = Path(root)
    hm = load_header_map(root / "header_map.json") if (root / "header_map.json").exists() else None
    cat_file = root / "category.txt"
    cat = cat_file.read_text().strip() if cat_file.exists() else None
    return load_csv(root / "counts.csv", root / "population.csv", cat, hm)


@pytest.fixture(scope="session")
def ssb():
    ds = load_ssb()
    if ds is None:
        pytest.skip(f"published crime data not available (set {SSB_ENV})")
    return ds


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if not acceptance_report.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance_report.LINES):
        terminalreporter.write_line(acceptance_report.LINES[key])
