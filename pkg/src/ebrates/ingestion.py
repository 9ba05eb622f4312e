"""Load count and population tables, join them per (town, year) and persist a
normalized dataset."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .distributions import RateSample
from .errors import DomainError, InputError
from .estimators import TownObservation

__all__ = [
    "Dataset",
    "load_csv",
    "load_header_map",
    "rates",
    "observations_in",
    "save_dataset",
    "load_dataset",
    "file_sha256",
]

log = logging.getLogger(__name__)

COUNT_COLUMNS = ("town", "year", "count")
POPULATION_COLUMNS = ("town", "year", "population")
CATEGORY_COLUMN = "category"
NORMALIZED_COLUMNS = ("town", "year", "count", "population")


@dataclass(frozen=True)
class Dataset:
    observations: tuple[TownObservation, ...]
    years: tuple[int, ...]
    provenance: Mapping[str, str] = field(default_factory=dict)
    rejected: tuple[str, ...] = ()

    def towns(self, year: Optional[int] = None) -> list[str]:
        return sorted({o.town for o in self.observations if year is None or o.year == year})


def file_sha256(*paths: Path) -> str:
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    return h.hexdigest()


def load_header_map(path) -> dict[str, str]:
    """Read a JSON object mapping canonical column names (``town``, ``year``,
    ``count``, ``population``, ``category``) to the names used in the files."""
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise InputError(f"{path}: header map must be a JSON object of strings")
    return mapping


def _read_table(path: Path, wanted: Sequence[str], header_map: Mapping[str, str], optional=()):
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        index = {}
        for col in list(wanted) + list(optional):
            name = header_map.get(col, col)
            if name in header:
                index[col] = header.index(name)
            elif col in wanted:
                raise InputError(f"{path}:1: missing column {name!r} (have {header})")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, {col: row[i].strip() for col, i in index.items()}))
    return rows


def _parse_int(path, lineno, col, text) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"{path}:{lineno}: column {col!r}: invalid integer {text!r}") from None


def load_csv(
    counts_path,
    populations_path,
    crime_category: Optional[str] = None,
    header_map: Optional[Mapping[str, str]] = None,
) -> Dataset:
    """Inner-join a counts table with a population table.

    Counts rows need ``town,year,count`` and, when ``crime_category`` is
    given, a ``category`` column to filter on. Rows violating
    ``0 <= count <= population`` or ``population >= 1`` are dropped with a
    diagnostic; (town, year) pairs present in only one file are dropped with a
    warning.
    """
    header_map = dict(header_map or {})
    counts_path, populations_path = Path(counts_path), Path(populations_path)
    crows = _read_table(counts_path, COUNT_COLUMNS, header_map, optional=(CATEGORY_COLUMN,))
    prows = _read_table(populations_path, POPULATION_COLUMNS, header_map)

    has_category = any(CATEGORY_COLUMN in r for _, r in crows)
    if crime_category is not None and not has_category:
        raise InputError(f"{counts_path}: no {header_map.get(CATEGORY_COLUMN, CATEGORY_COLUMN)!r} column to select {crime_category!r}")
    if crime_category is None and has_category:
        cats = {r[CATEGORY_COLUMN] for _, r in crows}
        if len(cats) > 1:
            raise InputError(f"{counts_path}: several categories present {sorted(cats)}; choose one")

    counts: dict[tuple[str, int], int] = {}
    for lineno, r in crows:
        if crime_category is not None and r[CATEGORY_COLUMN] != crime_category:
            continue
        key = (r["town"], _parse_int(counts_path, lineno, "year", r["year"]))
        if key in counts:
            raise InputError(f"{counts_path}:{lineno}: duplicate (town, year) {key}")
        counts[key] = _parse_int(counts_path, lineno, "count", r["count"])

    pops: dict[tuple[str, int], int] = {}
    for lineno, r in prows:
        key = (r["town"], _parse_int(populations_path, lineno, "year", r["year"]))
        if key in pops:
            raise InputError(f"{populations_path}:{lineno}: duplicate (town, year) {key}")
        pops[key] = _parse_int(populations_path, lineno, "population", r["population"])

    observations = []
    rejected = []
    for key in sorted(counts):
        town, year = key
        if key not in pops:
            log.warning("no population for %s/%d; row dropped", town, year)
            rejected.append(f"{town}/{year}: no population row")
            continue
        k, n = counts[key], pops[key]
        if n < 1 or not 0 <= k <= n:
            msg = f"{town}/{year}: count={k} population={n} violates 0 <= count <= population, population >= 1"
            log.warning("rejected %s", msg)
            rejected.append(msg)
            continue
        observations.append(TownObservation(town, year, k, n))
    for key in sorted(set(pops) - set(counts)):
        log.warning("no count for %s/%d; row dropped", *key)

    if not observations:
        raise InputError("joining counts and populations produced an empty dataset")
    years = tuple(sorted({o.year for o in observations}))
    provenance = {
        "counts": str(counts_path),
        "population": str(populations_path),
        "sha256": file_sha256(counts_path, populations_path),
    }
    if crime_category is not None:
        provenance["category"] = crime_category
    return Dataset(tuple(observations), years, provenance, tuple(rejected))


def observations_in(ds: Dataset, year: int) -> list[TownObservation]:
    """Observations of one year, ordered by ascending town identifier."""
    obs = sorted((o for o in ds.observations if o.year == year), key=lambda o: o.town)
    if not obs:
        raise DomainError(f"year {year} not in dataset (years: {list(ds.years)})")
    return obs


def rates(ds: Dataset, year: int) -> RateSample:
    """Pooled MLEs k/n of one year, by ascending town identifier."""
    obs = observations_in(ds, year)
    return RateSample(tuple(o.count / o.population for o in obs))


def save_dataset(ds: Dataset, path) -> Path:
    """Write ``town,year,count,population`` plus a ``.sha256`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NORMALIZED_COLUMNS)
        for o in sorted(ds.observations, key=lambda o: (o.town, o.year)):
            w.writerow([o.town, o.year, o.count, o.population])
    sidecar = path.with_name(path.name + ".sha256")
    sidecar.write_text(f"{file_sha256(path)}  {path.name}\n", encoding="utf-8")
    return path


def load_dataset(path) -> Dataset:
    """Read a normalized dataset, verifying the checksum sidecar if present."""
    path = Path(path)
    sidecar = path.with_name(path.name + ".sha256")
    digest = file_sha256(path)
    if sidecar.exists():
        expected = sidecar.read_text(encoding="utf-8").split()[0]
        if expected != digest:
            raise InputError(f"{path}: checksum mismatch (sidecar {expected}, file {digest})")
    rows = _read_table(path, NORMALIZED_COLUMNS, {})
    seen = set()
    observations = []
    for lineno, r in rows:
        year = _parse_int(path, lineno, "year", r["year"])
        key = (r["town"], year)
        if key in seen:
            raise InputError(f"{path}:{lineno}: duplicate (town, year) {key}")
        seen.add(key)
        k = _parse_int(path, lineno, "count", r["count"])
        n = _parse_int(path, lineno, "population", r["population"])
        try:
            observations.append(TownObservation(r["town"], year, k, n))
        except DomainError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    if not observations:
        raise InputError(f"{path}: no observations")
    observations.sort(key=lambda o: (o.town, o.year))
    years = tuple(sorted({o.year for o in observations}))
    return Dataset(tuple(observations), years, {"dataset": str(path), "sha256": digest})
