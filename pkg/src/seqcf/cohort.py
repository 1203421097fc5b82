"""Temporal feature vectors, cohort loading, and descriptive statistics.

A cohort stores one uint8 array of shape (n, 3, d): axis 1 is the period
(History, Past, Last), axis 2 the feature index from the catalog. All
statistics here are pure functions over that array.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .catalog import FeatureCatalog
from .errors import CohortError


class Period(IntEnum):
    HISTORY = 0
    PAST = 1
    LAST = 2

    @property
    def suffix(self) -> str:
        return _SUFFIXES[self]

    @classmethod
    def from_suffix(cls, suffix: str) -> "Period":
        try:
            return _BY_SUFFIX[suffix]
        except KeyError:
            raise CohortError(f"unknown period suffix: {suffix!r}") from None


_SUFFIXES = {Period.HISTORY: "history", Period.PAST: "past", Period.LAST: "last"}
_BY_SUFFIX = {v: k for k, v in _SUFFIXES.items()}


@dataclass(frozen=True)
class TemporalFeatureVector:
    """Per-patient binary indicators over the three periods, shape (3, d)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.shape[0] != 3 or self.bits.ndim != 2:
            raise CohortError(f"temporal vector must have shape (3, d), got {self.bits.shape}")

    @property
    def d(self) -> int:
        return self.bits.shape[1]

    @property
    def h(self) -> np.ndarray:
        return self.bits[Period.HISTORY]

    @property
    def s(self) -> np.ndarray:
        return self.bits[Period.PAST]

    @property
    def l(self) -> np.ndarray:
        return self.bits[Period.LAST]

    def get(self, feature_index: int, period: Period) -> int:
        return int(self.bits[period, feature_index])

    def copy(self) -> "TemporalFeatureVector":
        return TemporalFeatureVector(self.bits.copy())

    def flat(self) -> np.ndarray:
        """Concatenated (h, s, l) vector of length 3d."""
        return self.bits.reshape(-1)


@dataclass(frozen=True)
class Patient:
    patient_id: str
    features: TemporalFeatureVector
    outcome: int


@dataclass(frozen=True)
class Cohort:
    catalog: FeatureCatalog
    patient_ids: tuple[str, ...]
    X: np.ndarray  # (n, 3, d) uint8
    y: np.ndarray  # (n,) uint8
    missing_columns: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.X.ndim != 3 or self.X.shape[1] != 3 or self.X.shape[2] != self.catalog.d:
            raise CohortError(
                f"cohort array shape {self.X.shape} inconsistent with catalog d={self.catalog.d}"
            )
        if len(self.patient_ids) != self.X.shape[0] or self.y.shape[0] != self.X.shape[0]:
            raise CohortError("patient ids, features and outcomes have mismatched lengths")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def patient(self, patient_id: str) -> Patient:
        try:
            i = self.patient_ids.index(patient_id)
        except ValueError:
            raise CohortError(f"unknown patient id: {patient_id!r}") from None
        return self.patient_at(i)

    def patient_at(self, i: int) -> Patient:
        return Patient(self.patient_ids[i], TemporalFeatureVector(self.X[i]), int(self.y[i]))

    def __iter__(self):
        return (self.patient_at(i) for i in range(self.n))


def _parse_header(columns: list[str], catalog: FeatureCatalog) -> dict[str, tuple[int, Period]]:
    mapping: dict[str, tuple[int, Period]] = {}
    for col in columns:
        if col in ("patient_id", "outcome"):
            continue
        code, sep, suffix = col.rpartition("__")
        if not sep:
            raise CohortError(f"column {col!r} has no period suffix")
        period = Period.from_suffix(suffix)
        if code not in catalog:
            raise CohortError(f"column {col!r} references unknown feature {code!r}")
        mapping[col] = (catalog.index_of(code), period)
    return mapping


def _parse_bit(value: str, row: int, col: str) -> int:
    v = value.strip()
    if v == "0":
        return 0
    if v == "1":
        return 1
    raise CohortError(f"non-binary value at row {row}, column {col!r}: {value!r}")


def load_cohort(source: str, catalog: FeatureCatalog, *, fmt: str = "csv") -> Cohort:
    """Parse a cohort from CSV (default) or JSON-lines text."""
    if fmt == "jsonl":
        return _load_jsonl(source, catalog)
    if fmt != "csv":
        raise CohortError(f"unknown cohort format: {fmt!r}")

    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise CohortError("empty cohort file") from None
    if "patient_id" not in header or "outcome" not in header:
        raise CohortError("cohort header must contain patient_id and outcome columns")
    mapping = _parse_header(header, catalog)

    expected = {f"{code}__{p.suffix}" for code in catalog.codes() for p in Period}
    missing = tuple(sorted(expected - set(header)))

    ids: list[str] = []
    seen: set[str] = set()
    rows: list[np.ndarray] = []
    outcomes: list[int] = []
    id_col = header.index("patient_id")
    out_col = header.index("outcome")
    for rownum, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise CohortError(f"row {rownum} has {len(row)} cells, expected {len(header)}")
        pid = row[id_col].strip()
        if not pid:
            raise CohortError(f"empty patient_id at row {rownum}")
        if pid in seen:
            raise CohortError(f"duplicate patient_id {pid!r} at row {rownum}")
        seen.add(pid)
        bits = np.zeros((3, catalog.d), dtype=np.uint8)
        for j, col in enumerate(header):
            if col in ("patient_id", "outcome"):
                continue
            fidx, period = mapping[col]
            bits[period, fidx] = _parse_bit(row[j], rownum, col)
        ids.append(pid)
        rows.append(bits)
        outcomes.append(_parse_bit(row[out_col], rownum, "outcome"))

    X = np.stack(rows) if rows else np.zeros((0, 3, catalog.d), dtype=np.uint8)
    return Cohort(
        catalog=catalog,
        patient_ids=tuple(ids),
        X=X,
        y=np.asarray(outcomes, dtype=np.uint8),
        missing_columns=missing,
    )


def _load_jsonl(source: str, catalog: FeatureCatalog) -> Cohort:
    ids: list[str] = []
    seen: set[str] = set()
    rows: list[np.ndarray] = []
    outcomes: list[int] = []
    for rownum, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CohortError(f"invalid JSON at line {rownum}: {exc}") from exc
        pid = str(obj.get("patient_id", "")).strip()
        if not pid:
            raise CohortError(f"empty patient_id at line {rownum}")
        if pid in seen:
            raise CohortError(f"duplicate patient_id {pid!r} at line {rownum}")
        seen.add(pid)
        bits = np.zeros((3, catalog.d), dtype=np.uint8)
        for period in Period:
            for code in obj.get(period.suffix, []):
                if code not in catalog:
                    raise CohortError(f"line {rownum} references unknown feature {code!r}")
                bits[period, catalog.index_of(code)] = 1
        outcome = obj.get("outcome")
        if outcome not in (0, 1):
            raise CohortError(f"non-binary outcome at line {rownum}: {outcome!r}")
        ids.append(pid)
        rows.append(bits)
        outcomes.append(int(outcome))
    X = np.stack(rows) if rows else np.zeros((0, 3, catalog.d), dtype=np.uint8)
    return Cohort(catalog, tuple(ids), X, np.asarray(outcomes, dtype=np.uint8))


def save_cohort(cohort: Cohort) -> str:
    """Render a cohort as CSV text (inverse of load_cohort)."""
    header = ["patient_id"]
    cols: list[tuple[int, Period]] = []
    for code in cohort.catalog.codes():
        for period in Period:
            header.append(f"{code}__{period.suffix}")
            cols.append((cohort.catalog.index_of(code), period))
    header.append("outcome")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(cohort.n):
        row = [cohort.patient_ids[i]]
        row.extend(str(int(cohort.X[i, p, f])) for f, p in cols)
        row.append(str(int(cohort.y[i])))
        writer.writerow(row)
    return buf.getvalue()


def prevalence(cohort: Cohort, code: str, period: Period) -> float:
    """Fraction of patients with the feature present in the given period."""
    if cohort.n == 0:
        raise CohortError("prevalence undefined on an empty cohort")
    fidx = cohort.catalog.index_of(code)
    return float(cohort.X[:, period, fidx].mean())


@dataclass(frozen=True)
class PersistenceStats:
    p_given_present: float
    p_given_absent: float
    ratio: float


def persistence_stats(cohort: Cohort, code: str) -> PersistenceStats:
    """P(present at Last | present/absent at History) and their ratio."""
    fidx = cohort.catalog.index_of(code)
    h = cohort.X[:, Period.HISTORY, fidx].astype(bool)
    l = cohort.X[:, Period.LAST, fidx].astype(bool)
    n_present = int(h.sum())
    n_absent = int((~h).sum())
    if n_present == 0:
        raise CohortError(f"empty stratum: present ({code})")
    if n_absent == 0:
        raise CohortError(f"empty stratum: absent ({code})")
    p1 = float(l[h].mean())
    p0 = float(l[~h].mean())
    ratio = math.inf if p0 == 0.0 else p1 / p0
    return PersistenceStats(p1, p0, ratio)
