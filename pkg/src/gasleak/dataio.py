"""Telemetry ingestion, cleaning, partitioning and feature preprocessing.

Telemetry travels through the package as a :class:`pandas.DataFrame` whose
columns use the SCADA export names below and whose index is the sample
ordinal (2-minute cadence).
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

INLET_PRESSURE = "Inlet Pressure"
INLET_TEMP = "Inlet Temp"
OUTLET_PRESSURE = "Outlet Pressure"
OUTLET_TEMP = "Outlet Temp"
FLOWRATE = "Flowrate"
BASELINE_OUTLET_PRESSURE = "P2"
INLET_FLOWRATE = "Inlet Flowrate"

REQUIRED_COLUMNS = (INLET_PRESSURE, INLET_TEMP, OUTLET_PRESSURE, OUTLET_TEMP, FLOWRATE)
OPTIONAL_COLUMNS = (BASELINE_OUTLET_PRESSURE, INLET_FLOWRATE)
FEATURE_COLUMNS = (INLET_PRESSURE, INLET_TEMP, OUTLET_PRESSURE, OUTLET_TEMP)


class SchemaError(ValueError):
    """The header is missing a required column."""


class InsufficientDataError(ValueError):
    """Too few records for the requested operation."""


@dataclass(frozen=True)
class TelemetryRecord:
    index: int
    inlet_pressure: float
    inlet_temperature: float
    outlet_pressure: float
    outlet_temperature: float
    flowrate: float
    reference_outlet_pressure: float | None = None
    inlet_flowrate: float | None = None


_RECORD_FIELDS = {
    INLET_PRESSURE: "inlet_pressure",
    INLET_TEMP: "inlet_temperature",
    OUTLET_PRESSURE: "outlet_pressure",
    OUTLET_TEMP: "outlet_temperature",
    FLOWRATE: "flowrate",
    BASELINE_OUTLET_PRESSURE: "reference_outlet_pressure",
    INLET_FLOWRATE: "inlet_flowrate",
}


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}"


@dataclass
class LoadResult:
    frame: pd.DataFrame
    rejects: list[Reject] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.frame)

    def rejects_report(self) -> str:
        return "".join(f"{r}\n" for r in self.rejects)


def _parse_cell(text: str) -> float | None:
    text = text.strip()
    if not text or text.lower() in {"nan", "null", "none", "na"}:
        return None
    return float(text)


def load_telemetry(source: str | os.PathLike | TextIO) -> LoadResult:
    """Parse comma-separated telemetry with a header row.

    Rows with a blank or unparseable required cell are collected into the
    rejects report (line number + reason) rather than aborting the load.
    Blank optional cells become NaN.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return _load(fh)
    return _load(source)


def _load(fh: TextIO) -> LoadResult:
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("empty input: header row missing") from None
    for name in REQUIRED_COLUMNS:
        if name not in header:
            raise SchemaError(f"missing required column {name!r}")
    positions = {name: header.index(name) for name in REQUIRED_COLUMNS + OPTIONAL_COLUMNS
                 if name in header}

    rows: dict[str, list[float]] = {name: [] for name in positions}
    rejects: list[Reject] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        parsed = {}
        problem = None
        for name, pos in positions.items():
            cell = row[pos] if pos < len(row) else ""
            try:
                value = _parse_cell(cell)
            except ValueError:
                problem = f"unparseable value {cell.strip()!r} in column {name!r}"
                break
            if value is None and name in REQUIRED_COLUMNS:
                problem = f"missing value in column {name!r}"
                break
            parsed[name] = math.nan if value is None else value
        if problem is not None:
            rejects.append(Reject(line_no, problem))
            continue
        for name, value in parsed.items():
            rows[name].append(value)

    frame = pd.DataFrame({name: np.asarray(vals, dtype=float) for name, vals in rows.items()},
                         columns=[c for c in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if c in positions])
    frame.index = pd.RangeIndex(len(frame), name="index")
    log.info("loaded %d records, rejected %d", len(frame), len(rejects))
    return LoadResult(frame, rejects)


def write_telemetry(frame: pd.DataFrame, dest: str | os.PathLike | TextIO) -> None:
    """Write telemetry in the same format :func:`load_telemetry` reads."""
    cols = [c for c in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if c in frame.columns]
    text = frame[cols].to_csv(index=False, lineterminator="\n")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_telemetry_text(text: str) -> LoadResult:
    return load_telemetry(io.StringIO(text))


def iter_records(frame: pd.DataFrame) -> Iterator[TelemetryRecord]:
    present = [c for c in REQUIRED_COLUMNS + OPTIONAL_COLUMNS if c in frame.columns]
    for ordinal, values in zip(frame.index, frame[present].itertuples(index=False, name=None)):
        kwargs = {_RECORD_FIELDS[c]: _none_if_nan(v) for c, v in zip(present, values)}
        yield TelemetryRecord(index=int(ordinal), **kwargs)


def _none_if_nan(value: float) -> float | None:
    return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)


def records_to_frame(records: Iterable[TelemetryRecord]) -> pd.DataFrame:
    records = list(records)
    data = {}
    for col, attr in _RECORD_FIELDS.items():
        values = [getattr(r, attr) for r in records]
        if col in OPTIONAL_COLUMNS and all(v is None for v in values):
            continue
        data[col] = np.array([math.nan if v is None else v for v in values], dtype=float)
    frame = pd.DataFrame(data)
    frame.index = pd.Index([r.index for r in records], name="index")
    return frame


@dataclass(frozen=True)
class CleanReport:
    n_in: int
    n_out: int

    @property
    def removed(self) -> int:
        return self.n_in - self.n_out


def clean_with_report(frame: pd.DataFrame) -> tuple[pd.DataFrame, CleanReport]:
    """Drop records with a null or non-finite required field.

    Outliers are kept on purpose: in pipeline data they often mark
    transients the observer must learn to tolerate.
    """
    required = [c for c in REQUIRED_COLUMNS if c in frame.columns]
    values = frame[required].to_numpy(dtype=float)
    keep = np.isfinite(values).all(axis=1) if len(frame) else np.ones(0, dtype=bool)
    out = frame.loc[keep]
    report = CleanReport(len(frame), len(out))
    log.info("cleaning kept %d of %d records", report.n_out, report.n_in)
    return out, report


def clean(frame: pd.DataFrame) -> pd.DataFrame:
    return clean_with_report(frame)[0]


def split(data, test_fraction: float = 0.30, seed: int = 12):
    """Seeded shuffle split into (train, test).

    Works on DataFrames and arrays alike. The test share is
    ``ceil(n * test_fraction)`` rows.
    """
    n = len(data)
    if n < 10:
        raise InsufficientDataError(f"need at least 10 records to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    n_test = math.ceil(n * test_fraction)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    if isinstance(data, (pd.DataFrame, pd.Series)):
        return data.iloc[train_idx], data.iloc[test_idx]
    data = np.asarray(data)
    return data[train_idx], data[test_idx]


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray | None
    feature_names: tuple[str, ...]
    target_name: str | None = None

    def __len__(self) -> int:
        return self.X.shape[0]


def feature_matrix(
    frame: pd.DataFrame,
    target: str | None = FLOWRATE,
    features: Sequence[str] = FEATURE_COLUMNS,
) -> FeatureMatrix:
    missing = [c for c in features if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing feature columns {missing}")
    X = frame[list(features)].to_numpy(dtype=float)
    y = None
    if target is not None:
        if target not in frame.columns:
            raise SchemaError(f"missing target column {target!r}")
        y = frame[target].to_numpy(dtype=float)
    return FeatureMatrix(X, y, tuple(features), target)


@dataclass(frozen=True)
class Scaler:
    """Min-max scaler fit on training rows only; never clips."""

    minimum: np.ndarray
    scale: np.ndarray
    constant: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.minimum.shape[0]:
            raise ValueError(f"expected {self.minimum.shape[0]} columns, got {X.shape[-1]}")
        out = (X - self.minimum) / self.scale
        out[..., self.constant] = 0.0
        return out

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.minimum

    def to_dict(self) -> dict:
        return {"minimum": self.minimum, "scale": self.scale, "constant": self.constant}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["minimum"], float), np.asarray(d["scale"], float),
                   np.asarray(d["constant"], bool))


def fit_scaler(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InsufficientDataError("cannot fit a scaler on an empty matrix")
    lo = X.min(axis=0)
    rng = X.max(axis=0) - lo
    constant = rng <= 0
    if constant.any():
        log.info("constant columns %s map to 0", np.flatnonzero(constant).tolist())
    return Scaler(lo, np.where(constant, 1.0, rng), constant)


def apply_scaler(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    return scaler.transform(X)


@dataclass(frozen=True)
class PolyExpansion:
    """Full polynomial expansion with a leading bias column."""

    degree: int
    input_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")

    @property
    def terms(self) -> list[tuple[int, ...]]:
        d = len(self.input_names)
        terms: list[tuple[int, ...]] = [()]
        for deg in range(1, self.degree + 1):
            terms.extend(itertools.combinations_with_replacement(range(d), deg))
        return terms

    @property
    def names(self) -> list[str]:
        out = []
        for term in self.terms:
            if not term:
                out.append("1")
                continue
            parts = []
            for i, group in itertools.groupby(term):
                power = len(list(group))
                name = self.input_names[i]
                parts.append(name if power == 1 else f"{name}^{power}")
            out.append(" ".join(parts))
        return out

    @property
    def n_output(self) -> int:
        return len(self.terms)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != len(self.input_names):
            raise ValueError(f"expected {len(self.input_names)} columns, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.n_output))
        for j, term in enumerate(self.terms):
            col = np.ones(X.shape[0])
            for i in term:
                col = col * X[:, i]
            out[:, j] = col
        return out


def poly_expand(
    X: np.ndarray, degree: int = 2, names: Sequence[str] | None = None
) -> tuple[np.ndarray, list[str]]:
    X = np.asarray(X, dtype=float)
    if names is None:
        names = [f"x{i}" for i in range(X.shape[1])]
    poly = PolyExpansion(degree, tuple(names))
    return poly.transform(X), poly.names
