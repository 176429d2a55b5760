"""Engine and emissions dataset handling.

Loads the bundled full-load engine runs and the per-blend emissions table
(or external CSV files with the same columns), applies the documented
cleaning rules, and provides min-max normalization and train/test splitting
for the regression pipeline.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

ENGINE_COLUMNS = ("sno", "full_load", "biodiesel_pct", "diesel_pct",
                  "speed_rpm", "power_kw", "torque_nm", "sfc")
EMISSION_COLUMNS = ("blend_pct", "hc", "co")

ENGINE_INPUT_COLUMNS = ("full_load", "biodiesel_pct", "diesel_pct", "speed_rpm")
ENGINE_TARGET_COLUMNS = ("power_kw", "torque_nm", "sfc")
EMISSION_INPUT_COLUMNS = ("blend_pct",)
EMISSION_TARGET_COLUMNS = ("hc", "co")

BUNDLED_ENGINE = "bundled-engine"
BUNDLED_EMISSIONS = "bundled-emissions"

CLEAN_COMPLEMENT_FILL = "complement-fill"
CLEAN_RAW = "raw"


class CorpusError(Exception):
    """Base class for dataset problems."""


class DatasetError(CorpusError):
    """A source file is missing, malformed, or violates a row invariant."""


class ConstantColumnError(CorpusError):
    """A column selected for normalization has max == min."""


@dataclass(frozen=True)
class EnginePattern:
    """One experimental engine row, raw engineering units.

    `sfc` is stored in the unit the source table prints (litre/kW), with no
    reinterpretation.
    """

    sno: int
    full_load: float
    biodiesel_pct: float
    diesel_pct: float
    speed_rpm: float
    power_kw: float
    torque_nm: float
    sfc: float

    @property
    def blend(self) -> float:
        return self.biodiesel_pct


@dataclass(frozen=True)
class EmissionPattern:
    """One emissions row: blend percentage with HC (ppm) and CO (%)."""

    blend_pct: float
    hc: float
    co: float

    @property
    def blend(self) -> float:
        return self.blend_pct


@dataclass(frozen=True)
class CleaningEntry:
    """One correction applied while loading a dataset."""

    row: int
    column: str
    old: float
    new: float
    rule: str

    def as_dict(self) -> dict:
        return {"row": self.row, "column": self.column, "old": self.old,
                "new": self.new, "rule": self.rule}


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of patterns plus load provenance."""

    patterns: tuple
    provenance: str
    cleaning_log: tuple
    source_digest: str

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.patterns], dtype=float)

    def matrix(self, names) -> np.ndarray:
        """Patterns-by-columns matrix of the named fields."""
        return np.array([[getattr(p, n) for n in names] for p in self.patterns],
                        dtype=float)

    def blends(self) -> tuple:
        """Distinct blend levels in first-seen order."""
        seen = []
        for p in self.patterns:
            if p.blend not in seen:
                seen.append(p.blend)
        return tuple(seen)


def _read_source(source) -> tuple[bytes, str]:
    """Return (raw bytes, provenance tag) for a path or bundled marker."""
    if source == BUNDLED_ENGINE:
        raw = resources.files("pvreg.data").joinpath("engine_full_load.csv").read_bytes()
        return raw, BUNDLED_ENGINE
    if source == BUNDLED_EMISSIONS:
        raw = resources.files("pvreg.data").joinpath("emissions_by_blend.csv").read_bytes()
        return raw, BUNDLED_EMISSIONS
    path = Path(source)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    return path.read_bytes(), "external-file"


def _parse_rows(raw: bytes, expected_columns) -> list[dict]:
    text = raw.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DatasetError("empty dataset")
    header = tuple(cell.strip() for cell in rows[0])
    missing = [c for c in expected_columns if c not in header]
    if missing:
        raise DatasetError(f"missing column {missing[0]!r} in header {header}")
    extra = [c for c in header if c not in expected_columns]
    if extra:
        raise DatasetError(f"unexpected column {extra[0]!r} in header {header}")
    if len(rows) == 1:
        raise DatasetError("empty dataset")

    parsed = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DatasetError(f"row {i}: expected {len(header)} cells, got {len(row)}")
        record = {}
        for name, cell in zip(header, row):
            try:
                record[name] = float(cell)
            except ValueError:
                raise DatasetError(f"row {i}, column {name!r}: non-numeric cell {cell.strip()!r}") from None
        record["_row"] = i
        parsed.append(record)
    return parsed


def load_engine_dataset(source=BUNDLED_ENGINE, cleaning: str = CLEAN_COMPLEMENT_FILL) -> Dataset:
    """Load an engine dataset and apply the requested cleaning rule.

    `cleaning` is "complement-fill" (default: rows whose biodiesel and diesel
    percentages do not sum to 100 get diesel_pct = 100 - biodiesel_pct, each
    change logged) or "raw" (values kept exactly as printed).
    """
    if cleaning not in (CLEAN_COMPLEMENT_FILL, CLEAN_RAW):
        raise DatasetError(f"unknown cleaning rule {cleaning!r}")
    raw, provenance = _read_source(source)
    records = _parse_rows(raw, ENGINE_COLUMNS)

    patterns = []
    log = []
    for rec in records:
        row = rec["_row"]
        if rec["speed_rpm"] <= 0:
            raise DatasetError(f"row {row}, column 'speed_rpm': must be > 0, got {rec['speed_rpm']}")
        if rec["power_kw"] < 0:
            raise DatasetError(f"row {row}, column 'power_kw': must be >= 0, got {rec['power_kw']}")
        if rec["torque_nm"] < 0:
            raise DatasetError(f"row {row}, column 'torque_nm': must be >= 0, got {rec['torque_nm']}")
        if rec["sfc"] <= 0:
            raise DatasetError(f"row {row}, column 'sfc': must be > 0, got {rec['sfc']}")
        if not 0 <= rec["biodiesel_pct"] <= 100:
            raise DatasetError(f"row {row}, column 'biodiesel_pct': must be in [0, 100], got {rec['biodiesel_pct']}")

        diesel = rec["diesel_pct"]
        if cleaning == CLEAN_COMPLEMENT_FILL:
            complement = 100.0 - rec["biodiesel_pct"]
            if abs(rec["biodiesel_pct"] + diesel - 100.0) > 1e-9:
                log.append(CleaningEntry(row=row, column="diesel_pct", old=diesel,
                                         new=complement, rule=CLEAN_COMPLEMENT_FILL))
                diesel = complement

        patterns.append(EnginePattern(
            sno=int(rec["sno"]), full_load=rec["full_load"],
            biodiesel_pct=rec["biodiesel_pct"], diesel_pct=diesel,
            speed_rpm=rec["speed_rpm"], power_kw=rec["power_kw"],
            torque_nm=rec["torque_nm"], sfc=rec["sfc"]))

    return Dataset(patterns=tuple(patterns), provenance=provenance,
                   cleaning_log=tuple(log), source_digest=_digest(raw))


def load_emission_dataset(source=BUNDLED_EMISSIONS) -> Dataset:
    """Load an emissions dataset (blend_pct, hc, co)."""
    raw, provenance = _read_source(source)
    records = _parse_rows(raw, EMISSION_COLUMNS)

    patterns = []
    for rec in records:
        row = rec["_row"]
        if rec["hc"] < 0:
            raise DatasetError(f"row {row}, column 'hc': must be >= 0, got {rec['hc']}")
        if rec["co"] < 0:
            raise DatasetError(f"row {row}, column 'co': must be >= 0, got {rec['co']}")
        patterns.append(EmissionPattern(blend_pct=rec["blend_pct"], hc=rec["hc"], co=rec["co"]))

    return Dataset(patterns=tuple(patterns), provenance=provenance,
                   cleaning_log=(), source_digest=_digest(raw))


def _digest(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


# --- normalization ---------------------------------------------------------

@dataclass(frozen=True)
class NormalizationParams:
    """Per-column min/max plus the (lo, hi) range values are mapped into.

    lo and hi must sit strictly inside (0, 1) so that sigmoid outputs can
    reach every normalized target. A column stored with min == max (allowed
    only via fit_normalizer(..., allow_constant=True)) maps to the midpoint
    of (lo, hi) and denormalizes back to its constant value.
    """

    columns: tuple
    mins: tuple
    maxs: tuple
    lo: float
    hi: float

    def as_dict(self) -> dict:
        return {"columns": list(self.columns), "mins": list(self.mins),
                "maxs": list(self.maxs), "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(columns=tuple(d["columns"]), mins=tuple(d["mins"]),
                   maxs=tuple(d["maxs"]), lo=d["lo"], hi=d["hi"])


def fit_normalizer(data: Dataset, columns, value_range=(0.05, 0.95),
                   allow_constant: bool = False) -> NormalizationParams:
    """Fit per-column min-max parameters over the dataset.

    Raises ConstantColumnError for any selected column with max == min unless
    allow_constant is set, in which case the column is mapped to the range
    midpoint.
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    if not (0.0 < lo < hi < 1.0):
        raise CorpusError(f"target range must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")
    columns = tuple(columns)
    mins, maxs = [], []
    for name in columns:
        values = data.column(name)
        cmin, cmax = float(values.min()), float(values.max())
        if cmax == cmin and not allow_constant:
            raise ConstantColumnError(
                f"column {name!r} is constant ({cmin}); exclude it or pass allow_constant=True")
        mins.append(cmin)
        maxs.append(cmax)
    return NormalizationParams(columns=columns, mins=tuple(mins), maxs=tuple(maxs), lo=lo, hi=hi)


def _check_width(x: np.ndarray, params: NormalizationParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(params.columns):
        raise CorpusError(
            f"vector length {x.shape[-1]} does not match {len(params.columns)} normalized columns")
    return x


def normalize(x, params: NormalizationParams) -> np.ndarray:
    """Map raw values into [lo, hi]; constant columns go to the midpoint."""
    x = _check_width(x, params)
    mins = np.array(params.mins)
    maxs = np.array(params.maxs)
    span = maxs - mins
    width = params.hi - params.lo
    out = np.empty_like(x)
    const = span == 0
    safe_span = np.where(const, 1.0, span)
    out = (x - mins) / safe_span * width + params.lo
    midpoint = (params.lo + params.hi) / 2.0
    return np.where(const, midpoint, out)


def denormalize(y, params: NormalizationParams) -> np.ndarray:
    """Inverse of normalize; values outside [lo, hi] extrapolate linearly."""
    values, _ = denormalize_flagged(y, params)
    return values


def denormalize_flagged(y, params: NormalizationParams):
    """Denormalize and flag entries that fell outside [lo, hi].

    Returns (values, outside) where outside is a boolean array marking the
    linearly extrapolated entries.
    """
    y = _check_width(y, params)
    mins = np.array(params.mins)
    maxs = np.array(params.maxs)
    span = maxs - mins
    width = params.hi - params.lo
    values = (y - params.lo) / width * span + mins
    outside = (y < params.lo) | (y > params.hi)
    return values, outside


# --- train/test splitting --------------------------------------------------

@dataclass(frozen=True)
class AllTrain:
    """Every pattern goes to the training side."""


@dataclass(frozen=True)
class LeaveRowsOut:
    """Hold out explicit rows; indices are 1-based source row numbers."""

    rows: tuple


@dataclass(frozen=True)
class LeaveBlendOut:
    """Hold out every pattern of one blend level."""

    blend_pct: float


def split(data: Dataset, policy, seed: int = 0):
    """Partition a dataset into (train, test) per the policy.

    The union is the whole dataset, the intersection empty, and row order is
    preserved on both sides. The current policies are deterministic; `seed`
    is accepted for interface stability.
    """
    if isinstance(policy, AllTrain):
        test_mask = [False] * len(data)
    elif isinstance(policy, LeaveRowsOut):
        held = set(policy.rows)
        test_mask = [(i + 1) in held for i in range(len(data))]
    elif isinstance(policy, LeaveBlendOut):
        test_mask = [p.blend == policy.blend_pct for p in data.patterns]
    else:
        raise CorpusError(f"unknown split policy: {policy!r}")

    train = tuple(p for p, held in zip(data.patterns, test_mask) if not held)
    test = tuple(p for p, held in zip(data.patterns, test_mask) if held)
    if not train:
        raise CorpusError("empty train side")
    make = lambda pats: Dataset(patterns=pats, provenance=data.provenance,
                                cleaning_log=data.cleaning_log,
                                source_digest=data.source_digest)
    return make(train), make(test)
