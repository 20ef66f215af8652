"""Tabular datasets: schema, CSV ingestion, discretization, splitting and
equivalence classes.

Datasets are immutable column stores. Categorical cells are strings,
continuous cells are floats, and missing cells are the ``MISSING`` label
(categorical) or NaN (continuous). Everything that consumes randomness
takes an explicit integer seed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, ParseError, SchemaError

MISSING = "⟨missing⟩"

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"
QUASI_IDENTIFIER = "quasi-identifier"
SENSITIVE = "sensitive"
OTHER = "other"

_KINDS = (CATEGORICAL, CONTINUOUS)
_ROLES = (QUASI_IDENTIFIER, SENSITIVE, OTHER)


@dataclass(frozen=True)
class AttributeSchema:
    """Declaration of one column."""

    name: str
    kind: str = CATEGORICAL
    role: str = OTHER
    bins: int = 20

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must be nonempty")
        if self.kind not in _KINDS:
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in _ROLES:
            raise SchemaError(f"attribute {self.name!r}: unknown role {self.role!r}")
        if self.kind == CONTINUOUS and self.bins < 2:
            raise SchemaError(f"attribute {self.name!r}: bins must be >= 2")


def validate_schema(schema: Sequence[AttributeSchema], require_qi: bool = False) -> tuple:
    schema = tuple(schema)
    names = [a.name for a in schema]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"duplicate attribute names: {dupes}")
    if require_qi and not any(a.role == QUASI_IDENTIFIER for a in schema):
        raise SchemaError(
            "no quasi-identifier declared (R1: vulnerability metrics are computed "
            "over quasi-identifiers ascertained by the data controller)"
        )
    return schema


def qi_names(schema: Sequence[AttributeSchema]) -> list[str]:
    return [a.name for a in schema if a.role == QUASI_IDENTIFIER]


def sensitive_names(schema: Sequence[AttributeSchema]) -> list[str]:
    return [a.name for a in schema if a.role == SENSITIVE]


def load_schema(path) -> tuple:
    """Read a schema file (YAML or JSON).

    The document is either a list of attribute mappings or a mapping with an
    ``attributes`` list. Each mapping takes ``name``, ``kind``, ``role`` and
    optionally ``bins``.
    """
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if isinstance(doc, dict):
        doc = doc.get("attributes")
    if not isinstance(doc, list) or not doc:
        raise SchemaError(f"{path}: expected a nonempty list of attributes")
    attrs = []
    for entry in doc:
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(f"{path}: every attribute needs a name")
        unknown = set(entry) - {"name", "kind", "role", "bins"}
        if unknown:
            raise SchemaError(f"{path}: unknown attribute fields {sorted(unknown)}")
        attrs.append(AttributeSchema(**{k: entry[k] for k in entry}))
    return validate_schema(attrs)


def _coerce_column(attr: AttributeSchema, values) -> np.ndarray:
    if attr.kind == CONTINUOUS:
        out = np.empty(len(values), dtype=np.float64)
        for i, v in enumerate(values):
            if v is None or (isinstance(v, str) and v.strip() == ""):
                out[i] = np.nan
            else:
                out[i] = float(v)
        return out
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        if v is None or (isinstance(v, float) and math.isnan(v)) or v == "":
            out[i] = MISSING
        else:
            out[i] = str(v)
    return out


class Dataset:
    """Immutable table of records over a typed schema.

    ``ids`` is an opaque per-row index that survives ``take`` so that
    subsets can be traced back to the rows they came from.
    """

    __slots__ = ("schema", "_columns", "ids")

    def __init__(self, schema, columns, ids=None):
        schema = validate_schema(schema)
        cols = {}
        n = None
        for attr in schema:
            if attr.name not in columns:
                raise SchemaError(f"missing column {attr.name!r}")
            col = columns[attr.name]
            if not (isinstance(col, np.ndarray) and col.dtype == _dtype(attr)):
                col = _coerce_column(attr, list(col))
            if n is None:
                n = len(col)
            elif len(col) != n:
                raise SchemaError(f"column {attr.name!r} has {len(col)} cells, expected {n}")
            col = col.view()
            col.flags.writeable = False
            cols[attr.name] = col
        n = n or 0
        ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        if len(ids) != n:
            raise SchemaError("ids length does not match row count")
        ids = ids.view()
        ids.flags.writeable = False
        self.schema = schema
        self._columns = cols
        self.ids = ids

    @classmethod
    def from_rows(cls, schema, rows: Iterable[Sequence], ids=None) -> "Dataset":
        schema = validate_schema(schema)
        rows = list(rows)
        for i, row in enumerate(rows):
            if len(row) != len(schema):
                raise SchemaError(f"row {i} has {len(row)} cells, expected {len(schema)}")
        columns = {a.name: [r[j] for r in rows] for j, a in enumerate(schema)}
        return cls(schema, {a.name: _coerce_column(a, columns[a.name]) for a in schema}, ids)

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return f"Dataset({len(self)} rows, attributes={self.names})"

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.schema]

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise ConfigError(f"unknown attribute {name!r}")

    def column(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise ConfigError(f"unknown attribute {name!r}") from None

    def rows(self) -> list[tuple]:
        cols = [self._columns[n] for n in self.names]
        return list(zip(*cols)) if cols else [() for _ in range(len(self))]

    def take(self, positions) -> "Dataset":
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(
            self.schema,
            {n: c[positions] for n, c in self._columns.items()},
            self.ids[positions],
        )

    def select_ids(self, ids) -> "Dataset":
        mask = np.isin(self.ids, np.asarray(list(ids), dtype=np.int64))
        return self.take(np.flatnonzero(mask))

    def with_schema(self, schema) -> "Dataset":
        return Dataset(schema, self._columns, self.ids)

    def concat(self, other: "Dataset") -> "Dataset":
        if self.schema != other.schema:
            raise SchemaError("cannot concatenate datasets with different schemas")
        return Dataset(
            self.schema,
            {n: np.concatenate([self._columns[n], other.column(n)]) for n in self.names},
            np.concatenate([self.ids, other.ids]),
        )

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.names)
        for row in self.rows():
            writer.writerow(["" if _is_missing(v) else _fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()


def _dtype(attr):
    return np.dtype(np.float64) if attr.kind == CONTINUOUS else np.dtype(object)


def _is_missing(v) -> bool:
    return v == MISSING or (isinstance(v, float) and math.isnan(v))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))  # np.float64 repr carries a type prefix
    return str(v)


def load_csv(path, schema) -> Dataset:
    """Read a UTF-8 comma-delimited file with a header row.

    Header order may differ from the schema; columns outside the schema are
    ignored. Empty cells are missing.
    """
    schema = validate_schema(schema)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        positions = {}
        for attr in schema:
            if attr.name not in header:
                raise SchemaError(f"{path}: missing column {attr.name!r}")
            positions[attr.name] = header.index(attr.name)
        raw = {a.name: [] for a in schema}
        for rowno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {rowno} has {len(row)} cells", row=rowno)
            for attr in schema:
                cell = row[positions[attr.name]].strip()
                if attr.kind == CONTINUOUS and cell != "":
                    try:
                        float(cell)
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {rowno}, column {attr.name!r}: "
                            f"cannot parse {cell!r} as a number",
                            row=rowno,
                            column=attr.name,
                        ) from None
                raw[attr.name].append(cell)
    return Dataset(schema, {a.name: _coerce_column(a, raw[a.name]) for a in schema})


@dataclass(frozen=True)
class Discretizer:
    """Equal-width binning fitted on one dataset and applicable to others.

    Values outside the fitted range are clipped into the outer bins so that
    records from other datasets always receive a label.
    """

    edges: dict = field(default_factory=dict)  # name -> (lo, hi, bins)

    @classmethod
    def fit(cls, data: Dataset, bins: int | None = None) -> "Discretizer":
        if bins is not None and bins < 2:
            raise ConfigError("bins must be >= 2")
        edges = {}
        for attr in data.schema:
            if attr.kind != CONTINUOUS:
                continue
            col = data.column(attr.name)
            finite = col[~np.isnan(col)]
            if finite.size == 0:  # nothing to fit: one degenerate bin
                edges[attr.name] = (0.0, 0.0, bins or attr.bins)
                continue
            edges[attr.name] = (float(finite.min()), float(finite.max()), bins or attr.bins)
        return cls(edges)

    def transform(self, data: Dataset, skip=()) -> Dataset:
        """Apply the fitted edges; attributes named in ``skip`` stay numeric."""
        schema = []
        columns = {}
        for attr in data.schema:
            col = data.column(attr.name)
            if attr.kind != CONTINUOUS or attr.name in skip:
                schema.append(attr)
                columns[attr.name] = col
                continue
            if attr.name not in self.edges:
                raise SchemaError(f"no bin edges fitted for {attr.name!r}")
            lo, hi, bins = self.edges[attr.name]
            columns[attr.name] = _bin_labels(col, lo, hi, bins)
            schema.append(replace(attr, kind=CATEGORICAL))
        return Dataset(schema, columns, data.ids)

    def bin_edges(self, name: str) -> np.ndarray:
        lo, hi, bins = self.edges[name]
        return np.linspace(lo, hi, bins + 1)


def _bin_labels(col: np.ndarray, lo: float, hi: float, bins: int) -> np.ndarray:
    out = np.empty(len(col), dtype=object)
    missing = np.isnan(col)
    if hi > lo:
        idx = np.floor((col - lo) * bins / (hi - lo))
        idx = np.clip(np.nan_to_num(idx), 0, bins - 1).astype(np.int64)
    else:
        idx = np.zeros(len(col), dtype=np.int64)
    for i in range(len(col)):
        out[i] = MISSING if missing[i] else f"bin{idx[i]}"
    return out


def discretize(data: Dataset, bins: int | None = None) -> Dataset:
    """Bin every continuous attribute over its own [min, max].

    ``bins`` overrides the per-attribute setting. Categorical attributes pass
    through untouched, so the operation is idempotent.
    """
    return Discretizer.fit(data, bins).transform(data)


@dataclass(frozen=True)
class Partition:
    train_ids: np.ndarray
    holdout_ids: np.ndarray
    ratio: float
    seed: int

    def split(self, data: Dataset) -> tuple[Dataset, Dataset]:
        return data.select_ids(self.train_ids), data.select_ids(self.holdout_ids)


def partition(data: Dataset, ratio: float, seed: int) -> Partition:
    """Uniform random train/holdout split without replacement."""
    if not 0 < ratio < 1:
        raise ConfigError(f"partition ratio must be in (0, 1), got {ratio}")
    n = len(data)
    if n == 0:
        raise ConfigError("cannot partition an empty dataset")
    n_train = int(math.floor(ratio * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    return Partition(
        train_ids=np.sort(data.ids[perm[:n_train]]),
        holdout_ids=np.sort(data.ids[perm[n_train:]]),
        ratio=ratio,
        seed=seed,
    )


def sample(data: Dataset, n: int, seed: int, replacement: bool = False) -> Dataset:
    if n < 0:
        raise ConfigError("sample size must be non-negative")
    if not replacement and n > len(data):
        raise ConfigError(f"cannot draw {n} rows without replacement from {len(data)}")
    if replacement and n > 0 and len(data) == 0:
        raise ConfigError("cannot sample from an empty dataset")
    rng = np.random.default_rng(seed)
    if replacement:
        positions = rng.integers(0, len(data), size=n)
    else:
        positions = rng.permutation(len(data))[:n]
    return data.take(positions)


def encode(datasets: Sequence[Dataset], attrs: Sequence[str]) -> tuple[list[np.ndarray], np.ndarray]:
    """Map categorical columns of several datasets to shared integer codes.

    Returns one C-contiguous ``int32`` matrix per dataset (rows x attrs) and
    the per-attribute cardinality of the shared vocabulary.
    """
    attrs = list(attrs)
    mats = [np.empty((len(d), len(attrs)), dtype=np.int32) for d in datasets]
    cards = np.zeros(len(attrs), dtype=np.int64)
    for j, name in enumerate(attrs):
        cols = []
        for d in datasets:
            if name not in d.names:
                raise SchemaError(f"attribute {name!r} absent from a dataset")
            if d.attribute(name).kind != CATEGORICAL:
                raise ConfigError(f"attribute {name!r} is continuous; discretize first")
            cols.append(d.column(name))
        allv = np.concatenate(cols) if cols else np.empty(0, dtype=object)
        if allv.size == 0:
            continue
        uniq, inv = np.unique(allv.astype(str), return_inverse=True)
        cards[j] = len(uniq)
        start = 0
        for m, c in zip(mats, cols):
            m[:, j] = inv[start : start + len(c)]
            start += len(c)
    return mats, cards


def _check_attrs(data: Dataset, attrs, require_qi=True) -> list[str]:
    attrs = list(attrs)
    if not attrs:
        raise ConfigError("attribute set must be nonempty")
    names = data.names
    qis = qi_names(data.schema)
    for a in attrs:
        if a not in names:
            raise ConfigError(f"unknown attribute {a!r}")
        if require_qi and a not in qis:
            raise ConfigError(f"attribute {a!r} is not declared as a quasi-identifier")
    return attrs


def _group_codes(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group id per row and the group sizes."""
    if len(mat) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    _, inv, counts = np.unique(mat, axis=0, return_inverse=True, return_counts=True)
    return inv.reshape(-1), counts


@dataclass(frozen=True)
class EquivalenceIndex:
    """Records grouped by their quasi-identifier value combination."""

    attrs: tuple
    groups: dict  # value tuple -> array of record ids
    k: np.ndarray  # per-record class size, aligned with dataset rows

    @property
    def vulnerability(self) -> np.ndarray:
        return 1.0 / self.k

    @property
    def n_groups(self) -> int:
        return len(self.groups)


def equivalence_classes(data: Dataset, attrs) -> EquivalenceIndex:
    attrs = _check_attrs(data, attrs)
    (mat,), _ = encode([data], attrs)
    inv, counts = _group_codes(mat)
    cols = [data.column(a) for a in attrs]
    groups: dict = {}
    for pos in range(len(data)):
        key = tuple(c[pos] for c in cols)
        groups.setdefault(key, []).append(data.ids[pos])
    groups = {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}
    return EquivalenceIndex(tuple(attrs), groups, counts[inv].astype(np.int64))


@dataclass(frozen=True)
class KMapResult:
    vulnerability: np.ndarray
    max: float
    mean: float
    unseen: int  # sample records whose combination is absent from the population


def k_map_vulnerability(sample: Dataset, population: Dataset, attrs) -> KMapResult:
    """Per-record 1/k where k is the class size in the population.

    Combinations that never occur in the population fall back to their
    frequency in the sample itself.
    """
    attrs = _check_attrs(sample, attrs)
    for a in attrs:
        if a not in population.names:
            raise SchemaError(f"attribute {a!r} absent from the population")
        if sample.attribute(a).kind != population.attribute(a).kind:
            raise SchemaError(f"attribute {a!r} has a different kind in the population")
    (smat, pmat), _ = encode([sample, population], attrs)
    both = np.concatenate([smat, pmat]) if len(attrs) else smat
    inv, _ = _group_codes(both)
    s_inv, p_inv = inv[: len(sample)], inv[len(sample) :]
    n_groups = int(inv.max()) + 1 if len(inv) else 0
    pop_counts = np.bincount(p_inv, minlength=n_groups)
    own_counts = np.bincount(s_inv, minlength=n_groups)
    k = pop_counts[s_inv]
    absent = k == 0
    k = np.where(absent, own_counts[s_inv], k)
    vuln = 1.0 / k if len(k) else np.zeros(0)
    return KMapResult(
        vulnerability=vuln,
        max=float(vuln.max()) if len(vuln) else 0.0,
        mean=float(vuln.mean()) if len(vuln) else 0.0,
        unseen=int(absent.sum()),
    )
