"""Record matching and the worst-case quasi-identifier subset search.

An adversary holding a set of quasi-identifiers may match on any subset of
them, and the subset with the strongest signal is rarely the full set once
the synthesizer generalizes. ``worst_case_search`` evaluates every subset
between two sizes and keeps the maximum F-score.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, SchemaError
from .tabular import Dataset, encode

DEFAULT_SUBSET_CAP = 20

EXACT = "exact"
HAMMING = "hamming"


@dataclass(frozen=True)
class MatchConfig:
    attrs: tuple
    distance: str = EXACT
    threshold: int = 0

    def __post_init__(self):
        object.__setattr__(self, "attrs", tuple(self.attrs))
        if not self.attrs:
            raise ConfigError("match attributes must be nonempty")
        if self.distance not in (EXACT, HAMMING):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if self.threshold < 0:
            raise ConfigError("threshold must be non-negative")
        if self.distance == EXACT and self.threshold != 0:
            raise ConfigError("exact matching takes no threshold")
        if self.threshold >= len(self.attrs):
            raise ConfigError("threshold must be smaller than the number of attributes")


@dataclass(frozen=True)
class MatchResult:
    matched: np.ndarray  # bool per attack record
    indices: tuple  # per attack record, positions of matching synthetic rows

    @property
    def n_matched(self) -> int:
        return int(self.matched.sum())


def enumerate_subsets(attrs: Sequence[str], min_size: int = 1, max_size: int | None = None) -> Iterator[tuple]:
    """Yield every subset of ``attrs`` with size in [min_size, max_size].

    Subsets come out by increasing size, each in the order of ``attrs``.
    """
    attrs = tuple(attrs)
    if max_size is None:
        max_size = len(attrs)
    if not 1 <= min_size <= max_size <= len(attrs):
        raise ConfigError(
            f"subset sizes must satisfy 1 <= min ({min_size}) <= max ({max_size}) <= {len(attrs)}"
        )
    for size in range(min_size, max_size + 1):
        yield from itertools.combinations(attrs, size)


def count_subsets(n: int, min_size: int = 1, max_size: int | None = None) -> int:
    max_size = n if max_size is None else max_size
    return sum(math.comb(n, j) for j in range(min_size, max_size + 1))


def _check_present(attrs, *datasets):
    for a in attrs:
        for d in datasets:
            if a not in d.names:
                raise SchemaError(f"attribute {a!r} absent from a dataset")


def match_records(attack: Dataset, synthetic: Dataset, cfg: MatchConfig) -> MatchResult:
    """Match each attack record against the synthetic rows.

    A record matches when some synthetic row differs in at most
    ``cfg.threshold`` of ``cfg.attrs``.
    """
    _check_present(cfg.attrs, attack, synthetic)
    (a, s), _ = encode([attack, synthetic], cfg.attrs)
    cols = np.arange(len(cfg.attrs))
    flags = kernels.match_flags(a, s, cols, cfg.threshold).astype(bool)
    indices = []
    if cfg.threshold == 0:
        lookup: dict = {}
        for pos, row in enumerate(map(tuple, s)):
            lookup.setdefault(row, []).append(pos)
        for row in map(tuple, a):
            indices.append(np.asarray(lookup.get(row, ()), dtype=np.int64))
    else:
        for row in a:
            dist = (s != row).sum(axis=1)
            indices.append(np.flatnonzero(dist <= cfg.threshold).astype(np.int64))
    return MatchResult(flags, tuple(indices))


def f_beta_counts(tp, fp, fn, beta: float):
    """F-beta from confusion counts; 0 where there is no true positive."""
    tp = np.asarray(tp, dtype=np.float64)
    b2 = beta * beta
    denom = (1 + b2) * tp + b2 * np.asarray(fn, dtype=np.float64) + np.asarray(fp, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, (1 + b2) * tp / np.where(denom > 0, denom, 1), 0.0)
    return out


@dataclass(frozen=True)
class SizeStats:
    size: int
    count: int
    mean: float
    max: float
    sd: float


@dataclass(frozen=True)
class SearchResult:
    best_subset: tuple
    best_score: float
    beta: float
    curve: tuple  # SizeStats per subset size
    full_score: float  # score when matching on every quasi-identifier searched


@dataclass(frozen=True)
class SubsetScan:
    """Confusion counts for every evaluated subset; scoring is per beta."""

    qis: tuple
    subsets: tuple
    tp: np.ndarray
    fp: np.ndarray
    n_members: int
    n_non_members: int

    def scores(self, beta: float) -> np.ndarray:
        return f_beta_counts(self.tp, self.fp, self.n_members - self.tp, beta)

    def search(self, beta: float = 1.0) -> SearchResult:
        scores = self.scores(beta)
        best = float(scores.max())
        ties = [self.subsets[i] for i in np.flatnonzero(scores == best)]
        best_subset = min(ties, key=lambda s: tuple(sorted(s)))
        sizes = np.array([len(s) for s in self.subsets])
        curve = []
        for size in np.unique(sizes):
            vals = scores[sizes == size]
            curve.append(SizeStats(int(size), len(vals), float(vals.mean()), float(vals.max()), float(vals.std())))
        full = [i for i, s in enumerate(self.subsets) if len(s) == len(self.qis)]
        full_score = float(scores[full[0]]) if full else float("nan")
        return SearchResult(best_subset, best, beta, tuple(curve), full_score)


def scan_subsets(
    records: Dataset,
    labels,
    synthetic: Dataset,
    qis: Sequence[str],
    min_size: int = 1,
    max_size: int | None = None,
    threshold: int = 0,
    parallelism: int = 1,
    cap: int = DEFAULT_SUBSET_CAP,
) -> SubsetScan:
    qis = tuple(qis)
    if not qis:
        raise ConfigError("at least one quasi-identifier is required")
    if len(qis) > cap:
        raise ConfigError(
            f"{len(qis)} quasi-identifiers exceed the subset-search cap of {cap}; "
            "restrict the declared quasi-identifiers to those an adversary can know"
        )
    _check_present(qis, records, synthetic)
    labels = np.asarray(labels, dtype=bool)
    if len(labels) != len(records):
        raise ConfigError("one membership label per attack record is required")
    subsets = tuple(enumerate_subsets(qis, min_size, max_size))
    if threshold:
        subsets = tuple(s for s in subsets if threshold < len(s))
        if not subsets:
            raise ConfigError("threshold leaves no subset large enough to match on")
    (a, s), _ = encode([records, synthetic], qis)
    position = {q: j for j, q in enumerate(qis)}
    masks = np.zeros((len(subsets), len(qis)), dtype=np.uint8)
    for i, sub in enumerate(subsets):
        masks[i, [position[q] for q in sub]] = 1

    workers = max(1, int(parallelism))
    if workers == 1 or len(subsets) < 2:
        counts = kernels.subset_tp_fp(a, labels, s, masks, threshold)
    else:
        chunks = np.array_split(masks, min(workers, len(subsets)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda m: kernels.subset_tp_fp(a, labels, s, m, threshold), chunks))
        counts = np.concatenate(parts)
    return SubsetScan(
        qis=qis,
        subsets=subsets,
        tp=counts[:, 0].copy(),
        fp=counts[:, 1].copy(),
        n_members=int(labels.sum()),
        n_non_members=int((~labels).sum()),
    )


def worst_case_search(
    attack,
    synthetic: Dataset,
    qis: Sequence[str],
    beta: float = 1.0,
    parallelism: int = 1,
    min_size: int = 1,
    max_size: int | None = None,
    distance: str = EXACT,
    threshold: int = 0,
    cap: int = DEFAULT_SUBSET_CAP,
) -> SearchResult:
    """Maximum membership F-beta over all quasi-identifier subsets.

    ``attack`` is an ``AttackSet``. Ties between equal scores resolve to the
    lexicographically smallest (sorted) attribute-name tuple. The result does
    not depend on ``parallelism``.
    """
    if distance == EXACT and threshold:
        raise ConfigError("exact matching takes no threshold")
    if beta <= 0:
        raise ConfigError("beta must be positive")
    scan = scan_subsets(
        attack.records, attack.labels, synthetic, qis, min_size, max_size, threshold, parallelism, cap
    )
    return scan.search(beta)
