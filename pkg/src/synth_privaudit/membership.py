"""Membership disclosure with the partitioning method.

Attack records are drawn from the training data (members) and a holdout
(non-members) at an explicit member prevalence ``t``. Each attack record is
guessed to be a member when it matches a synthetic record. Because the
F-score depends on prevalence, it is reported next to the F-score of an
adversary who calls everyone a member, and relative to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RefusedAudit
from .matcher import (
    DEFAULT_SUBSET_CAP,
    EXACT,
    HAMMING,
    MatchConfig,
    MatchResult,
    match_records,
    scan_subsets,
)
from .tabular import Dataset, Discretizer

DEFAULT_BETAS = (0.5, 1.0, 2.0)
DEFAULT_ATTACK_CAP = 10_000

NO_ATTACK_SIGNAL = "no-attack-signal"
DEGENERATE = "degenerate"
SATURATED = "vulnerability saturated by naive guess"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class AttackSet:
    records: Dataset
    labels: np.ndarray  # True for members
    t: float
    n: int | None = None
    N: int | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=bool)
        object.__setattr__(self, "labels", labels)
        if len(labels) != len(self.records):
            raise ConfigError("one label per attack record is required")
        if not 0 <= self.t <= 1:
            raise ConfigError(f"prevalence t must be in [0, 1], got {self.t}")
        if len(labels) and abs(labels.mean() - self.t) > 1 / len(labels) + 1e-12:
            raise ConfigError("member fraction of the attack set is inconsistent with t")
        if self.N is not None and self.n is not None and abs(self.t - self.n / self.N) > 1e-9:
            raise ConfigError("t must equal n/N when the population size is given")

    @property
    def prevalence(self) -> float:
        """Observed member fraction (equals t up to rounding)."""
        return float(self.labels.mean()) if len(self.labels) else float(self.t)


def resolve_prevalence(t: float | None = None, n: int | None = None, N: int | None = None) -> float:
    """Member prevalence from ``t`` or from the sampling fraction n/N.

    There is no default: a 50% prevalence is a convention, not a property of
    the data release.
    """
    if t is not None:
        return float(t)
    if n is not None and N is not None:
        if N <= 0 or not 0 <= n <= N:
            raise ConfigError(f"need 0 <= n <= N with N > 0, got n={n}, N={N}")
        return n / N
    raise ConfigError("member prevalence is required: supply t, or n and N")


def build_attack_set(
    train: Dataset,
    holdout: Dataset,
    t: float,
    size: int,
    seed: int,
    replacement: bool = False,
    allow_degenerate: bool = False,
    n: int | None = None,
    N: int | None = None,
) -> AttackSet:
    """Draw round(t * size) members from ``train`` and the rest from ``holdout``."""
    if not allow_degenerate and not 0 < t < 1:
        raise ConfigError(f"prevalence t must be in (0, 1), got {t}")
    if size < 0:
        raise ConfigError("attack set size must be non-negative")
    n_members = _round_half_up(t * size)
    n_non = size - n_members
    if not replacement:
        if n_members > len(train):
            raise ConfigError(f"{n_members} members requested but training data has {len(train)} rows")
        if n_non > len(holdout):
            raise ConfigError(f"{n_non} non-members requested but holdout has {len(holdout)} rows")
    elif (n_members and not len(train)) or (n_non and not len(holdout)):
        raise ConfigError("cannot resample from an empty dataset")
    rng = np.random.default_rng(seed)
    if replacement:
        mpos = rng.integers(0, len(train), n_members)
        npos = rng.integers(0, len(holdout), n_non)
    else:
        mpos = rng.permutation(len(train))[:n_members]
        npos = rng.permutation(len(holdout))[:n_non]
    records = train.take(mpos).concat(holdout.take(npos))
    labels = np.concatenate([np.ones(n_members, bool), np.zeros(n_non, bool)])
    order = rng.permutation(size)
    return AttackSet(records.take(order), labels[order], t, n, N)


@dataclass(frozen=True)
class ConfusionStats:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float:
        """NaN when nobody was guessed to be a member."""
        guessed = self.tp + self.fp
        return self.tp / guessed if guessed else float("nan")

    @property
    def recall(self) -> float:
        members = self.tp + self.fn
        return self.tp / members if members else float("nan")

    @property
    def flags(self) -> tuple:
        if self.tp + self.fp == 0:
            return (NO_ATTACK_SIGNAL,)
        if self.tp == 0:
            return (DEGENERATE,)
        return ()


def confusion(attack: AttackSet, matches: MatchResult) -> ConfusionStats:
    matched = np.asarray(matches.matched, dtype=bool)
    if len(matched) != len(attack.labels):
        raise ConfigError("match result does not cover every attack record")
    member = attack.labels
    return ConfusionStats(
        tp=int(np.count_nonzero(matched & member)),
        fp=int(np.count_nonzero(matched & ~member)),
        tn=int(np.count_nonzero(~matched & ~member)),
        fn=int(np.count_nonzero(~matched & member)),
    )


def f_score(precision: float, recall: float, beta: float = 1.0) -> float:
    if beta <= 0:
        raise ConfigError("beta must be positive")
    if math.isnan(precision) or math.isnan(recall):
        return float("nan")
    if precision == 0 and recall == 0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def f_beta(stats: ConfusionStats, beta: float = 1.0) -> float:
    """F-beta of a membership guess; NaN when precision is undefined."""
    return f_score(stats.precision, stats.recall, beta)


def f_naive(p: float, beta: float = 1.0) -> float:
    """F-beta of guessing that every attack record is a member.

    Precision is then the prevalence ``p`` and recall is 1.
    """
    if not 0 <= p <= 1:
        raise ConfigError(f"prevalence must be in [0, 1], got {p}")
    if beta <= 0:
        raise ConfigError("beta must be positive")
    b2 = beta * beta
    return (1 + b2) * p / (b2 * p + 1)


def f_rel(f: float, naive: float) -> float:
    """Gain over the naive guess, scaled to the room left above it.

    NaN when the naive guess already scores 1.
    """
    if naive >= 1:
        return float("nan")
    return (f - naive) / (1 - naive)


@dataclass
class MembershipConfig:
    t: float | None = None
    n: int | None = None
    N: int | None = None
    betas: tuple = DEFAULT_BETAS
    seed: int = 0
    min_size: int = 1
    max_size: int | None = None
    distance: str = EXACT
    threshold: int = 0
    scenario_b: bool = False
    attack_size: int | None = None
    replacement: bool = False
    parallelism: int = 1
    cap: int = DEFAULT_SUBSET_CAP

    @classmethod
    def from_dict(cls, doc: dict) -> "MembershipConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown membership config fields {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.betas = tuple(float(b) for b in cfg.betas)
        return cfg

    def validate(self):
        if not self.betas:
            raise ConfigError("at least one beta is required")
        if any(b <= 0 for b in self.betas):
            raise ConfigError("betas must be positive")
        if self.distance not in (EXACT, HAMMING):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if self.distance == EXACT and self.threshold:
            raise ConfigError("exact matching takes no threshold")


@dataclass(frozen=True)
class BetaResult:
    beta: float
    f_beta: float  # worst case over subsets
    f_naive: float
    f_rel: float
    best_subset: tuple
    full_f_beta: float  # matching on all quasi-identifiers
    curve: tuple
    flags: tuple = ()


@dataclass(frozen=True)
class MembershipReport:
    per_beta: tuple  # BetaResult
    t: float
    n: int | None
    N: int | None
    seed: int
    attack_size: int
    n_members: int
    qis: tuple
    subsets_evaluated: int
    full_confusion: ConfusionStats
    notes: tuple = field(default_factory=tuple)

    @property
    def headline_f_rel(self) -> float:
        vals = [r.f_rel for r in self.per_beta if not math.isnan(r.f_rel)]
        return max(vals) if vals else float("nan")

    def to_dict(self) -> dict:
        c = self.full_confusion
        return {
            "t": self.t,
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "attack_size": self.attack_size,
            "members": self.n_members,
            "quasi_identifiers": list(self.qis),
            "subsets_evaluated": self.subsets_evaluated,
            "headline_f_rel": self.headline_f_rel,
            "full_qi_confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
            "betas": [
                {
                    "beta": r.beta,
                    "f_beta": r.f_beta,
                    "f_naive": r.f_naive,
                    "f_rel": r.f_rel,
                    "worst_case_subset": list(r.best_subset),
                    "full_qi_f_beta": r.full_f_beta,
                    "flags": list(r.flags),
                    "curve": [
                        {"size": s.size, "subsets": s.count, "mean": s.mean, "max": s.max, "sd": s.sd}
                        for s in r.curve
                    ],
                }
                for r in self.per_beta
            ],
            "notes": list(self.notes),
        }


def default_attack_size(n_train: int, n_holdout: int, t: float) -> int:
    """Largest attack set up to min(|train| + |holdout|, 10,000) that the
    two pools can fill without replacement at prevalence ``t``."""
    size = min(n_train + n_holdout, DEFAULT_ATTACK_CAP)
    if t > 0:
        size = min(size, math.floor(n_train / t))
    if t < 1:
        size = min(size, math.floor(n_holdout / (1 - t)))
    while size > 0 and (
        _round_half_up(t * size) > n_train or size - _round_half_up(t * size) > n_holdout
    ):
        size -= 1
    return size


def membership_audit(
    train: Dataset,
    holdout: Dataset,
    synthetic: Dataset,
    qis,
    cfg: MembershipConfig,
    discretizer: Discretizer | None = None,
) -> MembershipReport:
    """Worst-case membership vulnerability of one synthetic dataset.

    Continuous attributes are binned with edges fitted on ``train`` unless a
    ``discretizer`` is given.
    """
    cfg.validate()
    if cfg.scenario_b:
        raise RefusedAudit(
            "membership metrics assume targets drawn from the same population as the "
            "training data; refusing to evaluate a cross-population narrative",
            "R5",
        )
    qis = tuple(qis)
    t = resolve_prevalence(cfg.t, cfg.n, cfg.N)
    n = cfg.n if cfg.n is not None else (len(train) if cfg.N is not None else None)
    disc = discretizer or Discretizer.fit(train)
    train_d, holdout_d, synth_d = (disc.transform(d) for d in (train, holdout, synthetic))
    size = cfg.attack_size if cfg.attack_size is not None else default_attack_size(len(train), len(holdout), t)
    attack = build_attack_set(
        train_d, holdout_d, t, size, cfg.seed, replacement=cfg.replacement,
        n=n if cfg.N is not None else None, N=cfg.N,
    )
    scan = scan_subsets(
        attack.records, attack.labels, synth_d, qis,
        cfg.min_size, cfg.max_size, cfg.threshold, cfg.parallelism, cfg.cap,
    )
    full_idx = [i for i, s in enumerate(scan.subsets) if len(s) == len(qis)]
    if full_idx:
        i = full_idx[0]
        tp, fp = int(scan.tp[i]), int(scan.fp[i])
    else:
        m = match_records(attack.records, synth_d, MatchConfig(qis, cfg.distance, cfg.threshold))
        c = confusion(attack, m)
        tp, fp = c.tp, c.fp
    full = ConfusionStats(tp, fp, scan.n_non_members - fp, scan.n_members - tp)

    p = attack.prevalence
    results = []
    for beta in cfg.betas:
        search = scan.search(beta)
        naive = f_naive(p, beta)
        rel = f_rel(search.best_score, naive)
        flags = []
        best_i = scan.subsets.index(search.best_subset)
        if scan.tp[best_i] + scan.fp[best_i] == 0:
            flags.append(NO_ATTACK_SIGNAL)
        if math.isnan(rel):
            flags.append(SATURATED)
        results.append(
            BetaResult(beta, search.best_score, naive, rel, search.best_subset,
                       search.full_score if full_idx else f_beta_or_zero(full, beta),
                       search.curve, tuple(flags))
        )
    notes = ["generalizations not searched", "continuous attributes binned with training-fitted edges"]
    return MembershipReport(
        per_beta=tuple(results),
        t=t,
        n=n,
        N=cfg.N,
        seed=cfg.seed,
        attack_size=size,
        n_members=int(attack.labels.sum()),
        qis=qis,
        subsets_evaluated=len(scan.subsets),
        full_confusion=full,
        notes=tuple(notes),
    )


def f_beta_or_zero(stats: ConfusionStats, beta: float) -> float:
    value = f_beta(stats, beta)
    return 0.0 if math.isnan(value) else value
