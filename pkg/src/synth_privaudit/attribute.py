"""Attribute disclosure against a non-member baseline.

The adversary looks up a target's key attributes in the synthetic data and
reads off the sensitive value of the matching rows. The same lookup is run
for members (training records) and non-members (holdout records); only the
excess accuracy on members indicates disclosure; accuracy on non-members is
knowledge the synthetic data generalizes to anyone.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .policy import INVALID, Thresholds, decide_attribute
from .tabular import CONTINUOUS, Dataset, Discretizer, encode, qi_names

ZERO = "zero"
UNDEFINED = "undefined"
KEY_DROP = "key-drop"
POLICIES = (ZERO, UNDEFINED, KEY_DROP)

EXACT = "exact"
AUROC = "auroc"
NUMERIC = "numeric-tolerance"
MEASUREMENTS = (EXACT, AUROC, NUMERIC)

DEFAULT_TOLERANCE_FRACTION = 0.10


@dataclass(frozen=True)
class PredictionOutcome:
    correctness: np.ndarray  # fraction of matched synthetic rows that are correct; NaN if undefined
    defined: np.ndarray
    n_matches: np.ndarray
    keys_used: np.ndarray  # number of leading keys the match was made on
    predictions: tuple  # per record: {target value: multiplicity}


def _hits(values: np.ndarray, truth, tolerance):
    if tolerance is None:
        return values == truth
    if isinstance(truth, float) and math.isnan(truth):
        return np.zeros(len(values), dtype=bool)
    with np.errstate(invalid="ignore"):
        return np.abs(values.astype(np.float64) - truth) <= tolerance


def nn_predict(
    synthetic: Dataset,
    keys,
    target: str,
    attack: Dataset,
    policy: str = ZERO,
    tolerance: float | None = None,
) -> PredictionOutcome:
    """Exact-match lookup of each attack record's keys in the synthetic data.

    With several matches the correctness is the share of matches whose target
    agrees with the truth (within ``tolerance`` for a numeric target). Records
    without a match score 0 (``zero``), are excluded (``undefined``), or are
    retried with the last key dropped until a match exists (``key-drop``).
    """
    keys = list(keys)
    if not keys:
        raise ConfigError("at least one key attribute is required")
    if policy not in POLICIES:
        raise ConfigError(f"unknown non-match policy {policy!r}")
    if len(synthetic) == 0:
        raise ConfigError("synthetic dataset is empty")
    if target in keys:
        raise ConfigError("the target cannot also be a key")
    for name in keys + [target]:
        synthetic.column(name)
        attack.column(name)
    numeric = synthetic.attribute(target).kind == CONTINUOUS
    if numeric and tolerance is None:
        raise ConfigError(f"numeric target {target!r} needs a tolerance")
    if not numeric:
        tolerance = None

    (s_codes, a_codes), _ = encode([synthetic, attack], keys)
    s_target = synthetic.column(target)
    truth = attack.column(target)

    lookups: dict = {}

    def lookup(width):
        if width not in lookups:
            table: dict = {}
            for pos, row in enumerate(map(tuple, s_codes[:, :width])):
                table.setdefault(row, []).append(pos)
            lookups[width] = {k: np.asarray(v, dtype=np.int64) for k, v in table.items()}
        return lookups[width]

    n = len(attack)
    correctness = np.full(n, np.nan)
    defined = np.zeros(n, dtype=bool)
    n_matches = np.zeros(n, dtype=np.int64)
    keys_used = np.zeros(n, dtype=np.int64)
    predictions = []
    full = lookup(len(keys))
    for i in range(n):
        width = len(keys)
        pos = full.get(tuple(a_codes[i]))
        if pos is None and policy == KEY_DROP:
            while pos is None and width > 0:
                width -= 1
                pos = lookup(width).get(tuple(a_codes[i, :width]))
        if pos is None:
            predictions.append({})
            if policy == ZERO:
                correctness[i] = 0.0
                defined[i] = True
            continue
        vals = s_target[pos]
        correctness[i] = float(_hits(vals, truth[i], tolerance).mean())
        defined[i] = True
        n_matches[i] = len(pos)
        keys_used[i] = width
        predictions.append(dict(Counter(vals.tolist())))
    return PredictionOutcome(correctness, defined, n_matches, keys_used, tuple(predictions))


@dataclass(frozen=True)
class CapResult:
    mean: float
    values: np.ndarray
    n_defined: int
    flag: str | None = None


def cap(attack: Dataset, synthetic: Dataset, keys, target: str, policy: str = ZERO,
        tolerance: float | None = None) -> CapResult:
    """Average correct attribution probability over the attack records."""
    out = nn_predict(synthetic, keys, target, attack, policy, tolerance)
    vals = out.correctness[out.defined]
    if len(vals) == 0:
        return CapResult(float("nan"), out.correctness, 0, "no-defined-records")
    return CapResult(float(vals.mean()), out.correctness, int(len(vals)))


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Rank-based area under the ROC curve; ties count one half.

    NaN when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if len(scores) != len(labels):
        raise ConfigError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = _midranks(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def attack_strength(a_members: float, a_naive: float) -> float:
    """Member accuracy above a uniform guess; <= 0 marks a weak attack."""
    return a_members - a_naive


def r_ratio(a_members: float, a_non_members: float) -> float:
    """Member accuracy gain over the non-member baseline, scaled to the room
    above that baseline. NaN when the baseline is already perfect."""
    if a_non_members >= 1:
        return float("nan")
    return (a_members - a_non_members) / (1 - a_non_members)


@dataclass
class AttributeConfig:
    keys: list | None = None
    targets: list | None = None
    policy: str = ZERO
    measurement: str | None = None  # default: numeric-tolerance for continuous targets, else exact
    tolerance: float | None = None
    record_cap: int | None = None
    seed: int = 0
    positive_class: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "AttributeConfig":
        doc = dict(doc)
        if "target" in doc:
            doc["targets"] = [doc.pop("target")]
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown attribute config fields {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class AttributeReport:
    target: str
    keys: tuple
    measurement: str
    policy: str
    a_members: float
    a_non_members: float
    a_rel: float
    r: float
    a_naive: float
    attack_strength: float
    weak_attack: bool
    decision: str
    n_members: int
    n_non_members: int
    defined_members: int
    defined_non_members: int
    tolerance: float | None = None
    flags: tuple = ()
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "keys": list(self.keys),
            "measurement": self.measurement,
            "policy": self.policy,
            "a_members": self.a_members,
            "a_non_members": self.a_non_members,
            "a_rel": self.a_rel,
            "r": self.r,
            "a_naive": self.a_naive,
            "attack_strength": self.attack_strength,
            "weak_attack": self.weak_attack,
            "decision": self.decision,
            "n_members": self.n_members,
            "n_non_members": self.n_non_members,
            "defined_members": self.defined_members,
            "defined_non_members": self.defined_non_members,
            "tolerance": self.tolerance,
            "flags": list(self.flags),
            "notes": list(self.notes),
        }


def _naive_accuracy(measurement, train_target, truth, tolerance):
    if measurement == AUROC:
        return 0.5
    if measurement == EXACT:
        return 1.0 / len(set(train_target.tolist()))
    finite = train_target[~np.isnan(train_target)]
    lo, hi = float(finite.min()), float(finite.max())
    if hi <= lo:
        return 1.0
    t = truth[~np.isnan(truth)]
    if len(t) == 0:
        return 0.0
    overlap = np.clip(np.minimum(t + tolerance, hi) - np.maximum(t - tolerance, lo), 0, None)
    return float((overlap / (hi - lo)).mean())


def _accuracy(outcome, truth, measurement, positive, policy):
    """Aggregate accuracy of one attack group and its defined-record count."""
    if measurement != AUROC:
        vals = outcome.correctness[outcome.defined]
        return (float(vals.mean()) if len(vals) else float("nan")), int(len(vals))
    scores = np.full(len(truth), 0.5)
    for i, pred in enumerate(outcome.predictions):
        if outcome.n_matches[i]:
            scores[i] = pred.get(positive, 0) / outcome.n_matches[i]
    keep = outcome.defined if policy == UNDEFINED else np.ones(len(truth), dtype=bool)
    labels = np.asarray([v == positive for v in truth], dtype=bool)
    return auroc(scores[keep], labels[keep]), int(keep.sum())


def attribute_audit(
    train: Dataset,
    holdout: Dataset,
    synthetic: Dataset,
    keys,
    target: str,
    cfg: AttributeConfig | None = None,
    thresholds: Thresholds | None = None,
    discretizer: Discretizer | None = None,
) -> AttributeReport:
    """Member vs non-member attribute inference with one shared predictor."""
    cfg = cfg or AttributeConfig()
    thresholds = thresholds or Thresholds()
    keys = tuple(keys) if keys else tuple(k for k in qi_names(train.schema) if k != target)
    if not keys:
        raise ConfigError("attribute audit needs at least one key attribute")
    if len(holdout) == 0:
        raise ConfigError("attribute audit needs a nonempty holdout for the non-member baseline")
    numeric = train.attribute(target).kind == CONTINUOUS
    measurement = cfg.measurement or (NUMERIC if numeric else EXACT)
    if measurement not in MEASUREMENTS:
        raise ConfigError(f"unknown measurement {measurement!r}")
    if (measurement == NUMERIC) != numeric:
        raise ConfigError(f"measurement {measurement!r} does not fit target kind of {target!r}")

    tolerance = None
    if numeric:
        col = train.column(target)
        finite = col[~np.isnan(col)]
        if finite.size == 0:
            raise ConfigError(f"target {target!r} has only missing values in training data")
        span = float(finite.max() - finite.min())
        tolerance = cfg.tolerance if cfg.tolerance is not None else DEFAULT_TOLERANCE_FRACTION * span

    disc = discretizer or Discretizer.fit(train)
    skip = (target,) if numeric else ()
    train_d, holdout_d, synth_d = (disc.transform(d, skip=skip) for d in (train, holdout, synthetic))

    count = min(len(train_d), len(holdout_d))
    if cfg.record_cap is not None:
        count = min(count, cfg.record_cap)
    rng = np.random.default_rng(cfg.seed)
    members = train_d.take(np.sort(rng.permutation(len(train_d))[:count]))
    non_members = holdout_d.take(np.sort(rng.permutation(len(holdout_d))[:count]))

    positive = None
    if measurement == AUROC:
        values = set(train_d.column(target).tolist()) | set(holdout_d.column(target).tolist())
        values |= set(synth_d.column(target).tolist())
        if len(values) > 2:
            raise ConfigError(f"AUROC measurement needs a binary target; {target!r} has {len(values)} values")
        positive = cfg.positive_class if cfg.positive_class is not None else max(values)

    pred_m = nn_predict(synth_d, keys, target, members, cfg.policy, tolerance)
    pred_n = nn_predict(synth_d, keys, target, non_members, cfg.policy, tolerance)
    a_m, def_m = _accuracy(pred_m, members.column(target), measurement, positive, cfg.policy)
    a_n, def_n = _accuracy(pred_n, non_members.column(target), measurement, positive, cfg.policy)

    a_naive = _naive_accuracy(measurement, train_d.column(target), members.column(target), tolerance)
    a_rel = a_m - a_n
    r = r_ratio(a_m, a_n) if not math.isnan(a_n) else float("nan")
    strength = attack_strength(a_m, a_naive)
    weak = not (strength > 0)

    flags = []
    if measurement != AUROC:
        flags.append("thresholds AUROC-derived")
    if not math.isnan(a_n) and a_n >= 1:
        flags.append("baseline saturated")
    if weak:
        flags.append("weak attack")
    decision = INVALID if weak else decide_attribute(a_m, a_rel, thresholds)
    notes = (
        "predictor: exact-match nearest neighbour on the synthetic data for members and non-members",
        "train-data-trained non-member predictor variant not implemented",
    )
    return AttributeReport(
        target=target,
        keys=keys,
        measurement=measurement,
        policy=cfg.policy,
        a_members=a_m,
        a_non_members=a_n,
        a_rel=a_rel,
        r=r,
        a_naive=a_naive,
        attack_strength=strength,
        weak_attack=weak,
        decision=decision,
        n_members=len(members),
        n_non_members=len(non_members),
        defined_members=def_m,
        defined_non_members=def_n,
        tolerance=tolerance,
        flags=tuple(flags),
        notes=notes,
    )
