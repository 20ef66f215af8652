"""Decision rules, epsilon interpretation, overall risk and report rendering."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import __version__
from .errors import ConfigError

SCHEMA_ID = "synth-privaudit/1"

ACCEPTABLE = "acceptable"
HIGH = "high"
UNDEFINED = "undefined"
INVALID = "invalid"

# Policy statements referenced by the checks, keyed by recommendation id.
RECOMMENDATIONS = {
    "R1": "Metrics are computed over quasi-identifiers declared by the data controller.",
    "R2": "For a trained generator, report metrics per synthetic dataset and aggregated across several.",
    "R3": "Metrics cover all records, never a pre-selected 'vulnerable' subset.",
    "R4": "Stand-alone similarity metrics should not be used to report privacy of synthetic data.",
    "R5": "Membership metrics apply only when targets come from the training data's own population.",
    "R6": "F-scores depend on prevalence and are reported relative to a naive all-member guess.",
    "R7": "Suggested anchor for relative membership vulnerability: F_rel of 0.2 (not a validated threshold).",
    "R8": "Attribute disclosure concerns members of the training data.",
    "R9": "Attribute disclosure is reported relative to a non-member baseline.",
    "R10": "A relative attribute vulnerability counts as high only when the absolute one is also high.",
    "R11": "A privacy budget epsilon is not interpretable unless close to 0; run the full metric suite.",
}

R4_WARNING = (
    "DEPRECATED (R4): stand-alone similarity metrics should not be used to report privacy "
    "of synthetic data. These values are shown for reference only and play no part in any decision."
)

_THRESHOLD_FIELDS = ("f_rel_anchor", "a_rel", "a_abs")


@dataclass(frozen=True)
class Adjustment:
    field: str
    delta: float
    justification: str


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds with optional context adjustments.

    Every adjustment must carry a justification; adjusted values must stay
    in [0, 1].
    """

    f_rel_anchor: float = 0.2
    a_rel: float = 0.15
    a_abs: float = 0.6
    adjustments: tuple = ()
    naive_note_level: float = 0.5

    def __post_init__(self):
        adjs = tuple(a if isinstance(a, Adjustment) else Adjustment(**a) for a in self.adjustments)
        object.__setattr__(self, "adjustments", adjs)
        for a in adjs:
            if a.field not in _THRESHOLD_FIELDS:
                raise ConfigError(f"cannot adjust unknown threshold {a.field!r}")
            if not str(a.justification).strip():
                raise ConfigError(f"adjustment of {a.field} needs a justification")
        for name in _THRESHOLD_FIELDS:
            value = self.effective(name)
            if not 0 <= value <= 1:
                raise ConfigError(f"adjusted threshold {name}={value} outside [0, 1]")

    def effective(self, name: str) -> float:
        base = getattr(self, name)
        return base + sum(a.delta for a in self.adjustments if a.field == name)

    @classmethod
    def from_dict(cls, doc: dict | None) -> "Thresholds":
        doc = dict(doc or {})
        doc.pop("effective", None)  # derived, present in rendered reports
        unknown = set(doc) - set(_THRESHOLD_FIELDS) - {"adjustments", "naive_note_level"}
        if unknown:
            raise ConfigError(f"unknown threshold fields {sorted(unknown)}")
        doc["adjustments"] = tuple(doc.get("adjustments") or ())
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "f_rel_anchor": self.f_rel_anchor,
            "a_rel": self.a_rel,
            "a_abs": self.a_abs,
            "naive_note_level": self.naive_note_level,
            "adjustments": [
                {"field": a.field, "delta": a.delta, "justification": a.justification}
                for a in self.adjustments
            ],
            "effective": {n: self.effective(n) for n in _THRESHOLD_FIELDS},
        }


def decide_membership(f_rel: float, thresholds: Thresholds | None = None) -> str:
    thresholds = thresholds or Thresholds()
    if f_rel is None or math.isnan(f_rel):
        return UNDEFINED
    return ACCEPTABLE if f_rel <= thresholds.effective("f_rel_anchor") else HIGH


def naive_note(f_naive: float, thresholds: Thresholds | None = None) -> str | None:
    """Note for a high naive baseline, which no data release can change."""
    thresholds = thresholds or Thresholds()
    if f_naive >= thresholds.naive_note_level:
        return (
            f"naive all-member guess already scores {f_naive:.3f}; membership vulnerability is "
            "high for data subjects regardless of the synthetic data"
        )
    return None


def decide_attribute(a_members: float, a_rel: float, thresholds: Thresholds | None = None) -> str:
    """High only when both the relative and the absolute accuracy exceed
    their thresholds; the other three quadrants are acceptable."""
    thresholds = thresholds or Thresholds()
    if a_members is None or a_rel is None or math.isnan(a_members) or math.isnan(a_rel):
        return UNDEFINED
    if a_rel > thresholds.effective("a_rel") and a_members > thresholds.effective("a_abs"):
        return HIGH
    return ACCEPTABLE


INTERPRETABLE = "interpretable"
NEEDS_EMPIRICAL = "requires empirical evaluation"


@dataclass(frozen=True)
class EpsilonCheck:
    epsilon: float
    gain: float  # bound on the likelihood ratio between neighbouring datasets
    classification: str
    near_zero_bound: float

    def to_dict(self) -> dict:
        out = {
            "epsilon": self.epsilon,
            "likelihood_ratio_bound": self.gain,
            "classification": self.classification,
            "near_zero_bound": self.near_zero_bound,
        }
        if self.classification == NEEDS_EMPIRICAL:
            out["note"] = RECOMMENDATIONS["R11"]
        return out


def epsilon_check(eps: float, near_zero: float = 0.1) -> EpsilonCheck:
    if eps < 0 or math.isnan(eps):
        raise ConfigError(f"epsilon must be non-negative, got {eps}")
    if near_zero < 0:
        raise ConfigError("near-zero bound must be non-negative")
    cls = INTERPRETABLE if eps <= near_zero else NEEDS_EMPIRICAL
    return EpsilonCheck(eps, math.exp(eps), cls, near_zero)


def overall_risk(vulnerability: float, attempt: float) -> float:
    """pr(disclosure) = pr(disclosure | attempt) * pr(attempt)."""
    for name, v in (("vulnerability", vulnerability), ("attempt", attempt)):
        if not 0 <= v <= 1:
            raise ConfigError(f"{name} must be a probability, got {v}")
    return vulnerability * attempt


@dataclass
class AuditReport:
    membership: dict | None = None
    attribute: list = field(default_factory=list)
    deprecated_similarity: dict | None = None
    k_map: dict | None = None
    epsilon: dict | None = None
    overall_risk: dict | None = None
    decisions: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "schema": SCHEMA_ID,
            "tool_version": __version__,
            "membership": self.membership,
            "attribute": self.attribute,
            "k_map": self.k_map,
            "epsilon": self.epsilon,
            "overall_risk": self.overall_risk,
            "decisions": self.decisions,
            "thresholds": self.thresholds,
            "notes": self.notes,
            "provenance": self.provenance,
        }
        if self.deprecated_similarity is not None:
            section = dict(self.deprecated_similarity)
            section["_warning"] = R4_WARNING
            section["deprecated"] = True
            doc["deprecated_similarity"] = section
        return doc


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_report(report: AuditReport | dict, fmt: str = "json") -> str:
    """Serialize a report. ``json`` is the machine-readable document,
    ``text`` a human summary."""
    doc = report.to_dict() if isinstance(report, AuditReport) else report
    if fmt == "json":
        return to_json(doc)
    if fmt == "text":
        return _summary(doc)
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_ID:
        raise ConfigError(f"unsupported report schema {doc.get('schema')!r}; expected {SCHEMA_ID}")
    return doc


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return "n/a" if math.isnan(v) else f"{v:.3f}"
    return str(v)


def _summary(doc: dict) -> str:
    if doc.get("kind") == "bundle":
        lines = [f"{SCHEMA_ID} bundle of {len(doc['reports'])} synthetic datasets"]
        for name, sub in zip(doc["files"], doc["reports"]):
            lines.append(f"--- {name}")
            lines.append(_summary(sub).rstrip())
        lines.append("--- aggregate (mean, sd)")
        for key, stats in sorted(doc.get("aggregate", {}).items()):
            lines.append(f"  {key}: {_fmt(stats.get('mean'))} +/- {_fmt(stats.get('sd'))}")
        return "\n".join(lines) + "\n"
    lines = []
    m = doc.get("membership")
    if m:
        lines.append(f"membership: t={_fmt(m['t'])}, attack size {m['attack_size']}, "
                     f"{m['subsets_evaluated']} subsets searched")
        for b in m["betas"]:
            lines.append(
                f"  beta={b['beta']}: F={_fmt(b['f_beta'])} F_naive={_fmt(b['f_naive'])} "
                f"F_rel={_fmt(b['f_rel'])} worst subset={','.join(b['worst_case_subset'])}"
            )
        lines.append(f"  headline F_rel={_fmt(m['headline_f_rel'])}")
    for a in doc.get("attribute") or []:
        lines.append(
            f"attribute {a['target']}: A_members={_fmt(a['a_members'])} "
            f"A_non_members={_fmt(a['a_non_members'])} A_rel={_fmt(a['a_rel'])} "
            f"R={_fmt(a['r'])} S={_fmt(a['attack_strength'])} ({a['measurement']})"
        )
    if doc.get("k_map"):
        k = doc["k_map"]
        lines.append(f"k-map ({k['reference']}): max 1/k={_fmt(k['max'])} mean 1/k={_fmt(k['mean'])}")
    if doc.get("epsilon"):
        e = doc["epsilon"]
        lines.append(f"epsilon={_fmt(e['epsilon'])}: {e['classification']}")
    if "deprecated_similarity" in doc:
        lines.append(R4_WARNING)
        sim = doc["deprecated_similarity"]
        for key in sorted(k for k in sim if k not in ("_warning", "deprecated")):
            lines.append(f"  {key}: {_fmt(sim[key]) if not isinstance(sim[key], dict) else sim[key]}")
    lines.append("decisions:")
    for key, value in sorted((doc.get("decisions") or {}).items()):
        lines.append(f"  {key}: {value}")
    return "\n".join(lines) + "\n"


def recompute_decisions(doc: dict, thresholds: Thresholds) -> dict:
    """Decisions implied by the values stored in a rendered report."""
    if doc.get("kind") == "bundle":
        out = {}
        for name, sub in zip(doc["files"], doc["reports"]):
            for key, value in recompute_decisions(sub, thresholds).items():
                out[f"{name}:{key}"] = value
        return out
    out = {}
    m = doc.get("membership")
    if m:
        headline = m.get("headline_f_rel")
        out["membership"] = decide_membership(float("nan") if headline is None else headline, thresholds)
    for a in doc.get("attribute") or []:
        key = f"attribute:{a['target']}"
        if a.get("weak_attack"):
            out[key] = INVALID
            continue
        am, ar = a.get("a_members"), a.get("a_rel")
        out[key] = decide_attribute(
            float("nan") if am is None else am, float("nan") if ar is None else ar, thresholds
        )
    return out


def exit_code(decisions: dict) -> int:
    return 2 if any(v == HIGH for v in decisions.values()) else 0
