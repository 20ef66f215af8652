"""Distance-to-closest-record metrics and vulnerable-record counts.

Kept for comparison with existing tooling only. Every object returned here
carries the R4 deprecation flag and warning, and none feeds a decision.
Distances are Hamming distances over discretized attributes, by default the
quasi-identifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError
from .policy import R4_WARNING
from .tabular import Dataset, encode, qi_names

DIRECTIONS = ("STD", "TSD", "SHD", "TTD", "THD")

VR_VARIANTS = {
    # variant: (first profile, second profile) compared with first < second
    "tsd_vs_thd": ("TSD", "THD"),
    "std_vs_shd": ("STD", "SHD"),
    "tsd_vs_ttd": ("TSD", "TTD"),
}


@dataclass(frozen=True)
class DistanceProfile:
    direction: str | None
    distances: np.ndarray  # inf where no eligible record exists
    metric: str = "hamming"
    deprecated: bool = field(default=True, init=False)
    warning: str = field(default=R4_WARNING, init=False)

    def __len__(self):
        return len(self.distances)


@dataclass(frozen=True)
class VulnerableCount:
    variant: str
    count: int
    total: int
    deprecated: bool = field(default=True, init=False)
    warning: str = field(default=R4_WARNING, init=False)


def _compare_attrs(a: Dataset, attrs, all_attributes):
    if attrs is not None:
        return list(attrs)
    if all_attributes:
        return a.names
    qis = qi_names(a.schema)
    if not qis:
        raise ConfigError("no quasi-identifiers declared; pass attrs or all_attributes=True")
    return qis


def dcr(
    from_: Dataset,
    to: Dataset,
    attrs=None,
    exclude_self: bool = False,
    direction: str | None = None,
    all_attributes: bool = False,
) -> DistanceProfile:
    """Closest Hamming distance from every ``from_`` record to ``to``.

    ``exclude_self`` skips the pair formed by a record and itself, for
    distances within one dataset (TTD).
    """
    if direction is not None and direction not in DIRECTIONS:
        raise ConfigError(f"unknown direction {direction!r}")
    if len(to) == 0:
        raise ConfigError("cannot measure distances to an empty dataset")
    attrs = _compare_attrs(from_, attrs, all_attributes)
    if exclude_self and not (len(from_) == len(to) and np.array_equal(from_.ids, to.ids)):
        raise ConfigError("exclude_self applies only when measuring a dataset against itself")
    (src, dst), _ = encode([from_, to], attrs)
    raw = kernels.min_hamming(src, dst, np.arange(len(attrs)), exclude_self)
    dist = raw.astype(np.float64)
    dist[raw > len(attrs)] = np.inf
    return DistanceProfile(direction, dist)


def vr_count(variant: str, first: DistanceProfile, second: DistanceProfile) -> VulnerableCount:
    """Number of records whose first distance is strictly below the second.

    ``tsd_vs_thd`` and ``tsd_vs_ttd`` are indexed by training records,
    ``std_vs_shd`` by synthetic records.
    """
    if variant not in VR_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(VR_VARIANTS)}")
    if len(first) != len(second):
        raise ConfigError("distance profiles differ in length")
    expected = VR_VARIANTS[variant]
    for prof, want in zip((first, second), expected):
        if prof.direction is not None and prof.direction != want:
            raise ConfigError(f"{variant} expects {expected}, got {prof.direction}")
    count = int(np.count_nonzero(first.distances < second.distances))
    return VulnerableCount(variant, count, len(first))


def exact_match_vr(synthetic: Dataset, train: Dataset, holdout: Dataset, attrs=None,
                   all_attributes: bool = False) -> VulnerableCount:
    """Synthetic records that exactly match some training record but no holdout record."""
    if len(holdout) == 0:
        raise ConfigError("holdout must be nonempty")
    std = dcr(synthetic, train, attrs, all_attributes=all_attributes).distances
    shd = dcr(synthetic, holdout, attrs, all_attributes=all_attributes).distances
    return VulnerableCount("exact_match", int(np.count_nonzero((std == 0) & (shd != 0))), len(synthetic))


def similarity_section(train: Dataset, holdout: Dataset, synthetic: Dataset, attrs=None) -> dict:
    """Summary of the deprecated metrics for the audit report."""
    std = dcr(synthetic, train, attrs, direction="STD")
    shd = dcr(synthetic, holdout, attrs, direction="SHD")
    tsd = dcr(train, synthetic, attrs, direction="TSD")
    thd = dcr(train, holdout, attrs, direction="THD")
    ttd = dcr(train, train, attrs, exclude_self=True, direction="TTD") if len(train) > 1 else None
    counts = {
        "tsd_vs_thd": vr_count("tsd_vs_thd", tsd, thd).count,
        "std_vs_shd": vr_count("std_vs_shd", std, shd).count,
        "exact_match": exact_match_vr(synthetic, train, holdout, attrs).count,
    }
    if ttd is not None:
        counts["tsd_vs_ttd"] = vr_count("tsd_vs_ttd", tsd, ttd).count

    def mean(p):
        d = p.distances[np.isfinite(p.distances)]
        return float(d.mean()) if len(d) else float("nan")

    return {
        "metric": "hamming",
        "holdout_size": len(holdout),
        "training_size": len(train),
        "synthetic_size": len(synthetic),
        "vulnerable_records": counts,
        "mean_distance": {
            "STD": mean(std), "SHD": mean(shd), "TSD": mean(tsd), "THD": mean(thd),
            **({"TTD": mean(ttd)} if ttd is not None else {}),
        },
        "exact_match_fraction_STD": float(np.mean(std.distances == 0)) if len(std) else 0.0,
        "exact_match_fraction_SHD": float(np.mean(shd.distances == 0)) if len(shd) else 0.0,
    }
