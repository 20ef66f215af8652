"""Seeded simulations of membership and identity disclosure behaviour.

three scenarios:

``two-population``
    Members are HIV-positive young adults; the adversary draws targets from
    that sub-population (A) or from all young adults (B). Precision of a
    match-based membership guess shows how much the answer depends on the
    target population.
``subset-sweep``
    Membership F1 for every quasi-identifier subset, against the training
    data and against independent-marginal synthetic data.
``holdout-match``
    Share of resampled synthetic records that exactly match a holdout record,
    for populations with known uniform equivalence-class size k.

Each scenario takes one integer seed; iterations derive their own streams
from (seed, scenario, iteration) so they can run in any order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError
from .generators import MARGINAL, SWR, GeneratorSpec
from .matcher import scan_subsets
from .membership import build_attack_set, f_naive
from .similarity import dcr
from .tabular import QUASI_IDENTIFIER, AttributeSchema, Dataset, Discretizer, partition, sample

TWO_POPULATION = "two-population"
SUBSET_SWEEP = "subset-sweep"
HOLDOUT_MATCH = "holdout-match"
SCENARIOS = (TWO_POPULATION, SUBSET_SWEEP, HOLDOUT_MATCH)


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    params: dict
    rows: list  # one dict per curve row
    summary: dict
    iterations: int
    seed: int
    generator: str

    def curve_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            writer = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": self.params,
            "summary": self.summary,
            "iterations": self.iterations,
            "seed": self.seed,
            "generator": self.generator,
            "rows": self.rows,
        }


def _fmt(v):
    if isinstance(v, float):
        return repr(round(float(v), 12))
    return v


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


# -- two populations ---------------------------------------------------------

@dataclass
class TwoPopulationConfig:
    super_size: int = 322_835
    sub_size: int = 2_172
    train_size: int = 1_000
    attack_size: int = 1_000
    iterations: int = 100
    male_weight: float = 3.2
    age_bands: int = 4  # 5-year bands over ages 20-39
    generator: str = SWR
    workers: int = 1

    @classmethod
    def paper_scale(cls, **overrides) -> "TwoPopulationConfig":
        return cls(**{"iterations": 1_000, **overrides})


def _two_population_setup(cfg: TwoPopulationConfig, seed: int):
    rng = _rng(seed, 1, 0)
    age = rng.integers(0, cfg.age_bands, cfg.super_size).astype(np.int32)
    male = rng.integers(0, 2, cfg.super_size).astype(np.int32)
    population = np.ascontiguousarray(np.stack([age, male], axis=1))
    weights = np.where(male == 1, cfg.male_weight, 1.0)
    sub = rng.choice(cfg.super_size, cfg.sub_size, replace=False, p=weights / weights.sum())
    train = rng.choice(sub, cfg.train_size, replace=False)
    member = np.zeros(cfg.super_size, dtype=bool)
    member[train] = True
    schema = (
        AttributeSchema("age_band", role=QUASI_IDENTIFIER),
        AttributeSchema("gender", role=QUASI_IDENTIFIER),
    )
    train_ds = Dataset(schema, {
        "age_band": [f"{20 + 5 * a}-{24 + 5 * a}" for a in age[train]],
        "gender": ["M" if g else "F" for g in male[train]],
    })
    synth_ds = GeneratorSpec(cfg.generator, seed, cfg.train_size).generate(train_ds)
    # synthetic rows back to the population's integer codes
    synth = np.empty((len(synth_ds), 2), dtype=np.int32)
    synth[:, 0] = [(int(v.split("-")[0]) - 20) // 5 for v in synth_ds.column("age_band")]
    synth[:, 1] = [1 if v == "M" else 0 for v in synth_ds.column("gender")]
    return population, sub, member, synth


def _precision(population, member, synth, targets) -> float:
    flags = kernels.match_flags(
        np.ascontiguousarray(population[targets]), synth, np.arange(2), 0
    ).astype(bool)
    guessed = int(flags.sum())
    return float(np.count_nonzero(flags & member[targets]) / guessed) if guessed else 0.0


def sim_two_population(cfg: TwoPopulationConfig | None = None, seed: int = 0) -> ScenarioResult:
    cfg = cfg or TwoPopulationConfig()
    if cfg.sub_size > cfg.super_size:
        raise ConfigError("sub-population cannot be larger than the super-population")
    if cfg.train_size > cfg.sub_size:
        raise ConfigError("training sample cannot be larger than the sub-population")
    if cfg.attack_size > cfg.sub_size:
        raise ConfigError("attack set cannot be larger than the sub-population")
    if cfg.iterations < 1:
        raise ConfigError("at least one iteration is required")
    population, sub, member, synth = _two_population_setup(cfg, seed)

    def run(it):
        ra = _rng(seed, 2, it)
        rb = _rng(seed, 3, it)
        a = _precision(population, member, synth, sub[ra.choice(len(sub), cfg.attack_size, replace=False)])
        b = _precision(population, member, synth, rb.choice(cfg.super_size, cfg.attack_size, replace=False))
        return a, b

    its = range(cfg.iterations)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, its))
    else:
        results = [run(i) for i in its]
    res = np.asarray(results)
    se = res.std(axis=0, ddof=1) / math.sqrt(len(res)) if len(res) > 1 else np.zeros(2)
    summary = {
        "precision_A": float(res[:, 0].mean()),
        "precision_B": float(res[:, 1].mean()),
        "se_A": float(se[0]),
        "se_B": float(se[1]),
        "expected_A": cfg.train_size / cfg.sub_size,
        "expected_B": cfg.train_size / cfg.super_size,
    }
    rows = [
        {"scenario": "A", "target_population": cfg.sub_size, "precision": summary["precision_A"], "se": summary["se_A"]},
        {"scenario": "B", "target_population": cfg.super_size, "precision": summary["precision_B"], "se": summary["se_B"]},
    ]
    return ScenarioResult(TWO_POPULATION, asdict(cfg), rows, summary, cfg.iterations, seed, cfg.generator)


# -- subset sweep --------------------------------------------------------------

@dataclass
class SubsetSweepConfig:
    n_attrs: int = 10
    population: int = 5_000
    train_size: int = 1_000
    attack_size: int = 1_000
    generator: str = MARGINAL
    min_size: int = 1
    max_size: int | None = None
    parallelism: int = 1
    cap: int = 20

    @classmethod
    def paper_scale(cls, **overrides) -> "SubsetSweepConfig":
        base = {"n_attrs": 20, "population": 50_000, "train_size": 10_000, "attack_size": 10_000}
        return cls(**{**base, **overrides})


def make_population(n: int, n_attrs: int, seed: int, n_latent: int = 4) -> Dataset:
    """Correlated categorical population: a hidden class drives every attribute.

    Attribute j has 2 + j % 5 categories; given the class, it takes its
    class-preferred category with probability 0.7 and a uniform one otherwise.
    """
    rng = _rng(seed, 10)
    latent = rng.integers(0, n_latent, n)
    schema = []
    columns = {}
    for j in range(n_attrs):
        card = 2 + j % 5
        preferred = rng.integers(0, card, n_latent)
        keep = rng.random(n) < 0.7
        values = np.where(keep, preferred[latent], rng.integers(0, card, n))
        name = f"q{j:02d}"
        schema.append(AttributeSchema(name, role=QUASI_IDENTIFIER))
        columns[name] = np.array([f"c{v}" for v in values], dtype=object)
    return Dataset(schema, columns)


def sim_subset_sweep(data: Dataset | None = None, cfg: SubsetSweepConfig | None = None,
                     seed: int = 0) -> ScenarioResult:
    cfg = cfg or SubsetSweepConfig()
    if data is None:
        data = make_population(cfg.population, cfg.n_attrs, seed)
    qis = [a.name for a in data.schema if a.role == QUASI_IDENTIFIER]
    if not qis:
        raise ConfigError("population declares no quasi-identifier")
    if cfg.train_size >= len(data):
        raise ConfigError("training sample must be smaller than the population")
    data = Discretizer.fit(data).transform(data)
    train = sample(data, cfg.train_size, seed)
    rest = data.select_ids(np.setdiff1d(data.ids, train.ids))
    t = cfg.train_size / len(data)
    attack = build_attack_set(train, rest, t, cfg.attack_size, seed, n=cfg.train_size, N=len(data))
    synthetic = GeneratorSpec(cfg.generator, seed, cfg.train_size).generate(train)
    args = (cfg.min_size, cfg.max_size, 0, cfg.parallelism, cfg.cap)
    synth_scan = scan_subsets(attack.records, attack.labels, synthetic, qis, *args)
    base_scan = scan_subsets(attack.records, attack.labels, train, qis, *args)
    synth_res = synth_scan.search(1.0)
    base_res = base_scan.search(1.0)
    naive = f_naive(attack.prevalence, 1.0)
    rows = []
    for s, b in zip(synth_res.curve, base_res.curve):
        rows.append({
            "size": s.size,
            "subsets": s.count,
            "synthetic_mean_f1": s.mean,
            "synthetic_max_f1": s.max,
            "synthetic_sd_f1": s.sd,
            "baseline_mean_f1": b.mean,
            "baseline_max_f1": b.max,
            "baseline_sd_f1": b.sd,
            "f_naive": naive,
        })
    summary = {
        "t": t,
        "f_naive": naive,
        "subsets": len(synth_scan.subsets),
        "synthetic_best_subset": list(synth_res.best_subset),
        "synthetic_best_f1": synth_res.best_score,
        "synthetic_full_f1": synth_res.full_score,
        "baseline_best_f1": base_res.best_score,
    }
    params = {**asdict(cfg), "population": len(data), "n_attrs": len(qis)}
    return ScenarioResult(SUBSET_SWEEP, params, rows, summary, 1, seed, cfg.generator)


# -- holdout exact matches -----------------------------------------------------

@dataclass
class HoldoutMatchConfig:
    population: int = 20_000
    ks: tuple = (1, 5, 20)
    sizes: tuple = (50, 500, 5_000)
    ratio: float = 0.8
    iterations: int = 10

    @classmethod
    def paper_scale(cls, **overrides) -> "HoldoutMatchConfig":
        base = {"population": 100_000, "ks": tuple(range(1, 21)), "sizes": tuple(range(10, 10_001, 50))}
        return cls(**{**base, **overrides})


def _uniform_k_population(size: int, k: int) -> Dataset:
    n_classes = size // k
    keys = np.repeat(np.arange(n_classes), k)
    schema = (AttributeSchema("key", role=QUASI_IDENTIFIER),)
    return Dataset(schema, {"key": np.array([f"v{v}" for v in keys], dtype=object)})


def sim_holdout_match(cfg: HoldoutMatchConfig | None = None, seed: int = 0) -> ScenarioResult:
    cfg = cfg or HoldoutMatchConfig()
    for k in cfg.ks:
        if not 1 <= k <= cfg.population:
            raise ConfigError(f"class size {k} outside [1, population]")
    for n in cfg.sizes:
        if n > cfg.population:
            raise ConfigError(f"original size {n} exceeds the population")
    rows = []
    for ki, k in enumerate(cfg.ks):
        pop = _uniform_k_population(cfg.population, k)
        for si, n in enumerate(cfg.sizes):
            shd, std = [], []
            for it in range(cfg.iterations):
                s = int(_rng(seed, 20, ki, si, it).integers(2**31))
                original = sample(pop, n, s)
                train, holdout = partition(original, cfg.ratio, s + 1).split(original)
                synth = GeneratorSpec(SWR, s + 2, max(1, len(train))).generate(train)
                std.append(float(dcr(synth, train).distances.max()))
                shd.append(float(np.mean(dcr(synth, holdout).distances == 0)) if len(holdout) else 0.0)
            rows.append({
                "k": k,
                "vulnerability": 1.0 / k,
                "original_size": n,
                "shd_match_fraction": float(np.mean(shd)),
                "shd_sd": float(np.std(shd)),
                "std_max_distance": float(max(std)),
            })
    summary = {"cells": len(rows), "std_max_distance": max(r["std_max_distance"] for r in rows)}
    params = {**asdict(cfg), "ks": list(cfg.ks), "sizes": list(cfg.sizes)}
    return ScenarioResult(HOLDOUT_MATCH, params, rows, summary, cfg.iterations, seed, SWR)


def run_scenario(name: str, seed: int = 0, paper_scale: bool = False, overrides: dict | None = None) -> ScenarioResult:
    overrides = dict(overrides or {})
    if name == TWO_POPULATION:
        cfg = TwoPopulationConfig.paper_scale(**overrides) if paper_scale else TwoPopulationConfig(**overrides)
        return sim_two_population(cfg, seed)
    if name == SUBSET_SWEEP:
        cfg = SubsetSweepConfig.paper_scale(**overrides) if paper_scale else SubsetSweepConfig(**overrides)
        return sim_subset_sweep(None, cfg, seed)
    if name == HOLDOUT_MATCH:
        if "ks" in overrides:
            overrides["ks"] = tuple(overrides["ks"])
        if "sizes" in overrides:
            overrides["sizes"] = tuple(overrides["sizes"])
        cfg = HoldoutMatchConfig.paper_scale(**overrides) if paper_scale else HoldoutMatchConfig(**overrides)
        return sim_holdout_match(cfg, seed)
    raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
