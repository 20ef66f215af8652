"""Acceptance criteria AC1-AC10, one PASS/FAIL line each."""

import inspect
import math
import time

import numpy as np
import pytest

import oracles
import test_properties
from helpers import BACKENDS, SENSITIVE, dataset, qi_schema, table, use_backend
from synth_privaudit.attribute import (
    KEY_DROP, UNDEFINED, ZERO, attack_strength, auroc, cap, r_ratio,
)
from synth_privaudit.matcher import HAMMING, MatchConfig, match_records, worst_case_search
from synth_privaudit.membership import AttackSet, confusion, f_naive, f_rel, f_score
from synth_privaudit.policy import (
    ACCEPTABLE, HIGH, R4_WARNING, AuditReport, decide_attribute, decide_membership, parse_report,
    render_report,
)
from synth_privaudit.sim import (
    HoldoutMatchConfig, SubsetSweepConfig, TwoPopulationConfig, sim_holdout_match, sim_subset_sweep,
    sim_two_population,
)
from synth_privaudit.similarity import similarity_section


def _run(capsys, ac, title, body):
    start = time.perf_counter()
    try:
        checks = body()
        error = None
    except Exception as exc:  # reported as a failed criterion
        checks, error = [], f"{type(exc).__name__}: {exc}"
    failed = [name for name, ok in checks if not ok]
    ok = error is None and not failed
    elapsed = time.perf_counter() - start
    detail = error or (f"failed: {', '.join(failed)}" if failed else f"{len(checks)} checks")
    with capsys.disabled():
        print(f"\n{ac} {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {elapsed:.1f}s]")
    assert ok, detail


def test_ac1_f_naive(capsys):
    def body():
        return [
            ("f_naive(0.2)=1/3", f_naive(0.2, 1) == pytest.approx(1 / 3, abs=1e-12)),
            ("f_naive(0.57)=0.726", abs(f_naive(0.57, 1) - 0.726) <= 0.001),
            ("f_naive(0.1,b=0.5)=0.122", abs(f_naive(0.1, 0.5) - 0.122) <= 0.001),
            ("f_naive(1)=1", f_naive(1.0, 1) == 1.0),
        ]
    _run(capsys, "AC1", "naive-guess F-score values", body)


def test_ac2_worked_example(capsys):
    def body():
        f = f_score(1.0, 0.1, 0.5)
        rel = f_rel(f, f_naive(0.1, 0.5))
        return [("F_0.5=0.357", abs(f - 0.357) <= 0.001), ("F_rel=0.268", abs(rel - 0.268) <= 0.002)]
    _run(capsys, "AC2", "precision 1 / recall 0.1 worked example", body)


def test_ac3_ratio_scenarios(capsys):
    def body():
        return [
            ("R(0.9,0.5)=0.8", r_ratio(0.9, 0.5) == pytest.approx(0.8, abs=1e-12)),
            ("S(0.9,0.5)=0.4", attack_strength(0.9, 0.5) == pytest.approx(0.4, abs=1e-12)),
            ("R(0.95,0.9)=0.5", r_ratio(0.95, 0.9) == pytest.approx(0.5, abs=1e-12)),
            ("S(0.95,0.5)=0.45", attack_strength(0.95, 0.5) == pytest.approx(0.45, abs=1e-12)),
            ("R(x,x)=0", all(r_ratio(x, x) == 0 for x in (0.0, 0.3, 0.77))),
        ]
    _run(capsys, "AC3", "attribute ratio scenarios", body)


def test_ac4_decision_matrices(capsys):
    def body():
        return [
            ("high/high -> high", decide_attribute(0.9, 0.3) == HIGH),
            ("low abs/high rel -> acceptable", decide_attribute(0.5, 0.3) == ACCEPTABLE),
            ("high abs/low rel -> acceptable", decide_attribute(0.9, 0.1) == ACCEPTABLE),
            ("low/low -> acceptable", decide_attribute(0.5, 0.1) == ACCEPTABLE),
            ("f_rel=0.2 -> acceptable", decide_membership(0.2) == ACCEPTABLE),
            ("f_rel just above 0.2 -> high", decide_membership(0.2 + 1e-9) == HIGH),
        ]
    _run(capsys, "AC4", "decision matrices at default thresholds", body)


def test_ac5_two_population(capsys):
    def body():
        t0 = time.perf_counter()
        paper = sim_two_population(TwoPopulationConfig.paper_scale(), seed=2024).summary
        runtime = time.perf_counter() - t0
        desk = sim_two_population(TwoPopulationConfig(), seed=2024).summary
        return [
            (f"paper A={paper['precision_A']:.4f} in [0.42,0.50]", 0.42 <= paper["precision_A"] <= 0.50),
            (f"paper B={paper['precision_B']:.4f} <= 0.01", paper["precision_B"] <= 0.01),
            (f"runtime {runtime:.1f}s < 120s", runtime < 120),
            (f"desk A={desk['precision_A']:.4f} in [0.40,0.52]", 0.40 <= desk["precision_A"] <= 0.52),
            (f"desk B={desk['precision_B']:.4f} <= 0.03", desk["precision_B"] <= 0.03),
        ]
    _run(capsys, "AC5", "two-population precision (1000 and 100 iterations)", body)


def test_ac6_subset_sweep(capsys):
    def body():
        t0 = time.perf_counter()
        r = sim_subset_sweep(None, SubsetSweepConfig(), seed=0)
        runtime = time.perf_counter() - t0
        maxima = [row["baseline_max_f1"] for row in r.rows]
        mean = {row["size"]: row["synthetic_mean_f1"] for row in r.rows}
        return [
            ("1023 subsets", r.summary["subsets"] == 1023),
            ("baseline max-F1 non-decreasing", all(b >= a for a, b in zip(maxima, maxima[1:]))),
            (f"mean F1 size 10 ({mean[10]:.3f}) < size 3 ({mean[3]:.3f})", mean[10] < mean[3]),
            ("F_naive row 0.333", all(abs(row["f_naive"] - 0.333) <= 0.001 for row in r.rows)),
            (f"runtime {runtime:.1f}s < 60s", runtime < 60),
        ]
    _run(capsys, "AC6", "subset sweep on the 10-attribute marginal fixture", body)


def test_ac7_holdout_match(capsys):
    def body():
        t0 = time.perf_counter()
        r = sim_holdout_match(HoldoutMatchConfig(), seed=0)
        runtime = time.perf_counter() - t0
        frac = {(row["k"], row["original_size"]): row["shd_match_fraction"] for row in r.rows}
        big = frac[(20, 5000)] - frac[(1, 5000)]
        small = abs(frac[(20, 50)] - frac[(1, 50)])
        return [
            ("STD identically 0", all(row["std_max_distance"] == 0 for row in r.rows)),
            (f"size 5000: k20-k1 = {big:.3f} >= 0.1", big >= 0.1),
            (f"size 50: |k20-k1| = {small:.3f} < 0.1", small < 0.1),
            (f"runtime {runtime:.1f}s < 60s", runtime < 60),
        ]
    _run(capsys, "AC7", "holdout exact-match fractions", body)


def _toy(rng):
    k = int(rng.integers(1, 6))
    n_a, n_s = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    attack = [tuple("abc"[v] for v in r) for r in rng.integers(0, 3, (n_a, k))]
    synth = [tuple("abc"[v] for v in r) for r in rng.integers(0, 3, (n_s, k))]
    labels = (rng.random(n_a) < 0.5).tolist()
    return k, attack, labels, synth


def test_ac8_oracle_equivalence(capsys):
    def body():
        rng = np.random.default_rng(8)
        bad = {"match_records": 0, "worst_case_search": 0, "confusion": 0, "cap": 0, "auroc": 0}
        cases = 0
        for name in sorted(BACKENDS):
            with use_backend(name):
                for _ in range(300):
                    cases += 1
                    k, attack, labels, synth = _toy(rng)
                    schema = qi_schema(k)
                    names = [a.name for a in schema]
                    a, s = dataset(attack, schema), dataset(synth, schema)
                    t = int(rng.integers(0, k))
                    m = match_records(a, s, MatchConfig(names, HAMMING if t else "exact", t))
                    bad["match_records"] += m.matched.tolist() != oracles.match_flags(attack, synth, range(k), t)
                    aset = AttackSet(a, np.array(labels), sum(labels) / len(labels))
                    exact = match_records(a, s, MatchConfig(names))
                    c = confusion(aset, exact)
                    want = oracles.confusion(oracles.match_flags(attack, synth, range(k)), labels)
                    bad["confusion"] += (c.tp, c.fp, c.tn, c.fn) != want
                    beta = float(rng.choice([0.5, 1.0, 2.0]))
                    res = worst_case_search(aset, s, names, beta)
                    best, sets, _ = oracles.worst_case(attack, labels, synth, names, beta)
                    bad["worst_case_search"] += res.best_score != pytest.approx(best, abs=1e-12) or \
                        tuple(sorted(res.best_subset)) != min(sets)
        for _ in range(300):
            k, attack, _, synth = _toy(rng)
            attack = [r + ("xy"[int(rng.integers(0, 2))],) for r in attack]
            synth = [r + ("xy"[int(rng.integers(0, 2))],) for r in synth]
            names = [f"q{i}" for i in range(k)] + ["s"]
            a, s = table(attack, names, {"s": SENSITIVE}), table(synth, names, {"s": SENSITIVE})
            for policy in (ZERO, UNDEFINED, KEY_DROP):
                got = cap(a, s, names[:-1], "s", policy).values.tolist()
                want = oracles.cap_values(attack, synth, list(range(k)), k, policy)
                same = all((w is None and math.isnan(g)) or (w is not None and g == pytest.approx(w, abs=1e-12))
                           for g, w in zip(got, want))
                bad["cap"] += not same
            scores = rng.integers(0, 4, len(attack)).tolist()
            lab = (rng.random(len(attack)) < 0.5).tolist()
            g, w = auroc(scores, lab), oracles.auroc(scores, lab)
            bad["auroc"] += not ((math.isnan(g) and math.isnan(w)) or g == pytest.approx(w, abs=1e-12))
        return [(f"{k} ({cases} fixtures)", v == 0) for k, v in bad.items()]
    _run(capsys, "AC8", "toy fixtures equal exhaustive oracles", body)


def test_ac9_property_suites(capsys):
    def body():
        checks = []
        for fname, fn in sorted(vars(test_properties).items()):
            if not fname.startswith("test_") or not callable(fn):
                continue
            params = inspect.signature(fn).parameters
            variants = [{"name": b} for b in sorted(BACKENDS)] if "name" in params else [{}]
            for kw in variants:
                label = fname + (f"[{kw['name']}]" if kw else "")
                try:
                    fn(**kw)
                    checks.append((label, True))
                except Exception:
                    checks.append((label, False))
        return checks
    _run(capsys, "AC9", "randomized property suites (1000 cases each)", body)


def test_ac10_deprecation_round_trip(capsys):
    def body():
        schema = qi_schema(3)
        train = dataset([("a", "b", "c"), ("b", "b", "b"), ("c", "a", "a")], schema)
        holdout = dataset([("a", "a", "a")], schema)
        section = similarity_section(train, holdout, train, [a.name for a in schema])
        section["_warning"] = "suppressed"
        section["deprecated"] = False
        report = AuditReport(deprecated_similarity=section, decisions={})
        text_json = render_report(report, "json")
        doc = parse_report(text_json)
        again = parse_report(render_report(doc, "json"))
        return [
            ("json carries warning", doc["deprecated_similarity"]["_warning"] == R4_WARNING),
            ("flag not suppressible", doc["deprecated_similarity"]["deprecated"] is True),
            ("survives re-render", again["deprecated_similarity"]["_warning"] == R4_WARNING),
            ("text carries warning", "should not be used to report privacy" in render_report(report, "text")),
            ("absent section has no key", "deprecated_similarity" not in parse_report(render_report(AuditReport()))),
        ]
    _run(capsys, "AC10", "similarity section always carries the deprecation warning", body)
