import numpy as np
import pytest

import oracles
from helpers import dataset, qi_schema
from synth_privaudit.errors import ConfigError
from synth_privaudit.generators import marginal_generate
from synth_privaudit.matcher import (
    HAMMING, MatchConfig, count_subsets, enumerate_subsets, f_beta_counts, match_records,
    scan_subsets, worst_case_search,
)
from synth_privaudit.membership import AttackSet, build_attack_set
from synth_privaudit.sim import make_population
from synth_privaudit.tabular import sample


def test_subset_counts():
    assert count_subsets(20) == 1_048_575
    names = [f"a{i}" for i in range(10)]
    assert sum(1 for _ in enumerate_subsets(names)) == 1023
    assert list(enumerate_subsets(names[:5], 5, 5)) == [tuple(names[:5])]


def test_enumeration_order_by_size():
    sizes = [len(s) for s in enumerate_subsets(list("abcd"))]
    assert sizes == sorted(sizes)


def test_identity_match(backend):
    schema = qi_schema(3)
    rows = [("a", "b", "c"), ("c", "b", "a")]
    d = dataset(rows, schema)
    res = match_records(d, d, MatchConfig([a.name for a in schema]))
    assert res.matched.all() and res.n_matched == 2


def test_threshold_semantics(backend):
    schema = qi_schema(3)
    names = [a.name for a in schema]
    attack = dataset([("a", "a", "a")], schema)
    synth = dataset([("a", "a", "b"), ("b", "a", "a")], schema)
    assert match_records(attack, synth, MatchConfig(names, HAMMING, 1)).matched.tolist() == [True]
    assert match_records(attack, synth, MatchConfig(names)).matched.tolist() == [False]


def test_six_record_toy_against_pairwise(backend):
    schema = qi_schema(3)
    attack = [("a", "b", "c"), ("a", "a", "a"), ("b", "b", "b"), ("c", "a", "b"), ("a", "b", "b"), ("c", "c", "c")]
    synth = [("a", "b", "c"), ("b", "b", "a"), ("c", "a", "a"), ("a", "b", "b"), ("b", "c", "c"), ("a", "a", "c")]
    names = [a.name for a in schema]
    for t in (0, 1, 2):
        cfg = MatchConfig(names, HAMMING if t else "exact", t)
        got = match_records(dataset(attack, schema), dataset(synth, schema), cfg)
        assert got.matched.tolist() == oracles.match_flags(attack, synth, range(3), t)


def test_match_config_guards():
    with pytest.raises(ConfigError):
        MatchConfig([])
    with pytest.raises(ConfigError):
        MatchConfig(["a"], "exact", 1)
    with pytest.raises(ConfigError):
        MatchConfig(["a", "b"], HAMMING, 2)
    with pytest.raises(ConfigError):
        MatchConfig(["a"], "euclidean")


def test_f_beta_counts_zero_without_true_positive():
    assert f_beta_counts([0, 0], [0, 5], [3, 3], 1.0).tolist() == [0.0, 0.0]
    assert f_beta_counts([1], [1], [1], 1.0)[0] == pytest.approx(0.5)


def test_full_set_dominated_by_search(backend):
    rng = np.random.default_rng(0)
    schema = qi_schema(4)
    rows = [tuple(str(v) for v in r) for r in rng.integers(0, 3, (40, 4))]
    train, holdout = dataset(rows[:20], schema), dataset(rows[20:], schema)
    attack = build_attack_set(train, holdout, 0.5, 20, 1)
    res = worst_case_search(attack, train, [a.name for a in schema])
    assert res.best_score >= res.full_score


def test_four_attribute_toy_against_exhaustive(backend):
    rng = np.random.default_rng(3)
    schema = qi_schema(4)
    names = [a.name for a in schema]
    attack = [tuple(str(v) for v in r) for r in rng.integers(0, 2, (8, 4))]
    synth = [tuple(str(v) for v in r) for r in rng.integers(0, 2, (8, 4))]
    labels = [True, False] * 4
    a = AttackSet(dataset(attack, schema), np.array(labels), 0.5)
    for beta in (0.5, 1.0, 2.0):
        res = worst_case_search(a, dataset(synth, schema), names, beta)
        best, sets, _ = oracles.worst_case(attack, labels, synth, names, beta)
        assert res.best_score == pytest.approx(best, abs=1e-12)
        assert tuple(sorted(res.best_subset)) == min(sets)


def test_marginal_generator_mean_f1_drops_with_size():
    pop = make_population(3000, 10, seed=4)
    train = sample(pop, 600, 4)
    rest = pop.select_ids(np.setdiff1d(pop.ids, train.ids))
    attack = build_attack_set(train, rest, 0.2, 600, 4)
    synth = marginal_generate(train, 600, 4)
    res = worst_case_search(attack, synth, train.names)
    by_size = {s.size: s.mean for s in res.curve}
    assert by_size[10] < by_size[3]


def test_subset_cap_and_threshold_filter():
    schema = qi_schema(3)
    d = dataset([("a", "a", "a")], schema)
    names = [a.name for a in schema]
    with pytest.raises(ConfigError, match="restrict"):
        scan_subsets(d, [True], d, names, cap=2)
    scan = scan_subsets(d, [True], d, names, threshold=1)
    assert all(len(s) > 1 for s in scan.subsets)


def test_tie_break_is_lexicographic(backend):
    schema = qi_schema(2)
    d = dataset([("a", "a")], schema)
    a = AttackSet(d, np.array([True]), 1.0)
    res = worst_case_search(a, d, ["q1", "q0"])
    assert res.best_subset == ("q0",)
