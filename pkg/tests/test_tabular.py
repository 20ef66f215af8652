import math

import numpy as np
import pytest

import oracles
from helpers import table
from synth_privaudit.errors import ConfigError, ParseError, SchemaError
from synth_privaudit.tabular import (
    CONTINUOUS, MISSING, QUASI_IDENTIFIER, SENSITIVE, AttributeSchema, Dataset, Discretizer,
    discretize, encode, equivalence_classes, k_map_vulnerability, load_csv, load_schema, partition,
    qi_names, sample, sensitive_names, validate_schema,
)

AGE = AttributeSchema("age", CONTINUOUS, QUASI_IDENTIFIER)
GENDER = AttributeSchema("gender", role=QUASI_IDENTIFIER)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_three_rows(tmp_path):
    d = load_csv(write(tmp_path, "age,gender\n30,M\n41,F\n,F\n"), [AGE, GENDER])
    assert len(d) == 3 and d.names == ["age", "gender"]
    assert d.column("age")[0] == 30.0 and math.isnan(d.column("age")[2])
    assert list(d.column("gender")) == ["M", "F", "F"]


def test_load_csv_column_order_and_extras(tmp_path):
    d = load_csv(write(tmp_path, "gender,zip,age\nM,1,30\n"), [AGE, GENDER])
    assert d.rows() == [(30.0, "M")]


def test_load_csv_missing_column_named(tmp_path):
    with pytest.raises(SchemaError, match="gender"):
        load_csv(write(tmp_path, "age,sex\n30,M\n"), [AGE, GENDER])


def test_load_csv_bad_cell_cites_row(tmp_path):
    with pytest.raises(ParseError, match="row 2") as exc:
        load_csv(write(tmp_path, "age,gender\n30,M\nabc,F\n"), [AGE, GENDER])
    assert exc.value.row == 2 and exc.value.column == "age"


def test_missing_categorical_gets_label(tmp_path):
    d = load_csv(write(tmp_path, "age,gender\n30,\n"), [AGE, GENDER])
    assert d.column("gender")[0] == MISSING


def test_load_schema_yaml_and_json(tmp_path):
    y = write(tmp_path, "attributes:\n  - {name: age, kind: continuous, role: quasi-identifier}\n"
                        "  - {name: dx, role: sensitive}\n", "s.yaml")
    j = write(tmp_path, '[{"name": "age", "kind": "continuous", "role": "quasi-identifier"},'
                        ' {"name": "dx", "role": "sensitive"}]', "s.json")
    assert load_schema(y) == load_schema(j)
    s = load_schema(y)
    assert qi_names(s) == ["age"] and sensitive_names(s) == ["dx"]


def test_schema_guards(tmp_path):
    with pytest.raises(SchemaError):
        AttributeSchema("x", kind="ordinal")
    with pytest.raises(SchemaError):
        validate_schema([GENDER, GENDER])
    with pytest.raises(SchemaError, match="R1"):
        validate_schema([AttributeSchema("dx", role=SENSITIVE)], require_qi=True)
    with pytest.raises(SchemaError):
        load_schema(write(tmp_path, "attributes:\n  - {name: a, colour: red}\n", "bad.yaml"))


def test_dataset_is_read_only():
    d = table([("a",), ("b",)], ["x"])
    with pytest.raises(ValueError):
        d.column("x")[0] = "z"


def test_csv_round_trip(tmp_path):
    d = Dataset([AGE, GENDER], {"age": [30.5, float("nan")], "gender": ["M", "F"]})
    p = tmp_path / "o.csv"
    d.to_csv(p)
    back = load_csv(p, [AGE, GENDER])
    assert back.digest() == d.digest()


def test_discretize_boundaries():
    vals = list(range(0, 101, 5))
    d = discretize(table([(v,) for v in vals], ["x"], kinds={"x": CONTINUOUS}), 20)
    labels = list(d.column("x"))
    assert labels[-1] == "bin19" and labels[0] == "bin0"
    assert set(labels) == {f"bin{i}" for i in range(20)}


def test_discretize_constant_and_midpoint():
    d = discretize(table([(7.0,)] * 4, ["x"], kinds={"x": CONTINUOUS}), 20)
    assert set(d.column("x")) == {"bin0"}
    d = discretize(table([(v,) for v in (0.0, 0.49, 0.51, 1.0)], ["x"], kinds={"x": CONTINUOUS}), 2)
    assert list(d.column("x")) == ["bin0", "bin0", "bin1", "bin1"]


def test_discretizer_applies_training_edges():
    train = table([(0.0,), (10.0,)], ["x"], kinds={"x": CONTINUOUS})
    other = table([(-5.0,), (5.0,), (50.0,), (float("nan"),)], ["x"], kinds={"x": CONTINUOUS})
    disc = Discretizer.fit(train, 2)
    assert list(disc.transform(other).column("x")) == ["bin0", "bin1", "bin1", MISSING]
    assert disc.transform(other, skip=("x",)).attribute("x").kind == CONTINUOUS
    assert np.allclose(disc.bin_edges("x"), [0, 5, 10])


def test_partition_sizes_and_determinism():
    d = table([(str(i),) for i in range(10)], ["x"])
    p = partition(d, 0.8, 1)
    tr, ho = p.split(d)
    assert len(tr) == 8 and len(ho) == 2
    assert not set(p.train_ids) & set(p.holdout_ids)
    q = partition(d, 0.8, 1)
    assert np.array_equal(p.train_ids, q.train_ids)
    a, b = partition(d, 0.5, 2).split(d)
    assert (len(a), len(b)) == (5, 5)
    with pytest.raises(ConfigError):
        partition(d, 1.0, 0)


def test_sample_cases():
    d = table([(str(i),) for i in range(6)], ["x"])
    perm = sample(d, 6, 3)
    assert sorted(perm.rows()) == sorted(d.rows())
    empty = sample(d, 0, 3)
    assert len(empty) == 0 and empty.schema == d.schema
    big = sample(d, 18, 3, replacement=True)
    assert len(big) == 18
    with pytest.raises(ConfigError):
        sample(d, 7, 3)


def test_encode_requires_discretized():
    d = table([(1.0,)], ["x"], kinds={"x": CONTINUOUS})
    with pytest.raises(ConfigError, match="discretize"):
        encode([d], ["x"])


def test_equivalence_classes_uniform_binary():
    rng = np.random.default_rng(0)
    rows = [(str(a), str(b)) for a, b in rng.integers(0, 2, (1000, 2))]
    idx = equivalence_classes(table(rows, ["a", "b"]), ["a", "b"])
    assert idx.n_groups == 4
    assert all(200 < len(v) < 300 for v in idx.groups.values())
    assert idx.vulnerability.mean() == pytest.approx(0.004)


def test_equivalence_classes_extremes():
    same = table([("x", "y")] * 5, ["a", "b"])
    idx = equivalence_classes(same, ["a", "b"])
    assert idx.n_groups == 1 and set(idx.k) == {5}
    distinct = table([(str(i), "y") for i in range(5)], ["a", "b"])
    idx = equivalence_classes(distinct, ["a", "b"])
    assert idx.n_groups == 5 and set(idx.k) == {1}


def test_equivalence_requires_quasi_identifiers():
    d = table([("x",)], ["s"], roles={"s": SENSITIVE})
    with pytest.raises(ConfigError, match="quasi-identifier"):
        equivalence_classes(d, ["s"])


def test_k_map_population_counts():
    pop_rows = [("m", "30")] * 250 + [("f", "40")] * 2 + [("f", "50")] * 10
    pop = table(pop_rows, ["g", "a"])
    smp = table([("m", "30"), ("f", "40"), ("x", "99"), ("x", "99")], ["g", "a"])
    km = k_map_vulnerability(smp, pop, ["g", "a"])
    assert km.vulnerability[0] == pytest.approx(0.004)
    assert km.vulnerability[1] == 0.5
    assert km.vulnerability[2] == 0.5  # unseen in population: sample frequency
    assert km.unseen == 2 and km.max == 0.5
    assert list(km.vulnerability) == oracles.k_map(smp.rows(), pop.rows(), [0, 1])


def test_k_map_self_equals_k_anonymity():
    d = table([("a", "1"), ("a", "1"), ("b", "2")], ["g", "a"])
    km = k_map_vulnerability(d, d, ["g", "a"])
    assert np.array_equal(km.vulnerability, equivalence_classes(d, ["g", "a"]).vulnerability)
