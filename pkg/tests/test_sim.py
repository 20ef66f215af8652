import math

import pytest

from synth_privaudit.errors import ConfigError
from synth_privaudit.sim import (
    HoldoutMatchConfig, SubsetSweepConfig, TwoPopulationConfig, run_scenario, sim_holdout_match,
    sim_subset_sweep, sim_two_population,
)

SMALL = dict(super_size=20_000, sub_size=800, train_size=300, attack_size=300)


def test_two_population_desk_values():
    r = sim_two_population(seed=3)
    assert 0.40 <= r.summary["precision_A"] <= 0.52
    assert r.summary["precision_B"] <= 0.03
    assert r.iterations == 100


def test_two_population_deterministic():
    cfg = TwoPopulationConfig(iterations=10, **SMALL)
    assert sim_two_population(cfg, 7).to_dict() == sim_two_population(cfg, 7).to_dict()
    assert sim_two_population(cfg, 7).to_dict() != sim_two_population(cfg, 8).to_dict()


def test_two_population_threads_do_not_change_result():
    a = sim_two_population(TwoPopulationConfig(iterations=8, **SMALL), 1)
    b = sim_two_population(TwoPopulationConfig(iterations=8, workers=3, **SMALL), 1)
    assert a.summary == b.summary


def test_sub_equal_super_gives_equal_scenarios():
    cfg = TwoPopulationConfig(super_size=3000, sub_size=3000, train_size=1000, attack_size=1000, iterations=40)
    s = sim_two_population(cfg, 2).summary
    assert abs(s["precision_A"] - s["precision_B"]) < 4 * math.hypot(s["se_A"], s["se_B"]) + 1e-9


def test_standard_error_scales_with_iterations():
    se = [sim_two_population(TwoPopulationConfig(iterations=n, **SMALL), 5).summary["se_A"] for n in (100, 200, 400)]
    for a, b in zip(se, se[1:]):
        assert b / a == pytest.approx(1 / math.sqrt(2), abs=0.2)


def test_two_population_guards():
    with pytest.raises(ConfigError):
        sim_two_population(TwoPopulationConfig(super_size=100, sub_size=200))
    with pytest.raises(ConfigError):
        sim_two_population(TwoPopulationConfig(iterations=0, **SMALL))


def test_subset_sweep_rows():
    cfg = SubsetSweepConfig(n_attrs=6, population=1500, train_size=300, attack_size=300)
    r = sim_subset_sweep(None, cfg, 1)
    assert [row["size"] for row in r.rows] == list(range(1, 7))
    assert sum(row["subsets"] for row in r.rows) == 63
    maxima = [row["baseline_max_f1"] for row in r.rows]
    assert all(b >= a for a, b in zip(maxima, maxima[1:]))
    assert all(row["f_naive"] == pytest.approx(1 / 3) for row in r.rows)
    assert r.curve_csv().splitlines()[0].startswith("size,subsets,")


def test_subset_sweep_paper_scale_config():
    cfg = SubsetSweepConfig.paper_scale()
    assert (cfg.n_attrs, cfg.population, cfg.train_size, cfg.attack_size) == (20, 50_000, 10_000, 10_000)


def test_holdout_match_small():
    cfg = HoldoutMatchConfig(population=2000, ks=(1, 20), sizes=(40, 1000), iterations=3)
    r = sim_holdout_match(cfg, 0)
    assert len(r.rows) == 4
    assert r.summary["std_max_distance"] == 0
    k1 = {row["original_size"]: row["shd_match_fraction"] for row in r.rows if row["k"] == 1}
    assert k1 == {40: 0.0, 1000: 0.0}


def test_holdout_match_guards():
    with pytest.raises(ConfigError):
        sim_holdout_match(HoldoutMatchConfig(population=100, sizes=(500,)))
    with pytest.raises(ConfigError):
        sim_holdout_match(HoldoutMatchConfig(population=100, ks=(0,)))


def test_run_scenario_unknown():
    with pytest.raises(ConfigError, match="two-population"):
        run_scenario("three-population")
