import csv
import io
import json
import math

import pytest

from cfscore.errors import StudyRunError
from cfscore.simulation import SimConfig, SimTruth
from cfscore.studies import (
    StudyConfig,
    binomial_se,
    execute_runs,
    run_miscoverage_study,
    run_positivity_study,
    run_power_study,
    run_seed,
)

SMALL = dict(m=6, n=300, mc_n=100_000, profiles=("linear",), K=2)


def test_config_validation():
    with pytest.raises(ValueError):
        StudyConfig(m=1)
    with pytest.raises(ValueError):
        StudyConfig(estimators=())
    with pytest.raises(ValueError):
        StudyConfig(profiles=("svm",))
    with pytest.raises(ValueError):
        StudyConfig.from_dict({"m": 10, "colour": "red"})
    with pytest.raises(ValueError):
        StudyConfig.from_dict({"sim": {"n": 10, "colour": "red"}})


def test_config_round_trip():
    cfg = StudyConfig(m=5, sim=SimConfig(n=100, epsilon=0.3), profiles=("linear", "random_forest"))
    assert StudyConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_run_seeds_distinct():
    seeds = [run_seed(3, j) for j in range(2000)]
    assert len(set(seeds)) == len(seeds)


def test_miscoverage_shape_and_binomial_se():
    cfg = StudyConfig(**SMALL)
    res = run_miscoverage_study(cfg)
    assert len(res.cells) == 3
    for c in res.cells:
        assert 0 <= c.miscoverage <= 1 and 0 <= c.rejection_rate <= 1
        assert c.miscoverage_se == math.sqrt(c.miscoverage * (1 - c.miscoverage) / c.m)
        assert c.rejection_se == binomial_se(c.rejection_rate, c.m)
    rows = list(csv.DictReader(io.StringIO(res.to_csv())))
    assert len(rows) == 3 and {"profile", "estimator", "miscoverage", "mean_width"} <= set(rows[0])


def test_nine_cells_for_full_table():
    cfg = StudyConfig(**{**SMALL, "m": 2, "profiles": ("linear", "random_forest", "super_learner")})
    assert len(run_miscoverage_study(cfg).cells) == 9


def test_reproducible_across_worker_counts():
    cfg = StudyConfig(**SMALL)
    one = run_miscoverage_study(cfg)
    two = run_miscoverage_study(cfg.replace(workers=2))
    assert one.records == two.records
    assert one.to_csv() == two.to_csv()


def test_profile_runs_do_not_depend_on_companions():
    truth = SimTruth(0.85, 0.74, 0.11, "analytic")
    sim = SimConfig(n=300)
    solo = execute_runs(StudyConfig(**{**SMALL, "m": 3, "profiles": ("random_forest",)}), sim, truth)
    both = execute_runs(StudyConfig(**{**SMALL, "m": 3, "profiles": ("linear", "random_forest")}), sim, truth)
    assert solo == [r for r in both if r.profile == "random_forest"]


def test_power_grid_shape():
    cfg = StudyConfig(**{**SMALL, "estimators": ("dr",)})
    res = run_power_study(cfg, [0.0, 0.3], [200, 400])
    assert [(c.point["mu"], c.point["n"]) for c in res.cells] == [(0.0, 200), (0.0, 400), (0.3, 200), (0.3, 400)]
    assert res.cell("linear", "dr", mu=0.0, n=200).delta_true == 0.0


def test_positivity_grid_and_truth_invariance():
    cfg = StudyConfig(**{**SMALL, "estimators": ("dr",)})
    res = run_positivity_study(cfg, [0.2, 0.5])
    assert len(res.cells) == 2
    assert len({c.delta_true for c in res.cells}) == 1
    with pytest.raises(ValueError):
        run_positivity_study(cfg, [0.0])


def test_failed_run_aborts_with_index():
    # a single observed row per arm cannot support the score regression
    cfg = StudyConfig(m=3, n=4, mc_n=100_000, profiles=("linear",), K=2,
                      sim=SimConfig(n=4, epsilon=0.5))
    with pytest.raises(StudyRunError) as info:
        run_miscoverage_study(cfg)
    assert info.value.run_index in (0, 1, 2)


def test_write_outputs(tmp_path):
    res = run_miscoverage_study(StudyConfig(**{**SMALL, "m": 2}))
    csv_path, man_path = res.write(tmp_path)
    text = open(csv_path, encoding="utf-8", newline="").read()
    assert "\r" not in text
    man = json.load(open(man_path))
    assert man["kind"] == "miscoverage" and man["config"]["m"] == 2
