import json
import math

import numpy as np
import pytest

from varsieve.dataset import DatasetError, Objective, RunTable
from varsieve.evaluation import evaluate
from varsieve.screening import (
    ImportanceRanking,
    RankEntry,
    ScreeningReport,
    build_report,
    capacity_sweep,
    format_table,
    rank_variables,
    reduce_dataset,
    select_variables,
)
from varsieve.synthbench import PlantedSpec, generate
from varsieve.trees import GainRecord, LearnerSpec, TreeModel, train

NAMES42 = tuple(f"V{i}" for i in range(1, 43))
LIST_O1 = [38, 15, 24, 2, 32, 41, 39, 3]
LIST_O2 = [41, 35, 9, 17, 11, 38, 37]


def _model(kind, records, variables=("v1", "v2", "v3")):
    log = tuple(GainRecord(i + 1, 0, v, 0.5, g) for i, (v, g) in enumerate(records))
    return TreeModel(kind, {}, variables, ("a", "b"), (), log, {"objective": "O1"})


def _ranking(obj, indices):
    return ImportanceRanking(obj, "ladtree", tuple(RankEntry(f"V{i}", 1.0, n + 1) for n, i in enumerate(indices)))


def _table42(n=6):
    data = np.arange(n * 42, dtype=float).reshape(n, 42)
    objs = (Objective("O1", np.arange(n) % 2, ("a", "b")), Objective("O2", np.arange(n) % 3, ("a", "b", "c")))
    return RunTable(NAMES42, data, objs)


# ---------------------------------------------------------------- ranking


def test_ladtree_rank_by_first_use():
    r = rank_variables(_model("ladtree", [("v3", 1.0), ("v1", 5.0), ("v3", 9.0)]))
    assert r.variables == ["v3", "v1"]
    assert r.entries[0] == RankEntry("v3", 10.0, 1)


def test_ladtree_same_iteration_ties_by_reduction_then_index():
    log = (GainRecord(1, 0, "v2", 0.5, 1.0), GainRecord(1, 0, "v1", 0.5, 1.0), GainRecord(1, 0, "v3", 0.5, 2.0))
    model = TreeModel("ladtree", {}, ("v1", "v2", "v3"), ("a", "b"), (), log, {})
    assert rank_variables(model).variables == ["v3", "v1", "v2"]


def test_leaf_tree_rank_by_total_gain():
    r = rank_variables(_model("info-gain", [("v1", 0.4), ("v2", 0.3), ("v2", 0.2), ("v3", 0.4)]))
    assert r.variables == ["v2", "v1", "v3"]
    assert r.entries[0].score == pytest.approx(0.5)


def test_unused_variables_are_left_out():
    assert rank_variables(_model("best-first", [])).variables == []


def test_ranking_round_trip():
    r = ImportanceRanking("O1", "ladtree", (RankEntry("v2", 1.5, 1),), 0.1, 0.2, True, 3)
    assert ImportanceRanking.from_dict(json.loads(json.dumps(r.to_dict()))) == r


# ---------------------------------------------------------------- selection


def _separable8():
    v1 = [1.0, 2.0, 3.0, 4.0, 10.0, 11.0, 12.0, 13.0]
    v2 = [5.0, 1.0, 7.0, 3.0, 2.0, 8.0, 4.0, 6.0]
    return RunTable(("v1", "v2"), np.c_[v1, v2], (Objective("O1", [0] * 4 + [1] * 4, ("a", "b")),))


def test_select_stops_at_first_round_meeting_thresholds():
    # every fold splits v1 between the groups, leaving pure regions: scores (+1, -1),
    # so each held-out run scores 1 / (1 + e^2) on both error measures
    expected = 1.0 / (1.0 + math.e**2)
    r = select_variables(_separable8(), "O1", LearnerSpec("ladtree"), 0.3, 0.45)
    assert r.rounds == 1 and r.threshold_met
    assert r.variables == ["v1"]
    assert r.mae == pytest.approx(expected, abs=1e-12)
    assert r.rmse == pytest.approx(expected, abs=1e-12)


def test_loose_thresholds_stop_after_one_round():
    table, _ = generate(PlantedSpec(10, (1, 2), noise_rate=0.1, seed=3), 30)
    r = select_variables(table, "O1", LearnerSpec("ladtree"), 2.0, 2.0)
    assert r.rounds == 1 and len(r.variables) <= 1


def test_unreachable_thresholds_run_every_round():
    table, _ = generate(PlantedSpec(10, (1, 2), noise_rate=0.2, seed=3), 30)
    r = select_variables(table, "O1", LearnerSpec("ladtree"), 1e-6, 1e-6, max_rounds=4)
    assert r.rounds == 4 and r.threshold_met is False


def test_select_rejects_nonpositive_thresholds():
    with pytest.raises(ValueError, match="> 0"):
        select_variables(_separable8(), "O1", LearnerSpec("ladtree"), 0.0, 0.5)


@pytest.mark.parametrize("kind", ["sdr", "info-gain", "best-first", "ladtree"])
@pytest.mark.parametrize("protocol", ["training", "leave-one-out"])
def test_sweep_rounds_equal_fresh_training(kind, protocol):
    table, _ = generate(PlantedSpec(6, (1, 4), k=3, noise_rate=0.1, seed=8), 15)
    spec = LearnerSpec(kind)
    for rnd in capacity_sweep(table, "O1", spec, 4, protocol):
        model, result = evaluate(spec.with_capacity(rnd.round), table, "O1", protocol)
        assert rnd.model.to_dict() == model.to_dict()
        assert rnd.result.mae == pytest.approx(result.mae, abs=1e-12)
        assert rnd.result.rmse == pytest.approx(result.rmse, abs=1e-12)


# ---------------------------------------------------------------- invariances


def _planted(seed=1):
    return generate(PlantedSpec(8, (2, 5), noise_rate=0.05, seed=seed), 40)[0]


def test_constant_column_never_ranked():
    base = _planted()
    data = np.c_[base.data, np.full(base.n_runs, 3.0)]
    table = RunTable(base.variables + ("const",), data, base.objectives)
    for kind in ("info-gain", "best-first", "ladtree"):
        r = select_variables(table, "O1", LearnerSpec(kind), 0.01, 0.01, max_rounds=6)
        assert "const" not in r.variables
        plain = select_variables(base, "O1", LearnerSpec(kind), 0.01, 0.01, max_rounds=6)
        assert r.variables == plain.variables


def test_duplicate_column_never_outranks_original():
    base = _planted()
    data = np.c_[base.data, base.data[:, 1]]
    table = RunTable(base.variables + ("v2_copy",), data, base.objectives)
    r = select_variables(table, "O1", LearnerSpec("ladtree"), 0.01, 0.01, max_rounds=6)
    assert "v2_copy" not in r.variables
    assert r.variables == select_variables(base, "O1", LearnerSpec("ladtree"), 0.01, 0.01,
                                           max_rounds=6).variables


# ---------------------------------------------------------------- reduction and report


def test_reduce_two_objective_lists():
    table = _table42()
    reduced = reduce_dataset(table, [_ranking("O1", LIST_O1), _ranking("O2", LIST_O2)])
    expected = sorted(set(LIST_O1) | set(LIST_O2))
    assert len(expected) == 13
    assert reduced.variables == tuple(f"V{i}" for i in expected)
    assert reduced.objective_names == ["O1", "O2"]
    np.testing.assert_array_equal(reduced.column("V38"), table.column("V38"))


def test_reduce_is_idempotent():
    rankings = [_ranking("O1", LIST_O1), _ranking("O2", LIST_O2)]
    once = reduce_dataset(_table42(), rankings)
    assert reduce_dataset(once, rankings).same_content(once)


def test_reduce_errors():
    with pytest.raises(DatasetError, match="lower thresholds"):
        reduce_dataset(_table42(), [_ranking("O1", [])])
    with pytest.raises(DatasetError, match="missing"):
        reduce_dataset(_table42(), [_ranking("O1", [43])])


@pytest.mark.parametrize(
    "lists, kept, shown",
    [
        ((LIST_O1, LIST_O2), 13, "69.0%"),
        ((list(range(1, 12)), list(range(8, 22))), 21, "50.0%"),
        ((list(range(1, 43)),), 42, "0.0%"),
    ],
)
def test_report_reduction(lists, kept, shown):
    report = build_report(_table42(), [_ranking(f"O{i + 1}", lst) for i, lst in enumerate(lists)])
    assert len(report.union) == kept
    assert report.reduction_percent == pytest.approx(100.0 * (42 - kept) / 42, abs=1e-12)
    assert f"{kept} of 42 kept, reduced by {shown}" in format_table(report)


def test_report_table_layout_and_round_trip():
    rankings = [
        ImportanceRanking("O1", "ladtree", tuple(RankEntry(f"V{i}", 1.0, 1) for i in LIST_O1), 0.370, 0.517, True, 4),
        ImportanceRanking("O2", "ladtree", tuple(RankEntry(f"V{i}", 1.0, 1) for i in LIST_O2), 0.412, 0.519, True, 5),
    ]
    report = build_report(_table42(), rankings, duration=1.5)
    text = format_table(report).splitlines()
    assert text[0].split("  ")[0] == "Classification Algorithm"
    assert "0.370" in text[1] and "V38,V15,V24,V2,V32,V41,V39,V3" in text[1]
    assert ScreeningReport.from_dict(json.loads(report.to_json())) == report
    assert json.loads(report.to_json(canonical=True))["duration_seconds"] is None


@pytest.mark.slow
@pytest.mark.parametrize("size", [1, 2, 4, 8])
def test_irrelevant_variables_stay_out_of_top_ranks(size):
    # objective depends on `size` planted variables, 5% label noise, n_runs = 25 * size;
    # the top-`size` ranking must hold ceil(0.85 * size) of them in at least 90% of 50 seeds
    need = math.ceil(0.85 * size)
    effective = tuple(range(3, 3 + 5 * size, 5))
    hits = []
    for seed in range(50):
        table, truth = generate(PlantedSpec(42, effective, noise_rate=0.05, seed=seed), 25 * size)
        top = rank_variables(train(LearnerSpec("ladtree"), table, "O1")).variables[:size]
        hits.append(len(set(top) & set(truth)) >= need)
    rate = sum(hits) / len(hits)
    print(f"|S|={size}: {rate:.0%} of seeds hold >= {need} planted variables in the top {size}")
    assert rate >= 0.9
