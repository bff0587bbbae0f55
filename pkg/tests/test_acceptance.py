"""Acceptance criteria, one test each, with a printed PASS/FAIL line per criterion.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time

import numpy as np
import pytest

from varsieve.cli import PipelineConfig, run_pipeline
from varsieve.dataset import Objective, RunTable, load_arff, load_csv, write_arff, write_csv
from varsieve.evaluation import InstanceRecord, aggregate, instance_error
from varsieve.screening import (
    ImportanceRanking,
    RankEntry,
    build_report,
    capacity_sweep,
    format_table,
    rank_variables,
    select_variables,
)
from varsieve.synthbench import (
    PlantedSpec,
    XorShift64Star,
    generate,
    generate_problem,
    oracle_best_split,
    recovery_score,
)
from varsieve.trees import LadTreeParams, LearnerSpec, best_split, predict_proba, train, train_ladtree

LIST_O1 = (38, 15, 24, 2, 32, 41, 39, 3)
LIST_O2 = (41, 35, 9, 17, 11, 38, 37)


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    return emit


# ---------------------------------------------------------------- 1


def _random_instance(rng, criterion):
    n = int(rng.integers(2, 13))
    p = int(rng.integers(1, 7))
    if rng.random() < 0.5:  # coarse grid: many ties between values and between gains
        X = rng.integers(0, 4, size=(n, p)).astype(float)
    else:
        X = np.round(rng.normal(size=(n, p)), 3)
    if criterion == "sdr":
        y = np.round(rng.normal(size=n) * 3, 2) if rng.random() < 0.5 else rng.integers(0, 4, n).astype(float)
    else:
        y = rng.integers(0, int(rng.integers(2, 5)), n)
    return X, y


def test_criterion_1_oracle_split_equivalence(verdict):
    start = time.perf_counter()
    mismatches = []
    for criterion in ("sdr", "info-gain-ratio", "gini"):
        rng = np.random.default_rng({"sdr": 1, "info-gain-ratio": 2, "gini": 3}[criterion])
        for case in range(500):
            X, y = _random_instance(rng, criterion)
            got = best_split(X, y, criterion, n_classes=None if criterion == "sdr" else 4)
            want = oracle_best_split(X.tolist(), y.tolist(), criterion)
            same = (got is None and want is None) or (
                got is not None and want is not None
                and (got[0].index, got[0].threshold) == want[:2]
                and abs(got[1] - want[2]) <= 1e-12
            )
            if not same:
                mismatches.append((criterion, case))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 5.0
    verdict(1, "oracle split equivalence", ok,
            f"{1500 - len(mismatches)}/1500 instances agree, {elapsed:.2f}s (limit 5s)")
    assert not mismatches, mismatches[:5]
    assert elapsed < 5.0


# ---------------------------------------------------------------- 2


def test_criterion_2_closed_form_errors(verdict):
    mae, sq = instance_error([0.25] * 4, 0)
    single_rmse = math.sqrt(sq)
    perfect = aggregate([InstanceRecord(i, i % 4, tuple(np.eye(4)[i % 4])) for i in range(8)], 4,
                        "training", tuple("abcd"))
    # 0.4330127 is sqrt(3)/4 rounded to 7 places: the exact value is checked at 1e-9
    # and the quoted figure by rounding
    ok = (abs(mae - 0.375) <= 1e-9 and abs(single_rmse - math.sqrt(3) / 4) <= 1e-9
          and round(single_rmse, 7) == 0.4330127 and perfect.mae == 0.0 and perfect.rmse == 0.0)
    verdict(2, "closed-form errors", ok,
            f"uniform MAE={mae!r} RMSE={single_rmse:.10f}, perfect=({perfect.mae}, {perfect.rmse})")
    assert mae == pytest.approx(0.375, abs=1e-9)
    assert single_rmse == pytest.approx(math.sqrt(3) / 4, abs=1e-9)
    assert round(single_rmse, 7) == 0.4330127
    assert (perfect.mae, perfect.rmse) == (0.0, 0.0)


# ---------------------------------------------------------------- 3


@pytest.mark.slow
def test_criterion_3_planted_recovery(verdict):
    start = time.perf_counter()
    scores = []
    for seed in range(50):
        spec = PlantedSpec(42, LIST_O1, "linear-threshold", noise_rate=0.05, seed=seed)
        table, truth = generate(spec, 200)
        model = train_ladtree(table, "O1", LadTreeParams(iterations=20))
        scores.append(recovery_score(rank_variables(model), truth))
    elapsed = time.perf_counter() - start
    mean = float(np.mean(scores))
    share = float(np.mean([s >= 7 / 8 for s in scores]))
    ok = mean >= 0.85 and share >= 0.9 and elapsed < 60
    verdict(3, "planted-variable recovery", ok,
            f"mean recovery {mean:.4f} (need >= 0.85), >=7/8 in {share:.0%} of seeds (need >= 90%), "
            f"{elapsed:.1f}s (limit 60s)")
    assert mean >= 0.85
    assert share >= 0.9
    assert elapsed < 60


# ---------------------------------------------------------------- 4


def test_criterion_4_full_scale_budget(tmp_path, verdict):
    specs = [PlantedSpec(42, LIST_O1, k=4, seed=21), PlantedSpec(42, LIST_O2, k=4, seed=22)]
    table, _ = generate_problem(specs, 12)
    path = write_csv(table, tmp_path / "runs.csv")
    config = PipelineConfig.from_dict({"input": str(path), "objectives": ["O1", "O2"],
                                       "out": str(tmp_path / "out")})
    start = time.perf_counter()
    report = run_pipeline(config, stdout=open("/dev/null", "w"))
    elapsed = time.perf_counter() - start
    rounds = [o.threshold_met for o in report.objectives]
    ok = elapsed < 1.0
    verdict(4, "full-scale budget", ok,
            f"12x42 two-objective pipeline in {elapsed:.3f}s (limit 1s), thresholds met {rounds}")
    assert elapsed < 1.0


# ---------------------------------------------------------------- 5


def _tune(rounds, target):
    """Thresholds equal to the errors of a round ranking exactly ``target`` variables,
    provided no earlier round already meets them."""
    for r in rounds:
        if len(rank_variables(r.model).variables) != target:
            continue
        mae, rmse = r.result.mae, r.result.rmse
        stop = next(q for q in rounds if q.result.mae <= mae and q.result.rmse <= rmse)
        if stop is r:
            return mae, rmse
    return None


def test_criterion_5_report_shape(verdict):
    specs = [PlantedSpec(42, LIST_O1, noise_rate=0.05, seed=5), PlantedSpec(42, LIST_O2, noise_rate=0.05, seed=105)]
    table, truth = generate_problem(specs, 200, names=["O1", "O2"])
    spec = LearnerSpec("ladtree")
    selections = []
    for name, target in (("O1", 8), ("O2", 7)):
        rounds = list(capacity_sweep(table, name, spec, 20, "training"))
        thresholds = _tune(rounds, target)
        assert thresholds is not None, f"no threshold pair admits exactly {target} variables for {name}"
        selections.append(select_variables(table, name, spec, *thresholds, 20, "training"))
    report = build_report(table, selections)
    text = format_table(report)
    union = set().union(*(s.variables for s in selections))
    expected_pct = 100.0 * (1 - len(union) / 42)
    half = build_report(table, [_fake_ranking(range(1, 12)), _fake_ranking(range(8, 22))])
    payload = json.loads(report.to_json())
    shape_ok = (
        [len(o.effective_variables) for o in report.objectives] == [8, 7]
        and all(o.mae is not None and o.rmse is not None for o in report.objectives)
        and [o["effective_variables"] for o in payload["objectives"]] == [s.variables for s in selections]
        and report.reduction_percent == pytest.approx(expected_pct, abs=1e-12)
        and half.reduction_percent == 50.0
    )
    verdict(5, "report shape", shape_ok,
            f"O1 keeps {len(selections[0].variables)} ({recovery_score(selections[0], truth['O1']):.0%} planted), "
            f"O2 keeps {len(selections[1].variables)} ({recovery_score(selections[1], truth['O2']):.0%} planted), "
            f"union {len(union)} -> {report.reduction_percent:.1f}%, 21-variable union -> {half.reduction_percent}%")
    print(text)
    assert [len(o.effective_variables) for o in report.objectives] == [8, 7]
    assert text.splitlines()[0].split() == ["Classification", "Algorithm", "MAE", "RMSE", "Effective",
                                            "Variables", "Objective"]
    for line, sel in zip(text.splitlines()[1:3], selections):
        assert line.split()[:3] == ["LADTree", f"{sel.mae:.3f}", f"{sel.rmse:.3f}"]
        assert ",".join(sel.variables) in line
    assert report.reduction_percent == pytest.approx(expected_pct, abs=1e-12)
    assert half.reduction_percent == 50.0
    assert "21 of 42 kept, reduced by 50.0%" in format_table(half)


def _fake_ranking(indices):
    return ImportanceRanking("O", "ladtree", tuple(RankEntry(f"v{i}", 1.0, n + 1) for n, i in enumerate(indices)))


# ---------------------------------------------------------------- 6


def test_criterion_6_logitboost_monotonicity(verdict):
    rng = np.random.default_rng(606)
    worst, damped = 0.0, 0
    for _ in range(100):
        n, p, k = int(rng.integers(4, 40)), int(rng.integers(1, 6)), int(rng.integers(2, 5))
        X = rng.normal(size=(n, p))
        y = rng.integers(0, k, size=n)
        t = RunTable(tuple(f"v{j}" for j in range(p)), X, (Objective("O1", y, tuple("abcd"[:k])),))
        model = train_ladtree(t, "O1", LadTreeParams(iterations=12))
        losses = np.array(model.meta["log_loss"])
        worst = max(worst, float(np.max(np.diff(losses), initial=-np.inf)))
        damped += bool(model.meta["damped_steps"])
    ok = worst <= 1e-9
    verdict(6, "LogitBoost monotonicity", ok,
            f"largest per-iteration log-loss increase {max(worst, 0.0):.3e} (limit 1e-9); {damped} datasets needed step damping")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 7


def test_criterion_7_determinism_and_invariance(tmp_path, verdict):
    specs = [PlantedSpec(42, LIST_O1, k=4, noise_rate=0.05, seed=71), PlantedSpec(42, LIST_O2, k=4, seed=72)]
    table, _ = generate_problem(specs, 12)
    path = write_csv(table, tmp_path / "runs.csv")
    blobs = []
    for name in ("a", "b"):
        cfg = PipelineConfig.from_dict({"input": str(path), "objectives": ["O1", "O2"],
                                        "out": str(tmp_path / name)})
        run_pipeline(cfg, canonical=True, stdout=open("/dev/null", "w"))
        out = tmp_path / name
        blobs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    identical = blobs[0] == blobs[1]

    # strictly increasing, variable-specific transforms
    transforms = [np.exp, lambda x: x**3 + x, lambda x: 5 * x - 2, np.arctan, lambda x: np.log1p(x)]
    data = np.column_stack([transforms[j % 5](table.data[:, j]) for j in range(42)])
    moved = RunTable(table.variables, data, table.objectives)
    structure = True
    for kind in ("sdr", "info-gain", "best-first", "ladtree"):
        for obj in ("O1", "O2"):
            a, b = train(LearnerSpec(kind), table, obj), train(LearnerSpec(kind), moved, obj)
            structure &= [(g.node, g.variable) for g in a.gain_log] == [(g.node, g.variable) for g in b.gain_log]
            structure &= np.allclose(predict_proba(a, table.data), predict_proba(b, data), rtol=1e-9, atol=1e-12)

    spec = LearnerSpec("ladtree")
    base = select_variables(table, "O1", spec, 0.4, 0.55)
    const = RunTable(table.variables + ("const",), np.c_[table.data, np.ones(12)], table.objectives)
    dup = RunTable(table.variables + ("twin",), np.c_[table.data, table.data[:, 37]], table.objectives)
    const_ok = select_variables(const, "O1", spec, 0.4, 0.55).variables == base.variables
    dup_vars = select_variables(dup, "O1", spec, 0.4, 0.55).variables
    dup_ok = [v for v in dup_vars if v != "twin"] == base.variables

    ok = identical and structure and const_ok and dup_ok
    verdict(7, "determinism and invariance", ok,
            f"byte-identical={identical}, transform structure={structure}, "
            f"constant column={const_ok}, duplicate column={dup_ok}")
    assert identical and structure and const_ok and dup_ok


# ---------------------------------------------------------------- 8


def _random_table(rng: XorShift64Star, i: int) -> RunTable:
    n = 2 + rng.below(15)
    p = 1 + rng.below(8)
    names = tuple(f"x{i}_{j}" if rng.below(3) else f"col {j}.{i}" for j in range(p))
    scale = [10.0 ** (rng.below(13) - 6) for _ in range(p)]
    data = np.array([[(rng.uniform() - 0.5) * scale[j] for j in range(p)] for _ in range(n)])
    k = 2 + rng.below(4)
    labels = ["hi", "lo", "mid", "zz", "aa"][:k]
    if rng.below(2):
        labels = labels[::-1]
    codes = np.array([rng.below(k) for _ in range(n)])
    codes[:2] = [0, 1]  # CSV carries only labels that occur, and an alphabet needs two
    objectives = [Objective("Ocat", codes, tuple(labels))]
    if rng.below(2):
        objectives.append(Objective("Onum", np.array([rng.uniform() * 100 for _ in range(n)])))
    return RunTable(names, data, tuple(objectives))


def test_criterion_8_format_round_trips(tmp_path, verdict):
    rng = XorShift64Star(808)
    csv_ok = arff_ok = alphabet_ok = 0
    for i in range(50):
        t = _random_table(rng, i)
        names = t.objective_names
        csv_back = load_csv(write_csv(t, tmp_path / f"t{i}.csv"), names)
        again = load_csv(write_csv(csv_back, tmp_path / f"t{i}b.csv"), names)
        # CSV stores labels only, so the alphabet comes back sorted; content must not change
        csv_ok += again.same_content(csv_back) and np.array_equal(csv_back.data, t.data) and (
            csv_back.objective("Ocat").labels() == t.objective("Ocat").labels())
        arff_back = load_arff(write_arff(t, tmp_path / f"t{i}.arff"), names)
        arff_ok += arff_back.same_content(t)
        alphabet_ok += arff_back.objective("Ocat").alphabet == t.objective("Ocat").alphabet
    ok = csv_ok == arff_ok == alphabet_ok == 50
    verdict(8, "format round-trips", ok,
            f"CSV {csv_ok}/50, ARFF {arff_ok}/50, nominal alphabet order kept {alphabet_ok}/50")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
