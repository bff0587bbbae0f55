import numpy as np
import pytest

from varsieve.screening import select_variables
from varsieve.synthbench import (
    PlantedSpec,
    XorShift64Star,
    generate,
    generate_problem,
    recovery_score,
)
from varsieve.trees import LearnerSpec


def _reference_stream(seed, count):
    """xorshift64* on numpy uint64, which wraps modulo 2**64 on its own."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = z ^ (z >> np.uint64(31))
        out = []
        for _ in range(count):
            x ^= x >> np.uint64(12)
            x ^= x << np.uint64(25)
            x ^= x >> np.uint64(27)
            out.append(int(x * np.uint64(0x2545F4914F6CDD1D)))
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 5])
def test_generator_matches_reference(seed):
    rng = XorShift64Star(seed)
    assert [rng.next_u64() for _ in range(50)] == _reference_stream(seed, 50)


def test_uniform_and_below_ranges():
    rng = XorShift64Star(7)
    u = [rng.uniform() for _ in range(2000)]
    assert 0.0 <= min(u) and max(u) < 1.0
    assert abs(np.mean(u) - 0.5) < 0.03
    b = [rng.below(3) for _ in range(3000)]
    assert set(b) == {0, 1, 2}


def test_generation_is_deterministic():
    spec = PlantedSpec(12, (3, 7), k=3, noise_rate=0.1, seed=99)
    a, truth_a = generate(spec, 40)
    b, truth_b = generate(spec, 40)
    assert a.same_content(b) and truth_a == truth_b == ["v3", "v7"]
    c, _ = generate(PlantedSpec(12, (3, 7), k=3, noise_rate=0.1, seed=100), 40)
    assert not np.array_equal(a.data, c.data)


@pytest.mark.parametrize("family", ["linear-threshold", "quadratic-radial", "interaction-xor"])
def test_labels_depend_only_on_planted_columns(family):
    spec = PlantedSpec(6, (2, 4), family=family, seed=5)
    base, _ = generate(spec, 30)
    scrambled = base.data.copy()
    scrambled[:, [0, 2, 4, 5]] = np.random.default_rng(0).uniform(size=(30, 4))
    other, _ = generate(spec, 30, data=scrambled)
    np.testing.assert_array_equal(base.objective("O1").values, other.objective("O1").values)


def test_linear_threshold_classes_follow_score():
    table, _ = generate(PlantedSpec(5, (1, 2, 3), k=4, seed=2), 40)
    score = table.data[:, :3].sum(axis=1)
    labels = table.objective("O1").values
    order = np.argsort(score)
    assert np.all(np.diff(labels[order]) >= 0)
    assert np.bincount(labels).tolist() == [10, 10, 10, 10]


def test_xor_labels_are_parity_of_median_halves():
    table, _ = generate(PlantedSpec(4, (1, 3), family="interaction-xor", seed=4), 20)
    above = table.data[:, [0, 2]] > np.median(table.data[:, [0, 2]], axis=0)
    np.testing.assert_array_equal(table.objective("O1").values, above.sum(axis=1) % 2)


@pytest.mark.parametrize("rate, flips", [(0.0, 0), (0.05, 2), (0.1, 4), (0.3, 12)])
def test_noise_flips_exact_count(rate, flips):
    clean, _ = generate(PlantedSpec(6, (1,), k=3, seed=6), 40)
    noisy, _ = generate(PlantedSpec(6, (1,), k=3, noise_rate=rate, seed=6), 40)
    diff = clean.objective("O1").values != noisy.objective("O1").values
    assert diff.sum() == flips == round(rate * 40)
    assert sorted(np.flatnonzero(diff).tolist()) == noisy.meta["flipped"]


def test_lower_noise_flips_are_a_prefix_of_higher_noise():
    low, _ = generate(PlantedSpec(6, (1,), noise_rate=0.1, seed=6), 40)
    high, _ = generate(PlantedSpec(6, (1,), noise_rate=0.3, seed=6), 40)
    assert set(low.meta["flipped"]) < set(high.meta["flipped"])
    for run in low.meta["flipped"]:
        assert low.objective("O1").values[run] == high.objective("O1").values[run]


def test_more_noise_never_helps_recovery():
    spec = LearnerSpec("ladtree")
    means = []
    for rate in (0.0, 0.2, 0.4):
        scores = []
        for seed in range(6):
            table, truth = generate(PlantedSpec(10, (2, 6, 9), noise_rate=rate, seed=seed), 60)
            scores.append(recovery_score(select_variables(table, "O1", spec, 1e-9, 1e-9, 10, "training"), truth))
        means.append(np.mean(scores))
    assert means[0] >= means[1] >= means[2]
    assert means[0] == 1.0


def test_small_planted_sets_are_recovered():
    for seed in range(8):
        table, truth = generate(PlantedSpec(20, (4, 17), noise_rate=0.05, seed=seed), 100)
        r = select_variables(table, "O1", LearnerSpec("ladtree"), 1e-9, 1e-9, 10, "training")
        assert recovery_score(r, truth) == 1.0


def test_generate_problem_shares_variables():
    specs = [PlantedSpec(8, (1, 2), seed=1), PlantedSpec(8, (5,), k=3, seed=2)]
    table, truth = generate_problem(specs, 30)
    single, _ = generate(specs[0], 30)
    np.testing.assert_array_equal(table.data, single.data)
    assert truth == {"O1": ["v1", "v2"], "O2": ["v5"]}
    assert table.objective("O2").k == 3


@pytest.mark.parametrize(
    "ranking, truth, expected",
    [
        (["v1", "v3", "v2"], ["v1", "v2"], 0.5),
        (["v2", "v1"], ["v1", "v2"], 1.0),
        ([], ["v1"], 0.0),
        (["v9", "v8", "v1"], ["v1", "v2", "v3"], 1 / 3),
    ],
)
def test_recovery_score_examples(ranking, truth, expected):
    assert recovery_score(ranking, truth) == pytest.approx(expected)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(n_vars=5, effective=(6,)), "within"),
        (dict(n_vars=5, effective=(1, 1)), "distinct"),
        (dict(n_vars=5, effective=(1,), family="spiral"), "unknown family"),
        (dict(n_vars=5, effective=(1,), noise_rate=0.5), "noise_rate"),
        (dict(n_vars=5, effective=(1,), family="interaction-xor", k=3), "k=2"),
    ],
)
def test_spec_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        PlantedSpec(**kwargs)
