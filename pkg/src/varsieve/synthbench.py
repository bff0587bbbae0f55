"""Synthetic run tables with planted effective variables, plus brute-force oracles.

Everything here is a pure function of its arguments. Random draws come from
:class:`XorShift64Star`, so generated tables are identical across platforms
and runs.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import DiscretizationSpec, Objective, RunTable, discretize_objective

__all__ = [
    "XorShift64Star",
    "PlantedSpec",
    "FAMILIES",
    "generate",
    "generate_problem",
    "oracle_best_split",
    "recovery_score",
]

FAMILIES = ("linear-threshold", "interaction-xor", "quadratic-radial")
_MASK = (1 << 64) - 1


class XorShift64Star:
    """Marsaglia xorshift with Vigna's multiplicative output scrambler.

    The 64-bit state is seeded through one round of splitmix64 so that small
    or zero seeds still give a well-mixed, non-zero state.
    """

    MULT = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        self.state = (z ^ (z >> 31)) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * self.MULT) & _MASK

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Integer in [0, n)."""
        return ((self.next_u64() >> 11) * n) >> 53


@dataclass(frozen=True)
class PlantedSpec:
    """Recipe for a synthetic screening problem.

    ``effective`` holds 1-based variable indices; the objective depends on
    those variables only.
    """

    n_vars: int
    effective: tuple[int, ...]
    family: str = "linear-threshold"
    noise_rate: float = 0.0
    k: int = 2
    seed: int = 0

    def __post_init__(self):
        eff = tuple(int(i) for i in self.effective)
        object.__setattr__(self, "effective", eff)
        if self.n_vars < 1:
            raise ValueError("n_vars must be >= 1")
        if not eff or len(set(eff)) != len(eff) or min(eff) < 1 or max(eff) > self.n_vars:
            raise ValueError("effective must be distinct indices within 1..n_vars")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not 0.0 <= self.noise_rate < 0.5:
            raise ValueError("noise_rate must be in [0, 0.5)")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.family == "interaction-xor" and self.k != 2:
            raise ValueError("interaction-xor produces parity labels and needs k=2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["effective"] = list(self.effective)
        return d


def _score(V: np.ndarray, family: str) -> np.ndarray:
    if family == "linear-threshold":
        return V.sum(axis=1) - V.shape[1] / 2.0
    if family == "quadratic-radial":
        return ((V - 0.5) ** 2).sum(axis=1)
    above = V > np.median(V, axis=0)
    return (above.sum(axis=1) % 2).astype(np.float64)


def generate(spec: PlantedSpec, n_runs: int, objective: str = "O1", data=None):
    """Draw a run table whose objective depends only on the planted variables.

    Variables ``v1..vN`` are uniform on [0, 1), drawn row by row. The family
    score is computed from the effective variables and binned equal-frequency
    into ``k`` classes (parity labels directly for ``interaction-xor``).
    Then ``round(noise_rate * n_runs)`` distinct runs have their label moved
    to a uniformly chosen other class.

    ``data`` reuses an existing variable matrix instead of drawing one; the
    seed then only drives the label noise.

    Returns
    -------
    table : RunTable
    truth : list of str
        Names of the planted variables.
    """
    if n_runs < 2:
        raise ValueError("n_runs must be >= 2")
    if spec.k > n_runs:
        raise ValueError(f"k={spec.k} classes cannot be filled by {n_runs} runs")
    rng = XorShift64Star(spec.seed)
    if data is None:
        data = np.array([[rng.uniform() for _ in range(spec.n_vars)] for _ in range(n_runs)])
    elif np.shape(data) != (n_runs, spec.n_vars):
        raise ValueError(f"data shape {np.shape(data)} does not match ({n_runs}, {spec.n_vars})")
    names = tuple(f"v{j + 1}" for j in range(spec.n_vars))
    cols = [i - 1 for i in spec.effective]
    score = _score(data[:, cols], spec.family)

    if spec.family == "interaction-xor":
        table = RunTable(names, data, (Objective(objective, score.astype(np.int64), ("a", "b")),))
    else:
        table = RunTable(names, data, (Objective(objective, score),))
        table = discretize_objective(table, objective, DiscretizationSpec("equal-frequency", k=spec.k))

    obj = table.objective(objective)
    labels = obj.values.copy()
    n_flip = int(round(spec.noise_rate * n_runs))
    pool = list(range(n_runs))
    for i in range(n_flip):  # partial Fisher-Yates
        j = i + rng.below(n_runs - i)
        pool[i], pool[j] = pool[j], pool[i]
        run = pool[i]
        labels[run] = (labels[run] + 1 + rng.below(spec.k - 1)) % spec.k
    meta = dict(table.meta, planted=spec.to_dict(), flipped=sorted(pool[:n_flip]))
    table = table.replace_objective(Objective(objective, labels, obj.alphabet), meta)
    return table, [names[c] for c in cols]


def generate_problem(specs, n_runs: int, names=None):
    """Several planted objectives over one shared variable matrix.

    The variables are drawn with the first spec's seed; every spec must
    agree on ``n_vars``. Objectives are named ``O1, O2, ...`` unless
    ``names`` is given.

    Returns
    -------
    table : RunTable
    truth : dict
        Objective name to planted variable names.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one planted spec")
    if len({s.n_vars for s in specs}) != 1:
        raise ValueError("all specs must share n_vars")
    names = list(names) if names else [f"O{i + 1}" for i in range(len(specs))]
    first, truth0 = generate(specs[0], n_runs, names[0])
    objectives, truth = [first.objective(names[0])], {names[0]: truth0}
    planted = {names[0]: specs[0].to_dict()}
    for spec, name in zip(specs[1:], names[1:]):
        t, tr = generate(spec, n_runs, name, data=first.data)
        objectives.append(t.objective(name))
        truth[name] = tr
        planted[name] = spec.to_dict()
    return RunTable(first.variables, first.data, tuple(objectives), {"planted": planted}), truth


# ---------------------------------------------------------------- oracles

_ORACLE_EPS = 1e-12
_ORACLE_MAX_ROWS = 20
_ORACLE_MAX_VARS = 8


def _oracle_sd(values):
    return statistics.stdev(values) if len(values) >= 2 else 0.0


def _oracle_entropy(labels):
    n = len(labels)
    return -sum((c / n) * math.log2(c / n) for c in Counter(labels).values())


def _oracle_gini(labels):
    n = len(labels)
    return 1.0 - sum((c / n) ** 2 for c in Counter(labels).values())


def _oracle_gain(parent, left, right, criterion):
    n, nl, nr = len(parent), len(left), len(right)
    if criterion == "sdr":
        return _oracle_sd(parent) - nl / n * _oracle_sd(left) - nr / n * _oracle_sd(right)
    if criterion == "gini":
        return _oracle_gini(parent) - nl / n * _oracle_gini(left) - nr / n * _oracle_gini(right)
    gain = _oracle_entropy(parent) - nl / n * _oracle_entropy(left) - nr / n * _oracle_entropy(right)
    if gain <= _ORACLE_EPS:
        return 0.0
    split_info = -(nl / n) * math.log2(nl / n) - (nr / n) * math.log2(nr / n)
    return gain / split_info


def oracle_best_split(rows, target, criterion: str):
    """Brute-force best split by direct formula at every (variable, midpoint).

    Returns ``(variable_index, threshold, gain)`` or None. Same contract as
    the tree learners' split search: strictly positive gain required, ties
    to the lower variable index and then the lower threshold.
    """
    rows = [[float(v) for v in r] for r in rows]
    target = [t.item() if hasattr(t, "item") else t for t in target]
    if len(rows) > _ORACLE_MAX_ROWS or (rows and len(rows[0]) > _ORACLE_MAX_VARS):
        raise ValueError(
            f"oracle is exhaustive: at most {_ORACLE_MAX_ROWS} rows and {_ORACLE_MAX_VARS} variables"
        )
    if criterion not in ("sdr", "info-gain-ratio", "gini"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if len(rows) < 2:
        return None
    candidates = []
    for j in range(len(rows[0])):
        values = sorted({r[j] for r in rows})
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2
            if not lo < threshold:  # neighbouring floats: the midpoint rounds onto lo
                threshold = hi
            left = [t for r, t in zip(rows, target) if r[j] < threshold]
            right = [t for r, t in zip(rows, target) if not r[j] < threshold]
            candidates.append((j, threshold, _oracle_gain(target, left, right, criterion)))
    if not candidates:
        return None
    best = max(c[2] for c in candidates)
    if best <= _ORACLE_EPS:
        return None
    for c in candidates:
        if c[2] >= best - _ORACLE_EPS * max(1.0, abs(best)):
            return c


def recovery_score(ranking, truth) -> float:
    """Fraction of ``truth`` found among the top ``len(truth)`` ranked variables.

    ``ranking`` is an ImportanceRanking or an ordered sequence of names.
    """
    truth = set(truth)
    if not truth:
        raise ValueError("truth set must not be empty")
    names = ranking.variables if hasattr(ranking, "variables") else list(ranking)
    return len(set(names[: len(truth)]) & truth) / len(truth)
