"""Leaf-frequency tree learners: SDR, gain-ratio and best-first Gini trees."""

from __future__ import annotations

import numpy as np

from ..dataset import RunTable
from .model import GainRecord, ModelError, Node, TreeModel
from .splits import TIE_TOL, best_split, sample_sd


def training_target(table: RunTable, objective: str, categorical: bool = True):
    if table.n_runs < 2:
        raise ModelError("training needs at least 2 runs")
    try:
        obj = table.objective(objective)
    except ValueError as exc:
        raise ModelError(str(exc)) from None
    if categorical and not obj.categorical:
        raise ModelError(f"objective {objective!r} must be categorical; discretize it first")
    return obj


def _leaf(node_id, rows, y, obj, continuous_target=None) -> Node:
    if obj.categorical:
        counts = np.bincount(y[rows], minlength=obj.k)
        return Node(node_id, "leaf", counts=tuple(int(c) for c in counts),
                    distribution=tuple(float(c) for c in counts / counts.sum()))
    return Node(node_id, "leaf", value=float(np.mean(continuous_target[rows])))


class _DepthFirst:
    """Preorder recursive growth with an optional cap on the number of splits."""

    def __init__(self, X, y, crit_target, criterion, obj, variables, is_leaf, max_splits):
        self.X, self.y, self.crit_target = X, y, crit_target
        self.criterion, self.obj, self.variables = criterion, obj, variables
        self.is_leaf, self.max_splits = is_leaf, max_splits
        self.nodes: dict[int, Node] = {}
        self.log: list[GainRecord] = []
        self.next_id = 0

    def grow(self, rows) -> int:
        node_id = self.next_id
        self.next_id += 1
        found = None
        capped = self.max_splits is not None and len(self.log) >= self.max_splits
        if not capped and not self.is_leaf(rows):
            found = best_split(self.X[rows], self.crit_target[rows], self.criterion,
                               self.variables, n_classes=self.obj.k or None)
        if found is None:
            self.nodes[node_id] = _leaf(node_id, rows, self.y, self.obj, self.crit_target)
            return node_id
        split, gain = found
        self.log.append(GainRecord(len(self.log) + 1, node_id, split.variable, split.threshold, gain))
        go_left = self.X[rows, split.index] < split.threshold
        left = self.grow(rows[go_left])
        right = self.grow(rows[~go_left])
        self.nodes[node_id] = Node(node_id, "split", split=split, children=(left, right))
        return node_id

    def model(self, kind, params, meta) -> TreeModel:
        nodes = tuple(self.nodes[i] for i in range(self.next_id))
        return TreeModel(kind, params, self.variables, self.obj.alphabet, nodes, tuple(self.log), meta)


def train_sdr_tree(table: RunTable, objective: str, sd_fraction: float = 0.05,
                   min_instances: int = 4, max_splits: int | None = None) -> TreeModel:
    """Grow a tree that maximizes standard deviation reduction.

    A node becomes a leaf when its target sd drops below ``sd_fraction`` of
    the root sd, when it holds fewer than ``min_instances`` rows, or when no
    split reduces the sd. Categorical targets are coded to their class
    indices for the sd computation.
    """
    obj = training_target(table, objective, categorical=False)
    if sd_fraction < 0 or min_instances < 1:
        raise ModelError("sd_fraction must be >= 0 and min_instances >= 1")
    target = obj.values.astype(np.float64)
    root_sd = sample_sd(target)

    def is_leaf(rows):
        return sample_sd(target[rows]) < sd_fraction * root_sd or rows.size < min_instances

    grower = _DepthFirst(table.data, obj.values, target, "sdr", obj, table.variables,
                         is_leaf, max_splits)
    grower.grow(np.arange(table.n_runs))
    params = {"sd_fraction": sd_fraction, "min_instances": min_instances, "max_splits": max_splits}
    meta = {"objective": objective, "root_sd": root_sd,
            "target_coding": "class-index" if obj.categorical else "continuous"}
    return grower.model("sdr", params, meta)


def train_info_gain_tree(table: RunTable, objective: str, min_leaf: int = 2,
                         max_splits: int | None = None) -> TreeModel:
    """Grow an unpruned gain-ratio tree.

    A node is a leaf when pure, when it holds fewer than ``2 * min_leaf``
    rows, or when no split has positive gain.
    """
    obj = training_target(table, objective)
    if min_leaf < 1:
        raise ModelError("min_leaf must be >= 1")
    y = obj.values

    def is_leaf(rows):
        return rows.size < 2 * min_leaf or np.all(y[rows] == y[rows[0]])

    grower = _DepthFirst(table.data, y, y, "info-gain-ratio", obj, table.variables,
                         is_leaf, max_splits)
    grower.grow(np.arange(table.n_runs))
    return grower.model("info-gain", {"min_leaf": min_leaf, "max_splits": max_splits},
                        {"objective": objective})


def train_best_first_tree(table: RunTable, objective: str, max_expansions: int = 8) -> TreeModel:
    """Grow a Gini tree by always expanding the frontier leaf with the best gain.

    Equal gains go to the older leaf. Growth stops after ``max_expansions``
    splits or when no leaf has a positive-gain split.
    """
    obj = training_target(table, objective)
    if max_expansions < 0:
        raise ModelError("max_expansions must be >= 0")
    X, y = table.data, obj.values

    def search(rows):
        if rows.size < 2:
            return None
        return best_split(X[rows], y[rows], "gini", table.variables, n_classes=obj.k)

    nodes: dict[int, Node] = {}
    log: list[GainRecord] = []
    # frontier entries: (node id, rows, split result); ids grow with age
    frontier = [(0, np.arange(table.n_runs), search(np.arange(table.n_runs)))]
    next_id = 1
    while len(log) < max_expansions:
        open_ = [f for f in frontier if f[2] is not None]
        if not open_:
            break
        best = max(f[2][1] for f in open_)
        chosen = next(f for f in open_ if f[2][1] >= best - TIE_TOL * max(1.0, abs(best)))
        frontier.remove(chosen)
        node_id, rows, (split, gain) = chosen
        log.append(GainRecord(len(log) + 1, node_id, split.variable, split.threshold, gain))
        go_left = X[rows, split.index] < split.threshold
        left, right = next_id, next_id + 1
        next_id += 2
        nodes[node_id] = Node(node_id, "split", split=split, children=(left, right))
        frontier.append((left, rows[go_left], search(rows[go_left])))
        frontier.append((right, rows[~go_left], search(rows[~go_left])))
    for node_id, rows, _ in frontier:
        nodes[node_id] = _leaf(node_id, rows, y, obj)
    frontier_order = tuple(nodes[i] for i in range(next_id))
    return TreeModel("best-first", {"max_expansions": max_expansions}, table.variables,
                     obj.alphabet, frontier_order, tuple(log), {"objective": objective})
