"""Trained tree models, prediction and JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .splits import SplitTest

KINDS = ("sdr", "info-gain", "best-first", "ladtree")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    """One node of a tree model.

    Decision trees use ``split`` nodes (children = (left, right)) and ``leaf``
    nodes. Alternating trees use ``prediction`` nodes carrying per-class
    ``scores`` whose children are ``splitter`` nodes, each with a
    (yes, no) pair of prediction nodes.
    """

    id: int
    kind: str
    split: SplitTest | None = None
    children: tuple[int, ...] = ()
    counts: tuple[int, ...] | None = None
    distribution: tuple[float, ...] | None = None
    value: float | None = None
    scores: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind}
        if self.split is not None:
            d["split"] = self.split.to_dict()
        for name in ("counts", "distribution", "value", "scores"):
            v = getattr(self, name)
            if v is not None:
                d[name] = list(v) if isinstance(v, tuple) else v
        d["children"] = list(self.children)
        return d


@dataclass(frozen=True)
class GainRecord:
    """One performed split: ``step`` is the 1-based split order (iteration for ladtree)."""

    step: int
    node: int
    variable: str
    threshold: float
    gain: float

    def to_dict(self) -> dict:
        return {"step": self.step, "node": self.node, "variable": self.variable,
                "threshold": self.threshold, "gain": self.gain}


@dataclass(frozen=True, eq=False)
class TreeModel:
    kind: str
    params: Mapping
    variables: tuple[str, ...]
    class_alphabet: tuple[str, ...] | None
    nodes: tuple[Node, ...]
    gain_log: tuple[GainRecord, ...]
    meta: Mapping = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.class_alphabet) if self.class_alphabet else 0

    @property
    def n_splits(self) -> int:
        return len(self.gain_log)

    @property
    def split_variables(self) -> list[str]:
        seen = []
        for rec in self.gain_log:
            if rec.variable not in seen:
                seen.append(rec.variable)
        return seen

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": dict(self.params),
            "variables": list(self.variables),
            "class_alphabet": list(self.class_alphabet) if self.class_alphabet else None,
            "nodes": [n.to_dict() for n in self.nodes],
            "gain_log": [g.to_dict() for g in self.gain_log],
            "meta": dict(self.meta),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TreeModel":
        variables = tuple(d["variables"])
        nodes = []
        for nd in d["nodes"]:
            split = None
            if "split" in nd:
                s = nd["split"]
                split = SplitTest(s["variable"], float(s["threshold"]), variables.index(s["variable"]))
            nodes.append(Node(
                id=nd["id"], kind=nd["kind"], split=split, children=tuple(nd["children"]),
                counts=tuple(nd["counts"]) if "counts" in nd else None,
                distribution=tuple(nd["distribution"]) if "distribution" in nd else None,
                value=nd.get("value"),
                scores=tuple(nd["scores"]) if "scores" in nd else None,
            ))
        alphabet = d.get("class_alphabet")
        return cls(
            kind=d["kind"], params=d["parameters"], variables=variables,
            class_alphabet=tuple(alphabet) if alphabet else None, nodes=tuple(nodes),
            gain_log=tuple(GainRecord(**g) for g in d["gain_log"]), meta=d.get("meta", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "TreeModel":
        return cls.from_dict(json.loads(text))


def _run_vector(model: TreeModel, run) -> np.ndarray:
    if isinstance(run, Mapping):
        needed = {n.split.variable for n in model.nodes if n.split is not None}
        missing = sorted(needed - set(run))
        if missing:
            raise ModelError(f"run lacks variables used by the model: {missing}")
        return np.array([run.get(v, np.nan) for v in model.variables], dtype=np.float64)
    x = np.asarray(run, dtype=np.float64)
    if x.shape != (len(model.variables),):
        raise ModelError(f"run has {x.size} values, model expects {len(model.variables)}")
    return x


def design_matrix(model: TreeModel, table) -> np.ndarray:
    """Columns of ``table`` in the model's variable order."""
    missing = [v for v in model.variables if v not in table.variables]
    if missing:
        raise ModelError(f"table lacks model variables: {missing}")
    idx = [table.variables.index(v) for v in model.variables]
    return table.data[:, idx]


def _leaf_for(model: TreeModel, x: np.ndarray) -> Node:
    node = model.nodes[0]
    while node.kind == "split":
        left, right = node.children
        node = model.nodes[left if x[node.split.index] < node.split.threshold else right]
    return node


def ladtree_scores(model: TreeModel, X: np.ndarray) -> np.ndarray:
    """Summed per-class scores of every prediction node each row reaches."""
    X = np.atleast_2d(X)
    F = np.zeros((X.shape[0], model.k))
    reach = {0: np.ones(X.shape[0], dtype=bool)}
    for node in model.nodes:  # nodes are stored parent-before-child
        if node.kind == "prediction":
            mask = reach.get(node.id)
            if mask is not None and node.scores is not None:
                F[mask] += np.asarray(node.scores)
            for sid in node.children:
                s = model.nodes[sid]
                below = X[:, s.split.index] < s.split.threshold
                yes, no = s.children
                reach[yes] = mask & below
                reach[no] = mask & ~below
    return F


def softmax(F: np.ndarray) -> np.ndarray:
    Z = F - F.max(axis=-1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=-1, keepdims=True)


def laplace(counts) -> np.ndarray:
    c = np.asarray(counts, dtype=np.float64)
    return (c + 1.0) / (c.sum() + c.size)


def predict_proba(model: TreeModel, X) -> np.ndarray:
    """Class distributions for each row of ``X`` (columns in model variable order)."""
    if model.class_alphabet is None:
        raise ModelError("model was trained on a continuous target; use predict_value")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.kind == "ladtree":
        return softmax(ladtree_scores(model, X))
    return np.array([laplace(_leaf_for(model, x).counts) for x in X])


def predict_class_distribution(model: TreeModel, run) -> np.ndarray:
    """Class-probability vector for one run.

    ``run`` is a mapping from variable name to value, or a vector in the
    model's variable order. Leaf trees apply Laplace (+1) smoothing to the
    reached leaf's class counts; ladtree models return the softmax of their
    accumulated scores.
    """
    return predict_proba(model, _run_vector(model, run)[None, :])[0]


def predict_value(model: TreeModel, run) -> float:
    """Leaf mean of a tree trained on a continuous target."""
    leaf = _leaf_for(model, _run_vector(model, run))
    if leaf.value is None:
        raise ModelError("model has no numeric leaf values")
    return leaf.value


def truncate_ladtree(model: TreeModel, iterations: int) -> TreeModel:
    """The model as it stood after its first ``iterations`` boosting rounds."""
    if model.kind != "ladtree":
        raise ModelError("only ladtree models can be truncated by iteration")
    last = 3 * iterations
    nodes = tuple(
        Node(n.id, n.kind, n.split, tuple(c for c in n.children if c <= last),
             scores=n.scores)
        for n in model.nodes if n.id <= last
    )
    params = dict(model.params, iterations=min(iterations, model.params["iterations"]))
    meta = dict(model.meta)
    if "log_loss" in meta:
        meta["log_loss"] = list(meta["log_loss"][: iterations + 1])
    meta["iterations_performed"] = min(iterations, meta.get("iterations_performed", iterations))
    return TreeModel(model.kind, params, model.variables, model.class_alphabet, nodes,
                     tuple(g for g in model.gain_log if g.step <= iterations), meta)
