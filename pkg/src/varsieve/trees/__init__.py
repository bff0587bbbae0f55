"""Tree-family learners and their common entry point."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..dataset import RunTable
from .classic import train_best_first_tree, train_info_gain_tree, train_sdr_tree
from .ladtree import LadTreeBuilder, LadTreeParams, log_loss, train_ladtree
from .model import (
    KINDS,
    GainRecord,
    ModelError,
    Node,
    TreeModel,
    design_matrix,
    predict_class_distribution,
    predict_proba,
    predict_value,
    truncate_ladtree,
)
from .splits import CRITERIA, SplitTest, best_split

__all__ = [
    "KINDS", "CRITERIA", "LearnerSpec", "train", "best_split", "SplitTest", "TreeModel",
    "Node", "GainRecord", "ModelError", "LadTreeParams", "LadTreeBuilder", "log_loss",
    "train_sdr_tree", "train_info_gain_tree", "train_best_first_tree", "train_ladtree",
    "predict_class_distribution", "predict_proba", "predict_value", "design_matrix",
    "truncate_ladtree",
]

_PARAMS = {
    "sdr": {"sd_fraction", "min_instances", "max_splits"},
    "info-gain": {"min_leaf", "max_splits"},
    "best-first": {"max_expansions"},
    "ladtree": {"iterations", "z_clip", "weight_floor"},
}
# parameter that controls model size in capacity sweeps
CAPACITY_PARAM = {"sdr": "max_splits", "info-gain": "max_splits",
                  "best-first": "max_expansions", "ladtree": "iterations"}


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind plus its hyperparameters."""

    kind: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - _PARAMS[self.kind]
        if unknown:
            raise ModelError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        object.__setattr__(self, "params", dict(self.params))

    def with_capacity(self, capacity: int) -> "LearnerSpec":
        return LearnerSpec(self.kind, {**self.params, CAPACITY_PARAM[self.kind]: capacity})

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LearnerSpec":
        unknown = set(d) - {"kind", "params"}
        if unknown:
            raise ModelError(f"unknown learner keys: {sorted(unknown)}")
        return cls(d["kind"], d.get("params", {}))


def train(spec: LearnerSpec, table: RunTable, objective: str) -> TreeModel:
    """Train the learner described by ``spec``."""
    if spec.kind == "sdr":
        return train_sdr_tree(table, objective, **spec.params)
    if spec.kind == "info-gain":
        return train_info_gain_tree(table, objective, **spec.params)
    if spec.kind == "best-first":
        return train_best_first_tree(table, objective, **spec.params)
    return train_ladtree(table, objective, LadTreeParams(**spec.params))
