"""Class-probability MAE/RMSE under training and leave-one-out protocols."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import RunTable
from .trees import LearnerSpec, ModelError, TreeModel, design_matrix, predict_proba, train

__all__ = [
    "EvaluationResult",
    "ComparisonEntry",
    "instance_error",
    "aggregate",
    "evaluate_training",
    "evaluate_loo",
    "compare_learners",
    "PROTOCOLS",
]

PROTOCOLS = ("training", "leave-one-out")


@dataclass(frozen=True)
class InstanceRecord:
    run: int
    true_class: int
    predicted: tuple[float, ...]

    def to_dict(self, alphabet=None) -> dict:
        true = alphabet[self.true_class] if alphabet else self.true_class
        return {"run": self.run, "true_class": true, "predicted": list(self.predicted)}


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    protocol: str
    mae: float
    rmse: float
    per_instance: tuple[InstanceRecord, ...]
    confusion: np.ndarray
    alphabet: tuple[str, ...]

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion)) / max(1, int(self.confusion.sum()))

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "mae": self.mae,
            "rmse": self.rmse,
            "confusion": self.confusion.tolist(),
            "per_instance": [r.to_dict(self.alphabet) for r in self.per_instance],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)


def instance_error(predicted, true_class: int) -> tuple[float, float]:
    """Mean absolute and mean squared deviation from the one-hot true class.

    Both means run over the ``k`` classes.
    """
    p = np.asarray(predicted, dtype=np.float64)
    if p.ndim != 1 or not 0 <= true_class < p.size:
        raise ValueError(f"true class {true_class} outside a {p.size}-class distribution")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"predicted distribution sums to {p.sum()!r}, not 1")
    diff = p.copy()
    diff[true_class] -= 1.0
    return float(np.mean(np.abs(diff))), float(np.mean(diff * diff))


def aggregate(records: Sequence[InstanceRecord], k: int, protocol: str,
              alphabet: tuple[str, ...]) -> EvaluationResult:
    """MAE is the mean of per-instance absolute means; RMSE the root of the mean squared means."""
    abs_means, sq_means = [], []
    confusion = np.zeros((k, k), dtype=np.int64)
    for r in records:
        a, s = instance_error(r.predicted, r.true_class)
        abs_means.append(a)
        sq_means.append(s)
        confusion[r.true_class, int(np.argmax(r.predicted))] += 1
    return EvaluationResult(protocol, float(np.mean(abs_means)), math.sqrt(float(np.mean(sq_means))),
                            tuple(records), confusion, alphabet)


def _target(table: RunTable, objective: str):
    obj = table.objective(objective)
    if not obj.categorical:
        raise ModelError(f"objective {objective!r} must be categorical for class-probability errors")
    return obj


def evaluate_training(model: TreeModel, table: RunTable, objective: str) -> EvaluationResult:
    """Resubstitution error of ``model`` over every run of ``table``."""
    obj = _target(table, objective)
    if model.class_alphabet != obj.alphabet:
        raise ModelError(
            f"model alphabet {model.class_alphabet} does not match table alphabet {obj.alphabet}"
        )
    P = predict_proba(model, design_matrix(model, table))
    records = [InstanceRecord(i, int(obj.values[i]), tuple(map(float, P[i])))
               for i in range(table.n_runs)]
    return aggregate(records, obj.k, "training", obj.alphabet)


def loo_folds(table: RunTable):
    """Yield ``(held_out_run, training_table)`` for every run."""
    n = table.n_runs
    for i in range(n):
        yield i, table.subset_runs(np.r_[0:i, i + 1:n])


def evaluate_loo(spec: LearnerSpec, table: RunTable, objective: str) -> EvaluationResult:
    """Leave-one-out error: retrain on ``n - 1`` runs and score the held-out run.

    The class alphabet comes from the full table, so every fold predicts over
    the same classes even when a class is absent from its training runs.
    """
    obj = _target(table, objective)
    if table.n_runs < 3:
        raise ModelError("leave-one-out needs at least 3 runs")
    records = []
    for i, fold in loo_folds(table):
        model = train(spec, fold, objective)
        p = predict_proba(model, design_matrix(model, table)[i:i + 1])[0]
        records.append(InstanceRecord(i, int(obj.values[i]), tuple(map(float, p))))
    return aggregate(records, obj.k, "leave-one-out", obj.alphabet)


def evaluate(spec: LearnerSpec, table: RunTable, objective: str, protocol: str = "leave-one-out"):
    """Train-and-score under either protocol; returns ``(model, result)``.

    ``model`` is always trained on the full table.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    model = train(spec, table, objective)
    if protocol == "training":
        return model, evaluate_training(model, table, objective)
    return model, evaluate_loo(spec, table, objective)


@dataclass(frozen=True, eq=False)
class ComparisonEntry:
    kind: str
    spec: LearnerSpec | Mapping
    result: EvaluationResult | None
    error: str | None = None
    winner: bool = False

    @property
    def failed(self) -> bool:
        return self.result is None

    def to_dict(self) -> dict:
        spec = self.spec.to_dict() if isinstance(self.spec, LearnerSpec) else dict(self.spec)
        return {"kind": self.kind, "spec": spec, "winner": self.winner,
                "mae": None if self.failed else self.result.mae,
                "rmse": None if self.failed else self.result.rmse,
                "error": self.error}


def compare_learners(table: RunTable, objective: str, specs: Sequence,
                     protocol: str = "leave-one-out") -> list[ComparisonEntry]:
    """Evaluate every learner under one protocol and rank them.

    Ranking is ascending RMSE, then MAE, then kind name, then input position.
    A learner that fails to train is kept, marked failed, and ranked last.
    """
    if len(specs) < 2:
        raise ValueError("compare_learners needs at least 2 learner specs")
    scored, failed = [], []
    for pos, raw in enumerate(specs):
        kind = raw.kind if isinstance(raw, LearnerSpec) else str(dict(raw).get("kind"))
        try:
            spec = raw if isinstance(raw, LearnerSpec) else LearnerSpec.from_dict(raw)
            _, result = evaluate(spec, table, objective, protocol)
        except (ValueError, TypeError, KeyError) as exc:
            failed.append(ComparisonEntry(kind, raw, None, f"{type(exc).__name__}: {exc}"))
            continue
        scored.append((result.rmse, result.mae, kind, pos, ComparisonEntry(kind, spec, result)))
    scored.sort(key=lambda t: t[:4])
    ranked = [t[-1] for t in scored]
    if ranked:
        best = ranked[0]
        ranked[0] = ComparisonEntry(best.kind, best.spec, best.result, winner=True)
    return ranked + failed
