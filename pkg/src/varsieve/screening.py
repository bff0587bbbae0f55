"""Variable importance, threshold-driven selection and design-space reduction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence


from .dataset import DatasetError, RunTable
from .evaluation import (
    EvaluationResult,
    InstanceRecord,
    aggregate,
    evaluate,
    evaluate_training,
    loo_folds,
)
from .trees import LadTreeBuilder, LadTreeParams, LearnerSpec, TreeModel
from .trees.classic import training_target

__all__ = [
    "RankEntry",
    "ImportanceRanking",
    "ObjectiveSummary",
    "ScreeningReport",
    "SweepRound",
    "rank_variables",
    "capacity_sweep",
    "select_variables",
    "reduce_dataset",
    "build_report",
    "format_table",
]

LEARNER_LABELS = {"ladtree": "LADTree", "best-first": "BestFirst", "info-gain": "GainRatio",
                  "sdr": "SDR"}


@dataclass(frozen=True)
class RankEntry:
    variable: str
    score: float
    first_use: int


@dataclass(frozen=True)
class ImportanceRanking:
    """Ordered effective variables for one objective.

    ``mae``, ``rmse``, ``threshold_met`` and ``rounds`` are filled in by
    :func:`select_variables` and stay None for a bare :func:`rank_variables`.
    """

    objective: str | None
    learner: str
    entries: tuple[RankEntry, ...]
    mae: float | None = None
    rmse: float | None = None
    threshold_met: bool | None = None
    rounds: int | None = None
    model: TreeModel | None = field(default=None, compare=False, repr=False)

    @property
    def variables(self) -> list[str]:
        return [e.variable for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "learner": self.learner,
            "mae": self.mae,
            "rmse": self.rmse,
            "threshold_met": self.threshold_met,
            "rounds": self.rounds,
            "entries": [{"variable": e.variable, "score": e.score, "first_use": e.first_use}
                        for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ImportanceRanking":
        entries = tuple(RankEntry(e["variable"], float(e["score"]), int(e["first_use"]))
                        for e in d["entries"])
        return cls(d.get("objective"), d["learner"], entries, d.get("mae"), d.get("rmse"),
                   d.get("threshold_met"), d.get("rounds"))


def rank_variables(model: TreeModel) -> ImportanceRanking:
    """Importance ranking of the variables a model splits on.

    Leaf trees: total split gain per variable, descending. Ladtree: the
    boosting iteration that first used the variable, ascending, then total
    weighted squared-error reduction, descending. Remaining ties go to the
    lower variable index. Unused variables are left out.
    """
    first: dict[str, int] = {}
    total: dict[str, float] = {}
    for rec in model.gain_log:
        first.setdefault(rec.variable, rec.step)
        total[rec.variable] = total.get(rec.variable, 0.0) + max(rec.gain, 0.0)
    index = {v: i for i, v in enumerate(model.variables)}
    if model.kind == "ladtree":
        key = lambda v: (first[v], -total[v], index[v])  # noqa: E731
    else:
        key = lambda v: (-total[v], first[v], index[v])  # noqa: E731
    entries = tuple(RankEntry(v, total[v], first[v]) for v in sorted(first, key=key))
    return ImportanceRanking(model.meta.get("objective"), model.kind, entries, model=model)


@dataclass(frozen=True, eq=False)
class SweepRound:
    round: int
    model: TreeModel
    result: EvaluationResult


def _ladtree_sweep(table, objective, spec, max_rounds, protocol):
    obj = training_target(table, objective)
    params = LadTreeParams(**{**spec.params, "iterations": max_rounds})
    full = LadTreeBuilder(table.data, obj.values, obj.k, table.variables, params)
    folds = []
    if protocol == "leave-one-out":
        if table.n_runs < 3:
            raise ValueError("leave-one-out needs at least 3 runs")
        for i, fold in loo_folds(table):
            fobj = fold.objective(objective)
            builder = LadTreeBuilder(fold.data, fobj.values, obj.k, fold.variables, params)
            builder.track(table.data[i])
            folds.append((i, builder))
    for r in range(1, max_rounds + 1):
        for b in [full] + [b for _, b in folds]:
            if b.iterations_done == r - 1:
                b.step()
        model = full.model(objective, obj.alphabet)
        model = TreeModel(model.kind, dict(model.params, iterations=r), model.variables,
                          model.class_alphabet, model.nodes, model.gain_log, model.meta)
        if protocol == "training":
            result = evaluate_training(model, table, objective)
        else:
            records = []
            for i, b in folds:
                p = b.probe_proba()[0]
                records.append(InstanceRecord(i, int(obj.values[i]), tuple(map(float, p))))
            result = aggregate(records, obj.k, "leave-one-out", obj.alphabet)
        yield SweepRound(r, model, result)


def capacity_sweep(table: RunTable, objective: str, spec: LearnerSpec, max_rounds: int = 20,
                   protocol: str = "leave-one-out") -> Iterator[SweepRound]:
    """Models of capacity 1, 2, ..., ``max_rounds`` with their errors.

    Capacity is the boosting iteration count for ladtree, the expansion cap
    for best-first, and the split cap for the depth-first trees. Each round
    equals training that capacity from scratch; ladtree rounds are grown
    incrementally, fold by fold.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if spec.kind == "ladtree":
        yield from _ladtree_sweep(table, objective, spec, max_rounds, protocol)
        return
    for r in range(1, max_rounds + 1):
        model, result = evaluate(spec.with_capacity(r), table, objective, protocol)
        yield SweepRound(r, model, result)


def select_variables(table: RunTable, objective: str, spec: LearnerSpec, mae_threshold: float,
                     rmse_threshold: float, max_rounds: int = 20,
                     protocol: str = "leave-one-out") -> ImportanceRanking:
    """Grow model capacity until both error thresholds are met.

    Stops at the first round with ``mae <= mae_threshold`` and
    ``rmse <= rmse_threshold``, or at ``max_rounds`` with
    ``threshold_met=False``. Returns the ranking of the stopping model.
    """
    if not (mae_threshold > 0 and rmse_threshold > 0):
        raise ValueError("thresholds must be > 0")
    last = None
    for last in capacity_sweep(table, objective, spec, max_rounds, protocol):
        if last.result.mae <= mae_threshold and last.result.rmse <= rmse_threshold:
            break
    met = last.result.mae <= mae_threshold and last.result.rmse <= rmse_threshold
    ranking = rank_variables(last.model)
    return ImportanceRanking(objective, spec.kind, ranking.entries, last.result.mae,
                             last.result.rmse, met, last.round, last.model)


def _as_list(rankings) -> list[ImportanceRanking]:
    return list(rankings.values()) if isinstance(rankings, Mapping) else list(rankings)


def reduce_dataset(table: RunTable, rankings) -> RunTable:
    """Keep the union of every ranking's variables plus all objectives."""
    union = set()
    for r in _as_list(rankings):
        union.update(r.variables)
    unknown = union - set(table.variables)
    if unknown:
        raise DatasetError(f"ranked variables missing from table: {sorted(unknown)}")
    if not union:
        raise DatasetError("no effective variables; lower thresholds")
    return table.subset_variables(union)


@dataclass(frozen=True)
class ObjectiveSummary:
    name: str
    learner: str
    mae: float | None
    rmse: float | None
    effective_variables: tuple[str, ...]
    threshold_met: bool | None

    def to_dict(self) -> dict:
        return {"name": self.name, "learner": self.learner, "mae": self.mae, "rmse": self.rmse,
                "effective_variables": list(self.effective_variables),
                "threshold_met": self.threshold_met}


@dataclass(frozen=True)
class ScreeningReport:
    objectives: tuple[ObjectiveSummary, ...]
    union: tuple[str, ...]
    original_count: int
    reduction_percent: float
    duration_seconds: float | None

    def to_dict(self, canonical: bool = False) -> dict:
        return {
            "objectives": [o.to_dict() for o in self.objectives],
            "union": list(self.union),
            "original_count": self.original_count,
            "reduction_percent": self.reduction_percent,
            "duration_seconds": None if canonical else self.duration_seconds,
        }

    def to_json(self, canonical: bool = False) -> str:
        return json.dumps(self.to_dict(canonical), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScreeningReport":
        objs = tuple(ObjectiveSummary(o["name"], o["learner"], o["mae"], o["rmse"],
                                      tuple(o["effective_variables"]), o["threshold_met"])
                     for o in d["objectives"])
        return cls(objs, tuple(d["union"]), d["original_count"], d["reduction_percent"],
                   d["duration_seconds"])


def build_report(table: RunTable, results: Sequence[ImportanceRanking],
                 duration: float | None = None) -> ScreeningReport:
    """Assemble the per-objective summary and the reduction over the original variables."""
    results = _as_list(results)
    if not results:
        raise ValueError("build_report needs at least one objective result")
    summaries = tuple(
        ObjectiveSummary(r.objective, r.learner, r.mae, r.rmse, tuple(r.variables), r.threshold_met)
        for r in results
    )
    chosen = set().union(*(r.variables for r in results))
    union = tuple(v for v in table.variables if v in chosen)
    percent = 100.0 * (1.0 - len(union) / table.n_vars)
    return ScreeningReport(summaries, union, table.n_vars, percent, duration)


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.3f}"


def format_table(report: ScreeningReport) -> str:
    """Fixed-width text table: algorithm, MAE, RMSE, effective variables, objective."""
    rows = [("Classification Algorithm", "MAE", "RMSE", "Effective Variables", "Objective")]
    for o in report.objectives:
        rows.append((LEARNER_LABELS.get(o.learner, o.learner), _fmt(o.mae), _fmt(o.rmse),
                     ",".join(o.effective_variables) or "-", o.name))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.append(
        f"Variables: {len(report.union)} of {report.original_count} kept, "
        f"reduced by {report.reduction_percent:.1f}%"
    )
    return "\n".join(lines)
