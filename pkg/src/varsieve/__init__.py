"""Decision-tree screening of simulation input variables.

Rank the inputs of a multiobjective simulation study by how strongly they
drive each (discretized) objective, and prune the design space to the
variables that matter.
"""

from .dataset import (
    DatasetError,
    DiscretizationSpec,
    Objective,
    RunTable,
    discretize_objective,
    load_arff,
    load_csv,
    write_arff,
    write_csv,
)
from .evaluation import (
    EvaluationResult,
    compare_learners,
    evaluate_loo,
    evaluate_training,
    instance_error,
)
from .screening import (
    ImportanceRanking,
    ScreeningReport,
    build_report,
    rank_variables,
    reduce_dataset,
    select_variables,
)
from .trees import LadTreeParams, LearnerSpec, TreeModel, best_split, predict_class_distribution, train

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "DiscretizationSpec",
    "Objective",
    "RunTable",
    "discretize_objective",
    "load_arff",
    "load_csv",
    "write_arff",
    "write_csv",
    "EvaluationResult",
    "compare_learners",
    "evaluate_loo",
    "evaluate_training",
    "instance_error",
    "ImportanceRanking",
    "ScreeningReport",
    "build_report",
    "rank_variables",
    "reduce_dataset",
    "select_variables",
    "LadTreeParams",
    "LearnerSpec",
    "TreeModel",
    "best_split",
    "predict_class_distribution",
    "train",
]
