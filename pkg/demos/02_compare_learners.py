"""
Comparing the four tree learners
================================

A planted interaction (the class is the XOR of two variables) separates the
learners: a single axis-parallel split cannot express it, but boosting can
stack splits beneath one another. Leaf trees limited to one split are ranked
against an unrestricted ladtree under leave-one-out.
"""

import numpy as np

from varsieve.dataset import Objective, RunTable
from varsieve.evaluation import compare_learners
from varsieve.trees import LearnerSpec

rng = np.random.default_rng(2)
X = rng.uniform(size=(40, 4))
y = ((X[:, 0] > 0.5) ^ (X[:, 1] > 0.5)).astype(int)
table = RunTable(("v1", "v2", "v3", "v4"), X, (Objective("O1", y, ("a", "b")),))

###############################################################################
# Specs may be LearnerSpec objects or plain dicts. A spec with an unknown
# parameter fails to train; it is kept in the output and ranked last.

specs = [
    LearnerSpec("info-gain", {"max_splits": 1}),
    LearnerSpec("best-first", {"max_expansions": 1}),
    LearnerSpec("sdr", {"max_splits": 1}),
    LearnerSpec("ladtree", {"iterations": 10}),
    {"kind": "best-first", "params": {"depth": 2}},
]
for entry in compare_learners(table, "O1", specs):
    if entry.failed:
        print(f"   {entry.kind:<10}  failed: {entry.error}")
    else:
        mark = "*" if entry.winner else " "
        print(f"{mark}  {entry.kind:<10}  MAE {entry.result.mae:.3f}  RMSE {entry.result.rmse:.3f}  "
              f"accuracy {entry.result.accuracy:.2f}")
