"""
How the error thresholds set the number of kept variables
=========================================================

Each boosting round adds one splitter; the ranking grows as new variables
are used and the errors fall. The MAE and RMSE thresholds pick the round at
which selection stops, so loosening them keeps fewer variables.
"""

from varsieve.screening import capacity_sweep, rank_variables, select_variables
from varsieve.synthbench import PlantedSpec, generate
from varsieve.trees import LearnerSpec

table, truth = generate(PlantedSpec(20, (4, 9, 13, 17), noise_rate=0.05, seed=3), n_runs=120)
learner = LearnerSpec("ladtree")
print("planted:", truth)

###############################################################################
# Every round of the sweep equals a model trained from scratch with that many
# iterations. Leave-one-out folds are grown incrementally alongside it.

print(f"{'round':>5}  {'MAE':>6}  {'RMSE':>6}  ranking")
for rnd in capacity_sweep(table, "O1", learner, max_rounds=10):
    ranking = rank_variables(rnd.model).variables
    print(f"{rnd.round:>5}  {rnd.result.mae:6.3f}  {rnd.result.rmse:6.3f}  {ranking}")

###############################################################################
# Selection with a few threshold pairs:

for mae, rmse in [(0.45, 0.55), (0.38, 0.45), (0.36, 0.46), (0.32, 0.47), (0.01, 0.01)]:
    sel = select_variables(table, "O1", learner, mae, rmse, max_rounds=10)
    status = "met" if sel.threshold_met else "not met"
    print(f"thresholds ({mae}, {rmse}): stop at round {sel.rounds} ({status}), kept {sel.variables}")
