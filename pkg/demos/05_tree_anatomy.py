"""
Inside the trained models
=========================

Every learner returns a TreeModel: a flat node list plus a gain log with one
record per split. This script trains each kind on the same small table,
prints the splits it chose, and shows how a ladtree adds up scores along
every reachable path.
"""

import numpy as np

from varsieve.synthbench import PlantedSpec, generate
from varsieve.trees import LearnerSpec, TreeModel, predict_class_distribution, train, truncate_ladtree

table, truth = generate(PlantedSpec(6, (2, 5), k=3, seed=12), n_runs=30)
print("planted:", truth)

for spec in [LearnerSpec("sdr"), LearnerSpec("info-gain"), LearnerSpec("best-first", {"max_expansions": 4}),
             LearnerSpec("ladtree", {"iterations": 4})]:
    model = train(spec, table, "O1")
    splits = [(g.step, g.variable, round(g.threshold, 3), round(g.gain, 3)) for g in model.gain_log]
    print(f"\n{spec.kind}: {len(model.nodes)} nodes")
    for step in splits:
        print("   step %d: %s < %s  (gain %s)" % step)

###############################################################################
# A ladtree run starts from the root's zero scores (uniform probabilities);
# each iteration adds a splitter with two prediction nodes. Truncating the
# model shows the prediction for one run after each iteration.

model = train(LearnerSpec("ladtree", {"iterations": 4}), table, "O1")
run = dict(zip(table.variables, table.data[0]))
print("\nrun 0 is class", table.objective("O1").labels()[0])
for it in range(0, 5):
    p = predict_class_distribution(truncate_ladtree(model, it), run)
    print(f"after {it} iterations: {np.round(p, 3)}")

###############################################################################
# Models serialize to JSON and load back unchanged.

again = TreeModel.from_json(model.to_json())
print("\nJSON round trip equal:", again.to_dict() == model.to_dict())
