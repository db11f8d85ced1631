"""Higher-order benefit on a node task only triangles can solve.

The synthetic task labels nodes by triangle membership while every
order-1 view is identical across classes; a model restricted to the first
petal is stuck at the majority rate, the two-petal model separates the
classes through the order-2 filtered constant channel. Learned filter
magnitudes expose that split: the order-2 interaction strength stays
substantial only when the petal carries signal.
"""

import numpy as np

from flowerpetals import TrainConfig, strength, train_node_classification
from flowerpetals.synthetic import triangle_task
from flowerpetals.tasks import fit_node_params

for p_max in (1, 2):
    scores = []
    for seed in range(5):
        g = triangle_task(noise_dims=0, seed=seed)
        cfg = TrainConfig(task="node", P=p_max, seeds=(seed,), epochs=400, patience=120)
        scores.append(train_node_classification(g, cfg).mean)
    print(f"{p_max}-petal model: mean test accuracy {np.mean(scores):.3f} over 5 seeds")

g = triangle_task(noise_dims=0, seed=0)
cfg = TrainConfig(task="node", P=2, seeds=(0,), epochs=400, patience=120)
params = fit_node_params(g, cfg, seed=0)
s = strength(params)
print(f"learned interaction strengths: S_1={s[0]:.3f}, S_2={s[1]:.3f}")
print("(the order-2 petal keeps substantial weight: it carries the labels)")
