"""Graph classification with a readout over the petal embedding.

Triangles vs hexagons with degree one-hot features: every node is degree
2, so the classes are inseparable through the first petal alone; the
order-2 petal activates only on triangle graphs and the 10-fold
cross-validated accuracy saturates.
"""

from flowerpetals import TrainConfig, graph_classify
from flowerpetals.synthetic import triangles_vs_hexagons

graphs, labels = triangles_vs_hexagons(per_class=12, seed=0)
print(f"dataset: {len(graphs)} graphs, classes {sorted(set(labels.tolist()))}")

for p_max in (1, 2):
    cfg = TrainConfig(
        task="graphclass", P=p_max, K=3, hidden=8, epochs=40, lr=0.05, seeds=(0,)
    )
    report = graph_classify(graphs, labels, cfg)
    best = report.extras["max_mean_val_accuracy"]
    print(f"{p_max}-petal model: max mean validation accuracy {best:.3f}")
