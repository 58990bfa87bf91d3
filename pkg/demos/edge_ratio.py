"""
Cross-cluster NN versus FP edges as n grows
===========================================

Under a constant probability ``p`` of a cross-cluster NN edge, NN counts
between two clusters grow like ``n^2`` while uniformly sampled FP counts grow
like ``n``.  Their ratio therefore grows linearly, ``n p / (2 n_FP)``, and the
fixed number of FP pairs per point stops separating clusters on large data.
"""

from localmap.metrics import edge_ratio_simulation

print(f"{'n':>6} {'empirical':>10} {'predicted':>10}")
for n in (500, 1000, 2000, 4000, 8000):
    r = edge_ratio_simulation(n, n_clusters=2, p_nn=0.001, n_FP=20, seeds=30, seed=1)
    print(f"{n:>6} {r.mean:>10.4f} {r.predicted:>10.4f}")
