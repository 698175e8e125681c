"""Isolation forest on a planted-outlier problem.

1,000 vectors from a tight cluster plus 20 uniform outliers: anomalies
isolate in shorter paths, so their scores s = 2^(-E(h)/c(psi)) sit near 1
while inliers cluster below 0.5.
"""

import numpy as np

from edrkit.forest import anomaly_score, c, train_forest
from edrkit.harness import auc_score

rng = np.random.default_rng(11)
inliers = np.clip(rng.normal(0.5, 0.02, size=(1000, 45)), 0, 1)
outliers = rng.uniform(size=(20, 45))

print(f"normalizer: c(2)={c(2)}, c(256)={c(256):.4f}")

model = train_forest(np.vstack([inliers, outliers]), n_trees=100, psi=256, seed=11)
print(f"model: {model.n_trees} trees, psi={model.psi}, "
      f"height limit {model.height_limit}\n")

scores_in = np.array([anomaly_score(model, x) for x in inliers])
scores_out = np.array([anomaly_score(model, x) for x in outliers])

print(f"inlier scores : mean {scores_in.mean():.3f}  "
      f"range [{scores_in.min():.3f}, {scores_in.max():.3f}]")
print(f"outlier scores: mean {scores_out.mean():.3f}  "
      f"range [{scores_out.min():.3f}, {scores_out.max():.3f}]")
print(f"ranking AUC   : {auc_score(list(scores_out), list(scores_in)):.4f}")

print("\nscore histogram (0.05 bins, # = inliers, o = outliers):")
for lo in np.arange(0.3, 0.9, 0.05):
    n_in = int(((scores_in >= lo) & (scores_in < lo + 0.05)).sum())
    n_out = int(((scores_out >= lo) & (scores_out < lo + 0.05)).sum())
    bar = "#" * min(n_in, 60) + "o" * n_out
    print(f"  [{lo:.2f},{lo + 0.05:.2f}) {bar}")
