"""
Screening features against random probes
========================================

Shuffled copies of real columns carry the same marginal distribution
but cannot carry signal. Any original feature that ranks below the best
probe is indistinguishable from noise, so the probes set a data-driven
cutoff with no tuning parameter.
"""

import numpy as np

from censel import (
    SynthConfig,
    UNI,
    best_probe_threshold,
    generate_synthetic,
    mean_rank,
    rank_features,
    run_ensemble,
)

# 300 subjects, 80 features, 4 informative, moderate censoring.
cfg = SynthConfig(
    n=300,
    p=80,
    relevant={0: 1.2, 1: -1.0, 2: 0.9, 3: -0.8},
    target_censoring=0.4,
    seed=3,
)
ds, truth = generate_synthetic(cfg)
print(f"planted features: {list(truth)}")

# One fit with probes appended: each probe is a within-column shuffle
# of one original, so the comparison is probe against parent.
run = run_ensemble(UNI(), ds, B=1, use_probes=True, seed=3)
print(f"fit on {run.n_features} columns ({run.probes.probe_ids.size} probes)")

consensus = mean_rank([rank_features(r) for r in run.results])

# Keep originals that beat every probe; probes themselves never survive.
res = best_probe_threshold(consensus, run.probes, sparse=False)
kept = [ds.feature_names[j] for j in sorted(res.kept.tolist())]
print(f"kept {len(kept)} features: {kept}")

hits = sorted(set(truth) & set(kept))
noise = sorted(set(kept) - set(truth))
print(f"planted recovered: {hits}")
print(f"noise features kept: {noise if noise else 'none'}")

# The cutoff is wherever the luckiest probe landed in the consensus.
ordered = np.asarray(consensus.order)
best_probe_pos = min(
    np.flatnonzero(ordered == pid)[0] for pid in run.probes.probe_ids
)
print(f"best probe sits at consensus position {best_probe_pos + 1} of {ordered.size}")
