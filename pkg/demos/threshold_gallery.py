"""
Cutting a consensus ranking down to a feature subset
====================================================

The same consensus score vector, cut four different ways: a fixed
fraction of the list, the 0.75 quantile, a kernel density valley, and
the automatic fallback when the score distribution has no valley.
"""

import numpy as np

from censel import (
    AggregateResult,
    apply_fixed_threshold,
    kde_threshold,
    quantile75_threshold,
    silverman_bandwidth,
)
from censel.selectors import Ranking

rng = np.random.default_rng(21)

# Fake a consensus: 25 background features scoring near 0.1 and five
# clearly separated ones near 0.9, like a mean-weight aggregate would
# produce on strong signal.
low = 0.10 + 0.02 * rng.standard_normal(25)
high = 0.90 + 0.02 * rng.standard_normal(5)
scores = np.concatenate([low, high])
p = scores.size

order = np.lexsort((np.arange(p), -scores))
agg = AggregateResult(
    method="mw", n_features=p, order=order, agg_score=scores, higher_is_better=True
)
print(f"{p} features, bandwidth {silverman_bandwidth(scores):.4f}")

# Fixed cutoffs keep a predetermined share of the list, signal or not.
ranking = Ranking(np.argsort(np.argsort(-scores)) + 1.0)
for frac in (0.10, 0.25):
    kept = apply_fixed_threshold(ranking, frac)
    print(f"fixed {frac:.2f}: keeps {kept.size} features {sorted(kept.tolist())}")

# The quantile cut keeps whatever scores above the upper quartile.
res = quantile75_threshold(agg)
print(f"quantile75: keeps {res.kept.size} features {sorted(res.kept.tolist())}")

# The density cut looks for a valley between score clumps, so here it
# recovers exactly the five high scorers without being told how many.
res = kde_threshold(agg)
print(f"kde: keeps {res.kept.size} features {sorted(res.kept.tolist())}")

# When the density piles up at the top of the score range there is no
# valley with anything above it, so the cut refuses to guess: every
# feature is kept and the result carries a flag instead.
heap = np.concatenate([np.full(20, 0.9), np.linspace(0.80, 0.895, 10)])
order = np.lexsort((np.arange(heap.size), -heap))
agg = AggregateResult(
    method="mw", n_features=heap.size, order=order, agg_score=heap, higher_is_better=True
)
res = kde_threshold(agg)
print(f"right-edge heap: keeps {res.kept.size} of {heap.size}, flag={res.flag!r}")
