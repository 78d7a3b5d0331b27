"""Recover the coarse walks inside a fine path by first passage times.

Walking along the level-n path and recording each first arrival at a
fresh multiple of 2^-m yields exactly the level-m walk: same values,
same order, at times that hug the ideal dyadic grid.  This is the
Skorohod imbedding made concrete, and on a computer it is an exact
integer statement, checked here to the last entry.
"""

import numpy as np

from walkwise import (
    build_to_level,
    composed_stopping_times,
    first_passage_times,
    neighbor_diff_report,
    time_lag_report,
)

seed = 42
n = 10
grid = build_to_level(seed, n, 1.0, lean=False, track_dists=False)

m = 3
emb = first_passage_times(grid, m)
print(f"level {m} inside level {n}: {emb.count} passages")
print("first passage times  :", np.round(emb.times()[:6], 6).tolist())
print("ideal dyadic times   :", [k * 4.0**-m for k in range(6)])
print("embedded values      :", emb.values()[:6].tolist())

# the passage times are the composed stopping times T_{m,n}(k) of the
# twist construction, index by index
comp = composed_stopping_times(grid.stack, m, n, emb.count)
print("matches composed stopping times:", bool(np.array_equal(emb.grid_index, comp)))

# and the embedded values are the level-m walk itself
grid.stack.ensure_twisted(m, emb.count)
coarse = grid.stack.sums(m)[: emb.count + 1]
print("matches the coarse walk exactly:", bool(np.array_equal(emb.nums, coarse)))

# the time lags shrink like sqrt(m) 2^-m; the envelope from the
# negative-binomial tail holds with a wide margin over many seeds
lag = time_lag_report(range(20), m=6, n=10)
print(f"\nlag suite at m=6, n=10, 20 seeds: max lag allowed "
      f"{lag['threshold']:.4f}, exceedance {lag['frequency']:.3f} "
      f"(allowed {lag['allowed']:.3f}), passed={lag['passed']}")

nbr = neighbor_diff_report(range(20), m=6, n=10)
print(f"neighbor gaps at m=6: exceedance {nbr['frequency']:.3f} "
      f"(allowed {nbr['allowed']:.3f}), passed={nbr['passed']}")
