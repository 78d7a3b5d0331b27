"""Build a Brownian path level by level and watch the levels lock together.

Each level m is a fair random walk, twisted so that its magnitude-2
bridges retrace the previous level, then shrunk by 2^-m in space and
4^-m in time.  The result is a sequence of piecewise-linear paths that
agree with each other on a thinning set of stopping times and converge
uniformly to a Wiener path.
"""

import numpy as np

from walkwise import (
    LevelStack,
    build_to_level,
    check_refinement,
    error_bound,
    sup_distance,
)

seed = 7
K = 1.0

# the stack keeps every level so we can look inside
stack = LevelStack(seed, 6, K, keep_T="all", keep_sums="all").build(6)

print("level  grid cells  first 8 walk values (times 2^m)")
for m in range(7):
    R = stack.grid_points(m)
    sums = stack.sums(m)[: R + 1]
    print(f"{m:>5}  {R:>10}  {sums[:8].tolist()}")

# the twist makes each level retrace the one before it: the walk at
# its k-th magnitude-2 exit sits exactly at twice the previous walk
ok, detail = check_refinement(stack)
print("\nrefinement holds exactly:", ok)

# consecutive shrunk paths stay uniformly close; the distance is exact
# integer arithmetic on the common fine grid, no sampling involved
tracked = build_to_level(seed, 6, K, lean=False, track_dists=True)
print("\nlevel pair   sup distance   reference gap bound n 2^(-n/2)")
for n, d in enumerate(tracked.sup_dists):
    print(f"  {n} vs {n+1}     {d:.6f}       {error_bound(max(n, 1)):.6f}")

# the same number recomputed by hand for one pair
a = build_to_level(seed, 3, K)
b = build_to_level(seed, 4, K)
d = sup_distance(a.values, 3, b.values, 4, a.grid_count)
print("recomputed 3 vs 4:", f"{d:.6f}")

# a single grid carries the whole construction: values are integers on
# the 2^-n lattice over times on the 4^-n lattice
grid = build_to_level(seed, 10, K)
print("\nlevel-10 grid:", grid.values.size, "points,",
      "W(1) =", grid.values_at(1.0))
print("W(1) as dyadic:", grid.value_dyadic(grid.grid_count))
