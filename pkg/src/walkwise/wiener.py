"""Shrunk twisted walks and their limit, the working Wiener path.

Level m shrunk by eq B_m(t 4**-m) = 2**-m Stw_m(t) is a broken line
with vertices on (4**-m Z) x (2**-m Z).  Consecutive levels agree at
bridge ends, and their uniform distance on a fixed horizon shrinks
geometrically except on events of summable probability, so the levels
converge almost surely and uniformly.  The package treats the deepest
built level as the working Wiener path; the accompanying error bound
n * 2**(-n/2) is the almost-sure eventual envelope for the distance to
the limit.

Distances between levels are computed exactly: both paths are broken
lines, their difference is extremal at a vertex of the union grid, and
on that grid everything is integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicValue
from .twist import LevelStack

_CHUNK = 1 << 22


def error_bound(n: int) -> float:
    """Almost-sure eventual bound n * 2**(-n/2) for sup |W - B_n| on [0, K]."""
    return n * 2.0 ** (-n / 2.0)


@dataclass
class WienerGrid:
    """Level-n path values on the dyadic grid covering [0, K].

    values[r] is the integer numerator S with B_n(r 4**-n) = S * 2**-n.
    sup_dists[m] is the exact uniform distance between levels m and
    m+1 on the horizon (None when the build skipped tracking).
    """

    seed: int
    n: int
    K: float
    values: np.ndarray
    sup_dists: list[float] | None = None
    stack: LevelStack | None = field(default=None, repr=False)

    @property
    def grid_count(self) -> int:
        return int(self.values.size - 1)

    @property
    def error_bound(self) -> float:
        return error_bound(self.n)

    def value_dyadic(self, r: int) -> DyadicValue:
        return DyadicValue(int(self.values[r]), self.n)

    def time_dyadic(self, r: int) -> DyadicValue:
        return DyadicValue(int(r), 2 * self.n)

    def values_at(self, t):
        """W(t) by linear interpolation on the grid; t scalar or array."""
        t = np.asarray(t, dtype=np.float64)
        R = self.grid_count
        x = t * 4.0**self.n
        if np.any(x < 0) or np.any(x > R + 1e-9):
            raise ValueError("time outside the built horizon")
        j = np.minimum(x.astype(np.int64), R - 1)
        j = np.maximum(j, 0)
        frac = x - j
        out = (self.values[j] + frac * (self.values[j + 1] - self.values[j])) * 2.0**-self.n
        return out if out.ndim else float(out)


def sup_distance(coarse_sums, m: int, fine_sums, n: int, R_coarse: int) -> float:
    """Exact uniform distance between levels m and n over R_coarse cells.

    Both inputs are grid numerators (level-m values S with value
    S * 2**-m, similarly for n).  The distance over the time range
    [0, R_coarse * 4**-m] is attained at a vertex of the fine grid and
    is computed there in integers.
    """
    if n <= m:
        raise ValueError("need n > m")
    h = n - m
    Q = 4**h
    upscale = 1 << h       # fine numerator to scale m + 2h
    cupscale = 1 << (2 * h)  # coarse numerator to scale m + 2h
    best = 0
    cells_per_chunk = max(_CHUNK // Q, 1)
    i_range = np.arange(Q, dtype=np.int64)
    for q0 in range(0, R_coarse, cells_per_chunk):
        q1 = min(q0 + cells_per_chunk, R_coarse)
        sc = np.asarray(coarse_sums[q0 : q1 + 1], dtype=np.int64)
        sf = np.asarray(fine_sums[q0 * Q : q1 * Q], dtype=np.int64).reshape(q1 - q0, Q)
        dc = np.diff(sc)
        d = sf * upscale
        d -= sc[:-1, None] * cupscale
        d -= dc[:, None] * i_range[None, :]
        np.abs(d, out=d)
        best = max(best, int(d.max()))
    tail = abs(int(fine_sums[R_coarse * Q]) * upscale - int(coarse_sums[R_coarse]) * cupscale)
    best = max(best, tail)
    return best * 2.0 ** -(m + 2 * h)


def build_to_level(seed, n: int, K: float = 1.0, *, lean: bool | None = None,
                   track_dists: bool | None = None) -> WienerGrid:
    """Build levels 0..n for one seed and return the level-n grid.

    lean (default for n >= 13) sizes each level to its own grid and
    keeps only the top values; the full mode follows the horizon policy
    and retains stopping times and sums everywhere, which the
    refinement, composition, and distance reports need.  Both modes
    produce bit-identical paths where both are defined.
    """
    if lean is None:
        lean = n >= 13
    if track_dists is None:
        track_dists = not lean
    if track_dists and lean:
        raise ValueError("distance tracking needs the full build")
    if lean:
        stack = LevelStack(seed, n, K, keep_T="none", keep_sums={n}, lean=True)
    else:
        stack = LevelStack(seed, n, K, keep_T="all", keep_sums="all", lean=False)
    stack.build(n)
    dists = None
    if track_dists:
        dists = []
        for m in range(n):
            Rc = stack.grid_points(m)
            dists.append(
                sup_distance(stack.grid_values(m), m, stack.grid_values(m + 1), m + 1, Rc)
            )
    values = stack.grid_values(n).copy()
    master = stack.source.master_seed
    return WienerGrid(seed=master, n=n, K=K, values=values, sup_dists=dists, stack=stack)


def refine(grid: WienerGrid, n2: int) -> WienerGrid:
    """Deepen an existing build to level n2 > n, reusing its streams.

    Counter-based streams make this equal to a fresh build at n2; when
    the original stack was kept it is extended in place instead of
    regenerated.
    """
    if n2 <= grid.n:
        raise ValueError("refine needs a deeper level")
    if grid.stack is None or grid.stack.n_max < n2:
        return build_to_level(grid.seed, n2, grid.K)
    stack = grid.stack
    stack.build(n2)
    dists = None
    if grid.sup_dists is not None:
        dists = list(grid.sup_dists)
        for m in range(grid.n, n2):
            Rc = stack.grid_points(m)
            dists.append(
                sup_distance(stack.grid_values(m), m, stack.grid_values(m + 1), m + 1, Rc)
            )
    return WienerGrid(seed=grid.seed, n=n2, K=grid.K,
                      values=stack.grid_values(n2).copy(), sup_dists=dists, stack=stack)


def _wilson_upper(count: int, total: int, z: float = 3.0) -> float:
    """Upper Wilson score bound, used as the +z sigma allowance."""
    if total == 0:
        return 1.0
    p = count / total
    denom = 1.0 + z * z / total
    center = p + z * z / (2 * total)
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    return (center + half) / denom


def convergence_report(seeds, n_values, K: float = 1.0, C: float = 1.5) -> dict:
    """Exceedance frequencies of d_n = sup |B_{n+1} - B_n| on [0, K].

    For each n in n_values, counts seeds with d_n >= (1/4) n 2**(-n/2)
    and compares the frequency against the tail bound
    3 (K 4**n)**(1 - C), allowing three sigmas of sampling slack.  Also
    reports how often the gap sequence decreases between the two
    extreme requested levels.
    """
    seeds = list(seeds)
    n_values = sorted(n_values)
    n_top = n_values[-1] + 1
    dists = {n: [] for n in n_values}
    for seed in seeds:
        grid = build_to_level(seed, n_top, K, lean=False, track_dists=True)
        for n in n_values:
            dists[n].append(grid.sup_dists[n])
    out = {"K": K, "C": C, "seeds": [int(s) for s in seeds], "levels": {}, "passed": True}
    for n in n_values:
        arr = np.array(dists[n])
        threshold = 0.25 * n * 2.0 ** (-n / 2.0)
        bound = 3.0 * (K * 4.0**n) ** (1.0 - C)
        exceed = int(np.sum(arr >= threshold))
        freq = exceed / len(seeds)
        allowed = bound + 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / len(seeds))
        ok = freq <= allowed
        out["levels"][n] = {
            "threshold": threshold,
            "bound": bound,
            "exceedances": exceed,
            "frequency": freq,
            "allowed": allowed,
            "median_gap": float(np.median(arr)),
            "passed": bool(ok),
        }
        out["passed"] &= bool(ok)
    lo, hi = n_values[0], n_values[-1]
    if lo != hi:
        dec = sum(1 for a, b in zip(dists[lo], dists[hi]) if b < a)
        out["decreasing_fraction"] = dec / len(seeds)
    return out


def reference_gap_report(seeds, n: int, n_ref: int, K: float = 1.0, C: float = 1.5) -> dict:
    """Frequency of sup |B_ref - B_n| >= n 2**(-n/2), vs 6 (K 4**n)**(1-C).

    The deep level stands in for the limit path; the bound is the
    union-summed tail over all finer levels, so a truncated reference
    only makes the test easier, never harder.
    """
    seeds = list(seeds)
    threshold = error_bound(n)
    bound = 6.0 * (K * 4.0**n) ** (1.0 - C)
    exceed = 0
    gaps = []
    for seed in seeds:
        stack = LevelStack(seed, n_ref, K, keep_T="none", keep_sums={n, n_ref}, lean=True)
        stack.build(n_ref)
        Rc = stack.grid_points(n)
        gap = sup_distance(stack.grid_values(n), n, stack.grid_values(n_ref), n_ref, Rc)
        gaps.append(gap)
        exceed += gap >= threshold
    freq = exceed / len(seeds)
    allowed = bound + 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / len(seeds))
    return {
        "n": n,
        "n_ref": n_ref,
        "K": K,
        "C": C,
        "seeds": [int(s) for s in seeds],
        "threshold": threshold,
        "bound": bound,
        "exceedances": exceed,
        "frequency": freq,
        "allowed": allowed,
        "median_gap": float(np.median(gaps)),
        "passed": bool(freq <= allowed),
    }
