"""First-passage imbedding of coarse levels into a fine path.

Given the level-n path W on its dyadic grid, the level-m skeleton is
recovered by first passage: s_m(0) = 0 and s_m(k) is the first time
after s_m(k-1) at which |W(s) - W(s_m(k-1))| reaches 2**-m.  Because W
moves by +-2**-n along its grid, every passage lands exactly on a grid
point and the crossing condition is exact integer equality; no epsilon
appears anywhere.

The same times arise from the bridge machinery: composing stopping
times as T_{m,n} = T_n . T_{n-1} ... T_{m+1} and scaling by 4**-n gives
s_m(k) = 4**-n T_{m,n}(k), and the embedded values reproduce the
level-m grid values B_m(k 4**-m).  Both routes are implemented
independently and cross-checked in the tests; nothing below collapses
one into the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicValue
from .errors import InsufficientInputError
from .twist import LevelStack
from .wiener import WienerGrid

_CHUNK = 1 << 24


@dataclass
class EmbeddingTimes:
    """Passage times of level m inside the level-n grid.

    grid_index[k] = s_m(k) * 4**n (exact integers on the fine grid),
    nums[k] = W(s_m(k)) * 2**m (integers on the coarse value lattice).
    """

    m: int
    n: int
    grid_index: np.ndarray
    nums: np.ndarray

    @property
    def count(self) -> int:
        """Number of passages after time zero."""
        return int(self.grid_index.size - 1)

    def times(self) -> np.ndarray:
        return self.grid_index * 4.0**-self.n

    def values(self) -> np.ndarray:
        return self.nums * 2.0**-self.m

    def time_dyadic(self, k: int) -> DyadicValue:
        return DyadicValue(int(self.grid_index[k]), 2 * self.n)

    def value_dyadic(self, k: int) -> DyadicValue:
        return DyadicValue(int(self.nums[k]), self.m)


def _passage_scan(values: np.ndarray, h: int, stop_after: int | None = None) -> np.ndarray:
    """Indices of successive first passages to fresh multiples of h.

    values is an integer path starting at 0 that moves by +-1 units;
    returns indices including 0.  A passage is a visit to a multiple of
    h different from the previous passage value; since consecutive
    visits to the multiple lattice differ by 0 or +-h, deduplicating
    consecutive equal hit values is exact.
    """
    if h < 1 or h & (h - 1):
        raise ValueError("h must be a positive power of two")
    out = [np.zeros(1, dtype=np.int64)]
    found = 0
    mask = h - 1
    last_hit = 0
    for a in range(0, values.size, _CHUNK):
        chunk = values[a : a + _CHUNK]
        hits = np.flatnonzero((chunk & mask) == 0)
        if a == 0:
            hits = hits[1:]  # index 0 is the starting passage, recorded already
        if hits.size == 0:
            continue
        vals = chunk[hits]
        prev = np.empty_like(vals)
        prev[0] = last_hit
        prev[1:] = vals[:-1]
        keep = vals != prev
        kept = hits[keep].astype(np.int64)
        kept += a
        out.append(kept)
        found += kept.size
        last_hit = int(vals[-1])
        if stop_after is not None and found >= stop_after:
            break
    return np.concatenate(out)


def first_passage_times(grid, m: int, R: int | None = None) -> EmbeddingTimes:
    """Embedding times s_m(0..R) read off a level-n grid by first passage.

    grid may be a WienerGrid or a pair (values, n).  With explicit R
    the scan fails with InsufficientInputError if the grid ends before
    R passages; R=None keeps every passage the horizon contains.
    """
    if isinstance(grid, WienerGrid):
        values, n = grid.values, grid.n
    else:
        values, n = grid
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    idx = _passage_scan(np.asarray(values), 1 << (n - m), stop_after=R)
    if R is None:
        R = int(idx.size - 1)
    elif idx.size - 1 < R:
        raise InsufficientInputError(f"passages at level {m}", R, int(idx.size - 1))
    idx = idx[: R + 1]
    nums = np.asarray(values)[idx] >> (n - m)
    return EmbeddingTimes(m=m, n=n, grid_index=idx, nums=nums.astype(np.int64))


def embedding_family(grid, m_list, R_map=None) -> dict[int, EmbeddingTimes]:
    """Embeddings for several coarse levels from one scan of the grid.

    Scans the fine grid once at the deepest requested level; coarser
    passages are a subsequence of finer ones (a fresh 2**-m crossing
    happens at a fresh 2**-(m+1) crossing), so the rest reduces to
    rescans of the passage values, which are tiny.  R_map entries give
    required passage counts per level (error when short); levels not
    in the map keep every passage found.
    """
    if isinstance(grid, WienerGrid):
        values, n = grid.values, grid.n
    else:
        values, n = grid
    m_list = sorted(set(int(m) for m in m_list), reverse=True)
    if R_map is None:
        R_map = {}

    def cut(idx, v, m):
        R = R_map.get(m)
        if R is None:
            R = int(idx.size - 1)
        elif idx.size - 1 < R:
            raise InsufficientInputError(f"passages at level {m}", R, int(idx.size - 1))
        return EmbeddingTimes(m=m, n=n, grid_index=idx[: R + 1],
                              nums=v[: R + 1].astype(np.int64))

    out: dict[int, EmbeddingTimes] = {}
    m_star = m_list[0]
    idx = _passage_scan(np.asarray(values), 1 << (n - m_star))
    v = np.asarray(values)[idx] >> (n - m_star)
    out[m_star] = cut(idx, v, m_star)
    level = m_star
    for m in m_list[1:]:
        sub = _passage_scan(v, 1 << (level - m))
        idx = idx[sub]
        v = v[sub] >> (level - m)
        level = m
        out[m] = cut(idx, v, m)
    return out


def composed_stopping_times(stack: LevelStack, m: int, n: int, k_max: int) -> np.ndarray:
    """T_{m,n}(k) = T_n(T_{n-1}(...T_{m+1}(k))) for k = 0..k_max.

    Needs retained stopping times at levels m+1..n; levels are extended
    lazily when a composition argument runs past what was built, up to
    the safety caps.
    """
    if not 0 <= m < n <= stack.n_max:
        raise ValueError("need 0 <= m < n <= n_max")
    idx = np.arange(k_max + 1, dtype=np.int64)
    for j in range(m + 1, n + 1):
        need = int(idx[-1])
        if stack.levels[j].nbridges < need:
            stack.ensure_bridges(j, need)
        Tj = stack.stopping_times(j)
        nxt = np.zeros_like(idx)
        nz = idx > 0
        nxt[nz] = Tj[idx[nz] - 1]
        idx = nxt
    return idx


def time_lag_report(seeds, m: int, n: int, K: float = 1.0, C: float = 1.5) -> dict:
    """Max embedding lag |4**-n T_{m,n}(k) - k 4**-m| against its bound.

    The bound sqrt(18 C K m) 2**-m holds except with probability
    4 (K 4**m)**(1 - C); with C = 3/2 it coincides with the
    almost-sure form sqrt(27 K m) 2**-m.  Frequencies get three sigmas
    of sampling slack.
    """
    seeds = list(seeds)
    threshold = math.sqrt(18.0 * C * K * m) * 2.0**-m
    bound = 4.0 * (K * 4.0**m) ** (1.0 - C)
    k_max = int(K * 4.0**m)
    scale = 4 ** (n - m)
    exceed = 0
    max_lags = []
    for seed in seeds:
        stack = LevelStack(seed, n, K, keep_T="all", keep_sums="none").build(n)
        T = composed_stopping_times(stack, m, n, k_max)
        lag_num = T - np.arange(k_max + 1, dtype=np.int64) * scale
        max_lag = float(np.abs(lag_num).max()) * 4.0**-n
        max_lags.append(max_lag)
        exceed += max_lag >= threshold
    freq = exceed / len(seeds)
    allowed = min(bound + 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / len(seeds)), 1.0)
    return {
        "m": m,
        "n": n,
        "K": K,
        "C": C,
        "seeds": [int(s) for s in seeds],
        "threshold": threshold,
        "as_threshold": math.sqrt(27.0 * K * m) * 2.0**-m,
        "bound": bound,
        "exceedances": exceed,
        "frequency": freq,
        "allowed": allowed,
        "median_max_lag": float(np.median(max_lags)),
        "passed": bool(freq <= allowed),
    }


def neighbor_diff_report(seeds, m: int, n: int, K: float = 1.0, delta: float = 0.25) -> dict:
    """Composed neighbor gaps 4**-n tau_{m,n}(k) against 4**-m.

    Checks the floor tau_{m,n}(k) >= 2**(n-m) exactly, the mean
    E(4**-n tau_{m,n}) = 4**-m within three standard errors, and the
    eventual bound |4**-n tau - 4**-m| < (7/delta) 2**(-2m(1-delta)).
    The probability budget pairs that threshold with C = 7/(3 delta),
    giving (K/10) 2**(-2m(delta C - 2)) per horizon.
    """
    seeds = list(seeds)
    k_max = int(K * 4.0**m)
    threshold = (7.0 / delta) * 2.0 ** (-2 * m * (1 - delta))
    C = 7.0 / (3.0 * delta)
    bound = min((K / 10.0) * 2.0 ** (-2 * m * (delta * C - 2.0)), 1.0)
    exceed = 0
    floor_ok = True
    all_means = []
    max_devs = []
    for seed in seeds:
        stack = LevelStack(seed, n, K, keep_T="all", keep_sums="none").build(n)
        T = composed_stopping_times(stack, m, n, k_max)
        tau = np.diff(T)
        floor_ok &= bool(tau.min() >= 2 ** (n - m))
        dev = np.abs(tau * 4.0**-n - 4.0**-m)
        max_dev = float(dev.max())
        max_devs.append(max_dev)
        all_means.append(float(tau.mean()) * 4.0**-n)
        exceed += max_dev >= threshold
    freq = exceed / len(seeds)
    allowed = min(bound + 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / len(seeds)), 1.0)
    mean = float(np.mean(all_means))
    # per-draw variance of 4**-n tau_{m,n} is (2/3)(16**h - 4**h) 4**-2n, h = n - m
    h = n - m
    sd = math.sqrt((2.0 / 3.0) * (16.0**h - 4.0**h)) * 4.0**-n
    se = sd / math.sqrt(k_max * len(seeds))
    mean_ok = abs(mean - 4.0**-m) <= 3.0 * se
    return {
        "m": m,
        "n": n,
        "K": K,
        "delta": delta,
        "seeds": [int(s) for s in seeds],
        "threshold": threshold,
        "bound": bound,
        "exceedances": exceed,
        "frequency": freq,
        "allowed": allowed,
        "median_max_dev": float(np.median(max_devs)),
        "mean": mean,
        "mean_target": 4.0**-m,
        "mean_se": se,
        "floor_ok": bool(floor_ok),
        "mean_ok": bool(mean_ok),
        "passed": bool(freq <= allowed and floor_ok and mean_ok),
    }
