"""Statistical verification suites for the construction's claims.

Each suite draws a deterministic seed range, measures an empirical
frequency or test statistic, and compares it against the matching
theoretical bound.  Bounds that are one-sided guarantees get three
sigmas of binomial sampling slack so that a passing law cannot flake;
identities that hold exactly (total variation) are checked with no
tolerance at all.  Every suite is reproducible: same seeds and
parameters, same report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, special, stats

from .embed import embedding_family, neighbor_diff_report, time_lag_report
from .source import StepSource
from .twist import LevelStack, pattern_counts
from .wiener import build_to_level, convergence_report

SQRT2PI = math.sqrt(2.0 * math.pi)


def normal_cdf(x):
    return special.ndtr(x)


def normal_pdf(x):
    return np.exp(-0.5 * np.square(np.asarray(x, dtype=float))) / SQRT2PI


def mills_bound(x: float) -> float:
    """Upper bound for 1 - Phi(x), valid for x > 0."""
    if x <= 0:
        raise ValueError("the tail bound needs x > 0")
    return math.exp(-0.5 * x * x) / (x * SQRT2PI)


def binomial_allowance(bound: float, samples: int, z: float = 3.0) -> float:
    """bound + z sampling sigmas, capped at 1."""
    sigma = math.sqrt(max(bound * (1.0 - bound), 1e-12) / samples)
    return min(bound + z * sigma, 1.0)


def _pmap(fn, items, threads: int = 1) -> list:
    """Order-preserving map, threaded when asked for.

    Results land by position, so the aggregation that follows is
    independent of scheduling; with one thread this is a plain loop.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class StatReport:
    """One suite's outcome; the pass flag restates the recorded numbers."""

    suite: str
    sample_size: int
    statistic: float
    bound: float
    passed: bool
    significance: float
    seed_start: int
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "sample_size": self.sample_size,
            "statistic": self.statistic,
            "bound": self.bound,
            "passed": self.passed,
            "significance": self.significance,
            "seed_start": self.seed_start,
            "detail": self.detail,
        }


# ---------------------------------------------------------------------------
# raw-walk sampling helpers


def _walk_endpoint_samples(source: StepSource, paths: int, n: int, k_offset: int = 0) -> np.ndarray:
    """S_n over `paths` disjoint step ranges of the level-0 stream."""
    ones = np.empty(paths, dtype=np.int64)
    block = max(1, (1 << 25) // n)
    for a in range(0, paths, block):
        b = min(a + block, paths)
        bits = source.bits(0, k_offset + a * n + 1, k_offset + b * n)
        ones[a:b] = bits.reshape(b - a, n).sum(axis=1, dtype=np.int64)
    return 2 * ones - n


def _waiting_sum_samples(source: StepSource, paths: int, k: int, k_offset: int = 0) -> np.ndarray:
    """T_k over `paths` disjoint step ranges; each range is sized so that
    running out of pairs before the k-th sign change is impossible in
    practice (the shortfall would be a forty-sigma binomial event)."""
    pairs = 3 * k
    block_steps = 2 * pairs
    out = np.empty(paths, dtype=np.int64)
    chunk = max(1, (1 << 25) // block_steps)
    for a in range(0, paths, chunk):
        b = min(a + chunk, paths)
        bits = source.bits(0, k_offset + a * block_steps + 1, k_offset + b * block_steps)
        bits = bits.reshape(b - a, pairs, 2)
        change = bits[:, :, 0] == bits[:, :, 1]
        cs = np.cumsum(change, axis=1, dtype=np.int32)
        hit = cs == k
        if not hit.any(axis=1).all():
            raise RuntimeError("waiting-time sample block too short")
        idx = np.argmax(hit, axis=1)
        out[a:b] = 2 * (idx + 1)
    return out


# ---------------------------------------------------------------------------
# suites


def clt_suite(seed: int = 0, paths: int = 10_000, n: int = 4096,
              k: int = 10_000, alpha: float = 1e-3) -> StatReport:
    """Kolmogorov-Smirnov tests of S_n / sqrt(n) and (T_k - 4k) / sqrt(8k)."""
    src = StepSource(seed)
    s = _walk_endpoint_samples(src, paths, n)
    t = _waiting_sum_samples(src, paths, k, k_offset=paths * n)
    ks_s = stats.kstest(s / math.sqrt(n), "norm")
    ks_t = stats.kstest((t - 4.0 * k) / math.sqrt(8.0 * k), "norm")
    p_min = min(float(ks_s.pvalue), float(ks_t.pvalue))
    return StatReport(
        suite="clt", sample_size=paths, statistic=p_min, bound=alpha,
        passed=bool(p_min >= alpha), significance=alpha, seed_start=seed,
        detail={
            "n": n, "k": k,
            "walk_ks": float(ks_s.statistic), "walk_p": float(ks_s.pvalue),
            "waiting_ks": float(ks_t.statistic), "waiting_p": float(ks_t.pvalue),
        },
    )


def tails_suite(seed: int = 0, paths: int = 10_000, n: int = 4096,
                k: int = 10_000, x: float = 2.5) -> StatReport:
    """Large-deviation frequencies against exp(-x^2 / 2) plus slack."""
    src = StepSource(seed)
    s = _walk_endpoint_samples(src, paths, n)
    t = _waiting_sum_samples(src, paths, k, k_offset=paths * n)
    bound = math.exp(-0.5 * x * x)
    freq_s = float(np.mean(np.abs(s) / math.sqrt(n) >= x))
    freq_t = float(np.mean((t - 4.0 * k) / math.sqrt(8.0 * k) >= x))
    allowed = binomial_allowance(bound, paths)
    worst = max(freq_s, freq_t)
    return StatReport(
        suite="tails", sample_size=paths, statistic=worst, bound=allowed,
        passed=bool(worst <= allowed), significance=0.0027, seed_start=seed,
        detail={"n": n, "k": k, "x": x, "raw_bound": bound,
                "walk_freq": freq_s, "waiting_freq": freq_t},
    )


def variation_suite(seed: int = 0, n: int = 10, K: float = 1.0,
                    m_values=None) -> StatReport:
    """Exact total variation of each level: floor(K 4^m) segments of 2^-m."""
    if m_values is None:
        m_values = list(range(n + 1))
    stack = LevelStack(seed, n, K, keep_T="all", keep_sums="all").build(n)
    per_level = {}
    ok = True
    for m in m_values:
        R = stack.grid_points(m)
        sums = stack.sums(m)[: R + 1]
        v_num = int(np.abs(np.diff(sums)).sum())
        exact = v_num == R
        ok &= exact
        per_level[str(m)] = {"variation": v_num * 2.0**-m,
                             "expected": R * 2.0**-m, "exact": exact}
    top = int(max(m_values))
    return StatReport(
        suite="variation", sample_size=1,
        statistic=per_level[str(top)]["variation"],
        bound=per_level[str(top)]["expected"],
        passed=bool(ok), significance=0.0, seed_start=seed,
        detail={"K": K, "per_level": per_level},
    )


def modulus_suite(seed: int = 0, paths: int = 1000, K: float = 1.0,
                  delta: float = 0.1, u: float = 1.0,
                  h_list=(0.1, 0.05, 0.02), n: int = 10,
                  threads: int = 1) -> StatReport:
    """Frequency of an h-window increment reaching u, per window width.

    The window max is taken over grid points of ceil(h 4^n) spacing,
    which covers every |t - s| <= h pair up to one grid step of slack
    in the conservative direction.
    """
    h_list = list(h_list)
    widths = [int(math.ceil(h * 4**n)) for h in h_list]
    level_num = int(round(u * 2**n))

    def one(s: int) -> list[bool]:
        grid = build_to_level(s, n, K, lean=True)
        v = grid.values
        flags = []
        for w in widths:
            mx = ndimage.maximum_filter1d(v, size=w + 1, mode="nearest")
            mn = ndimage.minimum_filter1d(v, size=w + 1, mode="nearest")
            flags.append(int((mx - mn).max()) >= level_num)
        return flags

    rows = _pmap(one, range(seed, seed + paths), threads)
    exceed = np.array(rows, dtype=np.int64).sum(axis=0)
    per_h = {}
    ok = True
    worst_margin = -1.0
    for i, h in enumerate(h_list):
        bound = 7.0 * math.exp(-u * u * (1.0 - delta) / (2.0 * h))
        allowed = binomial_allowance(min(bound, 1.0), paths)
        freq = exceed[i] / paths
        ok &= freq <= allowed
        worst_margin = max(worst_margin, freq - allowed)
        per_h[str(h)] = {"bound": bound, "allowed": allowed,
                         "frequency": float(freq), "exceedances": int(exceed[i])}
    return StatReport(
        suite="modulus", sample_size=paths, statistic=worst_margin, bound=0.0,
        passed=bool(ok), significance=0.0027, seed_start=seed,
        detail={"K": K, "delta": delta, "u": u, "n": n, "per_h": per_h},
    )


def nondiff_suite(seed: int = 0, paths: int = 20, m_values=(8, 10),
                  n: int = 12, probes: int = 1000, K: float = 1.0,
                  threads: int = 1) -> StatReport:
    """Difference quotients over embedded brackets against (1/58) 2^(m/2).

    For probe times t, the bracketing passage pair (s_m(k-1), s_m(k)]
    gives |dW/ds| = 2^-m / ds; the quotient clears the threshold
    exactly when the bracket is no longer than 58 * 2^(-3m/2).
    """
    m_values = sorted(int(m) for m in m_values)
    t_units = np.floor((np.arange(probes) + 0.5) / probes * K * 4**n).astype(np.int64)
    t_units = np.maximum(t_units, 1)
    counts = {m: 0 for m in m_values}
    totals = {m: 0 for m in m_values}
    skipped = {m: 0 for m in m_values}

    def one(s: int) -> dict[int, tuple[int, int, int]]:
        grid = build_to_level(s, n, K, lean=True)
        fam = embedding_family(grid, m_values)
        res = {}
        for m in m_values:
            s_idx = fam[m].grid_index
            tau_cap = int(58.0 * 2.0 ** (-1.5 * m) * 4**n)
            pos = np.searchsorted(s_idx, t_units, side="left")
            inside = pos < s_idx.size
            pos = pos[inside]
            tau = s_idx[pos] - s_idx[pos - 1]
            res[m] = (int(np.count_nonzero(tau <= tau_cap)), int(pos.size),
                      int(np.count_nonzero(~inside)))
        return res

    for res in _pmap(one, range(seed, seed + paths), threads):
        for m in m_values:
            counts[m] += res[m][0]
            totals[m] += res[m][1]
            skipped[m] += res[m][2]
    per_m = {}
    ok = True
    worst = 1.0
    for m in m_values:
        frac = counts[m] / max(totals[m], 1)
        ok &= frac >= 0.99
        worst = min(worst, frac)
        per_m[str(m)] = {"threshold": 2.0 ** (0.5 * m) / 58.0,
                         "fraction": frac, "probes": totals[m],
                         "skipped": skipped[m]}
    return StatReport(
        suite="nondiff", sample_size=paths, statistic=worst, bound=0.99,
        passed=bool(ok), significance=0.0, seed_start=seed,
        detail={"n": n, "K": K, "probes": probes, "per_m": per_m},
    )


def twistlaw_suite(seed: int = 0, paths: int = 100_000, m_values=(1, 2, 3),
                   alpha: float = 1e-3, pattern_len: int = 6) -> StatReport:
    """Chi-square uniformity of the first six twisted steps at each level."""
    per_m = {}
    p_min = 1.0
    cells = 1 << pattern_len
    for m in m_values:
        counts = pattern_counts(seed, paths, m, pattern_len)
        expected = paths / cells
        stat = float(((counts - expected) ** 2 / expected).sum())
        p = float(stats.chi2.sf(stat, cells - 1))
        p_min = min(p_min, p)
        per_m[str(m)] = {"chi2": stat, "p": p, "min_count": int(counts.min()),
                         "max_count": int(counts.max())}
    return StatReport(
        suite="twistlaw", sample_size=paths, statistic=p_min, bound=alpha,
        passed=bool(p_min >= alpha), significance=alpha, seed_start=seed,
        detail={"pattern_len": pattern_len, "cells": cells, "per_m": per_m},
    )


def marginals_suite(seed: int = 0, paths: int = 10_000, n: int = 10,
                    alpha: float = 1e-3, threads: int = 1) -> StatReport:
    """Normality of W(1), variance of W(0.5), increment independence."""

    def one(s: int) -> tuple[float, float]:
        stack = LevelStack(s, n, 1.0, keep_T="none", keep_sums="none", lean=True).build(n)
        R = stack.grid_points(n)
        bits = stack.levels[n].bits
        ones_half = int(np.count_nonzero(bits[: R // 2]))
        ones_full = ones_half + int(np.count_nonzero(bits[R // 2 : R]))
        return ((2 * ones_half - R // 2) * 2.0**-n, (2 * ones_full - R) * 2.0**-n)

    pairs = _pmap(one, range(seed, seed + paths), threads)
    half = np.array([p[0] for p in pairs])
    full = np.array([p[1] for p in pairs])
    ks = stats.kstest(full, "norm")
    var_half = float(np.var(half, ddof=1))
    var_tol = 3.0 * 0.5 * math.sqrt(2.0 / (paths - 1))
    inc1 = half
    inc2 = full - half
    corr = float(np.corrcoef(inc1, inc2)[0, 1])
    corr_tol = 3.0 / math.sqrt(paths)
    ok = bool(ks.pvalue >= alpha and abs(var_half - 0.5) <= var_tol
              and abs(corr) <= corr_tol)
    return StatReport(
        suite="marginals", sample_size=paths, statistic=float(ks.pvalue),
        bound=alpha, passed=ok, significance=alpha, seed_start=seed,
        detail={"n": n, "ks_stat": float(ks.statistic), "ks_p": float(ks.pvalue),
                "var_half": var_half, "var_target": 0.5, "var_tol": var_tol,
                "increment_corr": corr, "corr_tol": corr_tol},
    )


def convergence_suite(seed: int = 0, paths: int = 200, n_values=(8, 10),
                      K: float = 1.0, C: float = 1.5) -> StatReport:
    """Inter-level sup-distance exceedances against the level bound."""
    rep = convergence_report(range(seed, seed + paths), list(n_values), K, C)
    worst = max(rep["levels"][m]["frequency"] - rep["levels"][m]["allowed"]
                for m in n_values)
    return StatReport(
        suite="convergence", sample_size=paths, statistic=worst, bound=0.0,
        passed=bool(rep["passed"]), significance=0.0027, seed_start=seed,
        detail=rep,
    )


def lags_suite(seed: int = 0, paths: int = 50, m: int = 8, n: int = 10,
               K: float = 1.0, C: float = 1.5, delta: float = 0.25) -> StatReport:
    """Embedding time lags and neighbor gaps against their envelopes."""
    seeds = range(seed, seed + paths)
    lag = time_lag_report(seeds, m, n, K, C)
    nbr = neighbor_diff_report(seeds, m, n, K, delta)
    ok = bool(lag["passed"] and nbr["passed"])
    return StatReport(
        suite="lags", sample_size=paths,
        statistic=max(lag["frequency"], nbr["frequency"]),
        bound=max(lag["allowed"], nbr["allowed"]),
        passed=ok, significance=0.0027, seed_start=seed,
        detail={"lag": lag, "neighbor": nbr},
    )


SUITES = {
    "clt": clt_suite,
    "tails": tails_suite,
    "variation": variation_suite,
    "modulus": modulus_suite,
    "nondiff": nondiff_suite,
    "convergence": convergence_suite,
    "lags": lags_suite,
    "twistlaw": twistlaw_suite,
}
