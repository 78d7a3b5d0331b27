"""Simple symmetric random walks and their first-bridge structure.

A walk is S_0 = 0, S_j = X_1 + ... + X_j with fair +-1 steps, extended
to real time by linear interpolation between integer points.  The
central combinatorial device downstream is the decomposition of the
step sequence into non-overlapping pairs (X_1, X_2), (X_3, X_4), ...:
a pair with opposite signs returns the walk to its running level, a
pair with equal signs moves it by +-2.  The waiting time tau for the
first move of size 2 is therefore twice a geometric variable, the k-th
partial sum T_k of waiting times marks where the walk has moved k times
by +-2, and every T_k is even.  All bridge bookkeeping in this package
rides on that pair grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .source import StepSource

LOG_SQRT2 = 0.5 * math.log(2.0)


def _as_step_array(steps) -> np.ndarray:
    arr = np.asarray(steps, dtype=np.int8)
    if arr.ndim != 1:
        raise ValueError("steps must be one-dimensional")
    if arr.size and not np.all(np.abs(arr) == 1):
        raise ValueError("steps must be +-1 valued")
    return arr


@dataclass
class WalkPath:
    """A finite walk: +-1 steps plus cached partial sums S_0..S_n."""

    steps: np.ndarray
    sums: np.ndarray

    @classmethod
    def from_steps(cls, steps) -> "WalkPath":
        arr = _as_step_array(steps)
        sums = np.empty(arr.size + 1, dtype=np.int64)
        sums[0] = 0
        np.cumsum(arr, out=sums[1:])
        return cls(arr, sums)

    @classmethod
    def from_source(cls, source: StepSource, m: int, n: int) -> "WalkPath":
        return cls.from_steps(source.steps(m, 1, n))

    def __len__(self) -> int:
        return int(self.steps.size)

    def value(self, t):
        """S(t) with linear interpolation between integer times.

        Accepts a scalar or array of times in [0, n].
        """
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0) or np.any(t > self.steps.size):
            raise ValueError("time outside [0, n]")
        if self.steps.size == 0:
            return np.zeros_like(t) if t.ndim else 0.0
        j = np.minimum(t.astype(np.int64), self.steps.size - 1)
        j = np.maximum(j, 0)
        frac = t - j
        out = self.sums[j] + frac * self.steps[j]
        # integer times land exactly on the lattice
        return out if out.ndim else float(out)


@dataclass
class WaitingTimes:
    """Bridge decomposition of a step sequence on the pair grid.

    tau[i] is the i-th waiting time (even), T[i] the partial sum
    tau[1] + ... + tau[i+1], exits[i] = S(T[i]) - S(T[i-1]) in {-2, +2}.
    leftover counts trailing steps after the last complete bridge.
    """

    tau: np.ndarray
    T: np.ndarray
    exits: np.ndarray
    leftover: int


def waiting_times(steps) -> WaitingTimes:
    arr = _as_step_array(steps)
    n_pairs = arr.size // 2
    first = arr[0 : 2 * n_pairs : 2]
    second = arr[1 : 2 * n_pairs : 2]
    change = np.flatnonzero(first == second)
    T = (change.astype(np.int64) + 1) * 2
    tau = np.diff(T, prepend=0)
    exits = (second[change].astype(np.int64)) * 2
    leftover = arr.size - (int(T[-1]) if T.size else 0)
    return WaitingTimes(tau=tau, T=T, exits=exits, leftover=leftover)


def tau_moments(source: StepSource, samples: int, m: int = 0):
    """Monte-Carlo estimates of E(tau) and Var(tau) from simulated walks.

    Returns (mean, var, se_mean, se_var).  Waiting times are read off a
    single long walk on the pair grid; the renewal structure makes the
    draws independent.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    taus = np.empty(samples, dtype=np.int64)
    have = 0
    pair_base = 0  # absolute index of the next unread pair
    prev_change = -1  # absolute pair index of the last observed change
    while have < samples:
        need = samples - have
        n_pairs = 2 * need + 128  # E(tau) = 2 pairs, generate with slack
        steps = source.steps(m, 2 * pair_base + 1, 2 * (pair_base + n_pairs))
        change = np.flatnonzero(steps[0::2] == steps[1::2]).astype(np.int64)
        change += pair_base
        if change.size:
            gaps = np.diff(change, prepend=prev_change)
            take = min(need, gaps.size)
            taus[have : have + take] = 2 * gaps[:take]
            have += take
            prev_change = int(change[take - 1])
        pair_base += n_pairs
    mean = float(taus.mean())
    var = float(taus.var(ddof=1))
    se_mean = math.sqrt(var / samples)
    m4 = float(((taus - mean) ** 4).mean())
    se_var = math.sqrt(max(m4 - var**2, 0.0) / samples)
    return mean, var, se_mean, se_var


def first_exit_distribution(max_pairs: int = 8, condition_first_step: int | None = None):
    """Exact law of the first bridge by exhaustive prefix enumeration.

    Enumerates all sign sequences of max_pairs pairs, classifies the
    first bridge, and closes the geometric tail in closed form: a prefix
    of max_pairs return-pairs leaves the walk at its starting level with
    an unbiased future, so the surviving mass splits evenly between the
    two exits.  Returns a dict with exact Fractions:
    'tau_law' mapping tau -> probability (complete bridges only),
    'p_up' = P(S(tau) = +2), 'p_down' = P(S(tau) = -2).
    Conditioning on the first step keeping only sequences with
    X_1 = condition_first_step.
    """
    if condition_first_step not in (None, 1, -1):
        raise ValueError("condition_first_step must be None or +-1")
    tau_law: dict[int, Fraction] = {}
    up = Fraction(0)
    total = Fraction(0)
    survivors = Fraction(0)
    for seq in product((1, -1), repeat=2 * max_pairs):
        if condition_first_step is not None and seq[0] != condition_first_step:
            continue
        weight = Fraction(1, 2 ** (2 * max_pairs))
        total += weight
        exit_sign = 0
        tau = None
        for i in range(max_pairs):
            a, b = seq[2 * i], seq[2 * i + 1]
            if a == b:
                tau = 2 * (i + 1)
                exit_sign = a
                break
        if tau is None:
            survivors += weight
            continue
        tau_law[tau] = tau_law.get(tau, Fraction(0)) + weight
        if exit_sign == 1:
            up += weight
    # geometric tail: surviving prefixes restart from level 0
    up += survivors / 2
    p_up = up / total
    return {
        "tau_law": {t: p / total for t, p in sorted(tau_law.items())},
        "p_up": p_up,
        "p_down": 1 - p_up,
        "survivor_mass": survivors / total,
    }


def waiting_sum_law(k: int, j: int) -> Fraction:
    """P(T_k = 2 j) = C(j-1, k-1) / 2**j, exactly."""
    if k < 1 or j < k:
        return Fraction(0)
    return Fraction(math.comb(j - 1, k - 1), 2**j)


def walk_mgf(u: float, n: int) -> float:
    """E exp(u S_n) = cosh(u)**n."""
    return math.cosh(u) ** n


def tau_mgf(u: float) -> float:
    """E exp(u tau) = 1 / (2 exp(-2u) - 1), finite for u < log(sqrt 2)."""
    if u >= LOG_SQRT2:
        raise ValueError("tau mgf diverges for u >= log sqrt 2")
    return 1.0 / (2.0 * math.exp(-2.0 * u) - 1.0)


def waiting_sum_mgf(u: float, k: int) -> float:
    """E exp(u T_k) = (2 exp(-2u) - 1)**-k for u < log(sqrt 2)."""
    return tau_mgf(u) ** k


def walk_tail_bound(n: int, t: float) -> float:
    """Bernstein-type bound P(|S_n| >= t) <= 2 * 2**n * exp(-t)."""
    return 2.0 * (2.0**n) * math.exp(-t)


def waiting_sum_tail_bound(k: int, t: float) -> float:
    """P(|T_k - 4k| / sqrt(8) >= t) <= 2 * 2**k * exp(-t/2)."""
    return 2.0 * (2.0**k) * math.exp(-t / 2.0)


def max_deviation_bound(N: int, C: float):
    """Threshold and union bound for the running maximum of N normals.

    For any sequence Z_1..Z_N with the standard normal tail bound,
    P(max |Z_j| >= sqrt(2 C N' log N')) <= 2 N ** (1 - C) where
    N' = max(N, 3).  Returns (threshold, probability_bound).
    """
    if C <= 1:
        raise ValueError("C must exceed 1")
    threshold = math.sqrt(2.0 * C * N * math.log(N))
    return threshold, 2.0 * N ** (1.0 - C)
