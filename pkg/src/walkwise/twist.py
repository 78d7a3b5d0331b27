"""Twisting coarse walks into fine ones, level by level.

Level m is a walk with steps X_m(1), X_m(2), ... read from stream m of a
StepSource.  Its bridge structure comes from the pair grid: T_m(k) is
the k-th time the walk moves by +-2 over a non-overlapping step pair.
The twist replaces the raw steps on bridge k by their negatives exactly
when the raw bridge increment disagrees with 2 * Xtw_{m-1}(k), where
Xtw_{m-1} is the twisted step sequence one level down.  After twisting,

    Stw_m(T_m(k)) = 2 * Stw_{m-1}(k)   for every k,

so each level is a 2x-refined copy of the one below, anchored at its
bridge ends.  Twisting flips whole pairs, so the stopping times of the
twisted walk are the raw T_m(k); nothing about the bridge grid moves.

Implementation notes.  Steps are held as bits (0/1 for -1/+1) because
the twist is then a per-bridge XOR: flipping a bridge XORs its bits
with 1, and the flip pattern expands to step resolution with a single
cumulative-XOR scan.  That, plus processing in bounded batches, is what
lets level 14 (about 2.7e8 steps) build in seconds in a few hundred MB.
Levels extend lazily: asking for more bridges at level m pulls exactly
the prefix of level m-1 it needs, recursively, and a level extended
later continues its counter-based stream bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InsufficientInputError
from .source import StepSource
from .walk import waiting_times

_MIN_RAW_BLOCK = 256
_MAX_RAW_BLOCK = 1 << 25
_MAX_PAIR_BATCH = 1 << 24


@dataclass
class TwistedLevel:
    """Snapshot of one built level.

    steps are the twisted +-1 steps up to the last complete bridge,
    T the bridge stopping times, sums the twisted partial sums
    S_0..S_len(steps) (present when the stack kept them).
    """

    m: int
    steps: np.ndarray
    T: np.ndarray | None
    sums: np.ndarray | None


def twist_bridges(prev_steps, raw_steps, needed_k: int | None = None):
    """Reference twist of one level: pure, array-in/array-out.

    Twists the bridges of raw_steps against the coarse steps
    prev_steps; bridge k is negated iff its raw increment differs from
    2 * prev_steps[k-1].  Returns (twisted_steps, T, flipped) covering
    the first needed_k bridges (all complete ones if None).  Raises
    InsufficientInputError if prev_steps is too short.

    This is the clarity-first implementation used by tests and small
    exhaustive checks; LevelStack implements the same map in batches.
    """
    raw = np.asarray(raw_steps, dtype=np.int8)
    prev = np.asarray(prev_steps, dtype=np.int8)
    wt = waiting_times(raw)
    k = wt.T.size if needed_k is None else int(needed_k)
    if k > wt.T.size:
        raise InsufficientInputError("complete bridges", k, int(wt.T.size))
    if k > prev.size:
        raise InsufficientInputError("coarse steps", k, int(prev.size))
    T = wt.T[:k]
    flipped = wt.exits[:k] != 2 * prev[:k].astype(np.int64)
    end = int(T[-1]) if k else 0
    mult = np.repeat(np.where(flipped, -1, 1).astype(np.int8), np.diff(T, prepend=0))
    return raw[:end] * mult, T.copy(), flipped


class _Level:
    """Mutable per-level build state (bits twisted up to twlen)."""

    __slots__ = (
        "m",
        "bits",
        "nbits",
        "npairs",
        "nbridges",
        "twlen",
        "T",
        "sums",
        "keep_T",
        "keep_sums",
        "cap",
    )

    def __init__(self, m: int, cap: int, keep_T: bool, keep_sums: bool, hint: int):
        self.m = m
        self.bits = np.empty(max(hint, _MIN_RAW_BLOCK), dtype=np.uint8)
        self.nbits = 0
        self.npairs = 0
        self.nbridges = 0
        self.twlen = 0
        self.keep_T = keep_T
        self.keep_sums = keep_sums
        self.T = np.empty(max(hint // 4, 64), dtype=np.int64) if keep_T else None
        if keep_sums:
            self.sums = np.empty(max(hint, _MIN_RAW_BLOCK) + 1, dtype=np.int32)
            self.sums[0] = 0
        else:
            self.sums = None
        self.cap = cap


def _grown(arr: np.ndarray, need: int) -> np.ndarray:
    if arr.size >= need:
        return arr
    new = np.empty(max(need, int(arr.size * 1.6) + 64), dtype=arr.dtype)
    new[: arr.size] = arr
    return new


class LevelStack:
    """Lazily built hierarchy of twisted levels sharing one seed.

    Parameters
    ----------
    source : StepSource or int
        Step streams (an int is taken as a master seed).
    n_max : int
        Deepest level the stack will hold.
    K : float
        Horizon in time units; sets per-level safety caps 16 * K * 4**m
        and preallocation hints.
    keep_T, keep_sums : 'all', 'none', or set of levels
        Which levels retain stopping times / partial sums.  Sums cost
        4 bytes per step, T eight bytes per bridge; big-n ensemble runs
        keep only what they read back.
    lean : bool
        When True, preallocation assumes ~K * 4**m steps per level
        (demand-driven sizing); when False it assumes the full horizon
        policy of ~4 K * 4**m.
    """

    def __init__(self, source, n_max: int, K: float = 1.0, *,
                 keep_T="all", keep_sums="all", lean: bool = False):
        if not isinstance(source, StepSource):
            source = StepSource(source)
        if n_max < 0:
            raise ValueError("n_max must be nonnegative")
        if K <= 0:
            raise ValueError("K must be positive")
        self.source = source
        self.n_max = int(n_max)
        self.K = float(K)
        self.lean = bool(lean)
        self._keep_T = keep_T
        self._keep_sums = keep_sums
        self.levels: list[_Level] = [self._new_level(m) for m in range(n_max + 1)]

    def _kept(self, flag, m: int) -> bool:
        if flag == "all":
            return True
        if flag == "none":
            return False
        return m in flag

    def _new_level(self, m: int) -> _Level:
        expect = self.K * 4.0**m * (1.08 if self.lean else 4.2)
        hint = int(min(expect, 2.0**40)) + _MIN_RAW_BLOCK
        cap = int(16.0 * self.K * 4.0**m) + 2 * _MIN_RAW_BLOCK
        return _Level(
            m,
            cap,
            self._kept(self._keep_T, m),
            self._kept(self._keep_sums, m),
            hint,
        )

    # -- raw stream ----------------------------------------------------

    def _extend_raw(self, lvl: _Level, target_bits: int):
        """Grow the raw bit stream of lvl to at least target_bits."""
        if target_bits <= lvl.nbits:
            return
        if target_bits > lvl.cap:
            raise CapacityError(lvl.m, target_bits, lvl.cap)
        w_have = lvl.nbits // 64
        w_need = -(-target_bits // 64)
        new_bits = (w_need - w_have) * 64
        lvl.bits = _grown(lvl.bits, w_need * 64)
        words = self.source.words(lvl.m, w_have, w_need - w_have)
        unpacked = np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")
        lvl.bits[lvl.nbits : lvl.nbits + new_bits] = unpacked
        lvl.nbits += new_bits

    # -- twisted prefix ------------------------------------------------

    def ensure_twisted(self, m: int, n_steps: int):
        """Make the twisted prefix of level m at least n_steps long."""
        lvl = self.levels[m]
        if m == 0:
            if n_steps > lvl.twlen:
                self._extend_raw(lvl, n_steps)
                self._account(lvl, lvl.twlen, lvl.nbits)
                lvl.twlen = lvl.nbits
            return
        while lvl.twlen < n_steps:
            self._advance(lvl, twlen_target=n_steps)

    def ensure_bridges(self, m: int, n_bridges: int):
        """Make level m have at least n_bridges complete bridges."""
        if m == 0:
            raise ValueError("level 0 has no bridge structure in the stack")
        lvl = self.levels[m]
        while lvl.nbridges < n_bridges:
            self._advance(lvl, bridge_target=n_bridges)

    def _advance(self, lvl: _Level, *, twlen_target: int = 0, bridge_target: int = 0):
        """Scan one batch of pairs, twist any bridges found."""
        scan_end = lvl.nbits // 2
        if lvl.npairs >= scan_end:
            # out of raw pairs: extend by remaining demand plus slack
            if bridge_target:
                deficit = 4 * (bridge_target - lvl.nbridges)
            else:
                deficit = twlen_target - lvl.twlen
            block = min(max(deficit + deficit // 8 + _MIN_RAW_BLOCK, _MIN_RAW_BLOCK),
                        _MAX_RAW_BLOCK)
            self._extend_raw(lvl, lvl.nbits + block)
            scan_end = lvl.nbits // 2
        scan_end = min(scan_end, lvl.npairs + _MAX_PAIR_BATCH)
        seg = lvl.bits[2 * lvl.npairs : 2 * scan_end]
        px = seg[0::2] ^ seg[1::2]
        ch = np.flatnonzero(px == 0).astype(np.int64)
        if ch.size == 0:
            lvl.npairs = scan_end
            return
        ch += lvl.npairs
        lvl.npairs = scan_end
        T_new = (ch + 1) * 2
        nb_new = int(ch.size)
        k0 = lvl.nbridges
        # coarse steps this batch twists against
        self.ensure_twisted(lvl.m - 1, k0 + nb_new)
        prev_bits = self.levels[lvl.m - 1].bits[k0 : k0 + nb_new]
        exits = lvl.bits[T_new - 1]  # raw exit bits, read before twisting
        flips = exits ^ prev_bits
        span0 = lvl.twlen
        span1 = int(T_new[-1])
        toggles = np.zeros(span1 - span0, dtype=np.uint8)
        starts = np.empty(nb_new, dtype=np.int64)
        starts[0] = span0
        starts[1:] = T_new[:-1]
        tvals = np.empty(nb_new, dtype=np.uint8)
        tvals[0] = flips[0]
        np.bitwise_xor(flips[1:], flips[:-1], out=tvals[1:])
        toggles[starts - span0] = tvals
        flip_expand = np.bitwise_xor.accumulate(toggles)
        np.bitwise_xor(lvl.bits[span0:span1], flip_expand,
                       out=lvl.bits[span0:span1])
        if lvl.keep_T:
            lvl.T = _grown(lvl.T, k0 + nb_new)
            lvl.T[k0 : k0 + nb_new] = T_new
        lvl.nbridges = k0 + nb_new
        self._account(lvl, span0, span1)
        lvl.twlen = span1

    def _account(self, lvl: _Level, span0: int, span1: int):
        """Extend cached partial sums over a freshly twisted span."""
        if not lvl.keep_sums or span1 == span0:
            return
        lvl.sums = _grown(lvl.sums, span1 + 1)
        seg = lvl.bits[span0:span1].astype(np.int8)
        seg <<= 1
        seg -= 1
        np.cumsum(seg, dtype=np.int32, out=lvl.sums[span0 + 1 : span1 + 1])
        if span0:
            lvl.sums[span0 + 1 : span1 + 1] += lvl.sums[span0]

    # -- targets -------------------------------------------------------

    def bridge_target(self, m: int) -> int:
        """Bridges level m generates to cover horizon K: 4*ceil(K*4**(m-1))."""
        return 4 * int(-(-self.K * 4.0 ** (m - 1) // 1))

    def grid_points(self, m: int) -> int:
        """Number of complete grid steps of level m inside [0, K]."""
        return int(self.K * 4.0**m)

    def build(self, n: int | None = None):
        """Build levels 0..n.

        Full mode follows the horizon policy (every level generates
        until T_m(4 ceil(K 4**(m-1)))); lean mode generates only the
        ~K * 4**m steps each level's grid needs, relying on lazy
        extension for anything more.  Either way the streams are
        position-addressed, so both modes agree bit-for-bit wherever
        both are defined.
        """
        n = self.n_max if n is None else int(n)
        if self.lean:
            self.ensure_twisted(n, self.grid_points(n))
        else:
            self.ensure_twisted(0, self.bridge_target(1))
            for m in range(1, n + 1):
                self.ensure_bridges(m, self.bridge_target(m))
                self.ensure_twisted(m, self.grid_points(m))
        return self

    # -- views ---------------------------------------------------------

    def twisted_steps(self, m: int, count: int | None = None) -> np.ndarray:
        """Twisted +-1 steps of level m (first count of them)."""
        lvl = self.levels[m]
        count = lvl.twlen if count is None else int(count)
        if count > lvl.twlen:
            raise InsufficientInputError(f"twisted steps at level {m}", count, lvl.twlen)
        out = lvl.bits[:count].astype(np.int8)
        out <<= 1
        out -= 1
        return out

    def stopping_times(self, m: int) -> np.ndarray:
        lvl = self.levels[m]
        if lvl.T is None:
            raise InsufficientInputError(f"retained T at level {m}", 1, 0)
        return lvl.T[: lvl.nbridges]

    def sums(self, m: int) -> np.ndarray:
        """Twisted partial sums S_0..S_twlen of level m."""
        lvl = self.levels[m]
        if lvl.sums is None:
            raise InsufficientInputError(f"retained sums at level {m}", 1, 0)
        return lvl.sums[: lvl.twlen + 1]

    def grid_values(self, m: int, K: float | None = None) -> np.ndarray:
        """Shrunk-walk numerators on the level-m grid covering [0, K].

        Entry r is the integer S with B_m(r * 4**-m) = S * 2**-m.
        """
        R = int((self.K if K is None else K) * 4.0**m)
        self.ensure_twisted(m, R)
        return self.sums(m)[: R + 1]

    def snapshot(self, m: int) -> TwistedLevel:
        lvl = self.levels[m]
        return TwistedLevel(
            m=m,
            steps=self.twisted_steps(m),
            T=None if lvl.T is None else lvl.T[: lvl.nbridges].copy(),
            sums=None if lvl.sums is None else lvl.sums[: lvl.twlen + 1].copy(),
        )


def check_refinement(stack: LevelStack, K: float | None = None, n: int | None = None):
    """Verify Stw_m(T_m(k)) = 2 Stw_{m-1}(k) exactly across the stack.

    Checks every complete bridge of every level m in 1..n whose
    stopping time lies inside the built horizon.  Returns (ok, detail)
    where detail names the first violation if any.
    """
    n = stack.n_max if n is None else n
    for m in range(1, n + 1):
        lvl = stack.levels[m]
        if lvl.T is None or lvl.sums is None or stack.levels[m - 1].sums is None:
            raise InsufficientInputError(f"retained T and sums at level {m}", 1, 0)
        k_max = int(lvl.nbridges)
        if k_max == 0:
            continue
        T = lvl.T[:k_max]
        fine = lvl.sums[T]
        prev = stack.levels[m - 1]
        if prev.twlen < k_max:
            k_max = prev.twlen
            T = T[:k_max]
            fine = fine[:k_max]
        coarse = prev.sums[1 : k_max + 1]
        bad = np.flatnonzero(fine != 2 * coarse.astype(np.int64))
        if bad.size:
            k = int(bad[0])
            return False, {
                "level": m,
                "k": k + 1,
                "fine": int(fine[k]),
                "coarse": int(coarse[k]),
            }
    return True, None


def pattern_counts(seed_start: int, n_seeds: int, m: int, pattern_len: int = 6) -> np.ndarray:
    """Histogram of the first pattern_len twisted steps of level m.

    Builds an independent stack per master seed and tabulates the
    pattern of signs as an integer in [0, 2**pattern_len).  If the
    twisted walk at every level is again a fair walk, patterns are
    uniform; the chi-square suite in diagnostics tests exactly that.
    """
    counts = np.zeros(2**pattern_len, dtype=np.int64)
    weights = 1 << np.arange(pattern_len)[::-1]
    for s in range(seed_start, seed_start + n_seeds):
        stack = LevelStack(s, m, K=pattern_len * 4.0**-m + 4.0**-m,
                           keep_T="none", keep_sums="none", lean=True)
        stack.ensure_twisted(m, pattern_len)
        bits = stack.levels[m].bits[:pattern_len]
        counts[int(bits @ weights)] += 1
    return counts
