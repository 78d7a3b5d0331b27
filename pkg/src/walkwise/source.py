"""Deterministic, position-addressable streams of fair +-1 steps.

Every random object in this package is a function of a single master seed.
Each construction level m gets its own stream, and positions within a
stream are random access: asking for step k of stream m always returns
the same value, no matter how much of the stream was generated before or
in what order.  That property is what makes lazy horizon extension and
reproducible reruns cheap, so it is load-bearing, not a convenience.

The implementation rides on Philox, a counter-based generator: word w of
stream (seed, m) is word w of the keyed Philox sequence, and step k is
bit (k - 1) % 64 of word (k - 1) // 64.  Keys are derived with
numpy's SeedSequence, whose hashing is documented as stable.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox, SeedSequence

WORD_BITS = 64
_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value


class StepSource:
    """Stream of fair +-1 steps for each level m, addressable by index.

    Parameters
    ----------
    master_seed : int
        Nonnegative integer seeding the whole hierarchy.
    """

    def __init__(self, master_seed: int):
        master_seed = int(master_seed)
        if master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        self.master_seed = master_seed
        self._keys: dict[int, np.ndarray] = {}

    def __repr__(self) -> str:
        return f"StepSource(master_seed={self.master_seed})"

    def _key(self, m: int) -> np.ndarray:
        key = self._keys.get(m)
        if key is None:
            key = SeedSequence([self.master_seed, int(m)]).generate_state(2, np.uint64)
            self._keys[m] = key
        return key

    def words(self, m: int, w_from: int, n_words: int) -> np.ndarray:
        """Raw 64-bit words [w_from, w_from + n_words) of stream m."""
        if w_from < 0 or n_words < 0:
            raise ValueError("word range must be nonnegative")
        if n_words == 0:
            return np.empty(0, dtype=np.uint64)
        block, offset = divmod(w_from, _WORDS_PER_BLOCK)
        gen = Philox(key=self._key(m), counter=block)
        raw = gen.random_raw(offset + n_words)
        return raw[offset:]

    def bits(self, m: int, k_from: int, k_to: int) -> np.ndarray:
        """Bits for steps k_from..k_to inclusive (1-based), as uint8 0/1."""
        if k_from < 1 or k_to < k_from - 1:
            raise ValueError("need 1 <= k_from <= k_to + 1")
        count = k_to - k_from + 1
        if count == 0:
            return np.empty(0, dtype=np.uint8)
        w0 = (k_from - 1) // WORD_BITS
        w1 = (k_to - 1) // WORD_BITS
        words = self.words(m, w0, w1 - w0 + 1)
        # force little-endian byte order so bit addressing is platform-stable
        unpacked = np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")
        lo = (k_from - 1) - w0 * WORD_BITS
        return unpacked[lo : lo + count]

    def steps(self, m: int, k_from: int, k_to: int) -> np.ndarray:
        """Steps k_from..k_to inclusive as an int8 array of +-1 values."""
        b = self.bits(m, k_from, k_to)
        out = b.astype(np.int8)
        out <<= 1
        out -= 1
        return out

    def step(self, m: int, k: int) -> int:
        """Single step X_m(k) in {-1, +1}."""
        return int(self.steps(m, k, k)[0])
