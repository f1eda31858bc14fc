"""Suffix decompositions with t letter samples per suffix.

Entries are ordered from the longest suffix (the whole word) to the shortest
(the last letter).  Weights are stored as offsets against two running totals
so appending a letter costs O(1) before simplification:

    low_l  = total_low  - base_low[l]
    high_l = total_high - base_high[l]

In the exact variant low and high coincide.  Samples are integer ids kept in
an ``(s, t)`` array; the caller decides what an id means.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

Coin = Callable[[int, int], bool]


def size_bound(total_weight: int, alpha: Fraction) -> int:
    """``1 + 2 * ceil(log |u| / log alpha)``."""
    if total_weight <= 1:
        return 1
    return 1 + 2 * math.ceil(math.log(total_weight) / math.log(float(alpha)) - 1e-12)


class SuffixSampling:
    __slots__ = ("t", "alpha", "total_low", "total_high", "rng", "coin", "_n", "_bl", "_bh", "_cells", "_meta")

    def __init__(
        self,
        t: int,
        alpha: Fraction,
        rng: np.random.Generator | None = None,
        coin: Coin | None = None,
        meta_width: int = 0,
    ):
        alpha = Fraction(alpha)
        if alpha <= 1:
            raise ValueError("alpha must be greater than 1")
        if t < 0:
            raise ValueError("t must be nonnegative")
        self.t = t
        self.alpha = alpha
        self.total_low = 0
        self.total_high = 0
        self.rng = rng
        self.coin = coin
        # rows [0, _n) of the buffers are live; capacity doubles on demand
        self._n = 0
        self._bl = np.zeros(8, dtype=np.int64)
        self._bh = np.zeros(8, dtype=np.int64)
        self._cells = np.zeros((8, t), dtype=np.int64)
        # per-entry integers carried along by the caller (e.g. start heights)
        self._meta = np.zeros((8, meta_width), dtype=np.int64)

    def _grow(self, need: int) -> None:
        cap = len(self._bl)
        if need <= cap:
            return
        cap = max(need, 2 * cap)
        for name in ("_bl", "_bh", "_cells", "_meta"):
            old = getattr(self, name)
            buf = np.zeros((cap,) + old.shape[1:], dtype=np.int64)
            buf[: self._n] = old[: self._n]
            setattr(self, name, buf)

    def _set(self, name: str, rows: np.ndarray) -> None:
        n = len(rows)
        if n != self._n:
            raise ValueError("row count mismatch")
        getattr(self, name)[:n] = rows

    def _load(self, bl, bh, cells, meta) -> None:
        n = len(bl)
        self._n = 0
        self._grow(n)
        self._n = n
        self._bl[:n], self._bh[:n], self._cells[:n], self._meta[:n] = bl, bh, cells, meta

    # -- views ------------------------------------------------------------------

    @property
    def base_low(self) -> np.ndarray:
        return self._bl[: self._n]

    @property
    def base_high(self) -> np.ndarray:
        return self._bh[: self._n]

    @property
    def cells(self) -> np.ndarray:
        return self._cells[: self._n]

    @cells.setter
    def cells(self, rows: np.ndarray) -> None:
        self._set("_cells", rows)

    @property
    def meta(self) -> np.ndarray:
        return self._meta[: self._n]

    @property
    def size(self) -> int:
        return self._n

    def __len__(self) -> int:
        return self._n

    def lows(self) -> np.ndarray:
        return self.total_low - self.base_low

    def highs(self) -> np.ndarray:
        return self.total_high - self.base_high

    @property
    def weight_low(self) -> int:
        return int(self.total_low - self._bl[0]) if self._n else 0

    @property
    def weight_high(self) -> int:
        return int(self.total_high - self._bh[0]) if self._n else 0

    def entry(self, i: int) -> tuple[int, int, np.ndarray]:
        return int(self.total_low - self.base_low[i]), int(self.total_high - self.base_high[i]), self.cells[i]

    def copy(self) -> "SuffixSampling":
        return self.head(self._n)

    def head(self, count: int) -> "SuffixSampling":
        """The ``count`` longest entries (a sampling of a word with the same start)."""
        out = SuffixSampling(self.t, self.alpha, self.rng, self.coin, self._meta.shape[1])
        out.total_low, out.total_high = self.total_low, self.total_high
        count = min(count, self._n)
        out._load(self._bl[:count], self._bh[:count], self._cells[:count], self._meta[:count])
        return out

    def to_json(self, label: Callable[[int], object] = int) -> dict:
        return {
            "alpha": str(self.alpha),
            "t": self.t,
            "low": [int(x) for x in self.lows()],
            "high": [int(x) for x in self.highs()],
            "samples": [[label(int(c)) for c in row] for row in self.cells],
        }

    # -- randomness -------------------------------------------------------------

    def _replace_mask(self, highs: np.ndarray, w: int) -> np.ndarray:
        """Independent Bernoulli(w / (high_l + w)) per cell.

        A coin callback gets exact rationals.  The generator path draws one
        62-bit integer per cell against ``floor(w 2^62 / den)``, computed
        exactly in int64, so each probability is off by less than 2^-62.
        """
        s, t = self.cells.shape
        if self.coin is not None:
            out = np.zeros((s, t), dtype=bool)
            for i in range(s):
                den = int(highs[i]) + w
                for j in range(t):
                    out[i, j] = self.coin(w, den)
            return out
        if self.rng is None:
            raise ValueError("a random generator or coin is required")
        dens = (highs + w).astype(np.int64)
        q, r = np.divmod(np.int64(1 << 62), dens)
        thresholds = q * w + (r * w) // dens
        draws = (self.rng.bit_generator.random_raw((s, t)) >> np.uint64(2)).view(np.int64)
        return draws < thresholds[:, None]

    # -- operations -------------------------------------------------------------

    def _push_row(self, sample_id: int, weight_low: int, weight_high: int, meta) -> None:
        n = self._n
        self._grow(n + 1)
        self._bl[n] = self.total_low - weight_low
        self._bh[n] = self.total_high - weight_high
        self._cells[n] = sample_id
        if self._meta.shape[1]:
            self._meta[n] = meta
        self._n = n + 1

    def append_letter(self, sample_id: int, weight_low: int, weight_high: int | None = None, meta=()) -> None:
        """Concatenate with the one-letter sampling of a letter, without simplifying."""
        weight_high = weight_low if weight_high is None else weight_high
        if self._n and self.t:
            mask = self._replace_mask(self.highs(), weight_high)
            self.cells[mask] = sample_id
        self.total_low += weight_low
        self.total_high += weight_high
        self._push_row(sample_id, weight_low, weight_high, meta)

    def push_entry(self, sample_id: int, weight_low: int, weight_high: int, meta=()) -> None:
        """Append a shortest suffix of known weight that is already counted in the totals."""
        self._push_row(sample_id, weight_low, weight_high, meta)

    def concatenate(self, other: "SuffixSampling") -> None:
        """In place: ``self`` on u becomes a sampling on u.v.

        Each existing entry keeps each of its samples or takes the matching
        top-level sample of ``other`` with probability |v|_high / (|u^l|_high + |v|_high);
        both weight bounds grow by the corresponding bound of |v|.
        """
        if other.t != self.t or other.alpha != self.alpha:
            raise ValueError("concatenate needs samplings with the same alpha and t")
        if not other.size:
            return
        if not self.size:
            self.total_low, self.total_high = other.total_low, other.total_high
            self._load(other.base_low, other.base_high, other.cells, other.meta)
            return
        v_low, v_high = other.weight_low, other.weight_high
        if self.t:
            mask = self._replace_mask(self.highs(), v_high)
            cells = self.cells
            cells[mask] = np.broadcast_to(other.cells[0], cells.shape)[mask]
        self.total_low += v_low
        self.total_high += v_high
        n, k = self._n, other.size
        self._grow(n + k)
        self._bl[n : n + k] = self.total_low - other.lows()
        self._bh[n : n + k] = self.total_high - other.highs()
        self._cells[n : n + k] = other.cells
        self._meta[n : n + k] = other.meta
        self._n = n + k

    def simplify(self) -> None:
        """Drop suffixes while keeping the decomposition valid.

        Walking from the shortest suffix down, every block of longer suffixes
        with ``high <= alpha * low`` of the current one is reduced to its
        longest member.  Only positions where the block is nonempty need work,
        so they are located first with vectorized comparisons.
        """
        s = self.size
        if s < 3:
            return
        p, q = self.alpha.numerator, self.alpha.denominator
        lows, highs = self.lows(), self.highs()
        scaled_low = p * lows  # alpha * low_l, times q
        scaled_high = q * highs
        # block below l reaches l-2 iff high_{l-2} <= alpha * low_l
        hits = np.nonzero(scaled_high[:-2] <= scaled_low[2:])[0] + 2
        if not len(hits):
            return
        keep = np.ones(s, dtype=bool)
        neg_high = -scaled_high  # nondecreasing
        pos = s - 1
        for l in hits[::-1]:
            l = int(l)
            if l > pos or not keep[l]:
                continue
            # first index m with high_m <= alpha * low_l
            m = int(np.searchsorted(neg_high, -scaled_low[l], side="left"))
            if m < l - 1:
                keep[m + 1 : l] = False
            pos = m
        if not keep.all():
            self._load(self.base_low[keep], self.base_high[keep], self.cells[keep], self.meta[keep])

    def is_valid_decomposition(self) -> bool:
        """Validity check on the stored bounds: big steps only over single entries.

        A step from l to l+1 with ``high_l > alpha * low_{l+1}`` is allowed only
        when the two suffixes differ by one letter, which the bounds cannot show;
        this checks the weaker shape property that the gaps are realizable.
        """
        lows, highs = self.lows(), self.highs()
        return bool(np.all(lows <= highs) and np.all(np.diff(highs) <= 0) and np.all(np.diff(lows) < 0))


def online_suffix_sampling(weights, alpha, t: int = 1, rng=None, coin: Coin | None = None, on_step=None) -> SuffixSampling:
    """Build a sampling letter by letter; sample ids are stream indices."""
    d = SuffixSampling(t, Fraction(alpha), rng, coin)
    for i, w in enumerate(weights):
        d.append_letter(i, int(w))
        d.simplify()
        if on_step is not None:
            on_step(d)
    return d
