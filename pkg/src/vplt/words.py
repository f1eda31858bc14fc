"""Weighted letters, stream parsing, balance checking and the samplers.

Samplers take a ``coin(num, den)`` callable returning True with probability
``num / den``.  :func:`make_coin` builds one from a seeded PCG64 generator
using exact integer draws; tests pass scripted coins to enumerate every
branch of the randomness.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .automata import NEUTRAL, POP, PUSH, Relation, Vpa

Coin = Callable[[int, int], bool]


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def make_coin(rng: np.random.Generator) -> Coin:
    def coin(num: int, den: int) -> bool:
        return int(rng.integers(den)) < num

    return coin


class Letter:
    """One letter of a weighted word.

    ``height`` follows the usual convention: the stack height before a push,
    after a pop, and the current height for neutral letters.  ``pos`` is the
    stream index of the first base letter covered, ``end`` the index just past
    the last one; relation letters may carry an approximate ``pos`` when their
    start is not known exactly, but ``end`` is always exact.
    """

    __slots__ = ("sym", "kind", "weight", "height", "pos", "end", "rel", "depth")

    def __init__(self, sym, kind, weight=1, height=0, pos=0, end=None, rel=None, depth=0):
        self.sym = sym
        self.kind = kind
        self.weight = weight
        self.height = height
        self.pos = pos
        self.end = pos + weight if end is None else end
        self.rel = rel
        self.depth = depth

    @classmethod
    def relation(cls, rel: Relation, weight: int, height: int, pos: int, end: int, depth: int) -> "Letter":
        return cls(None, NEUTRAL, weight, height, pos, end, rel, depth)

    @property
    def pre_height(self) -> int:
        return self.height + 1 if self.kind == POP else self.height

    def key(self):
        return (self.kind, self.sym if self.rel is None else self.rel)

    def __repr__(self) -> str:
        name = self.sym if self.rel is None else f"R{self.rel.pairs()}"
        return f"<{name} w={self.weight} h={self.height} @{self.pos}>"


@dataclass
class WeightedWord:
    letters: list[Letter]

    @property
    def total_weight(self) -> int:
        return sum(x.weight for x in self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


def parse_stream(text: str) -> tuple[list[str], int | None]:
    """Whitespace separated tokens with an optional ``%n <length>`` header."""
    declared = None
    tokens: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("%n"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise ValueError(f"malformed length header: {line!r}")
            declared = int(parts[1])
            continue
        tokens.extend(line.split())
    return tokens, declared


def format_stream(tokens: Sequence[str], header: bool = True) -> str:
    body = " ".join(tokens)
    return f"%n {len(tokens)}\n{body}\n" if header else body + "\n"


def letters_of(vpa: Vpa, tokens: Iterable[str], start_height: int = 0) -> Iterator[Letter]:
    """Base letters with heights and positions; heights may go negative."""
    h = start_height
    kind_of = vpa.alphabet.kinds
    for pos, tok in enumerate(tokens):
        try:
            kind = kind_of[tok]
        except KeyError:
            raise ValueError(f"symbol {tok!r} at position {pos} is not in the alphabet") from None
        if kind == PUSH:
            yield Letter(tok, kind, 1, h, pos)
            h += 1
        elif kind == POP:
            h -= 1
            yield Letter(tok, kind, 1, h, pos)
        else:
            yield Letter(tok, kind, 1, h, pos)


def weighted_word(vpa: Vpa, tokens: Iterable[str], weights: Sequence[int] | None = None) -> WeightedWord:
    letters = list(letters_of(vpa, tokens))
    if weights is not None:
        pos = 0
        for x, w in zip(letters, weights, strict=True):
            x.weight, x.pos, x.end = w, pos, pos + w
            pos += w
    return WeightedWord(letters)


class BalanceChecker:
    """Online balance check holding a single integer.

    The height goes negative at the first violating pop and stays there.
    """

    __slots__ = ("height",)

    def __init__(self):
        self.height = 0

    def feed(self, kind: int) -> None:
        if self.height < 0:
            return
        if kind == PUSH:
            self.height += 1
        elif kind == POP:
            self.height -= 1

    @property
    def balanced(self) -> bool:
        return self.height == 0


def check_balanced(kinds: Iterable[int]) -> bool:
    checker = BalanceChecker()
    for k in kinds:
        checker.feed(k)
    return checker.balanced


def reservoir_letters(stream: Iterable, t: int, coin: Coin, weight=lambda x: x.weight) -> list:
    """Weighted reservoir sampling with ``t`` independent cells."""
    if t < 1:
        raise ValueError("t must be positive")
    it = iter(stream)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("cannot sample from an empty stream") from None
    sigma = weight(first)
    cells = [first] * t
    for a in it:
        w = weight(a)
        sigma += w
        for i in range(t):
            if coin(w, sigma):
                cells[i] = a
    return cells


def k_factor_at(u: Sequence, i: int, k: int, weight=lambda x: x.weight) -> tuple[int, int]:
    """Index range ``[i, i + l]`` of the k-factor starting at ``i`` (inclusive bounds).

    ``l`` is the least offset with total weight at least ``k``, or the end of
    the word when no such offset exists.
    """
    if not 0 <= i < len(u):
        raise IndexError(i)
    total = 0
    for j in range(i, len(u)):
        total += weight(u[j])
        if total >= k:
            return i, j
    return i, len(u) - 1


# --- W_k traces ---------------------------------------------------------------


class Trace:
    """The fragment grown from one sampled start letter.

    It holds the ``k + 1`` letters starting at the sample and, when pushes
    occur among them, the pop window: the ``2k + 1`` letters of the pop block
    ending ``k`` neutrals after the pop matching the first push, plus the last
    ``k`` letters of the neutral run following that pop.
    """

    __slots__ = ("start", "factor", "lo", "window", "after", "tail", "closed")

    def __init__(self, start: Letter):
        self.start = start
        self.factor = [start]
        self.lo = start.height if start.kind == PUSH else None
        self.window: list[Letter] | None = None
        self.after = 0
        self.tail: deque | None = None
        self.closed = False

    @property
    def pushes_pending(self) -> bool:
        return self.lo is not None and self.window is None

    def letters(self) -> list[Letter]:
        out = {x.end: x for x in self.factor}
        for part in (self.window or (), self.tail or ()):
            for x in part:
                out.setdefault(x.end, x)
        return [out[e] for e in sorted(out)]

    def size(self) -> int:
        return len(self.factor) + len(self.window or ()) + len(self.tail or ())

    def __repr__(self) -> str:
        return f"Trace({self.factor!r}, window={self.window!r}, tail={list(self.tail or ())!r})"


class TraceBook:
    """Feeds the letters of one unfinished peak to the traces that need them."""

    __slots__ = ("k", "buffer", "growing", "waiting", "trailing", "seen_pop")

    def __init__(self, k: int):
        self.k = k
        self.buffer: deque = deque(maxlen=2 * k + 1)
        self.growing: list[Trace] = []
        self.waiting: dict[int, list[Trace]] = {}
        self.trailing: list[Trace] = []
        self.seen_pop = False

    def start(self, letter: Letter) -> Trace:
        """Create the trace of a fresh sample at ``letter``; call before :meth:`feed`."""
        tr = Trace(letter)
        if self.k > 0:
            self.growing.append(tr)
        if tr.lo is not None:
            self.waiting.setdefault(tr.lo, []).append(tr)
        return tr

    def feed(self, letter: Letter, fresh: Trace | None = None) -> None:
        """Process one letter; ``fresh`` is a trace started at this very letter."""
        k = self.k
        if self.growing:
            keep = []
            for tr in self.growing:
                if tr is fresh:
                    keep.append(tr)
                    continue
                tr.factor.append(letter)
                if letter.kind == PUSH and tr.lo is None:
                    tr.lo = letter.height
                    self.waiting.setdefault(tr.lo, []).append(tr)
                if len(tr.factor) <= k:
                    keep.append(tr)
            self.growing = keep
        if letter.kind == POP:
            self.seen_pop = True
        if self.seen_pop:
            self.buffer.append(letter)
        if self.trailing:
            keep = []
            for tr in self.trailing:
                if letter.kind == NEUTRAL:
                    if tr.after < k:
                        tr.after += 1
                        tr.window.append(letter)
                        if len(tr.window) > 2 * k + 1:
                            del tr.window[0]
                    tr.tail.append(letter)
                    keep.append(tr)
                else:
                    tr.closed = True
            self.trailing = keep
        if letter.kind == POP:
            done = self.waiting.pop(letter.height, None)
            if done:
                for tr in done:
                    tr.window = list(self.buffer)
                    tr.tail = deque(maxlen=k)
                    self.trailing.append(tr)

    def close(self) -> None:
        for tr in self.trailing:
            tr.closed = True
        self.trailing = []
        self.growing = []

    def pause(self) -> None:
        """The peak is interrupted by a push after its pops: trailing runs end here."""
        for tr in self.trailing:
            tr.closed = True
        self.trailing = []

    def retain(self, live: set[int]) -> None:
        """Forget traces whose ``id`` is not in ``live``."""
        self.growing = [t for t in self.growing if id(t) in live]
        self.trailing = [t for t in self.trailing if id(t) in live]
        waiting = {}
        for h, lst in self.waiting.items():
            lst = [t for t in lst if id(t) in live]
            if lst:
                waiting[h] = lst
        self.waiting = waiting

    def absorb(self, other: "TraceBook") -> None:
        """Take over the pending traces of an earlier peak that precedes this one."""
        self.growing = other.growing + self.growing
        for h, lst in other.waiting.items():
            self.waiting.setdefault(h, []).extend(lst)


@dataclass(frozen=True)
class SampleFragment:
    """Letters known around one sample: the factor and, if any, the pop window."""

    factor: tuple[Letter, ...]
    window: tuple[Letter, ...] = ()

    @property
    def anchor(self) -> tuple[int, int]:
        first = self.factor[0]
        return first.pos, first.height

    def letters(self) -> list[Letter]:
        out = {x.end: x for x in self.factor}
        for x in self.window:
            out.setdefault(x.end, x)
        return [out[e] for e in sorted(out)]

    @classmethod
    def of(cls, trace: Trace) -> "SampleFragment":
        window = {x.end: x for x in (trace.window or ())}
        for x in trace.tail or ():
            window.setdefault(x.end, x)
        return cls(tuple(trace.factor), tuple(window[e] for e in sorted(window)))


class WkSampler:
    """Streaming sampler for W_k on a word in Prefix(Lambda_Q).

    Keeps one reservoir candidate and only that candidate's trace, plus the
    ``2k + 1`` most recent pop-block letters.
    """

    def __init__(self, k: int, coin: Coin):
        self.k = k
        self.coin = coin
        self.book = TraceBook(k)
        self.sigma = 0
        self.trace: Trace | None = None

    def feed(self, letter: Letter) -> None:
        if self.book.seen_pop and letter.kind == PUSH:
            raise ValueError("input is not a prefix of a peak (push after pop)")
        self.sigma += letter.weight
        fresh = None
        if self.trace is None or self.coin(letter.weight, self.sigma):
            book = self.book
            book.growing, book.trailing, book.waiting = [], [], {}
            fresh = self.trace = book.start(letter)
        self.book.feed(letter, fresh)

    def result(self) -> SampleFragment:
        if self.trace is None:
            raise ValueError("cannot sample from an empty stream")
        self.book.close()
        return SampleFragment.of(self.trace)


def peak_sample_wk(letters: Iterable[Letter], k: int, coin: Coin) -> SampleFragment:
    sampler = WkSampler(k, coin)
    for x in letters:
        sampler.feed(x)
    return sampler.result()
