"""Approximating the relation of a peak from sampled fragments.

Known letters of the peak are placed on its sliced word, ordered by
``(level, side, position)``.  A backward pass over the slicing automaton
keeps the pair states from which the rest of the sliced word can still reach
a final state; letters whose adjacency is not certified are separated by a
gap that may hold any sliced word (including realizable relation letters).
A true run is never excluded, so the result always contains the exact
relation of the peak.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .automata import NEUTRAL, POP, PUSH, Relation, SlicingNfa, _bits

INF = float("inf")


class FragmentConflict(ValueError):
    """Two fragments disagree on the same letter of the sliced word."""


@dataclass(frozen=True)
class ApproxParams:
    epsilon: Fraction
    eta: Fraction
    d: int
    m: int
    factor: int = 2

    @property
    def k(self) -> int:
        return math.ceil(4 * self.d * self.m / self.epsilon)

    @property
    def t(self) -> int:
        return self.factor * math.ceil(4 * self.d * self.m**3 * math.log2(1 / self.eta) / self.epsilon)

    @property
    def T(self) -> int:
        return 4 * self.k * self.t


def fragment_relation(letters: Sequence[tuple], nfa: SlicingNfa) -> list[int]:
    """Successor masks over pair states for a sequence of sliced letters."""
    n = nfa.size
    cur = [1 << x for x in range(n)]
    for letter in letters:
        succ = nfa.successors(letter)
        nxt = []
        for row in cur:
            acc = 0
            for y in _bits(row):
                acc |= succ[y]
            nxt.append(acc)
        cur = nxt
    return cur


def _pre(succ: list[int], targets: int) -> int:
    out = 0
    for x, s in enumerate(succ):
        if s & targets:
            out |= 1 << x
    return out


class _Slot:
    __slots__ = ("key", "side", "level", "sym", "a", "b", "pos", "end")

    def __repr__(self):
        return f"_Slot({self.key}, {self.sym or (self.a, self.b)})"


def _payload(x):
    return x.rel if x.rel is not None else x.sym


def collect(fragments: Iterable[Iterable], base_height: int, first_pop: float) -> list[_Slot]:
    """Known letters of the sliced word, sorted, with conflicting evidence rejected."""
    slots: dict[tuple, _Slot] = {}
    for frag in fragments:
        for x in frag:
            if x.kind == PUSH or x.kind == POP:
                level = x.height - base_height + 1
                key = (level, 2, 0)
                s = slots.get(key)
                if s is None:
                    s = slots[key] = _Slot()
                    s.key, s.side, s.level, s.sym, s.a, s.b = key, 2, level, None, None, None
                    s.pos = s.end = None
                if x.kind == PUSH:
                    if s.a is not None and s.a[0] != x.sym:
                        raise FragmentConflict(f"level {level}: push {s.a[0]!r} vs {x.sym!r}")
                    s.a = (x.sym, x.pos, x.end)
                else:
                    if s.b is not None and s.b[0] != x.sym:
                        raise FragmentConflict(f"level {level}: pop {s.b[0]!r} vs {x.sym!r}")
                    s.b = (x.sym, x.pos, x.end)
            else:
                level = x.height - base_height + 1
                right = x.end - 1 > first_pop
                key = (level, 1, -x.end) if right else (level, 0, x.end)
                s = slots.get(key)
                if s is None:
                    s = slots[key] = _Slot()
                    s.key, s.side, s.level = key, 1 if right else 0, level
                    s.sym, s.a, s.b = _payload(x), None, None
                    s.pos, s.end = x.pos, x.end
                elif s.sym != _payload(x):
                    raise FragmentConflict(f"letter ending at {x.end}: {s.sym!r} vs {_payload(x)!r}")
                else:
                    s.pos = min(s.pos, x.pos)
    return [slots[k] for k in sorted(slots)]


def _sliced(s: _Slot) -> tuple:
    if s.side == 2:
        return ("P", s.a[0] if s.a else None, s.b[0] if s.b else None)
    return ("L" if s.side == 0 else "R", s.sym)


def _adjacent(x: _Slot, y: _Slot, pairs: dict[int, _Slot], stop: int | None) -> bool:
    """True when ``y`` immediately follows ``x`` in the sliced word.

    Only adjacencies proved by known positions count; anything else is left
    to a gap, which is always sound.
    """
    def push(level):
        p = pairs.get(level)
        return p.a if p is not None else None

    def pop(level):
        p = pairs.get(level)
        return p.b if p is not None else None

    def outer_pop_start(level):
        # where the run after b_level ends: the enclosing pop, or the peak end
        if level == 1:
            return stop
        b = pop(level - 1)
        return b[1] if b is not None else None

    l = x.level
    if x.side == 0:
        a = push(l)
        if y.side == 0:
            return y.level == l and y.pos == x.end
        if y.level != l or a is None or a[1] != x.end:
            return False
        bound = outer_pop_start(l)
        if bound is None:
            return False
        if y.side == 1:
            return y.end == bound
        return y.b is not None and y.b[2] == bound
    if x.side == 1:
        if y.side == 1:
            return y.level == l and x.pos == y.end
        return y.side == 2 and y.level == l and y.b is not None and x.pos == y.b[2]
    # x is a pair
    if x.a is None or y.level != l + 1:
        return False
    if y.side == 0:
        return y.pos == x.a[2]
    nxt = push(l + 1)
    if nxt is None or nxt[1] != x.a[2] or x.b is None:
        return False
    if y.side == 1:
        return y.end == x.b[1]
    return y.b is not None and y.b[2] == x.b[1]


def _is_first(s: _Slot, slots: list[_Slot], start: int | None, stop: int | None) -> bool:
    if start is None:
        return False
    if s.side == 0:
        return s.level == 1 and s.pos == start
    if s.side == 2:
        return s.level == 1 and s.a is not None and s.a[1] == start and s.b is not None and s.b[2] == stop
    # a right letter comes first when the peak opens with its first push
    pair = next((x for x in slots if x.side == 2 and x.level == 1), None)
    return s.level == 1 and s.end == stop and pair is not None and pair.a is not None and pair.a[1] == start


def _is_last(s: _Slot, first_pop: float, stop: int | None) -> bool:
    if s.side == 0:
        return s.end == first_pop or (first_pop == INF and stop is not None and s.end == stop)
    if s.side == 2:
        return s.a is not None and s.b is not None and s.a[2] == s.b[1]
    return False


def approximate_relation(
    fragments: Iterable[Iterable],
    nfa: SlicingNfa,
    base_height: int = 0,
    first_pop: float = INF,
    start: int | None = None,
    stop: int | None = None,
) -> Relation:
    """Pairs (p, q) such that the peak may run from p to q given the evidence.

    ``fragments`` are letter sequences (letters expose ``sym``, ``kind``,
    ``rel``, ``height``, ``pos`` and ``end``); ``base_height`` is the height at
    which the peak starts and ``first_pop`` the stream position of its first
    pop (infinite if none).  ``start`` and ``stop`` delimit the peak in the
    stream when known; they only let the first and last letters be pinned to
    the ends of the sliced word.
    """
    slots = collect(fragments, base_height, first_pop)
    m = nfa.m
    pairs = {x.level: x for x in slots if x.side == 2}
    if not slots:
        reach = nfa.pre_gap(nfa.final_mask)
    else:
        reach = nfa.final_mask if _is_last(slots[-1], first_pop, stop) else nfa.pre_gap(nfa.final_mask)
    for i in range(len(slots) - 1, -1, -1):
        succ = nfa.successors(_sliced(slots[i]))
        reach = _pre(succ, reach)
        if not reach:
            break
        if i == 0:
            if not _is_first(slots[0], slots, start, stop):
                reach = nfa.pre_gap(reach)
        elif not _adjacent(slots[i - 1], slots[i], pairs, stop):
            reach = nfa.pre_gap(reach)
    return Relation.from_pairs(m, ((x // m, x % m) for x in _bits(reach)))
