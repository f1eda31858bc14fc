"""Exact streaming membership with a logarithmic stack of unfinished peaks.

The recognizer state is persistent: :func:`step` returns a new state and never
mutates the old one (states are plain slotted records for speed; treat them
as read-only), so exhaustive checks can branch on a shared prefix for
free.  The current unfinished peak is kept as a reversed cons list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .automata import NEUTRAL, POP, PUSH, Relation, Vpa, relation_of_balanced
from .words import Letter, letters_of

UNBALANCED = "unbalanced"


def _to_list(cons) -> list:
    out = []
    while cons is not None:
        out.append(cons[0])
        cons = cons[1]
    out.reverse()
    return out


def _extend(cons, letters):
    for x in letters:
        cons = (x, cons)
    return cons


class Item:
    """A frozen unfinished peak on the stack, split as ``v1 . v2``.

    ``v2`` is its maximal balanced suffix; it never changes once the item is
    pushed.
    """

    __slots__ = ("v1", "v2", "weight", "v1_weight", "v2_weight", "v1_pending", "depth")

    def __init__(self, letters: list[Letter], end_height: int, depth: int):
        split = 0
        for i, x in enumerate(letters):
            if x.kind != POP and x.pre_height < end_height:
                split = i + 1
        self.v1 = letters[:split]
        self.v2 = letters[split:]
        self.v1_weight = sum(x.weight for x in self.v1)
        self.v2_weight = sum(x.weight for x in self.v2)
        self.weight = self.v1_weight + self.v2_weight
        self.v1_pending = sum(1 for x in self.v1 if x.kind == PUSH)
        self.depth = depth

    @property
    def letters(self) -> list[Letter]:
        return self.v1 + self.v2


@dataclass(slots=True)
class Stats:
    n: int = 0
    max_stack: int = 0
    max_depth: int = 0
    compressions: int = 0
    nested_violations: int = 0
    max_weight_ratio: float = 0.0


@dataclass(slots=True)
class ExactState:
    vpa: Vpa
    u0: tuple | None = None
    u0_weight: int = 0
    u0_pending: int = 0
    u0_has_pop: bool = False
    u0_depth: int = 0
    stack: tuple | None = None
    stack_height: int = 0
    r_temp: Relation | None = None
    height: int = 0
    failed: str | None = None
    stats: Stats = field(default_factory=Stats)

    @classmethod
    def initial(cls, vpa: Vpa) -> "ExactState":
        return cls(vpa=vpa, r_temp=Relation.identity(vpa.m))

    def u0_letters(self) -> list[Letter]:
        return _to_list(self.u0)

    def stack_items(self) -> list[Item]:
        return _to_list(self.stack)

    def accepted(self) -> bool:
        if self.failed is not None or self.height != 0 or self.u0 is not None or self.stack is not None:
            return False
        return self.r_temp.intersects(self.vpa.initial_mask, self.vpa.final_mask)


def compress(vpa: Vpa, letters: list[Letter], stats: dict | None = None) -> Letter:
    """Replace a balanced factor by its relation letter.

    ``stats`` (if given) collects the largest letter weight ratio among
    relation letters of the factor and counts violations of ``3|x| <= 2|v|``.
    """
    rel = relation_of_balanced(vpa, letters)
    weight = sum(x.weight for x in letters)
    depth = max(x.depth for x in letters) + 1
    if stats is not None:
        for x in letters:
            if x.rel is not None:
                stats["ratio"] = max(stats.get("ratio", 0.0), x.weight / weight)
                if 3 * x.weight > 2 * weight:
                    stats["violations"] = stats.get("violations", 0) + 1
    first, last = letters[0], letters[-1]
    return Letter.relation(rel, weight, first.pre_height, first.pos, last.end, depth)


def compress_balanced(vpa: Vpa, letters: list[Letter]) -> Letter:
    if not letters:
        raise ValueError("cannot compress an empty factor")
    h = 0
    for x in letters:
        h += 1 if x.kind == PUSH else -1 if x.kind == POP else 0
        if h < 0:
            break
    if h != 0:
        raise ValueError("factor is not balanced")
    return compress(vpa, letters)


def step(state: ExactState, letter: Letter) -> ExactState:
    """Process one letter; returns the successor state."""
    if state.failed is not None:
        return state
    vpa = state.vpa
    kind = letter.kind
    height = state.height + (1 if kind == PUSH else -1 if kind == POP else 0)
    st = state.stats
    n = st.n + 1
    if height < 0:
        return ExactState(vpa, failed=UNBALANCED, height=height, r_temp=state.r_temp, stats=_replace(st, n=n))

    u0, w, pend, has_pop, depth = state.u0, state.u0_weight, state.u0_pending, state.u0_has_pop, state.u0_depth
    stack, sh = state.stack, state.stack_height
    r_temp = state.r_temp
    max_depth, comps = st.max_depth, st.compressions
    cstats = {"ratio": st.max_weight_ratio, "violations": st.nested_violations}

    if kind == PUSH and has_pop:
        stack = (Item(_to_list(u0), state.height, depth), stack)
        sh += 1
        u0, w, pend, has_pop, depth = (letter, None), letter.weight, 1, False, letter.depth
    else:
        u0 = (letter, u0)
        w += letter.weight
        depth = max(depth, letter.depth)
        if kind == PUSH:
            pend += 1
        elif kind == POP:
            pend -= 1
            has_pop = True

    if pend == 0:
        r = compress(vpa, _to_list(u0), cstats)
        comps += 1
        max_depth = max(max_depth, r.depth)
        if stack is None:
            r_temp = r_temp.then(r.rel)
            u0, w, pend, has_pop, depth = None, 0, 0, False, 0
        else:
            item, stack = stack
            sh -= 1
            u0 = (r, _extend(None, item.letters))
            w, pend, has_pop, depth = item.weight + r.weight, item.v1_pending, True, max(item.depth, r.depth)

    while stack is not None and 2 * w >= stack[0].v2_weight:
        item, stack = stack
        sh -= 1
        r = compress(vpa, item.v2, cstats)
        comps += 1
        max_depth = max(max_depth, r.depth)
        u0 = _extend(None, item.v1 + [r] + _to_list(u0))
        w += item.v1_weight + r.weight
        pend += item.v1_pending
        depth = max(depth, item.depth, r.depth)

    stats = Stats(
        n=n,
        max_stack=max(st.max_stack, sh),
        max_depth=max_depth,
        compressions=comps,
        nested_violations=cstats["violations"],
        max_weight_ratio=cstats["ratio"],
    )
    return ExactState(vpa, u0, w, pend, has_pop, depth, stack, sh, r_temp, height, None, stats)


def _replace(st: Stats, **kw) -> Stats:
    return replace(st, **kw)


@dataclass
class ExactResult:
    accepted: bool
    reason: str | None
    stats: Stats

    def stats_json(self) -> dict:
        return {"max_stack": self.stats.max_stack, "max_depth": self.stats.max_depth, "n": self.stats.n}


def stack_bound(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def run_exact(vpa: Vpa, stream: Iterable, on_step=None) -> ExactResult:
    """Decide membership of a stream of symbols (or letters) in L(vpa).

    ``on_step(state)`` is called after every letter; tests use it to assert
    invariants as the stream is processed.
    """
    state = ExactState.initial(vpa)
    letters = _as_letters(vpa, stream)
    for x in letters:
        state = step(state, x)
        if on_step is not None:
            on_step(state)
        if state.failed is not None:
            return ExactResult(False, state.failed, state.stats)
    if state.height != 0:
        return ExactResult(False, UNBALANCED, state.stats)
    ok = state.accepted()
    return ExactResult(ok, None if ok else "not in language", state.stats)


def _as_letters(vpa: Vpa, stream: Iterable):
    it = iter(stream)
    for x in it:
        if isinstance(x, Letter):
            yield x
            yield from it
            return
        yield from letters_of(vpa, _chain(x, it))
        return


def _chain(first, rest):
    yield first
    yield from rest


def depth_bound(n: int) -> float:
    return math.log(n, 1.5) if n > 1 else 0.0
