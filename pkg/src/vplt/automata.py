"""Visibly pushdown automata, relations over states and the slicing automaton.

Relations are stored as tuples of row bitmasks: bit ``q`` of ``rows[p]`` is set
when ``(p, q)`` belongs to the relation.  With at most 16 states a row fits in
a machine word, composition is a handful of ORs, and relations are hashable.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator

MAX_STATES = 16

PUSH, POP, NEUTRAL = 0, 1, 2
KIND_NAMES = {PUSH: "push", POP: "pop", NEUTRAL: "neutral"}


class VpaSyntaxError(ValueError):
    """Raised for malformed VPA files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Relation:
    """A binary relation on ``range(m)`` stored as row bitmasks."""

    __slots__ = ("m", "rows", "_hash")

    def __init__(self, m: int, rows: Iterable[int]):
        self.m = m
        self.rows = tuple(rows)
        if len(self.rows) != m:
            raise ValueError(f"expected {m} rows, got {len(self.rows)}")
        self._hash = hash((m, self.rows))

    @classmethod
    def _of(cls, m: int, rows: tuple) -> "Relation":
        # trusted constructor for the hot paths
        r = object.__new__(cls)
        r.m, r.rows, r._hash = m, rows, hash((m, rows))
        return r

    @classmethod
    def identity(cls, m: int) -> "Relation":
        return _identity(m)

    @classmethod
    def empty(cls, m: int) -> "Relation":
        return cls(m, (0,) * m)

    @classmethod
    def full(cls, m: int) -> "Relation":
        return cls(m, ((1 << m) - 1,) * m)

    @classmethod
    def from_pairs(cls, m: int, pairs: Iterable[tuple[int, int]]) -> "Relation":
        rows = [0] * m
        for p, q in pairs:
            rows[p] |= 1 << q
        return cls(m, rows)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        p, q = pair
        return bool(self.rows[p] >> q & 1)

    def pairs(self) -> list[tuple[int, int]]:
        return [(p, q) for p, row in enumerate(self.rows) for q in _bits(row)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Relation) and self.m == other.m and self.rows == other.rows

    def __hash__(self) -> int:
        return self._hash

    def __or__(self, other: "Relation") -> "Relation":
        _check_dims(self, other)
        return Relation._of(self.m, tuple(a | b for a, b in zip(self.rows, other.rows)))

    def __le__(self, other: "Relation") -> bool:
        _check_dims(self, other)
        return all(a & ~b == 0 for a, b in zip(self.rows, other.rows))

    def __bool__(self) -> bool:
        return any(self.rows)

    def __len__(self) -> int:
        return sum(bin(r).count("1") for r in self.rows)

    def __repr__(self) -> str:
        return f"Relation({self.m}, {self.pairs()})"

    def then(self, other: "Relation") -> "Relation":
        """Composition: first ``self``, then ``other``."""
        return compose(self, other)

    def converse(self) -> "Relation":
        rows = [0] * self.m
        for p, row in enumerate(self.rows):
            for q in _bits(row):
                rows[q] |= 1 << p
        return Relation(self.m, rows)

    def intersects(self, sources: int, targets: int) -> bool:
        """True when some pair goes from a state in ``sources`` to one in ``targets``."""
        return any(self.rows[p] & targets for p in _bits(sources))


@lru_cache(maxsize=None)
def _identity(m: int) -> Relation:
    return Relation(m, (1 << p for p in range(m)))


def _check_dims(r1: Relation, r2: Relation) -> None:
    if r1.m != r2.m:
        raise ValueError(f"relation dimension mismatch: {r1.m} vs {r2.m}")


def compose(r1: Relation, r2: Relation) -> Relation:
    """``(p, q)`` is in the result iff some ``r`` has ``r1(p, r)`` and ``r2(r, q)``."""
    _check_dims(r1, r2)
    rows2 = r2.rows
    out = []
    for row in r1.rows:
        acc = 0
        while row:
            low = row & -row
            acc |= rows2[low.bit_length() - 1]
            row ^= low
        out.append(acc)
    return Relation._of(r1.m, tuple(out))


@dataclass(frozen=True)
class PushdownAlphabet:
    push_symbols: frozenset[str]
    pop_symbols: frozenset[str]
    neutral_symbols: frozenset[str]

    def __post_init__(self):
        a, b, c = self.push_symbols, self.pop_symbols, self.neutral_symbols
        if a & b or a & c or b & c:
            raise ValueError("push, pop and neutral symbol classes must be disjoint")
        if not (a or b or c):
            raise ValueError("pushdown alphabet is empty")

    @cached_property
    def kinds(self) -> dict[str, int]:
        out = {s: PUSH for s in self.push_symbols}
        out.update({s: POP for s in self.pop_symbols})
        out.update({s: NEUTRAL for s in self.neutral_symbols})
        return out

    def kind(self, symbol: str) -> int:
        try:
            return self.kinds[symbol]
        except KeyError:
            raise ValueError(f"symbol {symbol!r} is not in the alphabet") from None

    @property
    def symbols(self) -> frozenset[str]:
        return self.push_symbols | self.pop_symbols | self.neutral_symbols


@dataclass(frozen=True, eq=False)
class Vpa:
    m: int
    alphabet: PushdownAlphabet
    stack_alphabet: frozenset[str]
    initial: frozenset[int]
    final: frozenset[int]
    delta_push: frozenset[tuple[int, str, int, str]]
    delta_pop: frozenset[tuple[int, str, str, int]]
    delta_neutral: frozenset[tuple[int, str, int]]
    name: str = field(default="vpa", compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a VPA needs at least one state")
        if self.m > MAX_STATES:
            raise ValueError(f"at most {MAX_STATES} states are supported")
        for s in self.initial | self.final:
            self._state(s)
        for p, a, q, g in self.delta_push:
            self._state(p), self._state(q), self._stack(g)
            if a not in self.alphabet.push_symbols:
                raise ValueError(f"{a!r} used in a push transition but is not a push symbol")
        for p, b, g, q in self.delta_pop:
            self._state(p), self._state(q), self._stack(g)
            if b not in self.alphabet.pop_symbols:
                raise ValueError(f"{b!r} used in a pop transition but is not a pop symbol")
        for p, c, q in self.delta_neutral:
            self._state(p), self._state(q)
            if c not in self.alphabet.neutral_symbols:
                raise ValueError(f"{c!r} used in a neutral transition but is not neutral")

    def _state(self, s: int) -> None:
        if not 0 <= s < self.m:
            raise ValueError(f"state {s} out of range [0, {self.m})")

    def _stack(self, g: str) -> None:
        if g not in self.stack_alphabet:
            raise ValueError(f"stack symbol {g!r} not declared")

    @cached_property
    def initial_mask(self) -> int:
        return sum(1 << s for s in self.initial)

    @cached_property
    def final_mask(self) -> int:
        return sum(1 << s for s in self.final)

    @cached_property
    def neutral_rel(self) -> dict[str, Relation]:
        return {
            c: Relation.from_pairs(self.m, ((p, q) for p, cc, q in self.delta_neutral if cc == c))
            for c in self.alphabet.neutral_symbols
        }

    @cached_property
    def push_rel(self) -> dict[str, dict[str, Relation]]:
        """``push_rel[a][g]``: state pairs ``p -> p'`` of push transitions pushing ``g``."""
        return {
            a: {
                g: Relation.from_pairs(
                    self.m, ((p, q) for p, aa, q, gg in self.delta_push if aa == a and gg == g)
                )
                for g in self.stack_alphabet
            }
            for a in self.alphabet.push_symbols
        }

    @cached_property
    def pop_rel(self) -> dict[str, dict[str, Relation]]:
        """``pop_rel[b][g]``: state pairs ``q' -> q`` of pop transitions reading ``g``."""
        return {
            b: {
                g: Relation.from_pairs(
                    self.m, ((p, q) for p, bb, gg, q in self.delta_pop if bb == b and gg == g)
                )
                for g in self.stack_alphabet
            }
            for b in self.alphabet.pop_symbols
        }

    def wrap(self, a: str | None, b: str | None, inner: Relation) -> Relation:
        """Transitions of ``a . w . b`` where ``inner`` is the relation of ``w``.

        ``None`` for either symbol means "any symbol of that class".
        """
        key = (a, b, inner)
        memo = self._wrap_memo
        if key not in memo:
            memo[key] = self._wrap(a, b, inner)
        return memo[key]

    @cached_property
    def _wrap_memo(self) -> dict:
        return {}

    def _wrap(self, a: str | None, b: str | None, inner: Relation) -> Relation:
        pushes = self.alphabet.push_symbols if a is None else (a,)
        pops = self.alphabet.pop_symbols if b is None else (b,)
        out = Relation.empty(self.m)
        for g in self.stack_alphabet:
            left = Relation.empty(self.m)
            for x in pushes:
                left = left | self.push_rel[x][g]
            if not left:
                continue
            right = Relation.empty(self.m)
            for y in pops:
                right = right | self.pop_rel[y][g]
            if not right:
                continue
            out = out | compose(compose(left, inner), right)
        return out

    @cached_property
    def any_neutral(self) -> Relation:
        out = Relation.empty(self.m)
        for r in self.neutral_rel.values():
            out = out | r
        return out

    @cached_property
    def balanced_reach(self) -> Relation:
        """All ``(p, q)`` such that some balanced word over the base alphabet leads p to q."""
        r = Relation.identity(self.m)
        while True:
            nxt = r | compose(r, self.any_neutral) | compose(r, r) | self.wrap(None, None, r)
            if nxt == r:
                return r
            r = nxt

    def kind(self, symbol: str) -> int:
        return self.alphabet.kind(symbol)


def parse_vpa(text: str, name: str = "vpa") -> Vpa:
    """Parse the line-oriented VPA format.

    ``states N``, ``initial ...``, ``final ...``, ``stack ...`` and one
    transition per line: ``push a p q g``, ``pop b p g q``, ``neutral c p q``.
    """
    m = None
    initial: set[int] = set()
    final: set[int] = set()
    stack: set[str] = set()
    kinds: dict[str, str] = {}
    dpush, dpop, dneutral = set(), set(), set()

    def state(tok: str, lineno: int) -> int:
        try:
            s = int(tok)
        except ValueError:
            raise VpaSyntaxError(f"state {tok!r} is not an integer", lineno) from None
        if m is None:
            raise VpaSyntaxError("'states' must be declared before use", lineno)
        if not 0 <= s < m:
            raise VpaSyntaxError(f"state {s} out of range [0, {m})", lineno)
        return s

    def symbol(tok: str, kind: str, lineno: int) -> str:
        prev = kinds.setdefault(tok, kind)
        if prev != kind:
            raise VpaSyntaxError(f"symbol {tok!r} used as both {prev} and {kind}", lineno)
        return tok

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        if head == "states":
            if len(args) != 1 or not args[0].isdigit():
                raise VpaSyntaxError("expected 'states N'", lineno)
            m = int(args[0])
            if m < 1:
                raise VpaSyntaxError("a VPA needs at least one state", lineno)
            if m > MAX_STATES:
                raise VpaSyntaxError(f"at most {MAX_STATES} states are supported", lineno)
        elif head == "initial":
            initial.update(state(t, lineno) for t in args)
        elif head == "final":
            final.update(state(t, lineno) for t in args)
        elif head == "stack":
            stack.update(args)
        elif head in ("push", "pop"):
            if len(args) != 4:
                raise VpaSyntaxError(f"expected '{head} <sym> ...' with 4 arguments", lineno)
            sym = symbol(args[0], head, lineno)
            if head == "push":
                p, q, g = state(args[1], lineno), state(args[2], lineno), args[3]
                dpush.add((p, sym, q, g))
            else:
                p, g, q = state(args[1], lineno), args[2], state(args[3], lineno)
                dpop.add((p, sym, g, q))
            if g not in stack:
                raise VpaSyntaxError(f"stack symbol {g!r} not declared", lineno)
        elif head == "neutral":
            if len(args) != 3:
                raise VpaSyntaxError("expected 'neutral <sym> <p> <q>'", lineno)
            sym = symbol(args[0], "neutral", lineno)
            dneutral.add((state(args[1], lineno), sym, state(args[2], lineno)))
        elif head == "symbols":
            # optional declaration of symbols without transitions: symbols <kind> s1 s2 ...
            if not args or args[0] not in ("push", "pop", "neutral"):
                raise VpaSyntaxError("expected 'symbols push|pop|neutral ...'", lineno)
            for t in args[1:]:
                symbol(t, args[0], lineno)
        else:
            raise VpaSyntaxError(f"unknown directive {head!r}", lineno)

    if m is None:
        raise VpaSyntaxError("missing 'states' declaration")
    by_kind = {k: frozenset(s for s, kk in kinds.items() if kk == k) for k in ("push", "pop", "neutral")}
    try:
        alphabet = PushdownAlphabet(by_kind["push"], by_kind["pop"], by_kind["neutral"])
    except ValueError as exc:
        raise VpaSyntaxError(str(exc)) from None
    return Vpa(
        m=m,
        alphabet=alphabet,
        stack_alphabet=frozenset(stack),
        initial=frozenset(initial),
        final=frozenset(final),
        delta_push=frozenset(dpush),
        delta_pop=frozenset(dpop),
        delta_neutral=frozenset(dneutral),
        name=name,
    )


def relation_of_balanced(vpa: Vpa, word) -> Relation:
    """Exact set of ``u``-transitions of a balanced word.

    ``word`` is a sequence of symbols (str) or letters exposing ``kind``,
    ``sym`` and ``rel``; relation letters act as their own transition sets.
    Pending pushes are kept on an auxiliary stack together with the relation
    reached before them, so the fold is linear in the word length.
    """
    m = vpa.m
    cur = Relation.identity(m)
    pending: list[tuple[Relation, str]] = []
    for x in word:
        if isinstance(x, str):
            kind, sym, rel = vpa.kind(x), x, None
        else:
            kind, sym, rel = x.kind, x.sym, x.rel
        if kind == PUSH:
            pending.append((cur, sym))
            cur = Relation.identity(m)
        elif kind == POP:
            if not pending:
                raise ValueError("word is not balanced (negative height)")
            before, a = pending.pop()
            cur = compose(before, vpa.wrap(a, sym, cur))
        else:
            if rel is None:
                try:
                    rel = vpa.neutral_rel[sym]
                except KeyError:
                    raise ValueError(f"symbol {sym!r} is not in the alphabet") from None
            cur = compose(cur, rel)
    if pending:
        raise ValueError("word is not balanced (positive final height)")
    return cur


def accepts(vpa: Vpa, word) -> bool:
    """Membership in L(vpa); unbalanced words are rejected."""
    try:
        rel = relation_of_balanced(vpa, word)
    except ValueError as exc:
        if "not balanced" in str(exc):
            return False
        raise
    return rel.intersects(vpa.initial_mask, vpa.final_mask)


# --- slicing automaton -------------------------------------------------------

# Sliced letters are tuples:
#   ("P", a, b)   a push/pop pair; either side may be None (= any symbol)
#   ("L", x)      left-side neutral; x is a symbol or a Relation
#   ("R", x)      right-side neutral; x is a symbol or a Relation


@dataclass(frozen=True, eq=False)
class SlicingNfa:
    """Finite automaton on pair states ``(p, q)`` reading a peak from both ends.

    Pair state ``(p, q)`` has index ``p * m + q``.  The left component moves
    forward through the push side; the right component moves backward through
    the pop side, so right-side neutral runs are read in reverse order.
    """

    vpa: Vpa

    @property
    def m(self) -> int:
        return self.vpa.m

    @property
    def size(self) -> int:
        return self.vpa.m * self.vpa.m

    def index(self, p: int, q: int) -> int:
        return p * self.vpa.m + q

    @cached_property
    def initial_mask(self) -> int:
        return sum(1 << self.index(p, q) for p in self.vpa.initial for q in self.vpa.final)

    @cached_property
    def final_mask(self) -> int:
        return sum(1 << self.index(p, p) for p in range(self.m))

    def _left_right(self, rel_left: Relation | None, rel_right: Relation | None) -> list[int]:
        # successors of (p, q): (p', q) for (p,p') in rel_left, (p, q') for (q',q) in rel_right
        m = self.m
        succ = []
        right_conv = rel_right.converse() if rel_right is not None else None
        for p in range(m):
            for q in range(m):
                acc = 0
                if rel_left is not None:
                    for p2 in _bits(rel_left.rows[p]):
                        acc |= 1 << (p2 * m + q)
                if right_conv is not None:
                    for q2 in _bits(right_conv.rows[q]):
                        acc |= 1 << (p * m + q2)
                succ.append(acc)
        return succ

    def successors(self, letter: tuple) -> list[int]:
        """Successor bitmask of every pair state under one sliced letter."""
        cached = self._succ_cache.get(letter)
        if cached is not None:
            return cached
        vpa, m = self.vpa, self.m
        tag = letter[0]
        if tag == "L" or tag == "R":
            x = letter[1]
            rel = x if isinstance(x, Relation) else vpa.neutral_rel[x]
            succ = self._left_right(rel, None) if tag == "L" else self._left_right(None, rel)
        elif tag == "P":
            a, b = letter[1], letter[2]
            pushes = vpa.alphabet.push_symbols if a is None else (a,)
            pops = vpa.alphabet.pop_symbols if b is None else (b,)
            succ = [0] * (m * m)
            for g in vpa.stack_alphabet:
                for x in pushes:
                    left = vpa.push_rel[x][g]
                    if not left:
                        continue
                    for y in pops:
                        # pop (q', g) -b-> q; from (p, q) go to (p', q')
                        right = vpa.pop_rel[y][g].converse()
                        for p in range(m):
                            for q in range(m):
                                for p2 in _bits(left.rows[p]):
                                    for q2 in _bits(right.rows[q]):
                                        succ[p * m + q] |= 1 << (p2 * m + q2)
        else:
            raise ValueError(f"unknown sliced letter {letter!r}")
        if len(self._succ_cache) < 4096:
            self._succ_cache[letter] = succ
        return succ

    @cached_property
    def _succ_cache(self) -> dict:
        return {}

    def predecessors_of(self, letter: tuple, targets: int) -> int:
        succ = self.successors(letter)
        out = 0
        for x, s in enumerate(succ):
            if s & targets:
                out |= 1 << x
        return out

    @cached_property
    def base_letters(self) -> list[tuple]:
        al = self.vpa.alphabet
        letters = [("P", a, b) for a in sorted(al.push_symbols) for b in sorted(al.pop_symbols)]
        letters += [("L", c) for c in sorted(al.neutral_symbols)]
        letters += [("R", c) for c in sorted(al.neutral_symbols)]
        return letters

    @cached_property
    def step(self) -> list[int]:
        """One-step successors over all base sliced letters."""
        out = [0] * self.size
        for letter in self.base_letters:
            for x, s in enumerate(self.successors(letter)):
                out[x] |= s
        return out

    @cached_property
    def gap_step(self) -> list[int]:
        """One step of a gap: a base sliced letter or a realizable relation on either side."""
        bal = self.vpa.balanced_reach
        extra = self._left_right(bal, bal)
        return [a | b for a, b in zip(self.step, extra)]

    @cached_property
    def reach(self) -> list[int]:
        """Reflexive-transitive closure of the base one-step relation."""
        return _closure(self.step)

    @cached_property
    def gap_reach(self) -> list[int]:
        return _closure(self.gap_step)

    @cached_property
    def gap_pred(self) -> list[int]:
        pred = [0] * self.size
        for x, row in enumerate(self.gap_reach):
            for y in _bits(row):
                pred[y] |= 1 << x
        return pred

    def pre_gap(self, targets: int) -> int:
        out = 0
        pred = self.gap_pred
        for y in _bits(targets):
            out |= pred[y]
        return out

    def accepts_sliced(self, letters: Iterable[tuple]) -> bool:
        cur = self.initial_mask
        for letter in letters:
            succ = self.successors(letter)
            nxt = 0
            for x in _bits(cur):
                nxt |= succ[x]
            cur = nxt
            if not cur:
                return False
        return bool(cur & self.final_mask)


def _closure(step: list[int]) -> list[int]:
    n = len(step)
    reach = [step[x] | (1 << x) for x in range(n)]
    changed = True
    while changed:
        changed = False
        for x in range(n):
            acc = reach[x]
            for y in _bits(acc):
                acc |= reach[y]
            if acc != reach[x]:
                reach[x] = acc
                changed = True
    return reach


def build_slicing(vpa: Vpa) -> SlicingNfa:
    return SlicingNfa(vpa)


def slice_positions(kinds: list[int]) -> list[tuple[int, ...]]:
    """Positions of the peak read by each sliced letter, outermost group first.

    Group ``l`` is the left neutral run before the ``l``-th push, the right
    neutral run after its matching pop (in reverse), then the pair itself.
    The neutral run at the top closes the word.
    """
    pushes = [i for i, k in enumerate(kinds) if k == PUSH]
    pops = [i for i, k in enumerate(kinds) if k == POP]
    if len(pushes) != len(pops) or (pops and pushes and pushes[-1] > pops[0]):
        raise ValueError("word is not a peak")
    j = len(pushes)
    out: list[tuple[int, ...]] = []
    prev_push = -1
    for lvl in range(j):
        a_i, b_i = pushes[lvl], pops[j - 1 - lvl]
        nxt_pop = pops[j - lvl] if lvl > 0 else len(kinds)
        out += [(x,) for x in range(prev_push + 1, a_i)]
        out += [(x,) for x in range(nxt_pop - 1, b_i, -1)]
        out.append((a_i, b_i))
        prev_push = a_i
    top_end = pops[0] if pops else len(kinds)
    out += [(x,) for x in range(prev_push + 1, top_end)]
    return out


def slice_word(vpa: Vpa, word) -> list[tuple]:
    """Sliced form of a peak (see :func:`slice_positions` for the order)."""
    syms = [w if isinstance(w, str) else (w.sym if w.rel is None else w.rel) for w in word]
    kinds = [vpa.kind(w) if isinstance(w, str) else w.kind for w in word]
    first_pop = kinds.index(POP) if POP in kinds else len(kinds)
    out: list[tuple] = []
    for group in slice_positions(kinds):
        if len(group) == 2:
            out.append(("P", syms[group[0]], syms[group[1]]))
        else:
            out.append(("L" if group[0] < first_pop else "R", syms[group[0]]))
    return out


def is_peak(kinds: list[int]) -> bool:
    seen_pop = False
    h = 0
    for k in kinds:
        if k == PUSH:
            if seen_pop:
                return False
            h += 1
        elif k == POP:
            seen_pop = True
            h -= 1
            if h < 0:
                return False
    return h == 0


def reach_and_diameter(nfa: SlicingNfa) -> tuple[list[int], int]:
    """Reachability over base sliced letters and the slicing diameter.

    The diameter is the largest, over connected pair states, shortest length
    of a peak (pairs weigh 2, neutrals 1) that connects them.
    """
    n = nfa.size
    weights = [(2 if letter[0] == "P" else 1, nfa.successors(letter)) for letter in nfa.base_letters]
    diameter = 0
    for src in range(n):
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            for w, succ in weights:
                for y in _bits(succ[x]):
                    nd = d + w
                    if nd < dist.get(y, 1 << 60):
                        dist[y] = nd
                        heapq.heappush(heap, (nd, y))
        diameter = max(diameter, max(dist.values()))
    return nfa.reach, diameter


def sigma_diameter(vpa: Vpa) -> int:
    """Largest shortest-balanced-word length over pairs in ``balanced_reach``."""
    m = vpa.m
    inf = 1 << 60
    dist = [[0 if p == q else inf for q in range(m)] for p in range(m)]
    neutral = vpa.any_neutral
    # wrap table: (p, q) <- (p', q') costs 2
    wraps = []
    for p in range(m):
        for q in range(m):
            for p2 in range(m):
                for q2 in range(m):
                    inner = Relation.from_pairs(m, [(p2, q2)])
                    if (p, q) in vpa.wrap(None, None, inner):
                        wraps.append((p, q, p2, q2))
    changed = True
    while changed:
        changed = False
        for p in range(m):
            for q in range(m):
                best = dist[p][q]
                for r in _bits(neutral.rows[p]):
                    best = min(best, 1 + dist[r][q])
                for r in range(m):
                    best = min(best, dist[p][r] + dist[r][q])
                if best < dist[p][q]:
                    dist[p][q] = best
                    changed = True
        for p, q, p2, q2 in wraps:
            if dist[p2][q2] + 2 < dist[p][q]:
                dist[p][q] = dist[p2][q2] + 2
                changed = True
    finite = [d for row in dist for d in row if d < inf]
    return max(finite) if finite else 0
