"""Brute-force ground truth for small instances.

Everything here is exponential on purpose and independent of the streaming
code paths: membership by explicit configuration sets, balanced-edit distance
by forest edit distance and by plain shortest-path search, and exact output
distributions of the samplers by enumerating their coin flips.
"""
from __future__ import annotations

import heapq
import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Sequence

from .automata import NEUTRAL, POP, PUSH, Vpa

# A token is (symbol, kind, weight); words are tuples of tokens.
Token = tuple


def tokens(word: Iterable, vpa: Vpa | None = None) -> tuple[Token, ...]:
    """Normalise symbols, letters or tokens to ``(sym, kind, weight)`` tuples."""
    out = []
    for x in word:
        if isinstance(x, tuple):
            out.append(x)
        elif isinstance(x, str):
            if vpa is None:
                raise ValueError("a Vpa is needed to classify plain symbols")
            out.append((x, vpa.kind(x), 1))
        else:
            out.append((x.sym if x.rel is None else x.rel, x.kind, x.weight))
    return tuple(out)


def _balanced(word: Sequence[Token]) -> bool:
    h = 0
    for _, k, _ in word:
        h += 1 if k == PUSH else -1 if k == POP else 0
        if h < 0:
            return False
    return h == 0


# --- membership ---------------------------------------------------------------


def brute_step(vpa: Vpa, configs: frozenset, sym: str) -> frozenset:
    """Successor set of explicit (state, stack) configurations."""
    kind = vpa.kind(sym)
    nxt = set()
    for q, stack in configs:
        if kind == PUSH:
            for p, a, p2, g in vpa.delta_push:
                if p == q and a == sym:
                    nxt.add((p2, stack + (g,)))
        elif kind == POP:
            if not stack:
                continue
            for p, b, g, p2 in vpa.delta_pop:
                if p == q and b == sym and g == stack[-1]:
                    nxt.add((p2, stack[:-1]))
        else:
            for p, c, p2 in vpa.delta_neutral:
                if p == q and c == sym:
                    nxt.add((p2, stack))
    return frozenset(nxt)


def brute_initial(vpa: Vpa) -> frozenset:
    return frozenset((q, ()) for q in vpa.initial)


def brute_final(vpa: Vpa, configs: frozenset) -> bool:
    return any(q in vpa.final and not stack for q, stack in configs)


def brute_accepts(vpa: Vpa, word: Iterable) -> bool:
    """Membership by simulating all runs on explicit (state, stack) configurations."""
    configs = brute_initial(vpa)
    for sym in word:
        configs = brute_step(vpa, configs, sym)
        if not configs:
            return False
    return brute_final(vpa, configs)


def brute_relation(vpa: Vpa, word: Iterable[str]) -> set[tuple[int, int]]:
    """All (p, q) with a run from p to q on a balanced word, by explicit runs."""
    word = list(word)
    out = set()
    for p in range(vpa.m):
        configs = {(p, ())}
        for sym in word:
            kind = vpa.kind(sym)
            nxt = set()
            for q, stack in configs:
                if kind == PUSH:
                    nxt.update((p2, stack + (g,)) for s, a, p2, g in vpa.delta_push if s == q and a == sym)
                elif kind == POP:
                    if stack:
                        nxt.update(
                            (p2, stack[:-1]) for s, b, g, p2 in vpa.delta_pop if s == q and b == sym and g == stack[-1]
                        )
                else:
                    nxt.update((p2, stack) for s, c, p2 in vpa.delta_neutral if s == q and c == sym)
            configs = nxt
        out.update((p, q) for q, stack in configs if not stack)
    return out


def balanced_words(vpa: Vpa, max_len: int, min_len: int = 0) -> Iterable[tuple[str, ...]]:
    """All balanced words over the machine's alphabet, shortest first."""
    al = vpa.alphabet
    pushes, pops, neutrals = sorted(al.push_symbols), sorted(al.pop_symbols), sorted(al.neutral_symbols)

    def rec(n, h, prefix):
        if n == 0:
            if h == 0:
                yield tuple(prefix)
            return
        for c in neutrals:
            if h <= n - 1:
                prefix.append(c)
                yield from rec(n - 1, h, prefix)
                prefix.pop()
        if h + 1 <= n - 1:
            for a in pushes:
                prefix.append(a)
                yield from rec(n - 1, h + 1, prefix)
                prefix.pop()
        if h > 0:
            for b in pops:
                prefix.append(b)
                yield from rec(n - 1, h - 1, prefix)
                prefix.pop()

    for n in range(min_len, max_len + 1):
        yield from rec(n, 0, [])


def peaks(vpa: Vpa, max_len: int) -> Iterable[tuple[str, ...]]:
    """All peaks (pushes all before the first pop) up to ``max_len``."""
    for w in balanced_words(vpa, max_len):
        seen_pop = False
        ok = True
        for s in w:
            k = vpa.kind(s)
            if k == POP:
                seen_pop = True
            elif k == PUSH and seen_pop:
                ok = False
                break
        if ok:
            yield w


# --- balanced-edit distance ---------------------------------------------------


def to_forest(word: Sequence[Token]) -> tuple:
    """Nested-word forest: leaves ``("c", sym, w)``, pairs ``("p", a, b, wa, wb, children)``."""
    stack: list[tuple[Token, list]] = [(None, [])]
    for tok in word:
        sym, kind, w = tok
        if kind == PUSH:
            stack.append((tok, []))
        elif kind == POP:
            if len(stack) == 1:
                raise ValueError("word is not balanced")
            opener, children = stack.pop()
            stack[-1][1].append(("p", opener[0], sym, opener[2], w, tuple(children)))
        else:
            stack[-1][1].append(("c", sym, w))
    if len(stack) != 1:
        raise ValueError("word is not balanced")
    return tuple(stack[0][1])


def flatten(forest: tuple) -> tuple[Token, ...]:
    out = []
    for node in forest:
        if node[0] == "c":
            out.append((node[1], NEUTRAL, node[2]))
        else:
            out.append((node[1], PUSH, node[3]))
            out.extend(flatten(node[5]))
            out.append((node[2], POP, node[4]))
    return tuple(out)


def _node_cost(node) -> int:
    return node[2] if node[0] == "c" else node[3] + node[4]


@lru_cache(maxsize=None)
def _forest_cost(f: tuple) -> int:
    return sum(_node_cost(x) + (_forest_cost(x[5]) if x[0] == "p" else 0) for x in f)


@lru_cache(maxsize=1 << 20)
def forest_distance(f: tuple, g: tuple) -> int:
    """Insert/delete forest edit distance, rightmost-root recursion."""
    if not f:
        return _forest_cost(g)
    if not g:
        return _forest_cost(f)
    v, w = f[-1], g[-1]
    f_del = f[:-1] + (v[5] if v[0] == "p" else ())
    g_del = g[:-1] + (w[5] if w[0] == "p" else ())
    best = min(forest_distance(f_del, g) + _node_cost(v), forest_distance(f, g_del) + _node_cost(w))
    if v[0] == "p" and w[0] == "p":
        if v[:5] == w[:5]:
            inner = forest_distance(v[5], w[5])
            best = min(best, forest_distance(f[:-1], g[:-1]) + inner)
    elif v == w:
        best = min(best, forest_distance(f[:-1], g[:-1]))
    return best


def bdist(u: Iterable, v: Iterable, vpa: Vpa | None = None) -> int:
    """Balanced-edit distance between two balanced words."""
    tu, tv = tokens(u, vpa), tokens(v, vpa)
    if not _balanced(tu) or not _balanced(tv):
        raise ValueError("bdist needs balanced words")
    return forest_distance(to_forest(tu), to_forest(tv))


def _matching(word: Sequence[Token]) -> dict[int, int]:
    match, stack = {}, []
    for i, (_, k, _) in enumerate(word):
        if k == PUSH:
            stack.append(i)
        elif k == POP:
            j = stack.pop()
            match[i], match[j] = j, i
    return match


def _balanced_neighbours(word: tuple, leaves: set, pairs: set, max_len: int):
    """Single balanced-edit operations from ``word`` with their costs."""
    match = _matching(word)
    n = len(word)
    for i, (_, k, w) in enumerate(word):
        if k == NEUTRAL:
            yield word[:i] + word[i + 1 :], w
        elif k == PUSH:
            j = match[i]
            yield word[:i] + word[i + 1 : j] + word[j + 1 :], w + word[j][2]
    if n + 1 <= max_len:
        for i in range(n + 1):
            for leaf in leaves:
                yield word[:i] + (leaf,) + word[i:], leaf[2]
    if n + 2 <= max_len and pairs:
        # a pair may enclose any balanced factor word[i:j]
        heights = [0]
        for _, k, _ in word:
            heights.append(heights[-1] + (1 if k == PUSH else -1 if k == POP else 0))
        for i in range(n + 1):
            for j in range(i, n + 1):
                if heights[j] != heights[i]:
                    continue
                if min(heights[i : j + 1]) < heights[i]:
                    continue
                for op, cl in pairs:
                    yield word[:i] + (op,) + word[i:j] + (cl,) + word[j:], op[2] + cl[2]


def _alphabet_of(word: Sequence[Token]):
    leaves = {t for t in word if t[1] == NEUTRAL}
    match = _matching(word)
    pairs = {(word[i], word[j]) for i, j in match.items() if word[i][1] == PUSH}
    return leaves, pairs


def bdist_bfs(u: Iterable, v: Iterable, vpa: Vpa | None = None) -> int:
    """Balanced-edit distance by shortest-path search over edit sequences.

    Some optimal sequence deletes first and then inserts, using only letters
    and pairs of ``v``, so intermediate words never exceed ``max(|u|, |v|)``.
    """
    tu, tv = tokens(u, vpa), tokens(v, vpa)
    if not _balanced(tu) or not _balanced(tv):
        raise ValueError("bdist needs balanced words")
    leaves, pairs = _alphabet_of(tv)
    cap = max(len(tu), len(tv))
    return _dijkstra(tu, lambda w: w == tv, lambda w: _balanced_neighbours(w, leaves, pairs, cap), None)


def bdist_ball(u: Iterable, vpa: Vpa, cap: int) -> dict[tuple, int]:
    """Single-source shortest paths over all balanced words of length <= cap.

    Insertions range over the whole alphabet.  The edit graph is symmetric, so
    the entry for ``v`` is the distance between ``u`` and ``v`` whenever
    ``cap >= max(|u|, |v|)``.
    """
    tu = tokens(u, vpa)
    if not _balanced(tu):
        raise ValueError("bdist needs a balanced word")
    al = vpa.alphabet
    leaves = {(c, NEUTRAL, 1) for c in al.neutral_symbols}
    pairs = {((a, PUSH, 1), (b, POP, 1)) for a in al.push_symbols for b in al.pop_symbols}
    dist = {tu: 0}
    heap = [(0, 0, tu)]
    tie = itertools.count(1)
    done = set()
    while heap:
        d, _, w = heapq.heappop(heap)
        if w in done:
            continue
        done.add(w)
        for nxt, c in _balanced_neighbours(w, leaves, pairs, cap):
            nd = d + c
            if nd < dist.get(nxt, 1 << 60):
                dist[nxt] = nd
                heapq.heappush(heap, (nd, next(tie), nxt))
    return dist


def _dijkstra(src, is_goal, neighbours, bound):
    dist = {src: 0}
    heap = [(0, 0, src)]
    tie = itertools.count(1)
    while heap:
        d, _, w = heapq.heappop(heap)
        if d > dist[w]:
            continue
        if is_goal(w):
            return d
        for nxt, c in neighbours(w):
            nd = d + c
            if bound is not None and nd > bound:
                continue
            if nd < dist.get(nxt, 1 << 60):
                dist[nxt] = nd
                heapq.heappush(heap, (nd, next(tie), nxt))
    return None


def bdist_to_language(u: Iterable, vpa: Vpa, bound: int) -> int | None:
    """Distance from ``u`` to L(vpa) when at most ``bound``, else None ("> bound")."""
    tu = tokens(u, vpa)
    if not _balanced(tu):
        raise ValueError("bdist needs a balanced word")
    al = vpa.alphabet
    leaves = {(c, NEUTRAL, 1) for c in al.neutral_symbols}
    pairs = {((a, PUSH, 1), (b, POP, 1)) for a in al.push_symbols for b in al.pop_symbols}
    cap = len(tu) + bound
    return _dijkstra(
        tu,
        lambda w: brute_accepts(vpa, [t[0] for t in w]),
        lambda w: _balanced_neighbours(w, leaves, pairs, cap),
        bound,
    )


def edit_dist(u: Sequence, v: Sequence, weight: Callable = lambda x: 1) -> int:
    """Insert/delete edit distance with letter weights (no substitution)."""
    n, m = len(u), len(v)
    prev = [0] * (m + 1)
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + weight(v[j - 1])
    for i in range(1, n + 1):
        cur = [prev[0] + weight(u[i - 1])] + [0] * m
        for j in range(1, m + 1):
            best = min(prev[j] + weight(u[i - 1]), cur[j - 1] + weight(v[j - 1]))
            if u[i - 1] == v[j - 1]:
                best = min(best, prev[j - 1])
            cur[j] = best
        prev = cur
    return prev[m]


# --- exact sampler distributions -------------------------------------------------


class _Budget(Exception):
    pass


def exact_distribution(run: Callable[[Callable[[int, int], bool]], Hashable], budget: int = 1 << 20) -> dict:
    """Exact output distribution of a randomized procedure.

    ``run(coin)`` must be deterministic given the answers of ``coin(num, den)``
    (True with probability num/den).  Every path of coin answers is replayed
    depth first and weighted with exact rationals.
    """
    dist: dict = {}
    paths = 0
    stack: list[list[bool]] = [[]]
    while stack:
        script = stack.pop()
        prob = Fraction(1)
        i = 0
        forks = []
        answers: list[bool] = []

        def coin(num: int, den: int) -> bool:
            nonlocal prob, i
            p = Fraction(num, den)
            if i < len(script):
                ans = script[i]
            else:
                ans = True
                if p == 0:
                    ans = False
                elif p != 1:
                    forks.append(i)
            i += 1
            answers.append(ans)
            if p == 1 or p == 0:
                return ans
            prob *= p if ans else 1 - p
            return ans

        out = run(coin)
        paths += 1
        if paths > budget:
            raise _Budget(f"enumeration budget of {budget} paths exceeded")
        dist[out] = dist.get(out, Fraction(0)) + prob
        # each fork taken as True spawns the sibling where it is False
        for f in forks:
            stack.append(answers[:f] + [False])
    return dist


def exact_sampler_distribution(kind: str, word: Sequence, **kw) -> dict:
    """Exact distribution for the ``reservoir``, ``kfactor`` or ``wk`` samplers.

    ``word`` is a list of :class:`~vplt.words.Letter`.  Outcomes are start
    indices for ``reservoir`` and ``kfactor`` (the latter as ``(i, j)`` index
    ranges) and tuples of covered stream indices for ``wk``.
    """
    from .words import k_factor_at, peak_sample_wk, reservoir_letters

    budget = kw.pop("budget", 1 << 20)
    if kind == "reservoir":
        t = kw.get("t", 1)
        idx = {id(x): i for i, x in enumerate(word)}
        return exact_distribution(lambda coin: tuple(idx[id(x)] for x in reservoir_letters(word, t, coin)), budget)
    if kind == "kfactor":
        k = kw["k"]
        idx = {id(x): i for i, x in enumerate(word)}
        return exact_distribution(lambda coin: k_factor_at(word, idx[id(reservoir_letters(word, 1, coin)[0])], k), budget)
    if kind == "wk":
        k = kw["k"]
        pos_index = {x.pos: i for i, x in enumerate(word)}

        def run(coin):
            frag = peak_sample_wk(word, k, coin)
            return tuple(sorted({pos_index[x.pos] for x in frag.letters()}))

        return exact_distribution(run, budget)
    raise ValueError(f"unknown sampler {kind!r}")


# --- over-sampling of sliced k-factors ----------------------------------------------


def wk_distribution(letters: Sequence, k: int) -> dict[tuple, Fraction]:
    """Exact W_k distribution by the index of the last reservoir replacement.

    The sampler restarts its trace on every replacement, so the outcome only
    depends on the last one: one replay per start index instead of one per
    coin path.
    """
    from .words import peak_sample_wk

    pos_index = {x.pos: i for i, x in enumerate(letters)}
    dist: dict[tuple, Fraction] = {}
    for start in range(len(letters)):
        prob = Fraction(1)
        seen = 0

        def coin(num, den):
            nonlocal prob, seen
            seen += 1
            if seen < start:
                return False
            ans = seen == start
            p = Fraction(num, den)
            prob *= p if ans else 1 - p
            return ans

        frag = peak_sample_wk(letters, k, coin)
        out = tuple(sorted({pos_index[x.pos] for x in frag.letters()}))
        dist[out] = dist.get(out, Fraction(0)) + prob
    return dist


def sliced_kfactor_distribution(kinds: Sequence[int], k: int) -> dict[frozenset, Fraction]:
    """k-factor sampling on the sliced word of a peak with unit letters.

    Pairs weigh 2 and neutrals 1; outcomes are the sets of peak positions the
    factor reads.
    """
    from .automata import slice_positions

    groups = slice_positions(list(kinds))
    weights = [len(g) for g in groups]
    total = sum(weights)
    dist: dict[frozenset, Fraction] = {}
    for i, w in enumerate(weights):
        acc, j, cover = 0, i, set()
        while j < len(groups):
            acc += weights[j]
            cover.update(groups[j])
            if acc >= k:
                break
            j += 1
        key = frozenset(cover)
        dist[key] = dist.get(key, Fraction(0)) + Fraction(w, total)
    return dist


def wk_coverage_violations(kinds: Sequence[int], k: int, copies: int | None = None) -> list[tuple]:
    """Sliced k-factors covered by ``copies`` W_k samples less often than k-factor sampling picks them.

    Only meaningful when ``4k <= len(kinds)``.  Returns ``(factor, p_kfactor, p_covered)`` for every violation; the
    default number of copies is ``4k``.
    """
    from .words import Letter

    copies = 4 * k if copies is None else copies
    letters, h = [], 0
    for pos, kind in enumerate(kinds):
        if kind == POP:
            h -= 1
        letters.append(Letter(str(pos), kind, 1, h, pos))
        if kind == PUSH:
            h += 1
    wk = wk_distribution(letters, k)
    bad = []
    for factor, q in sliced_kfactor_distribution(kinds, k).items():
        p = sum((pr for out, pr in wk.items() if factor <= set(out)), Fraction(0))
        covered = 1 - (1 - p) ** copies
        if covered < q:
            bad.append((tuple(sorted(factor)), q, covered))
    return bad


def peak_shapes(max_len: int) -> Iterable[tuple[int, ...]]:
    """Kind sequences of all peaks up to ``max_len`` letters."""
    def rec(n, h, popping, prefix):
        if h == 0 and prefix is not None:
            yield tuple(prefix)
        if n == 0:
            return
        prefix.append(NEUTRAL)
        yield from rec(n - 1, h, popping, prefix)
        prefix.pop()
        if not popping and h + 1 <= n - 1:
            prefix.append(PUSH)
            yield from rec(n - 1, h + 1, False, prefix)
            prefix.pop()
        if h > 0:
            prefix.append(POP)
            yield from rec(n - 1, h - 1, True, prefix)
            prefix.pop()

    yield from rec(max_len, 0, False, [])


# --- all-pairs distances by common descendants -----------------------------------


def deletion_descendants(word: Sequence[Token]) -> set[tuple]:
    """Every word reachable from a balanced word by deleting letters and matched pairs."""
    match = _matching(word)
    units = [(i,) for i, (_, k, _) in enumerate(word) if k == NEUTRAL]
    units += [(i, j) for i, j in match.items() if word[i][1] == PUSH]
    out = set()
    for r in range(len(units) + 1):
        for keep in itertools.combinations(units, r):
            out.add(tuple(word[i] for i in sorted(i for u in keep for i in u)))
    return out


def subsequences(seq: Sequence) -> set[tuple]:
    return {tuple(seq[i] for i in c) for r in range(len(seq) + 1) for c in itertools.combinations(range(len(seq)), r)}


def max_common_weight(families: Sequence[set], weight: Callable) -> "np.ndarray":
    """``M[a, b]`` is the heaviest element shared by ``families[a]`` and ``families[b]``."""
    import numpy as np

    owners: dict = {}
    for i, fam in enumerate(families):
        for x in fam:
            owners.setdefault(x, []).append(i)
    best = np.zeros((len(families), len(families)), dtype=np.int32)
    for x, ids in sorted(owners.items(), key=lambda kv: weight(kv[0])):
        idx = np.asarray(ids)
        best[np.ix_(idx, idx)] = weight(x)
    return best


def bdist_matrix(words: Sequence[Sequence[Token]]) -> "np.ndarray":
    """All-pairs balanced-edit distance of short balanced words.

    Some optimal edit sequence deletes down to a common descendant and then
    inserts, so the distance is ``w(u) + w(v) - 2 w(common)``.
    """
    import numpy as np

    size = lambda w: sum(t[2] for t in w)
    sizes = np.array([size(w) for w in words])
    common = max_common_weight([deletion_descendants(w) for w in words], size)
    return sizes[:, None] + sizes[None, :] - 2 * common


def edit_matrix(words: Sequence[Sequence]) -> "np.ndarray":
    """All-pairs insert/delete edit distance with unit letters."""
    import numpy as np

    sizes = np.array([len(w) for w in words])
    common = max_common_weight([subsequences(w) for w in words], len)
    return sizes[:, None] + sizes[None, :] - 2 * common
