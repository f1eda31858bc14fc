"""The streaming epsilon-tester.

It follows the exact recognizer step for step, but every unfinished peak is
summarized by a :class:`PeakSketch` (a suffix sampling whose samples are W_k
traces) and every compression is approximated from those samples.  Relations
only ever grow relative to the true ones, so members are always accepted.

With ``oracle=True`` the sketches keep every letter and compressions are
exact; the tester then makes the same decisions as :func:`vplt.exact.run_exact`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .automata import POP, PUSH, Relation, Vpa, build_slicing, reach_and_diameter, relation_of_balanced, sigma_diameter
from .exact import Item, UNBALANCED
from .regular import INF, ApproxParams, approximate_relation
from .suffix import SuffixSampling
from .words import Letter, Trace, TraceBook, letters_of, make_rng

PROFILES = ("desk", "theorem", "peak")
DESK_T = 8
DESK_K = 6
MEMORY_EVERY = 32


class ConfigError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def log2n(n: int) -> int:
    """``ceil(log2 n)``, at least 1."""
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def epsilon_prime(epsilon: Fraction, n: int) -> Fraction:
    return to_fraction(epsilon) / (6 * log2n(n))


def theorem_constants(m: int, d: int, n: int, epsilon, eta) -> tuple[int, int]:
    """Sample count and factor length of the general tester's proof.

    ``T = 2304 m^4 d^2 log^2 n log(1/eta) / eps^2`` and ``k = 24 m d log n / eps``,
    rounded up, where ``d`` stands for the diameter bound.
    """
    eps, eta = to_fraction(epsilon), to_fraction(eta)
    ln = math.log2(n) if n > 1 else 1.0
    log_eta = math.log2(1 / eta)
    T = math.ceil(2304 * m**4 * d**2 * ln**2 * log_eta / float(eps) ** 2)
    k = math.ceil(24 * m * d * ln / float(eps))
    return T, k


@dataclass(frozen=True)
class TesterParams:
    profile: str
    T: int
    k: int
    alpha: Fraction
    eps_prime: Fraction
    d: int

    @property
    def cells(self) -> int:
        # twice the nominal count per suffix
        return 2 * self.T


@dataclass
class TesterConfig:
    __test__ = False

    epsilon: Fraction
    eta: Fraction
    n: int | None
    seed: int | None = None
    profile: str = "desk"
    T: int | None = None
    k: int | None = None
    alpha: Fraction | None = None
    peak_factor: int = 2
    oracle: bool = False
    max_cells: int = 1 << 16

    def __post_init__(self):
        self.epsilon = to_fraction(self.epsilon)
        self.eta = to_fraction(self.eta)
        if self.alpha is not None:
            self.alpha = to_fraction(self.alpha)
        if not 0 < self.epsilon <= 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.peak_factor not in (2, 4):
            raise ConfigError("peak_factor must be 2 or 4")

    def resolve(self, vpa: Vpa) -> TesterParams:
        if self.n is None or self.n < 0:
            raise ConfigError("the stream length n must be declared (header '%n' or --n)")
        n = max(self.n, 1)
        eps_p = epsilon_prime(self.epsilon, n)
        m = vpa.m
        if self.profile == "theorem":
            d = min(2 ** (m * m), max(1, sigma_diameter(vpa)))
            T, k = theorem_constants(m, d, n, self.epsilon, self.eta)
            alpha = 1 + eps_p
        elif self.profile == "peak":
            d = min(reach_and_diameter(build_slicing(vpa))[1], 2 * m * m)
            ap = ApproxParams(self.epsilon, self.eta, max(d, 1), m, self.peak_factor)
            T, k = ap.T, ap.k
            alpha = 1 + eps_p
        else:
            d = max(1, sigma_diameter(vpa))
            T, k = DESK_T, DESK_K
            alpha = 1 + self.epsilon
        if self.T is not None:
            T = self.T
        if self.k is not None:
            k = self.k
        if self.alpha is not None:
            alpha = self.alpha
        if T < 1 or k < 0:
            raise ConfigError("T must be positive and k nonnegative")
        if alpha <= 1:
            raise ConfigError("alpha must exceed 1")
        if 2 * T > self.max_cells and not self.oracle:
            raise ConfigError(
                f"profile {self.profile!r} asks for {2 * T} samples per suffix (k={k}); "
                f"refusing to run above {self.max_cells}. Use --profile desk or override T and k."
            )
        return TesterParams(self.profile, T, k, alpha, eps_p, d)


@dataclass
class TesterStats:
    n: int = 0
    max_stack: int = 0
    compressions: int = 0
    max_decomposition: int = 0
    stored_items_peak: int = 0
    weight_gap_violations: int = 0
    decomposition_sizes: list = field(default_factory=list)


@dataclass
class TesterResult:
    accepted: bool
    reason: str | None
    params: TesterParams
    stats: TesterStats
    seed: int | None
    ms: float

    @property
    def verdict(self) -> str:
        return "accept" if self.accepted else "reject"


# --- sketches --------------------------------------------------------------------

H, START, FIRST_END = 0, 1, 2


def _in_v2(x: Letter, end_height: int) -> bool:
    return x.pre_height >= end_height


class _Run:
    """State shared by all sketches of one tester run."""

    def __init__(self, vpa: Vpa, params: TesterParams, rng, oracle: bool):
        self.vpa = vpa
        self.nfa = build_slicing(vpa)
        self.params = params
        self.rng = rng
        self.oracle = oracle
        self.traces: dict[int, Trace] = {}
        self.next_id = 0
        self.stats = TesterStats()

    def add_trace(self, tr: Trace) -> int:
        tid = self.next_id
        self.next_id += 1
        self.traces[tid] = tr
        return tid


@dataclass
class _Split:
    index: int
    end_height: int
    low: int
    high: int
    start: int | None


class PeakSketch:
    """Summary of one unfinished peak: first letter data, pop flag and a suffix sampling."""

    def __init__(self, run: _Run):
        p = run.params
        self.run = run
        self.D = SuffixSampling(p.cells, p.alpha, run.rng, meta_width=3)
        self.book = TraceBook(p.k)
        self.pending = 0
        self.has_pop = False
        self.first_pop = INF
        self.base_height: int | None = None
        self.start_pos: int | None = None
        self.first_weight: int | None = None
        self.end = 0
        self.depth = 0
        self.split: _Split | None = None

    @property
    def weight_low(self) -> int:
        return self.D.weight_low

    @property
    def weight_high(self) -> int:
        return self.D.weight_high

    def add(self, x: Letter, low: int, high: int) -> None:
        if self.base_height is None:
            self.base_height, self.start_pos, self.first_weight = x.pre_height, x.pos, low
        tr = self.book.start(x)
        tid = self.run.add_trace(tr)
        self.D.append_letter(tid, low, high, meta=(x.pre_height, x.pos, x.end))
        self.book.feed(x, tr)
        self.D.simplify()
        if x.kind == PUSH:
            self.pending += 1
        elif x.kind == POP:
            self.pending -= 1
            if not self.has_pop:
                self.has_pop, self.first_pop = True, x.pos
        self.end = x.end
        self.depth = max(self.depth, x.depth)

    def fragments(self, row: int) -> list[list[Letter]]:
        traces = self.run.traces
        return [traces[int(i)].letters() for i in np.unique(self.D.cells[row])]

    def compress_whole(self) -> Letter:
        rel = approximate_relation(
            self.fragments(0), self.run.nfa, self.base_height, self.first_pop, self.start_pos, self.end
        )
        return Letter.relation(rel, self.weight_low, self.base_height, self.start_pos, self.end, self.depth + 1)

    def freeze(self, end_height: int) -> None:
        meta = self.D.meta
        in_v2 = meta[:, H] >= end_height
        i = int(np.argmax(in_v2))
        lows, highs = self.D.lows(), self.D.highs()
        if i >= 1 and meta[i - 1, FIRST_END] == meta[i, START]:
            self.split = _Split(i, end_height, int(lows[i]), int(highs[i]), int(meta[i, START]))
        else:
            self.split = _Split(i, end_height, int(lows[i]), int(highs[max(i - 1, 0)]), None)

    @property
    def v2_low(self) -> int:
        return self.split.low

    def absorb(self, u0: "PeakSketch") -> Letter:
        """Replace v2 by its approximate relation and append ``u0``; returns that letter."""
        sp, run = self.split, self.run
        i, h_e = sp.index, sp.end_height
        traces = run.traces
        head_ids = np.unique(self.D.cells[:i])
        start = sp.start
        cuts = {}
        for tid in head_ids:
            tr = traces[int(tid)]
            if _in_v2(tr.start, h_e):
                continue
            for j, x in enumerate(tr.factor):
                if _in_v2(x, h_e):
                    cuts[int(tid)] = j
                    if start is None:
                        start = x.pos
                    break
        rel = approximate_relation(self.fragments(i), run.nfa, h_e, self.first_pop, start, self.end)
        pos = start if start is not None else self.end - 1
        r = Letter.relation(rel, sp.low, h_e, pos, self.end, self.depth + 1)
        rid = run.add_trace(Trace(r))
        book = self.book
        for tid, j in cuts.items():
            tr = traces[tid]
            tr.factor = tr.factor[:j] + [r]
            old_lo = tr.lo
            tr.lo = next((x.height for x in tr.factor if x.kind == PUSH), None)
            if old_lo != tr.lo:
                tr.window, tr.tail = None, None
                lst = book.waiting.get(old_lo)
                if lst is not None and tr in lst:
                    lst.remove(tr)
                if tr.lo is not None:
                    book.waiting.setdefault(tr.lo, []).append(tr)
        remap = {int(t): (rid if _in_v2(traces[int(t)].start, h_e) else int(t)) for t in head_ids}
        D = self.D.head(i)
        D.cells = np.vectorize(remap.__getitem__, otypes=[np.int64])(D.cells) if D.cells.size else D.cells
        D.push_entry(rid, sp.low, sp.high, meta=(h_e, pos, self.end))
        D.concatenate(u0.D)
        D.simplify()
        self.D = D
        live = {id(traces[int(t)]) for t in np.unique(D.cells[:i])}
        book.growing = [t for t in book.growing if id(t) in live and t.factor[-1] is not r]
        book.trailing = []
        book.retain(live)
        book.absorb(u0.book)
        book.trailing = u0.book.trailing
        book.buffer, book.seen_pop = u0.book.buffer, u0.book.seen_pop
        self.pending += u0.pending
        self.has_pop, self.first_pop = u0.has_pop, u0.first_pop
        self.end = u0.end
        self.depth = max(self.depth, u0.depth, r.depth)
        self.split = None
        return r

    def stored_items(self) -> int:
        return int(self.D.cells.size) + 2 * self.D.size

    def check_weight_gap(self, eps_prime: Fraction) -> int:
        lows, highs = self.D.lows(), self.D.highs()
        p, q = eps_prime.numerator, eps_prime.denominator
        # high - low <= 2 eps' low / 3
        return int(np.count_nonzero(3 * q * (highs - lows) > 2 * p * lows))


class ExactSketch:
    """Keeps every letter; compressions are exact.  Used for the oracle mode."""

    def __init__(self, run: _Run):
        self.run = run
        self.letters: list[Letter] = []
        self.pending = 0
        self.has_pop = False
        self.depth = 0
        self.weight = 0
        self.item: Item | None = None

    @property
    def weight_low(self) -> int:
        return self.weight

    weight_high = weight_low

    def add(self, x: Letter, low: int, high: int) -> None:
        self.letters.append(x)
        self.weight += x.weight
        if x.kind == PUSH:
            self.pending += 1
        elif x.kind == POP:
            self.pending -= 1
            self.has_pop = True
        self.depth = max(self.depth, x.depth)

    def compress_whole(self) -> Letter:
        rel = relation_of_balanced(self.run.vpa, self.letters)
        first, last = self.letters[0], self.letters[-1]
        return Letter.relation(rel, self.weight, first.pre_height, first.pos, last.end, self.depth + 1)

    def freeze(self, end_height: int) -> None:
        self.item = Item(self.letters, end_height, self.depth)

    @property
    def v2_low(self) -> int:
        return self.item.v2_weight

    def absorb(self, u0: "ExactSketch") -> Letter:
        v2 = self.item.v2
        rel = relation_of_balanced(self.run.vpa, v2)
        r = Letter.relation(rel, self.item.v2_weight, v2[0].pre_height, v2[0].pos, v2[-1].end, max(x.depth for x in v2) + 1)
        self.letters = self.item.v1 + [r] + u0.letters
        self.weight = self.item.v1_weight + r.weight + u0.weight
        self.pending = self.item.v1_pending + u0.pending
        self.has_pop = u0.has_pop
        self.depth = max(self.depth, u0.depth, r.depth)
        self.item = None
        return r

    def stored_items(self) -> int:
        return len(self.letters)

    def check_weight_gap(self, eps_prime) -> int:
        return 0


# --- driver ------------------------------------------------------------------------


class StreamTester:
    """Feed letters one at a time; call :meth:`finish` for the verdict."""

    def __init__(self, vpa: Vpa, config: TesterConfig):
        self.vpa = vpa
        self.config = config
        self.params = config.resolve(vpa)
        self.rng = make_rng(config.seed)
        self.run = _Run(vpa, self.params, self.rng, config.oracle)
        self.sketch_cls = ExactSketch if config.oracle else PeakSketch
        self.u0 = None
        self.stack: list = []
        self.r_temp = Relation.identity(vpa.m)
        self.height = 0
        self.failed: str | None = None
        self._accounted = 0
        self.t0 = time.perf_counter()

    @property
    def stats(self) -> TesterStats:
        return self.run.stats

    def _new_sketch(self):
        return self.sketch_cls(self.run)

    def feed(self, x: Letter) -> None:
        if self.failed is not None:
            return
        st = self.run.stats
        st.n += 1
        kind = x.kind
        self.height += 1 if kind == PUSH else -1 if kind == POP else 0
        if self.height < 0:
            self.failed = UNBALANCED
            return
        u0 = self.u0
        if kind == PUSH and u0 is not None and u0.has_pop:
            u0.freeze(self.height - 1)
            self.stack.append(u0)
            u0 = self.u0 = self._new_sketch()
        elif u0 is None:
            u0 = self.u0 = self._new_sketch()
        u0.add(x, x.weight, x.weight)
        if u0.pending == 0:
            if st.n - self._accounted >= MEMORY_EVERY // 4:
                self._account()
            r = u0.compress_whole()
            st.compressions += 1
            high = u0.weight_high
            if not self.stack:
                self.r_temp = self.r_temp.then(r.rel)
                self.u0 = None
            else:
                item = self.stack.pop()
                if isinstance(item, PeakSketch):
                    item.split = None
                else:
                    item.item = None
                item.add(r, r.weight, high)
                self.u0 = item
        while self.stack and self.u0 is not None and 2 * self.u0.weight_high >= self.stack[-1].v2_low:
            item = self.stack.pop()
            item.absorb(self.u0)
            self.u0 = item
            st.compressions += 1
        st.max_stack = max(st.max_stack, len(self.stack))
        if st.n - self._accounted >= MEMORY_EVERY:
            self._account()

    def _account(self) -> None:
        st = self.run.stats
        self._accounted = st.n
        sketches = self.stack + ([self.u0] if self.u0 is not None else [])
        if not self.config.oracle:
            live = set()
            for sk in sketches:
                live.update(int(t) for t in np.unique(sk.D.cells))
            traces = self.run.traces
            for tid in [t for t in traces if t not in live]:
                del traces[tid]
            for sk in sketches:
                sk.book.retain({id(traces[t]) for t in np.unique(sk.D.cells).tolist()})
            letters = sum(traces[t].size() for t in live)
            sizes = [sk.D.size for sk in sketches]
            stored = letters + sum(sk.stored_items() for sk in sketches)
            stored += sum(len(sk.book.buffer) for sk in sketches)
            st.max_decomposition = max([st.max_decomposition] + sizes)
            st.weight_gap_violations += sum(sk.check_weight_gap(self.params.eps_prime) for sk in sketches)
        else:
            stored = sum(sk.stored_items() for sk in sketches)
        if stored > st.stored_items_peak:
            st.stored_items_peak = stored
            st.decomposition_sizes = [sk.D.size for sk in sketches] if not self.config.oracle else []

    def finish(self) -> TesterResult:
        ms = (time.perf_counter() - self.t0) * 1000
        st = self.run.stats
        if self.failed is None:
            self._account()
        if self.failed is not None or self.height != 0:
            return TesterResult(False, UNBALANCED, self.params, st, self.config.seed, ms)
        ok = self.r_temp.intersects(self.vpa.initial_mask, self.vpa.final_mask)
        return TesterResult(ok, None if ok else "far from the language", self.params, st, self.config.seed, ms)


def run_tester(vpa: Vpa, stream: Iterable, config: TesterConfig) -> TesterResult:
    """Test a stream of symbols (or letters) against L(vpa)."""
    tester = StreamTester(vpa, config)
    it = iter(stream)
    for x in it:
        if not isinstance(x, Letter):
            for y in letters_of(vpa, _chain(x, it)):
                tester.feed(y)
                if tester.failed:
                    break
            break
        tester.feed(x)
        if tester.failed:
            break
    return tester.finish()


def _chain(first, rest):
    yield first
    yield from rest


def sketch_decompose(sketch: PeakSketch, end_height: int) -> _Split:
    """Split a frozen peak sketch at its maximal balanced suffix (index and v2 estimates)."""
    sketch.freeze(end_height)
    return sketch.split


def sketch_concatenate(item: PeakSketch, u0: PeakSketch) -> Letter:
    """Compress the v2 part of ``item`` and append ``u0`` to it in place."""
    if item.split is None:
        raise ValueError("sketch must be decomposed first")
    return item.absorb(u0)
