from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vplt.automata import NEUTRAL, POP, PUSH
from vplt.oracle import exact_sampler_distribution, wk_distribution
from vplt.words import (
    BalanceChecker,
    Letter,
    TraceBook,
    WkSampler,
    check_balanced,
    format_stream,
    k_factor_at,
    letters_of,
    make_coin,
    make_rng,
    parse_stream,
    reservoir_letters,
    weighted_word,
)


def unit_letters(kinds):
    out, h = [], 0
    for pos, kind in enumerate(kinds):
        if kind == POP:
            h -= 1
        out.append(Letter(str(pos), kind, 1, h, pos))
        if kind == PUSH:
            h += 1
    return out


def test_parse_stream_header():
    assert parse_stream("%n 3\na b\nc\n") == (["a", "b", "c"], 3)
    assert parse_stream("a  b") == (["a", "b"], None)
    assert parse_stream("") == ([], None)
    with pytest.raises(ValueError):
        parse_stream("%n many\na")


def test_format_stream_round_trip():
    toks = ["0", "a", "0'"]
    assert parse_stream(format_stream(toks)) == (toks, 3)
    assert parse_stream(format_stream(toks, header=False)) == (toks, None)


def test_letters_carry_heights(disj):
    xs = list(letters_of(disj, "0 a 1 1' 0'".split()))
    assert [x.height for x in xs] == [0, 1, 1, 1, 0]
    assert [x.pre_height for x in xs] == [0, 1, 1, 2, 1]
    with pytest.raises(ValueError, match="not in the alphabet"):
        list(letters_of(disj, ["z"]))


def test_weighted_word_positions(disj):
    w = weighted_word(disj, ["a", "a", "a"], [2, 1, 3])
    assert w.total_weight == 6
    assert [(x.pos, x.end) for x in w] == [(0, 2), (2, 3), (3, 6)]


@given(st.lists(st.sampled_from([PUSH, POP, NEUTRAL]), max_size=30))
def test_balance_checker_matches_definition(kinds):
    h, ok = 0, True
    for k in kinds:
        h += 1 if k == PUSH else -1 if k == POP else 0
        ok = ok and h >= 0
    assert check_balanced(kinds) == (ok and h == 0)


def test_balance_checker_state_is_one_integer():
    assert BalanceChecker.__slots__ == ("height",)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=6))
def test_reservoir_is_weight_proportional(weights):
    word = [Letter("a", NEUTRAL, w, 0, 0) for w in weights]
    dist = exact_sampler_distribution("reservoir", word)
    total = sum(weights)
    assert dist == {(i,): Fraction(w, total) for i, w in enumerate(weights)}


def test_reservoir_example():
    word = [Letter("a", NEUTRAL, w, 0, 0) for w in (1, 2, 1)]
    dist = exact_sampler_distribution("reservoir", word)
    assert dist == {(0,): Fraction(1, 4), (1,): Fraction(1, 2), (2,): Fraction(1, 4)}


def test_reservoir_cells_are_independent():
    word = [Letter("a", NEUTRAL, 1, 0, 0) for _ in range(3)]
    dist = exact_sampler_distribution("reservoir", word, t=2)
    assert dist == {(i, j): Fraction(1, 9) for i in range(3) for j in range(3)}


def test_reservoir_empty_stream():
    with pytest.raises(ValueError):
        reservoir_letters([], 1, lambda a, b: True)


def test_k_factor_ranges():
    word = [Letter("a", NEUTRAL, w, 0, 0) for w in (1, 2, 1, 1)]
    assert k_factor_at(word, 0, 2) == (0, 1)
    assert k_factor_at(word, 1, 2) == (1, 1)
    assert k_factor_at(word, 3, 5) == (3, 3)


def test_wk_spec_example():
    # "0 0 0' 0'" with k = 1: each start letter equally likely
    word = unit_letters([PUSH, PUSH, POP, POP])
    dist = wk_distribution(word, 1)
    assert sum(dist.values()) == 1
    assert dist[(0, 1, 2, 3)] == Fraction(1, 4)
    assert dist == exact_sampler_distribution("wk", word, k=1)


def test_wk_window_covers_matching_pop():
    word = unit_letters([PUSH, NEUTRAL, NEUTRAL, NEUTRAL, POP, NEUTRAL])
    script = iter([False] * 10)
    frag = WkSampler(1, lambda a, b: next(script))
    for x in word:
        frag.feed(x)
    got = {x.pos for x in frag.result().letters()}
    assert {0, 1, 4, 5} <= got


def test_wk_rejects_non_peaks():
    sampler = WkSampler(1, lambda a, b: False)
    for x in unit_letters([PUSH, POP]):
        sampler.feed(x)
    with pytest.raises(ValueError):
        sampler.feed(Letter("0", PUSH, 1, 0, 2))


def test_trace_book_memory_is_bounded():
    k = 2
    book = TraceBook(k)
    word = unit_letters([PUSH] * 5 + [NEUTRAL] * 3 + [POP] * 5 + [NEUTRAL] * 10)
    traces = []
    for x in word:
        tr = book.start(x)
        traces.append(tr)
        book.feed(x, tr)
    assert len(book.buffer) <= 2 * k + 1
    for tr in traces:
        assert len(tr.factor) <= k + 1
        assert len(tr.window or ()) <= 2 * k + 1
        assert len(tr.tail or ()) <= k


def test_coin_is_exact_at_the_ends():
    coin = make_coin(make_rng(1))
    assert coin(3, 3)
    assert not coin(0, 3)


def test_rng_is_reproducible():
    assert make_rng(7).integers(0, 1 << 40) == make_rng(7).integers(0, 1 << 40)
