import random
from fractions import Fraction

import pytest

from vplt.automata import POP, build_slicing, relation_of_balanced
from vplt.oracle import peaks
from vplt.regular import INF, ApproxParams, FragmentConflict, approximate_relation, collect, fragment_relation
from vplt.words import Letter, letters_of, make_coin, make_rng, peak_sample_wk


def peak_context(letters):
    first_pop = next((x.pos for x in letters if x.kind == POP), INF)
    return dict(base_height=0, first_pop=first_pop, start=0, stop=len(letters))


def test_full_information_is_exact(machines):
    for vpa in machines.values():
        nfa = build_slicing(vpa)
        for w in peaks(vpa, 8):
            if not w:
                continue
            xs = list(letters_of(vpa, w))
            assert approximate_relation([xs], nfa, **peak_context(xs)) == relation_of_balanced(vpa, xs), w


def test_sampled_fragments_are_sound(machines):
    rng = make_rng(11)
    coin = make_coin(rng)
    for vpa in machines.values():
        nfa = build_slicing(vpa)
        words = [w for w in peaks(vpa, 9) if w]
        for w in random.Random(2).sample(words, min(400, len(words))):
            xs = list(letters_of(vpa, w))
            exact = relation_of_balanced(vpa, xs)
            for k in (1, 2):
                frags = [peak_sample_wk(xs, k, coin).letters() for _ in range(3)]
                approx = approximate_relation(frags, nfa, **peak_context(xs))
                assert exact <= approx, (w, k)


def test_more_fragments_never_grow_the_relation(nest4):
    nfa = build_slicing(nest4)
    coin = make_coin(make_rng(5))
    words = [w for w in peaks(nest4, 9) if len(w) >= 4]
    for w in random.Random(1).sample(words, 200):
        xs = list(letters_of(nest4, w))
        ctx = peak_context(xs)
        frags = [peak_sample_wk(xs, 1, coin).letters() for _ in range(4)]
        prev = approximate_relation([], nfa, **ctx)
        for i in range(1, len(frags) + 1):
            cur = approximate_relation(frags[:i], nfa, **ctx)
            assert cur <= prev
            prev = cur


def test_dropping_end_markers_is_still_sound(disj):
    nfa = build_slicing(disj)
    for w in peaks(disj, 7):
        if not w:
            continue
        xs = list(letters_of(disj, w))
        ctx = peak_context(xs)
        loose = approximate_relation([xs], nfa, ctx["base_height"], ctx["first_pop"])
        assert relation_of_balanced(disj, xs) <= loose


def test_relation_letters_in_fragments(nest4):
    nfa = build_slicing(nest4)
    xs = list(letters_of(nest4, "< x x > y".split()))
    inner = relation_of_balanced(nest4, xs[:4])
    r = Letter.relation(inner, 4, 0, 0, 4, 1)
    ys = [r, xs[4]]
    assert approximate_relation([ys], nfa, start=0, stop=5) == relation_of_balanced(nest4, xs)


def test_conflicting_fragments(disj):
    a = list(letters_of(disj, "0 0'".split()))
    b = list(letters_of(disj, "1 0'".split()))
    with pytest.raises(FragmentConflict):
        collect([a, b], 0, 1)


def test_fragment_relation_identity(disj):
    nfa = build_slicing(disj)
    assert fragment_relation([], nfa) == [1 << x for x in range(nfa.size)]


def test_approx_params_formulas():
    p = ApproxParams(Fraction(1, 2), Fraction(1, 4), d=2, m=3)
    assert p.k == 48
    assert p.t == 2 * 4 * 2 * 27 * 2 * 2
    assert p.T == 4 * p.k * p.t
    assert ApproxParams(Fraction(1, 2), Fraction(1, 4), 2, 3, factor=4).t == 2 * p.t
