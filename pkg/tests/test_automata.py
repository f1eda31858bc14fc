import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vplt.automata import (
    NEUTRAL,
    POP,
    PUSH,
    PushdownAlphabet,
    Relation,
    VpaSyntaxError,
    accepts,
    build_slicing,
    compose,
    is_peak,
    parse_vpa,
    reach_and_diameter,
    relation_of_balanced,
    sigma_diameter,
    slice_positions,
    slice_word,
)
from vplt.harness import random_machine
from vplt.oracle import balanced_words, brute_relation, peaks


def relations(m):
    return st.lists(st.integers(0, (1 << m) - 1), min_size=m, max_size=m).map(lambda rows: Relation(m, rows))


@given(st.integers(1, 6).flatmap(lambda m: st.tuples(relations(m), relations(m), relations(m))))
def test_compose_is_associative(rels):
    a, b, c = rels
    assert compose(compose(a, b), c) == compose(a, compose(b, c))


@given(st.integers(1, 6).flatmap(relations))
def test_identity_is_neutral(r):
    ident = Relation.identity(r.m)
    assert compose(ident, r) == r == compose(r, ident)


def test_compose_reads_left_to_right():
    r1 = Relation.from_pairs(3, [(0, 1)])
    r2 = Relation.from_pairs(3, [(1, 2)])
    assert compose(r1, r2).pairs() == [(0, 2)]
    assert not compose(r2, r1)


def test_compose_rejects_mixed_sizes():
    with pytest.raises(ValueError):
        compose(Relation.identity(2), Relation.identity(3))


def test_alphabet_classes_must_be_disjoint():
    with pytest.raises(ValueError):
        PushdownAlphabet(frozenset("a"), frozenset("a"), frozenset())
    with pytest.raises(ValueError):
        PushdownAlphabet(frozenset(), frozenset(), frozenset())


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("initial 0", "states"),
        ("states 2\nneutral a 0 5", "out of range"),
        ("states 2\nstack g\npush a 0 0 g\nneutral a 0 0", "both"),
        ("states 2\npush a 0 0 g", "not declared"),
        ("states 1\nfrobnicate", "unknown directive"),
        ("states 17", "at most"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(VpaSyntaxError, match=fragment):
        parse_vpa(text)


def test_parse_reports_line_numbers():
    with pytest.raises(VpaSyntaxError) as info:
        parse_vpa("states 2\n\n# comment\nneutral a 0 9\n")
    assert info.value.line == 4


def test_disj_examples(disj):
    assert relation_of_balanced(disj, "0 1 0' 0'".split()) == Relation.from_pairs(3, [(0, 2), (1, 2)])
    assert accepts(disj, "a 0 a 1' a".split())
    assert not accepts(disj, "1 1'".split())
    assert not accepts(disj, [])
    assert not accepts(disj, ["0"])


def test_unbalanced_words_are_rejected(paren):
    assert not accepts(paren, ["("])
    assert not accepts(paren, [")", "("])


def test_relation_matches_brute_force(machines):
    for vpa in machines.values():
        for w in balanced_words(vpa, 6):
            got = set(relation_of_balanced(vpa, w).pairs())
            assert got == brute_relation(vpa, w), w


def test_relation_is_a_morphism(nest4):
    words = list(balanced_words(nest4, 4))
    rng = random.Random(3)
    for _ in range(300):
        u, v = rng.choice(words), rng.choice(words)
        assert relation_of_balanced(nest4, u + v) == compose(
            relation_of_balanced(nest4, u), relation_of_balanced(nest4, v)
        )


def test_factor_substitution_keeps_relation(nest4):
    from vplt.words import Letter, letters_of

    rng = random.Random(5)
    words = [w for w in balanced_words(nest4, 8) if len(w) >= 4]
    for _ in range(200):
        w = rng.choice(words)
        letters = list(letters_of(nest4, w))
        # pick a balanced factor
        i = rng.randrange(len(w))
        for j in range(i + 1, len(w) + 1):
            h, ok = 0, True
            for x in letters[i:j]:
                h += 1 if x.kind == PUSH else -1 if x.kind == POP else 0
                ok = ok and h >= 0
            if ok and h == 0:
                rel = relation_of_balanced(nest4, letters[i:j])
                r = Letter.relation(rel, j - i, letters[i].pre_height, i, j, 1)
                assert relation_of_balanced(nest4, letters[:i] + [r] + letters[j:]) == relation_of_balanced(nest4, w)
                break


def test_slice_positions_order():
    # 0 push, 1 neutral, 2 push, 3 pop, 4 neutral, 5 pop, 6 neutral
    kinds = [PUSH, NEUTRAL, PUSH, POP, NEUTRAL, POP, NEUTRAL]
    assert slice_positions(kinds) == [(6,), (0, 5), (1,), (4,), (2, 3)]
    with pytest.raises(ValueError):
        slice_positions([PUSH, POP, PUSH, POP])


def test_slice_word_letters(disj):
    assert slice_word(disj, "a 0 a 1' a".split()) == [("L", "a"), ("R", "a"), ("P", "0", "1'"), ("L", "a")]


def test_slicing_equivalence_small(machines):
    for vpa in machines.values():
        nfa = build_slicing(vpa)
        for w in peaks(vpa, 7):
            assert nfa.accepts_sliced(slice_word(vpa, w)) == accepts(vpa, w), w


def test_is_peak():
    assert is_peak([PUSH, NEUTRAL, POP])
    assert not is_peak([PUSH, POP, PUSH, POP])
    assert not is_peak([POP, PUSH])


def test_builtin_diameters(disj):
    assert sigma_diameter(disj) == 2
    assert reach_and_diameter(build_slicing(disj))[1] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_diameter_bounds_random(seed, m):
    vpa = random_machine(random.Random(seed), m)
    assert sigma_diameter(vpa) <= 2 ** (m * m)
    assert reach_and_diameter(build_slicing(vpa))[1] <= 2 * m * m


def test_balanced_reach_contains_relations(nest4):
    reach = nest4.balanced_reach
    for w in balanced_words(nest4, 5):
        assert relation_of_balanced(nest4, w) <= reach
