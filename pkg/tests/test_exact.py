import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vplt.automata import accepts
from vplt.exact import ExactState, UNBALANCED, compress_balanced, depth_bound, run_exact, stack_bound, step
from vplt.harness import gen_random_member
from vplt.oracle import balanced_words, brute_accepts
from vplt.words import letters_of


def random_balanced(rng, vpa, n):
    al = vpa.alphabet
    pushes, pops, neutrals = sorted(al.push_symbols), sorted(al.pop_symbols), sorted(al.neutral_symbols)
    out, h = [], 0
    for i in range(n):
        left = n - i
        choices = []
        if neutrals and h <= left - 1:
            choices.append("n")
        if h + 1 <= left - 1:
            choices.append("+")
        if h > 0:
            choices.append("-")
        c = rng.choice(choices)
        if c == "n":
            out.append(rng.choice(neutrals))
        elif c == "+":
            out.append(rng.choice(pushes))
            h += 1
        else:
            out.append(rng.choice(pops))
            h -= 1
    return out


def test_agrees_with_brute_force_small(machines):
    for vpa in machines.values():
        for w in balanced_words(vpa, 7):
            assert run_exact(vpa, w).accepted == brute_accepts(vpa, w), w


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1 << 30), st.sampled_from(["disj", "paren", "nest4"]), st.integers(1, 400))
def test_agrees_with_fold_on_random_words(machines, seed, name, n):
    vpa = machines[name]
    rng = random.Random(seed)
    w = random_balanced(rng, vpa, n if name != "paren" else n - n % 2)
    assert run_exact(vpa, w).accepted == accepts(vpa, w)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1 << 30), st.sampled_from(["disj", "paren", "nest4"]), st.integers(2, 2000))
def test_stack_and_depth_bounds(machines, seed, name, n):
    vpa = machines[name]
    w = random_balanced(random.Random(seed), vpa, n if name != "paren" else n - n % 2)
    seen = []

    def check(state):
        seen.append(state.stack_height)
        assert state.stack_height <= stack_bound(state.stats.n)

    res = run_exact(vpa, w, on_step=check)
    assert res.stats.max_stack <= stack_bound(len(w))
    assert res.stats.max_depth <= max(1, depth_bound(len(w))) + 1e-9
    assert res.stats.nested_violations == 0


def test_unbalanced_inputs(disj):
    assert run_exact(disj, ["0'"]).reason == UNBALANCED
    assert run_exact(disj, ["0", "0"]).reason == UNBALANCED
    assert not run_exact(disj, []).accepted


def test_unknown_symbol(disj):
    with pytest.raises(ValueError):
        run_exact(disj, ["0", "q"])


def test_states_are_persistent(nest4):
    letters = list(letters_of(nest4, "< x x > y".split()))
    s0 = ExactState.initial(nest4)
    s1 = step(s0, letters[0])
    s2 = step(s1, letters[1])
    assert s1.u0_letters() == [letters[0]]
    assert s2.u0_letters() == letters[:2]
    # branching from s1 does not disturb s2
    s2b = step(s1, letters[3])
    assert s2.u0_letters() == letters[:2] and s2b.height == 0


def test_compress_balanced_checks_shape(nest4):
    xs = list(letters_of(nest4, "< >".split()))
    r = compress_balanced(nest4, xs)
    assert r.weight == 2 and r.depth == 1 and (0, 0) in r.rel
    with pytest.raises(ValueError):
        compress_balanced(nest4, xs[:1])
    with pytest.raises(ValueError):
        compress_balanced(nest4, [])


def test_members_with_deep_nesting(nest4, paren):
    for vpa in (nest4, paren):
        for seed in range(20):
            w = gen_random_member(vpa, 300, seed)
            res = run_exact(vpa, w)
            assert res.accepted
            assert res.stats.max_stack <= math.ceil(math.log2(300))


def test_bounds_helpers():
    assert stack_bound(1) == 0
    assert stack_bound(1024) == 10
    assert stack_bound(1025) == 11
    assert depth_bound(1) == 0
