import csv
import io
import json
from fractions import Fraction

import pytest

from vplt.exact import run_exact
from vplt.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    GeneratorError,
    LengthTable,
    disj_core,
    far_certificate,
    fit_polylog,
    gen_disj,
    gen_random_member,
    rows_csv,
    run_experiment,
    trial_seed,
    write_report,
)
from vplt.oracle import bdist_to_language, brute_accepts


def test_disj_core_example(disj):
    w = disj_core("01", "00")
    assert w == ["0", "1", "0'", "0'"]
    assert run_exact(disj, w).accepted
    assert not run_exact(disj, disj_core("01", "01")).accepted


@pytest.mark.parametrize("n", [2, 3, 10, 101])
def test_disj_members(disj, n):
    for seed in range(10):
        inst = gen_disj(n, "member", seed=seed)
        assert len(inst.tokens) == n
        assert run_exact(disj, inst.tokens).accepted


def test_disj_far_shape_and_certificate(disj):
    inst = gen_disj(100, "far", seed=1, epsilon=Fraction(1, 5))
    assert inst.j == 20 and len(inst.tokens) == 100
    assert "bdist >= 40" in inst.certificate
    assert not run_exact(disj, inst.tokens).accepted


def test_far_certificate_is_a_true_lower_bound(disj):
    for n in range(2, 7):
        for j in range(1, n // 2 + 1):
            inst = gen_disj(n, "far", j=j, seed=n)
            assert bdist_to_language(inst.tokens, disj, 2 * j - 1) is None


def test_far_certificate_rejects_other_words():
    with pytest.raises(GeneratorError):
        far_certificate(["0", "0'"])
    with pytest.raises(GeneratorError):
        far_certificate(["a"])


def test_disj_argument_checks():
    with pytest.raises(GeneratorError):
        gen_disj(3, "far", j=2)
    with pytest.raises(GeneratorError):
        gen_disj(10, "sometimes")
    with pytest.raises(GeneratorError):
        disj_core("0", "01")


def test_disj_is_reproducible():
    assert gen_disj(50, seed=3).tokens == gen_disj(50, seed=3).tokens


def test_random_members_have_exact_length(machines):
    empty = {("disj", 1), ("paren", 1), ("paren", 7), ("paren", 333)}
    for name, vpa in machines.items():
        for n in (1, 2, 7, 40, 333):
            if (name, n) in empty:
                with pytest.raises(GeneratorError, match="no member"):
                    gen_random_member(vpa, n, seed=n)
                continue
            w = gen_random_member(vpa, n, seed=n)
            assert len(w) == n and run_exact(vpa, w).accepted


def test_random_members_cover_small_lengths(nest4):
    # nest4 has 1, 1, 7 and 13 members of lengths 1 to 4
    for n, count in ((1, 1), (2, 1), (3, 7), (4, 13)):
        seen = {tuple(gen_random_member(nest4, n, seed=s)) for s in range(200)}
        assert all(brute_accepts(nest4, w) for w in seen)
        assert len(seen) == count


def test_empty_member(paren):
    assert gen_random_member(paren, 0, seed=0) == []


def test_length_table_matches_exact_past_the_cap(nest4, paren, disj):
    for vpa in (nest4, paren, disj):
        short = LengthTable(vpa, cap=60)
        long = LengthTable(vpa, cap=200)
        for L in range(200):
            assert short[L] == long[L]


def _config(**kw):
    base = dict(vpa="disj", generator={"kind": "disj", "mode": "far"}, n=[64, 128], trials=3, seed=5)
    base.update(kw)
    return ExperimentConfig.from_json(base)


def test_experiment_is_deterministic(disj):
    a = run_experiment(_config(), disj)
    b = run_experiment(_config(), disj)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "ms"} for r in rows]
    assert strip(a["rows"]) == strip(b["rows"])
    assert len(a["rows"]) == 6 and a["certificates"]
    assert {s["n"] for s in a["summary"]} == {64, 128}


def test_experiment_csv_and_json(disj, tmp_path):
    report = run_experiment(_config(generator={"kind": "member"}), disj)
    text = rows_csv(report["rows"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert all(r["verdict"] == "accept" for r in rows)
    jpath, cpath = write_report(report, str(tmp_path / "out" / "run"))
    assert json.loads(jpath.read_text())["memory_fit"]["points"] == 2
    assert cpath.read_text() == text


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        _config(trials=0)
    with pytest.raises(ValueError):
        _config(n=[10, 5])
    with pytest.raises(ValueError):
        _config(generator={"kind": "other"})
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"vpa": "disj", "generator": {"kind": "disj"}, "n": [8], "colour": 1})


def test_trial_seeds_differ():
    seeds = {trial_seed(0, i, t) for i in range(4) for t in range(25)}
    assert len(seeds) == 100


def test_fit_recovers_exponent():
    ns = [2**e for e in range(10, 21)]
    values = [7 * (e**3) for e in range(10, 21)]
    fit = fit_polylog(ns, values)
    assert abs(fit["p"] - 3) < 1e-9 and abs(fit["c"] - 7) < 1e-6
    assert fit_polylog([1024], [5])["p"] == 0.0
