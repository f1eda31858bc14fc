"""Operations behind both front ends: plain functions from request to response models."""
from __future__ import annotations

from importlib.resources import files
from pathlib import Path

from . import harness, oracle
from .automata import NEUTRAL, POP, PUSH, Vpa, VpaSyntaxError, parse_vpa
from .exact import run_exact
from .schemas import (
    BdistRequest,
    BdistResponse,
    ExactRequest,
    ExactResponse,
    FardistRequest,
    FardistResponse,
    GenDisjRequest,
    GenMemberRequest,
    GenResponse,
    RunRequest,
    RunResponse,
    TestReport,
    TestRequest,
)
from .tester import ConfigError, TesterConfig, run_tester
from .words import format_stream, parse_stream

BUILTIN = ("disj", "paren", "nest4")


class MalformedInput(ValueError):
    """The machine, the stream or a parameter cannot be used as given."""


def builtin_machine(name: str) -> str:
    return files("vplt").joinpath(f"machines/{name}.vpa").read_text()


def machine_text(ref: str) -> str:
    """Text of a machine given a file path or a builtin name."""
    path = Path(ref)
    if path.is_file():
        return path.read_text()
    if ref in BUILTIN:
        return builtin_machine(ref)
    raise MalformedInput(f"no such machine file or builtin: {ref!r}")


def load_vpa(text: str, name: str = "vpa") -> Vpa:
    try:
        return parse_vpa(text, name)
    except (VpaSyntaxError, ValueError) as exc:
        raise MalformedInput(f"bad machine: {exc}") from exc


def _tokens(text: str) -> tuple[list[str], int | None]:
    try:
        return parse_stream(text)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc


def _check_symbols(vpa: Vpa, tokens: list[str]) -> None:
    kinds = vpa.alphabet.kinds
    for i, tok in enumerate(tokens):
        if tok not in kinds:
            raise MalformedInput(f"symbol {tok!r} at position {i} is not in the alphabet")


def exact(req: ExactRequest) -> ExactResponse:
    vpa = load_vpa(req.vpa)
    tokens, _ = _tokens(req.stream)
    _check_symbols(vpa, tokens)
    res = run_exact(vpa, tokens)
    st = res.stats
    return ExactResponse(accepted=res.accepted, reason=res.reason, n=len(tokens), max_stack=st.max_stack, max_depth=st.max_depth)


def test(req: TestRequest) -> TestReport:
    vpa = load_vpa(req.vpa)
    tokens, declared = _tokens(req.stream)
    _check_symbols(vpa, tokens)
    n = req.n if req.n is not None else declared
    if n is not None and n != len(tokens):
        raise MalformedInput(f"declared length {n} but the stream has {len(tokens)} symbols")
    try:
        cfg = TesterConfig(
            req.epsilon, req.eta, n, seed=req.seed, profile=req.profile, T=req.T, k=req.k,
            peak_factor=req.peak_factor, oracle=req.oracle,
        )
        res = run_tester(vpa, tokens, cfg)
    except (ConfigError, ValueError, ZeroDivisionError) as exc:
        raise MalformedInput(str(exc)) from exc
    p, st = res.params, res.stats
    return TestReport(
        verdict=res.verdict,
        reason=res.reason,
        seed=req.seed,
        n=len(tokens),
        epsilon=str(cfg.epsilon),
        eta=str(cfg.eta),
        profile=p.profile,
        T=p.T,
        k=p.k,
        alpha=str(p.alpha),
        max_stack=st.max_stack,
        decomposition_sizes=st.decomposition_sizes,
        stored_items_peak=st.stored_items_peak,
        compressions=st.compressions,
        ms=round(res.ms, 3),
    )


_OPEN, _CLOSE = "([{<", ")]}>"


def infer_kinds(*words: list[str]) -> dict[str, int]:
    """Symbol classes without a machine: ``x'`` and closing brackets pop,
    ``x`` with a matching ``x'`` and opening brackets push, the rest is neutral."""
    seen = {t for w in words for t in w}
    kinds = {}
    for t in seen:
        if t.endswith("'") or t in _CLOSE:
            kinds[t] = POP
        elif t in _OPEN or t + "'" in seen:
            kinds[t] = PUSH
        else:
            kinds[t] = NEUTRAL
    return kinds


def bdist(req: BdistRequest) -> BdistResponse:
    u, _ = _tokens(req.u)
    v, _ = _tokens(req.v)
    if req.vpa is not None:
        vpa = load_vpa(req.vpa)
        _check_symbols(vpa, u + v)
        kinds = vpa.alphabet.kinds
    else:
        kinds = infer_kinds(u, v)
    try:
        d = oracle.bdist([(t, kinds[t], 1) for t in u], [(t, kinds[t], 1) for t in v])
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    return BdistResponse(distance=d)


def fardist(req: FardistRequest) -> FardistResponse:
    vpa = load_vpa(req.vpa)
    tokens, _ = _tokens(req.stream)
    _check_symbols(vpa, tokens)
    try:
        d = oracle.bdist_to_language(tokens, vpa, req.bound)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    return FardistResponse(distance=d, bound=req.bound, n=len(tokens), exceeded=d is None)


def gen_disj(req: GenDisjRequest) -> GenResponse:
    try:
        inst = harness.gen_disj(req.n, req.mode, req.j, req.seed, req.epsilon)
    except (harness.GeneratorError, ValueError) as exc:
        raise MalformedInput(str(exc)) from exc
    return GenResponse(stream=format_stream(inst.tokens), n=len(inst.tokens), certificate=inst.certificate)


def gen_member(req: GenMemberRequest) -> GenResponse:
    vpa = load_vpa(req.vpa)
    try:
        tokens = harness.gen_random_member(vpa, req.n, req.seed)
    except harness.GeneratorError as exc:
        raise MalformedInput(str(exc)) from exc
    return GenResponse(stream=format_stream(tokens), n=len(tokens))


def run(req: RunRequest) -> RunResponse:
    data = dict(req.config)
    data.pop("output", None)
    try:
        cfg = harness.ExperimentConfig.from_json(data)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad experiment config: {exc}") from exc
    text = req.vpa if req.vpa is not None else machine_text(cfg.vpa)
    vpa = load_vpa(text, Path(cfg.vpa).stem)
    try:
        report = harness.run_experiment(cfg, vpa)
    except (ConfigError, harness.GeneratorError) as exc:
        raise MalformedInput(str(exc)) from exc
    return RunResponse(report=report, csv=harness.rows_csv(report["rows"]))
