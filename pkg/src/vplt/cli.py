"""Command line client.

Every command builds a request model and hands it to :mod:`vplt.api`, or to
a running service when ``--server`` is given.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import api
from .harness import write_report
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

EXIT_ACCEPT, EXIT_REJECT, EXIT_MALFORMED = 0, 1, 2

ROUTES = {
    "exact": ("/exact", api.exact, ExactResponse),
    "test": ("/test", api.test, TestReport),
    "bdist": ("/oracle/bdist", api.bdist, BdistResponse),
    "fardist": ("/oracle/fardist", api.fardist, FardistResponse),
    "gen_disj": ("/gen/disj", api.gen_disj, GenResponse),
    "gen_member": ("/gen/member", api.gen_member, GenResponse),
    "run": ("/run", api.run, RunResponse),
}


def _call(ctx: click.Context, route: str, req):
    path, fn, model = ROUTES[route]
    server = ctx.find_root().obj.get("server")
    if server is None:
        return fn(req)
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + path, json=req.model_dump(), timeout=None)
    except httpx.HTTPError as exc:
        raise click.ClickException(f"cannot reach {server}: {exc}") from exc
    if resp.status_code == 422:
        detail = resp.json().get("detail")
        raise api.MalformedInput(detail if isinstance(detail, str) else json.dumps(detail))
    resp.raise_for_status()
    return model.model_validate(resp.json())


def _read(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise api.MalformedInput(f"cannot read {path}: {exc.strerror}") from exc


def _machine(ref: str) -> str:
    return api.machine_text(ref)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_MALFORMED)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--server", default=None, metavar="URL", help="forward requests to a running vplt service")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Streaming recognition and property testing for visibly pushdown languages."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--vpa", "vpa_ref", required=True, help="machine file or builtin name (disj, paren, nest4)")
@click.option("--input", "input_path", default=None, help="stream file (default: stdin)")
@click.option("--stats", is_flag=True, help="print {max_stack, max_depth, n} as JSON")
@click.pass_context
def exact(ctx, vpa_ref, input_path, stats):
    """Exact membership: exit 0 accept, 1 reject, 2 malformed input."""
    try:
        res = _call(ctx, "exact", ExactRequest(vpa=_machine(vpa_ref), stream=_read(input_path)))
    except api.MalformedInput as exc:
        _fail(exc)
    if stats:
        click.echo(json.dumps({"max_stack": res.max_stack, "max_depth": res.max_depth, "n": res.n}))
    else:
        click.echo("accept" if res.accepted else f"reject ({res.reason})")
    sys.exit(EXIT_ACCEPT if res.accepted else EXIT_REJECT)


@main.command()
@click.option("--vpa", "vpa_ref", required=True)
@click.option("--input", "input_path", default=None, help="stream file (default: stdin)")
@click.option("--epsilon", default="0.2", show_default=True)
@click.option("--eta", default="1/3", show_default=True)
@click.option("--n", "n", type=int, default=None, help="stream length (or a '%n' header)")
@click.option("--seed", type=int, default=None)
@click.option("--profile", type=click.Choice(["desk", "theorem", "peak"]), default="desk", show_default=True)
@click.option("--T", "samples", type=int, default=None, help="override the sample count per suffix")
@click.option("--k", "factor", type=int, default=None, help="override the factor length")
@click.option("--peak-factor", type=click.Choice(["2", "4"]), default="2", help="t multiplier of the peak profile")
@click.option("--oracle", is_flag=True, help="keep every letter and compress exactly")
@click.option("--out", default=None, help="write the JSON report here")
@click.pass_context
def test(ctx, vpa_ref, input_path, epsilon, eta, n, seed, profile, samples, factor, peak_factor, oracle, out):
    """Run the streaming epsilon-tester and print a JSON report."""
    try:
        req = TestRequest(
            vpa=_machine(vpa_ref), stream=_read(input_path), epsilon=epsilon, eta=eta, n=n, seed=seed,
            profile=profile, T=samples, k=factor, peak_factor=int(peak_factor), oracle=oracle,
        )
        rep = _call(ctx, "test", req)
    except api.MalformedInput as exc:
        _fail(exc)
    _emit(json.dumps(rep.model_dump(), indent=2) + "\n", out)
    sys.exit(EXIT_ACCEPT if rep.verdict == "accept" else EXIT_REJECT)


@main.group(name="oracle")
def oracle_group():
    """Brute-force distances for small inputs."""


@oracle_group.command()
@click.argument("file1")
@click.argument("file2")
@click.option("--vpa", "vpa_ref", default=None, help="machine fixing the symbol classes")
@click.pass_context
def bdist(ctx, file1, file2, vpa_ref):
    """Balanced-edit distance between two balanced words."""
    try:
        req = BdistRequest(u=_read(file1), v=_read(file2), vpa=_machine(vpa_ref) if vpa_ref else None)
        res = _call(ctx, "bdist", req)
    except api.MalformedInput as exc:
        _fail(exc)
    click.echo(res.distance)


@oracle_group.command()
@click.option("--vpa", "vpa_ref", required=True)
@click.option("--input", "input_path", required=True)
@click.option("--bound", type=int, required=True)
@click.pass_context
def fardist(ctx, vpa_ref, input_path, bound):
    """Distance to the language, or '> B' past the bound."""
    try:
        res = _call(ctx, "fardist", FardistRequest(vpa=_machine(vpa_ref), stream=_read(input_path), bound=bound))
    except api.MalformedInput as exc:
        _fail(exc)
    click.echo(f"> {bound}" if res.exceeded else res.distance)


@main.group()
def gen():
    """Instance generators."""


@gen.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--mode", type=click.Choice(["member", "far"]), default="member", show_default=True)
@click.option("--j", "j", type=int, default=None, help="number of matched pairs")
@click.option("--seed", type=int, default=None)
@click.option("--epsilon", default="0.2", show_default=True, help="farness target when j is not given")
@click.option("--out", default=None)
@click.pass_context
def disj(ctx, n, mode, j, seed, epsilon, out):
    """A Disj member or a certified far word."""
    try:
        res = _call(ctx, "gen_disj", GenDisjRequest(n=n, mode=mode, j=j, seed=seed, epsilon=epsilon))
    except api.MalformedInput as exc:
        _fail(exc)
    _emit(res.stream, out)
    if res.certificate:
        click.echo(f"certificate: {res.certificate}", err=True)


@gen.command()
@click.option("--vpa", "vpa_ref", required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None)
@click.pass_context
def member(ctx, vpa_ref, n, seed, out):
    """A random member of the machine's language with exactly n symbols."""
    try:
        res = _call(ctx, "gen_member", GenMemberRequest(vpa=_machine(vpa_ref), n=n, seed=seed))
    except api.MalformedInput as exc:
        _fail(exc)
    _emit(res.stream, out)


@main.command()
@click.option("--config", "config_path", required=True, help="experiment config JSON (see docs/experiment-config.md)")
@click.option("--output", default=None, help="report prefix; writes PREFIX.json and PREFIX.csv")
@click.pass_context
def run(ctx, config_path, output):
    """Run an experiment and write JSON and CSV reports."""
    try:
        try:
            config = json.loads(_read(config_path))
        except json.JSONDecodeError as exc:
            raise api.MalformedInput(f"config is not JSON: {exc}") from exc
        if not isinstance(config, dict) or "vpa" not in config:
            raise api.MalformedInput("config must be an object with a 'vpa' entry")
        base = Path(config_path).parent
        ref = config["vpa"]
        if not Path(ref).is_file() and (base / ref).is_file():
            ref = str(base / ref)
        res = _call(ctx, "run", RunRequest(config=config, vpa=_machine(ref)))
    except api.MalformedInput as exc:
        _fail(exc)
    output = output or config.get("output")
    if output:
        jpath, cpath = write_report(res.report, output)
        click.echo(f"wrote {jpath} and {cpath}", err=True)
    summary = res.report["summary"]
    for row in summary:
        click.echo(
            f"n={row['n']:>8}  trials={row['trials']:>4}  accept={row['accept_rate']:.3f}  "
            f"stored_peak={row['stored_peak_max']}  stack_max={row['stack_max']}"
        )
    fit = res.report["memory_fit"]
    click.echo(f"memory fit: stored_peak ~ {fit['c']:.3g} * (log2 n)^{fit['p']:.3f}")


if __name__ == "__main__":
    main()
