"""HTTP front end.  Run with ``uvicorn vplt.service:app``."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__, api
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

app = FastAPI(title="vplt", version=__version__)


def _call(fn, req):
    try:
        return fn(req)
    except api.MalformedInput as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/exact", response_model=ExactResponse)
def exact(req: ExactRequest):
    return _call(api.exact, req)


@app.post("/test", response_model=TestReport)
def test(req: TestRequest):
    return _call(api.test, req)


@app.post("/oracle/bdist", response_model=BdistResponse)
def bdist(req: BdistRequest):
    return _call(api.bdist, req)


@app.post("/oracle/fardist", response_model=FardistResponse)
def fardist(req: FardistRequest):
    return _call(api.fardist, req)


@app.post("/gen/disj", response_model=GenResponse)
def gen_disj(req: GenDisjRequest):
    return _call(api.gen_disj, req)


@app.post("/gen/member", response_model=GenResponse)
def gen_member(req: GenMemberRequest):
    return _call(api.gen_member, req)


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest):
    return _call(api.run, req)
