"""Request and response models shared by the HTTP service and the CLI."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ExactRequest(BaseModel):
    vpa: str = Field(description="machine in the VPA file format")
    stream: str = Field(description="whitespace separated symbols, optional '%n' header")


class ExactResponse(BaseModel):
    accepted: bool
    reason: Optional[str] = None
    n: int
    max_stack: int
    max_depth: int


class TestRequest(BaseModel):
    __test__ = False

    vpa: str
    stream: str
    epsilon: str = "0.2"
    eta: str = "1/3"
    n: Optional[int] = None
    seed: Optional[int] = None
    profile: Literal["desk", "theorem", "peak"] = "desk"
    T: Optional[int] = None
    k: Optional[int] = None
    peak_factor: Literal[2, 4] = 2
    oracle: bool = False


class TestReport(BaseModel):
    __test__ = False

    verdict: Literal["accept", "reject"]
    reason: Optional[str] = None
    seed: Optional[int]
    n: int
    epsilon: str
    eta: str
    profile: str
    T: int
    k: int
    alpha: str
    max_stack: int
    decomposition_sizes: list[int]
    stored_items_peak: int
    compressions: int
    ms: float


class BdistRequest(BaseModel):
    u: str
    v: str
    vpa: Optional[str] = Field(default=None, description="machine giving the symbol classes")


class BdistResponse(BaseModel):
    distance: int


class FardistRequest(BaseModel):
    vpa: str
    stream: str
    bound: int = Field(ge=0)


class FardistResponse(BaseModel):
    distance: Optional[int] = Field(description="null when the distance exceeds the bound")
    bound: int
    n: int
    exceeded: bool


class GenDisjRequest(BaseModel):
    n: int = Field(ge=0)
    mode: Literal["member", "far"] = "member"
    j: Optional[int] = None
    seed: Optional[int] = None
    epsilon: str = "0.2"


class GenMemberRequest(BaseModel):
    vpa: str
    n: int = Field(ge=0)
    seed: Optional[int] = None


class GenResponse(BaseModel):
    stream: str
    n: int
    certificate: Optional[str] = None


class RunRequest(BaseModel):
    config: dict
    vpa: Optional[str] = Field(default=None, description="machine text; overrides config['vpa']")


class RunResponse(BaseModel):
    report: dict
    csv: str
