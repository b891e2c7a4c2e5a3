"""Request/response models of the session HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class DomainIn(BaseModel):
    bounds: list[tuple[float, float]]
    grid_per_dim: int = 33


class SessionConfigIn(BaseModel):
    seed: int = 0
    n_init: int = 5
    n_features: int = 500
    landmarks: str = "grid"
    simulated: str | None = None  # benchmark id for demo/test sessions


class SessionCreateIn(BaseModel):
    domain: DomainIn
    policy: str = "dts"
    config: SessionConfigIn = Field(default_factory=SessionConfigIn)


class SessionCreateOut(BaseModel):
    id: str


class DuelOut(BaseModel):
    left: list[float]
    right: list[float]
    iteration: int


class OutcomeIn(BaseModel):
    y: int


class OutcomeOut(BaseModel):
    size: int


class WinnerTableOut(BaseModel):
    points: list[list[float]]
    scores: list[float]


class WinnerOut(BaseModel):
    point: list[float]
    score: float
    table: WinnerTableOut


class HistoryEntryOut(BaseModel):
    left: list[float]
    right: list[float]
    y: int


class SessionStateOut(BaseModel):
    id: str
    domain: DomainIn
    policy: str
    config: SessionConfigIn
    size: int
    pending: DuelOut | None
    history: list[HistoryEntryOut]


class ErrorOut(BaseModel):
    code: str
    message: str
