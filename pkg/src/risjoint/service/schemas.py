"""Request/response models of the HTTP API."""
from __future__ import annotations

import math
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

# JSON has no infinity; the noiseless grid point travels as the string "inf".
SnrValue = Union[Literal["inf"], float]


def encode_snr(value: float) -> SnrValue:
    return "inf" if math.isinf(value) else value


def decode_snr(value: SnrValue) -> float:
    return math.inf if value == "inf" else float(value)


class ResultRowModel(BaseModel):
    method: str
    snr_db: SnrValue
    nmse_hr_db: Optional[float] = None
    nmse_hs_db: Optional[float] = None
    nmse_x_db: Optional[float] = None
    mean_als_iters: Optional[float] = None
    mean_bigamp_iters: Optional[float] = None
    trials_used: int
    failures: int
    wall_time: Optional[float] = None


class ResultTableModel(BaseModel):
    label: str = ""
    rows: list[ResultRowModel]


class TrialRecordModel(BaseModel):
    trial: int
    method: str
    snr_db: SnrValue
    nmse_hr: Optional[float] = None
    nmse_hs: Optional[float] = None
    nmse_x: Optional[float] = None
    als_iters: Optional[int] = None
    bigamp_iters: Optional[int] = None
    failed: bool = False
    error: str = ""
    seconds: float = 0.0


class RunRequest(BaseModel):
    preset: Optional[str] = None
    config_text: Optional[str] = Field(default=None, description="config document (risjoint-config 1)")
    trials: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    methods: Optional[list[str]] = None
    snr_grid_db: Optional[list[SnrValue]] = None
    record_timing: Optional[bool] = None
    workers: int = Field(default=1, ge=1)
    per_trial: bool = False

    @field_validator("methods")
    @classmethod
    def _non_empty(cls, v):
        if v is not None and not v:
            raise ValueError("methods must not be empty")
        return v


class RunResponse(BaseModel):
    name: str
    config_text: str
    tables: list[ResultTableModel]
    trials: Optional[list[TrialRecordModel]] = None


class ErrorBody(BaseModel):
    kind: Literal["config_error", "aborted"]
    message: str
    method: Optional[str] = None
    snr_db: Optional[SnrValue] = None
    failures: Optional[int] = None
    trials: Optional[int] = None
    partial: Optional[RunResponse] = None


class PresetInfo(BaseModel):
    name: str
    description: str
    config_text: str


class JobStatus(BaseModel):
    job_id: str
    status: Literal["queued", "running", "done", "failed"]
    result: Optional[RunResponse] = None
    error: Optional[ErrorBody] = None


class VersionInfo(BaseModel):
    version: str
