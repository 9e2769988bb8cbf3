"""HTTP API around the experiment harness.

Endpoints::

    GET  /version
    GET  /presets                 list presets with their config documents
    GET  /presets/{name}
    POST /experiments             run synchronously, return result tables
    POST /jobs                    run in a background thread
    GET  /jobs/{job_id}

Config problems answer 400 and aborted experiments 409, both with an
:class:`ErrorBody` under ``detail``.
"""
from __future__ import annotations

import threading
import uuid
from dataclasses import asdict, replace

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ConfigError, ExperimentAborted
from ..harness.config import ExperimentConfig, dump_config, parse_config
from ..harness.experiment import ResultRow, ResultTable, flatten_trials, run_experiment
from ..harness.presets import DESCRIPTIONS, preset, preset_names
from .schemas import (ErrorBody, JobStatus, PresetInfo, ResultRowModel, ResultTableModel,
                      RunRequest, RunResponse, TrialRecordModel, VersionInfo, decode_snr,
                      encode_snr)

app = FastAPI(title="risjoint", version=__version__)

_jobs: dict[str, JobStatus] = {}
_jobs_lock = threading.Lock()


def table_model(table: ResultTable) -> ResultTableModel:
    rows = []
    for row in table.rows:
        data = asdict(row)
        data["snr_db"] = encode_snr(row.snr_db)
        rows.append(ResultRowModel(**data))
    return ResultTableModel(label=table.label, rows=rows)


def table_from_model(model: ResultTableModel) -> ResultTable:
    rows = []
    for row in model.rows:
        data = row.model_dump()
        data["snr_db"] = decode_snr(row.snr_db)
        rows.append(ResultRow(**data))
    return ResultTable(rows=rows, label=model.label)


def _trial_models(per_trial):
    out = []
    for rec in flatten_trials(per_trial):
        data = asdict(rec)
        data["snr_db"] = encode_snr(rec.snr_db)
        out.append(TrialRecordModel(**data))
    return out


def build_config(req: RunRequest) -> ExperimentConfig:
    if (req.preset is None) == (req.config_text is None):
        raise ConfigError("give exactly one of preset or config_text")
    cfg = preset(req.preset) if req.preset is not None else parse_config(req.config_text)
    changes = {}
    if req.trials is not None:
        changes["trials"] = req.trials
    if req.seed is not None:
        changes["master_seed"] = req.seed
    if req.methods is not None:
        changes["methods"] = tuple(req.methods)
    if req.snr_grid_db is not None:
        changes["snr_grid_db"] = tuple(decode_snr(s) for s in req.snr_grid_db)
    if req.record_timing is not None:
        changes["record_timing"] = req.record_timing
    try:
        return replace(cfg, **changes) if changes else cfg
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def execute(req: RunRequest) -> RunResponse:
    """Run the request; raises ConfigError / ExperimentAborted."""
    cfg = build_config(req)
    tables = []
    trials = []
    for label, sub in cfg.variants():
        try:
            table, per_trial = run_experiment(sub, req.workers, return_trials=True, label=label)
        except ExperimentAborted as exc:
            exc.partial = RunResponse(name=cfg.name, config_text=dump_config(cfg),
                                      tables=[table_model(t) for t in tables + [exc.table]])
            raise
        tables.append(table)
        if req.per_trial:
            trials.extend(_trial_models(per_trial))
    return RunResponse(name=cfg.name, config_text=dump_config(cfg),
                       tables=[table_model(t) for t in tables],
                       trials=trials if req.per_trial else None)


def _error(exc) -> ErrorBody:
    if isinstance(exc, ExperimentAborted):
        return ErrorBody(kind="aborted", message=str(exc), method=exc.method,
                         snr_db=None if exc.snr_db is None else encode_snr(exc.snr_db),
                         failures=exc.failures, trials=exc.trials,
                         partial=getattr(exc, "partial", None))
    return ErrorBody(kind="config_error", message=str(exc))


@app.get("/version", response_model=VersionInfo)
def version():
    return VersionInfo(version=__version__)


@app.get("/presets", response_model=list[PresetInfo])
def list_presets():
    return [PresetInfo(name=n, description=DESCRIPTIONS[n], config_text=dump_config(preset(n)))
            for n in preset_names()]


@app.get("/presets/{name}", response_model=PresetInfo)
def get_preset(name: str):
    try:
        cfg = preset(name)
    except ConfigError as exc:
        raise HTTPException(404, detail=_error(exc).model_dump()) from exc
    return PresetInfo(name=name, description=DESCRIPTIONS[name], config_text=dump_config(cfg))


@app.post("/experiments", response_model=RunResponse)
def run(req: RunRequest):
    try:
        return execute(req)
    except ConfigError as exc:
        raise HTTPException(400, detail=_error(exc).model_dump()) from exc
    except ExperimentAborted as exc:
        raise HTTPException(409, detail=_error(exc).model_dump()) from exc


def _work(job_id: str, req: RunRequest):
    with _jobs_lock:
        _jobs[job_id] = JobStatus(job_id=job_id, status="running")
    try:
        result = execute(req)
        status = JobStatus(job_id=job_id, status="done", result=result)
    except (ConfigError, ExperimentAborted) as exc:
        status = JobStatus(job_id=job_id, status="failed", error=_error(exc))
    with _jobs_lock:
        _jobs[job_id] = status


@app.post("/jobs", response_model=JobStatus, status_code=202)
def submit(req: RunRequest):
    try:
        build_config(req)
    except ConfigError as exc:
        raise HTTPException(400, detail=_error(exc).model_dump()) from exc
    job_id = uuid.uuid4().hex
    with _jobs_lock:
        _jobs[job_id] = JobStatus(job_id=job_id, status="queued")
    threading.Thread(target=_work, args=(job_id, req), daemon=True).start()
    return _jobs[job_id]


@app.get("/jobs/{job_id}", response_model=JobStatus)
def job(job_id: str):
    with _jobs_lock:
        status = _jobs.get(job_id)
    if status is None:
        raise HTTPException(404, detail={"kind": "config_error", "message": f"no job {job_id}"})
    return status
