"""Seeded Monte Carlo runner: per-trial pipelines and NMSE aggregation.

Trial ``i`` draws everything from ``RngStream(master_seed, i)`` and its
children, so results do not depend on how trials are scheduled across
worker processes. Aggregation walks trials in index order.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from ..ambiguity import align_bilinear, align_parafac, nmse, normalize_first_row, to_db
from ..baselines import genie_ls_recover, lskrf_estimate
from ..bigamp import PriorDescriptor, bigamp_run
from ..errors import ExperimentAborted, RisJointError
from ..linalg import RngStream
from ..parafac import als_estimate, unfold
from ..scene import Scene, make_scene, synthesize_received
from .config import ExperimentConfig

log = logging.getLogger(__name__)

ABORT_FRACTION = 0.5


@dataclass
class TrialRecord:
    trial: int
    method: str
    snr_db: float
    nmse_hr: float | None = None
    nmse_hs: float | None = None
    nmse_x: float | None = None
    als_iters: int | None = None
    bigamp_iters: int | None = None
    failed: bool = False
    error: str = ""
    seconds: float = 0.0


@dataclass
class ResultRow:
    method: str
    snr_db: float
    nmse_hr_db: float | None
    nmse_hs_db: float | None
    nmse_x_db: float | None
    mean_als_iters: float | None
    mean_bigamp_iters: float | None
    trials_used: int
    failures: int
    wall_time: float | None = None


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    label: str = ""

    def row(self, method, snr_db):
        for r in self.rows:
            if r.method == method and (r.snr_db == snr_db):
                return r
        raise KeyError((method, snr_db))

    def series(self, method, metric):
        rows = [r for r in self.rows if r.method == method]
        return [r.snr_db for r in rows], [getattr(r, metric) for r in rows]


def _references(scene: Scene, mode):
    Hr, Hs, X = scene.channels.Hr, scene.channels.Hs, scene.signal.X
    if mode == "first_row_normalization":
        Hr_ref, _, factors = normalize_first_row(Hr, np.zeros((Hr.shape[1], 1)))
        return Hr_ref, Hs * factors[:, None], X
    return Hr, Hs, X


def _signal_prior(scene: Scene):
    cfg, sig = scene.cfg, scene.signal
    return PriorDescriptor("bernoulli_gaussian", variance=cfg.sigma_x2, beta=cfg.beta,
                           support_mask=sig.support, pinned_values=sig.X,
                           pinned_mask=sig.pilot_mask)


def second_stage(He_al, scene: Scene, cfg: ExperimentConfig, rng: RngStream):
    """BiG-AMP on the aligned equivalent channel, then pilot alignment."""
    prior_x = _signal_prior(scene)
    prior_h = PriorDescriptor("gaussian", variance=scene.cfg.sigma_h2)
    res = bigamp_run(He_al, prior_x, prior_h, cfg.bigamp_opts, rng, M=scene.cfg.M)
    Hs_hat, X_hat = res.Hs_hat, res.X_hat
    if scene.signal.pilot_cols:
        Hs_hat, X_hat, _ = align_bilinear(Hs_hat, X_hat, scene.signal.pilot_cols,
                                          scene.signal.pilot_values)
    return Hs_hat, X_hat, res


def _run_method(method, views, scene, refs, cfg, rng_als, rng_bigamp):
    Hr_ref, Hs_ref, X_ref = refs
    Phi = scene.phases.Phi
    K, T, _ = views.shape
    rec = {}
    if method == "genie_ls":
        X_hat = genie_ls_recover(views.Y2, scene.channels.Hr, scene.channels.Hs, Phi)
        rec["nmse_x"] = nmse(X_hat, X_ref)
        return rec

    if method == "proposed":
        als = als_estimate(views, Phi, cfg.als_opts, rng=rng_als)
        Hr_hat, He_hat = als.Hr_hat, als.He_hat
        rec["als_iters"] = als.iterations
    elif method == "lskrf":
        base = lskrf_estimate(views.Y3, Phi, K, T, allow_underdetermined=True)
        Hr_hat, He_hat = base.Hr_hat, base.He_hat
    else:
        raise ValueError(method)
    Hr_al, He_al, _ = align_parafac(Hr_hat, He_hat, scene.channels.Hr, cfg.alignment_mode)
    rec["nmse_hr"] = nmse(Hr_al, Hr_ref)
    Hs_hat, X_hat, amp = second_stage(He_al, scene, cfg, rng_bigamp)
    rec["nmse_hs"] = nmse(Hs_hat, Hs_ref)
    rec["nmse_x"] = nmse(X_hat, X_ref)
    rec["bigamp_iters"] = amp.iterations
    if amp.diverged:
        rec["failed"] = True
        rec["error"] = "bigamp diverged"
    return rec


def run_trial(cfg: ExperimentConfig, trial: int):
    """All (snr, method) records for one trial, in grid-then-method order."""
    rng = RngStream(cfg.master_seed, trial)
    scene = make_scene(cfg.scene, rng)
    refs = _references(scene, cfg.alignment_mode)
    records = []
    for si, snr in enumerate(cfg.snr_grid_db):
        received = synthesize_received(scene.channels, scene.signal, scene.phases, snr,
                                       rng.child("noise", si))
        views = unfold(received)
        for method in cfg.methods:
            start = time.perf_counter()
            rec = TrialRecord(trial=trial, method=method, snr_db=snr)
            try:
                out = _run_method(method, views, scene, refs, cfg,
                                  rng.child("als", si), rng.child("bigamp", si))
                for key, value in out.items():
                    setattr(rec, key, value)
            except (RisJointError, np.linalg.LinAlgError, FloatingPointError) as exc:
                rec.failed = True
                rec.error = f"{type(exc).__name__}: {exc}"
            rec.seconds = time.perf_counter() - start
            records.append(rec)
    return records


def _run_trial_limited(args):
    cfg, trial = args
    with threadpool_limits(limits=1):
        return run_trial(cfg, trial)


def collect_trials(cfg: ExperimentConfig, workers: int = 1):
    """Per-trial records ordered by trial index."""
    jobs = [(cfg, t) for t in range(cfg.trials)]
    if workers <= 1:
        return [_run_trial_limited(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial_limited, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _mean_db(values, floor_db):
    if not values:
        return None
    total = 0.0
    for v in values:
        total += v
    return to_db(total / len(values), floor_db)


def _mean(values):
    if not values:
        return None
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def aggregate(cfg: ExperimentConfig, per_trial, label=""):
    """Average linear NMSE per (method, SNR) and convert to dB."""
    rows = []
    for snr in cfg.snr_grid_db:
        for method in cfg.methods:
            recs = [r for trial in per_trial for r in trial
                    if r.method == method and r.snr_db == snr]
            failures = sum(r.failed for r in recs)
            used = [r for r in recs if r.nmse_x is not None]

            def pick(name):
                return [getattr(r, name) for r in used if getattr(r, name) is not None]

            rows.append(ResultRow(
                method=method,
                snr_db=snr,
                nmse_hr_db=_mean_db(pick("nmse_hr"), cfg.floor_db),
                nmse_hs_db=_mean_db(pick("nmse_hs"), cfg.floor_db),
                nmse_x_db=_mean_db(pick("nmse_x"), cfg.floor_db),
                mean_als_iters=_mean(pick("als_iters")),
                mean_bigamp_iters=_mean(pick("bigamp_iters")),
                trials_used=len(used),
                failures=failures,
                wall_time=sum(r.seconds for r in recs) if cfg.record_timing else None,
            ))
    return ResultTable(rows=rows, label=label)


def check_failures(cfg, table):
    for row in table.rows:
        if row.failures > ABORT_FRACTION * cfg.trials:
            raise ExperimentAborted(
                f"{row.failures}/{cfg.trials} trials failed for {row.method} at {row.snr_db} dB",
                method=row.method, snr_db=row.snr_db, failures=row.failures, trials=cfg.trials)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, return_trials: bool = False,
                   label: str = ""):
    """Run every trial and aggregate into a :class:`ResultTable`.

    Raises :class:`ExperimentAborted` (with the table attached as ``.table``)
    when more than half the trials fail at any grid point.
    """
    if cfg.sweep is not None:
        raise ValueError("sweep configs go through run_sweep")
    per_trial = collect_trials(cfg, workers)
    table = aggregate(cfg, per_trial, label)
    try:
        check_failures(cfg, table)
    except ExperimentAborted as exc:
        exc.table = table
        exc.per_trial = per_trial
        raise
    if return_trials:
        return table, per_trial
    return table


def run_sweep(cfg: ExperimentConfig, workers: int = 1, return_trials: bool = False):
    """``[(label, table)]`` (or ``(label, table, per_trial)``) for every variant."""
    out = []
    for label, sub in cfg.variants():
        log.info("running %s %s", cfg.name, label or "")
        res = run_experiment(sub, workers, return_trials=return_trials, label=label)
        out.append((label,) + (res if return_trials else (res,)))
    return out


def flatten_trials(per_trial):
    return [r for trial in per_trial for r in trial]
