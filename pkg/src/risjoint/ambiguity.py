"""Scaling/phase ambiguity removal and NMSE metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DimensionError, UndefinedMetricError

DEFAULT_FLOOR_DB = -120.0
ALIGN_MODES = ("diagonal_ls", "first_row_normalization")


@dataclass
class AlignmentReport:
    mode: str
    scale_factors: np.ndarray
    residual: float
    failed_columns: tuple = ()


def nmse(est, ref):
    """``||ref - est||_F^2 / ||ref||_F^2``."""
    est = np.asarray(est)
    ref = np.asarray(ref)
    if est.shape != ref.shape:
        raise DimensionError(f"shape mismatch {est.shape} vs {ref.shape}")
    denom = float(np.vdot(ref, ref).real)
    if denom == 0.0:
        raise UndefinedMetricError("NMSE against an all-zero reference")
    diff = ref - est
    return float(np.vdot(diff, diff).real) / denom


def to_db(value, floor_db=None):
    """10 log10, with zero mapped to -inf (or to ``floor_db`` when given)."""
    db = 10.0 * np.log10(value) if value > 0 else -np.inf
    if floor_db is not None:
        db = max(db, floor_db)
    return float(db)


def nmse_db(est, ref, floor_db=None):
    return to_db(nmse(est, ref), floor_db)


def normalize_first_row(Hr, He):
    """Divide column ``n`` of ``Hr`` by ``Hr[0, n]`` and rescale row ``n`` of ``He``.

    Returns ``(Hr_norm, He_norm, factors)`` with ``Hr_norm = Hr / factors``.
    """
    Hr = np.asarray(Hr)
    factors = Hr[0, :].copy()
    bad = np.flatnonzero(factors == 0)
    if bad.size:
        raise AlignmentError("zero first-row entry", columns=bad)
    return Hr / factors[None, :], np.asarray(He) * factors[:, None], factors


def align_parafac(Hr_hat, He_hat, Hr_ref=None, mode="diagonal_ls"):
    """Remove the diagonal ambiguity ``Hr Lambda, Lambda^-1 He`` of the PARAFAC stage.

    ``diagonal_ls`` fits one complex scale per column against ``Hr_ref``.
    ``first_row_normalization`` makes the first row of ``Hr_hat`` all ones
    (compare against references normalized the same way).
    """
    Hr_hat = np.asarray(Hr_hat, dtype=complex)
    He_hat = np.asarray(He_hat, dtype=complex)
    N = Hr_hat.shape[1]
    if He_hat.shape[0] != N:
        raise DimensionError("Hr_hat columns and He_hat rows differ")

    if mode == "first_row_normalization":
        Hr_al, He_al, factors = normalize_first_row(Hr_hat, He_hat)
        scale = 1.0 / factors
        resid = 0.0
        if Hr_ref is not None:
            ref, _, _ = normalize_first_row(Hr_ref, np.zeros((N, 1)))
            resid = float(np.linalg.norm(ref - Hr_al))
        return Hr_al, He_al, AlignmentReport(mode, scale, resid)

    if mode != "diagonal_ls":
        raise ValueError(f"unknown alignment mode {mode!r}")
    Hr_ref = np.asarray(Hr_ref, dtype=complex)
    if Hr_ref.shape != Hr_hat.shape:
        raise DimensionError("reference shape differs from estimate")
    energy = np.sum(np.abs(Hr_hat) ** 2, axis=0)
    bad = np.flatnonzero(energy == 0)
    if bad.size:
        raise AlignmentError("zero column in Hr_hat", columns=bad)
    lam = np.sum(Hr_hat.conj() * Hr_ref, axis=0) / energy
    if np.any(lam == 0):
        raise AlignmentError("zero alignment factor", columns=np.flatnonzero(lam == 0))
    Hr_al = Hr_hat * lam[None, :]
    He_al = He_hat / lam[:, None]
    resid = float(np.linalg.norm(Hr_ref - Hr_al))
    return Hr_al, He_al, AlignmentReport(mode, lam, resid)


def align_bilinear(Hs_hat, X_hat, pilot_cols, pilot_values):
    """Fix the common scalar of ``Hs X`` from the known pilot columns."""
    X_hat = np.asarray(X_hat, dtype=complex)
    Hs_hat = np.asarray(Hs_hat, dtype=complex)
    cols = list(pilot_cols)
    if not cols:
        raise AlignmentError("no pilot columns")
    pilot_values = np.asarray(pilot_values, dtype=complex)
    if np.linalg.matrix_rank(pilot_values) < min(pilot_values.shape[0], len(cols)):
        raise AlignmentError("pilot block is rank deficient")
    est = X_hat[:, cols]
    energy = float(np.vdot(est, est).real)
    if energy == 0.0:
        raise AlignmentError("estimated pilot block is zero")
    c = np.vdot(est, pilot_values) / energy
    X_al = X_hat * c
    Hs_al = Hs_hat / c
    resid = float(np.linalg.norm(X_al[:, cols] - pilot_values))
    return Hs_al, X_al, AlignmentReport("pilot_ls", np.array([c]), resid)
