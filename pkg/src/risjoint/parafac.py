"""Tensor unfoldings and the alternating least squares estimator for
``(Hr, He)`` given the received tensor and the known phase schedule.

Index conventions (0-based) for a ``K x T x P`` tensor ``Y``::

    Y1[t*P + p, k] = Y2[p*K + k, t] = Y3[k*T + t, p] = Y[k, t, p]

so that, noiselessly, ``Y1 = (He.T kr Phi) Hr.T``, ``Y2 = (Phi kr Hr) He`` and
``Y3 = (Hr kr He.T) Phi.T`` with ``kr`` the Khatri-Rao product.

Per iteration the cost is dominated by the two pseudoinverses,
``O(T P N^2 + P K N^2)``, plus ``O(N T P K)`` for the products.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import RngStream, dominant_eigvecs, khatri_rao, pinv_and_rank, sample_complex_gaussian
from .scene import PhaseSchedule, ReceivedTensor

log = logging.getLogger(__name__)

# relative eigenvalue floor for the eigen initialization
EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class UnfoldedViews:
    Y1: np.ndarray  # (T*P) x K
    Y2: np.ndarray  # (P*K) x T
    Y3: np.ndarray  # (K*T) x P
    shape: tuple    # (K, T, P)


@dataclass(frozen=True)
class AlsOptions:
    epsilon: float = 1e-5
    i_max: int = 15
    init_mode: str = "eigen"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.i_max < 1:
            raise ValueError("i_max must be at least 1")
        if self.init_mode not in ("eigen", "random"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class AlsResult:
    Hr_hat: np.ndarray
    He_hat: np.ndarray
    iterations: int
    final_delta: float
    converged: bool
    residual_history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def unfold(Y) -> UnfoldedViews:
    Y = Y.Y if isinstance(Y, ReceivedTensor) else np.asarray(Y)
    K, T, P = Y.shape
    return UnfoldedViews(
        Y1=Y.transpose(1, 2, 0).reshape(T * P, K),
        Y2=Y.transpose(2, 0, 1).reshape(P * K, T),
        Y3=Y.reshape(K * T, P),
        shape=(K, T, P),
    )


def fold(views: UnfoldedViews, mode=1):
    """Rebuild the ``K x T x P`` tensor from one of the unfoldings."""
    K, T, P = views.shape
    if mode == 1:
        return views.Y1.reshape(T, P, K).transpose(2, 0, 1)
    if mode == 2:
        return views.Y2.reshape(P, K, T).transpose(1, 2, 0)
    if mode == 3:
        return views.Y3.reshape(K, T, P)
    raise ValueError("mode must be 1, 2 or 3")


def als_init(Y2, N):
    """``diag(sqrt(lambda)) V^H`` from the ``N`` dominant eigenpairs of ``Y2^H Y2``.

    Eigenvalues are floored at ``EIG_FLOOR * lambda_max`` so that rows tied to
    a (numerically) null eigenvalue still carry a direction.
    """
    Y2 = np.asarray(Y2)
    T = Y2.shape[1]
    if N > T:
        raise DimensionError(f"N={N} exceeds T={T}")
    G = Y2.conj().T @ Y2
    V, w = dominant_eigvecs(G, N, return_values=True)
    w = np.maximum(w, 0.0)
    if w.size == 0 or w[0] == 0.0:
        return np.zeros((N, T), dtype=complex)
    w = np.maximum(w, EIG_FLOOR * w[0])
    return np.sqrt(w)[:, None] * V.conj().T


def als_estimate(views: UnfoldedViews, Phi, opts: AlsOptions = AlsOptions(),
                 rng: RngStream | None = None, He_init=None) -> AlsResult:
    """Alternate ``Hr^T = (He^T kr Phi)^+ Y1`` and ``He = (Phi kr Hr)^+ Y2``.

    Stops once ``||Hr_i - Hr_{i-1}||_F^2 / ||Hr_i||_F^2 <= epsilon`` or after
    ``i_max`` iterations. On the first iteration there is no previous estimate
    and the change counts as infinite.
    """
    Phi = Phi.Phi if isinstance(Phi, PhaseSchedule) else np.asarray(Phi)
    K, T, P = views.shape
    N = Phi.shape[1]
    if Phi.shape[0] != P:
        raise DimensionError("Phi rows must match the tensor's third mode")
    if T * P < N or P * K < N:
        raise DimensionError("least-squares subproblems are underdetermined")

    if He_init is not None:
        He = np.array(He_init, dtype=complex)
        if He.shape != (N, T):
            raise DimensionError(f"He_init must be {N}x{T}")
    elif opts.init_mode == "eigen":
        He = als_init(views.Y2, N)
    else:
        if rng is None:
            raise ValueError("random initialization needs an RngStream")
        He = sample_complex_gaussian(N, T, 1.0, rng)

    Hr_prev = None
    history = []
    rank_drops = []
    delta = math.inf
    converged = False
    it = 0
    for it in range(1, opts.i_max + 1):
        A1 = khatri_rao(He.T, Phi)
        A1_pinv, r1 = pinv_and_rank(A1)
        Hr = (A1_pinv @ views.Y1).T
        A2 = khatri_rao(Phi, Hr)
        A2_pinv, r2 = pinv_and_rank(A2)
        He = A2_pinv @ views.Y2
        if min(r1, r2) < N:
            rank_drops.append((it, r1, r2))
        history.append(float(np.linalg.norm(views.Y2 - A2 @ He)))

        if Hr_prev is not None:
            denom = float(np.linalg.norm(Hr) ** 2)
            num = float(np.linalg.norm(Hr - Hr_prev) ** 2)
            delta = num / denom if denom > 0 else (0.0 if num == 0 else math.inf)
        Hr_prev = Hr
        if delta <= opts.epsilon:
            converged = True
            break

    diagnostics = {}
    if rank_drops:
        log.warning("rank-deficient Khatri-Rao factor in %d ALS iterations", len(rank_drops))
        diagnostics["singular_iterations"] = rank_drops
    return AlsResult(Hr_hat=Hr, He_hat=He, iterations=it, final_delta=delta,
                     converged=converged, residual_history=history,
                     diagnostics=diagnostics)
