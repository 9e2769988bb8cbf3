"""Comparison methods: LS Khatri-Rao factorization (LSKRF) for the channel
stage and genie-aided least squares for the signal."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, SingularityError
from .linalg import fix_phase, khatri_rao, pinv_and_rank
from .scene import PhaseSchedule


@dataclass
class BaselineResult:
    method: str
    Hr_hat: np.ndarray | None = None
    He_hat: np.ndarray | None = None
    X_hat: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def lskrf_estimate(Y3, Phi, K, T, allow_underdetermined=False) -> BaselineResult:
    """One LS solve against ``Phi^T`` then a rank-1 SVD per column.

    ``Y3`` is the ``(K*T) x P`` unfolding. When ``Phi`` has fewer than ``N``
    independent columns the LS step is underdetermined; this raises unless
    ``allow_underdetermined`` is set, in which case the minimum-norm solution
    is used and ``diagnostics["underdetermined"]`` is true.
    """
    Phi = Phi.Phi if isinstance(Phi, PhaseSchedule) else np.asarray(Phi)
    P, N = Phi.shape
    pinv_phi_t, rank = pinv_and_rank(Phi.T)
    underdetermined = rank < N
    if underdetermined and not allow_underdetermined:
        raise InfeasibleError(f"Phi has rank {rank} < N={N}; LSKRF needs P >= N")
    B = np.asarray(Y3) @ pinv_phi_t  # (K*T) x N, estimates Hr kr He^T
    Hr = np.empty((K, N), dtype=complex)
    He = np.empty((N, T), dtype=complex)
    for n in range(N):
        U, s, Vh = np.linalg.svd(B[:, n].reshape(K, T), full_matrices=False)
        u0 = U[:, 0]
        u = fix_phase(u0[:, None])[:, 0]
        j = int(np.argmax(np.abs(u0)))
        rot = u[j] / u0[j] if u0[j] != 0 else 1.0
        v = Vh[0] / rot  # keeps u v == u0 Vh[0]
        root = np.sqrt(s[0])
        Hr[:, n] = root * u
        He[n, :] = root * v
    return BaselineResult("lskrf", Hr_hat=Hr, He_hat=He,
                          diagnostics={"underdetermined": underdetermined, "phi_rank": rank})


def genie_ls_recover(Y2, Hr, Hs, Phi) -> np.ndarray:
    """``X = ((Phi kr Hr) Hs)^+ Y2`` with the true channels."""
    Phi = Phi.Phi if isinstance(Phi, PhaseSchedule) else np.asarray(Phi)
    A = khatri_rao(Phi, Hr) @ Hs
    A_pinv, rank = pinv_and_rank(A)
    if rank < A.shape[1]:
        raise SingularityError("effective channel lacks full column rank",
                               {"rank": rank, "M": A.shape[1]})
    return A_pinv @ np.asarray(Y2)
