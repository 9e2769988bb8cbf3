"""Ground-truth scenes: channels, sparse transmit frames, RIS phase schedules
and the received tensor ``Y[:, :, p] = Hr diag(Phi[p]) Hs X + W_p``."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .linalg import RngStream, dft_phase_matrix, sample_complex_gaussian

log = logging.getLogger(__name__)

MAX_SUPPORT_REDRAWS = 100


@dataclass(frozen=True)
class SceneConfig:
    K: int = 32
    M: int = 12
    N: int = 16
    T: int = 100
    P: int = 16
    beta: float = 0.2
    pilot_len: int | None = None  # None -> M
    snr_db: float = 20.0
    sigma_x2: float = 1.0
    sigma_h2: float = 1.0

    def __post_init__(self):
        if self.pilot_len is None:
            object.__setattr__(self, "pilot_len", self.M)
        self.validate()

    def validate(self):
        for name in ("K", "M", "N", "T", "P"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.T < self.M:
            raise ConfigError("T must be at least M")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if not 0 <= self.pilot_len <= self.T:
            raise ConfigError("pilot_len must lie in [0, T]")
        if self.sigma_x2 < 0 or self.sigma_h2 < 0:
            raise ConfigError("variances must be non-negative")
        # P < N is allowed (partial DFT schedule); ALS needs T*P >= N and P*K >= N.
        if self.T * self.P < self.N or self.P * self.K < self.N:
            raise ConfigError("T*P and P*K must both be at least N")


@dataclass(frozen=True)
class ChannelPair:
    Hs: np.ndarray  # N x M, RIS <- BS
    Hr: np.ndarray  # K x N, users <- RIS


@dataclass(frozen=True)
class SignalFrame:
    X: np.ndarray
    support: np.ndarray
    pilot_cols: tuple = ()

    @property
    def pilot_mask(self):
        mask = np.zeros(self.X.shape, dtype=bool)
        mask[:, list(self.pilot_cols)] = True
        return mask

    @property
    def pilot_values(self):
        return self.X[:, list(self.pilot_cols)]


@dataclass(frozen=True)
class PhaseSchedule:
    Phi: np.ndarray  # P x N


@dataclass(frozen=True)
class ReceivedTensor:
    Y: np.ndarray  # K x T x P
    noise_var: float = 0.0

    @property
    def shape(self):
        return self.Y.shape


@dataclass
class Scene:
    """Everything drawn for one Monte Carlo trial, before noise."""
    cfg: SceneConfig
    channels: ChannelPair
    signal: SignalFrame
    phases: PhaseSchedule
    extras: dict = field(default_factory=dict)

    @property
    def He(self):
        return self.channels.Hs @ self.signal.X


def pilot_block(M, length):
    """Known pilot columns: unit-modulus M-point DFT columns, repeated cyclically.

    Entries have unit power and, for ``length >= M``, the rows are orthogonal.
    """
    m = np.arange(M)[:, None]
    t = np.arange(length)[None, :]
    return np.exp(-2j * np.pi * ((m * t) % M) / M)


def phase_schedule(P, N):
    """DFT phase schedule.

    For ``P >= N`` this is :func:`dft_phase_matrix` (orthonormal columns).
    For ``P < N`` the first ``P`` rows of the N-point DFT are used, scaled by
    ``1/sqrt(P)``; columns are then not orthonormal but stay distinct.
    """
    if P >= N:
        return PhaseSchedule(dft_phase_matrix(P, N))
    p = np.arange(P)[:, None]
    n = np.arange(N)[None, :]
    return PhaseSchedule(np.exp(-2j * np.pi * ((p * n) % N) / N) / np.sqrt(P))


def gen_channels(cfg: SceneConfig, rng: RngStream) -> ChannelPair:
    Hs = sample_complex_gaussian(cfg.N, cfg.M, cfg.sigma_h2, rng)
    Hr = sample_complex_gaussian(cfg.K, cfg.N, cfg.sigma_h2, rng)
    return ChannelPair(Hs=Hs, Hr=Hr)


def gen_signal(cfg: SceneConfig, rng: RngStream) -> SignalFrame:
    """Pilot block followed by sparse Gaussian data columns.

    Every data column has exactly ``round(beta * M)`` active entries (halves
    round up) at uniformly random rows. The support is redrawn (up to ``MAX_SUPPORT_REDRAWS`` times) whenever the
    frame comes out rank deficient.
    """
    M, T, Tp = cfg.M, cfg.T, cfg.pilot_len
    gen = rng.generator
    X = np.zeros((M, T), dtype=complex)
    support = np.zeros((M, T), dtype=bool)
    X[:, :Tp] = pilot_block(M, Tp)
    support[:, :Tp] = True
    full_rank = min(M, T)
    n_data = T - Tp
    n_active = int(np.floor(cfg.beta * M + 0.5))
    for attempt in range(MAX_SUPPORT_REDRAWS):
        ranks = gen.random((M, n_data)).argsort(axis=0).argsort(axis=0)
        active = ranks < n_active
        values = sample_complex_gaussian(M, n_data, cfg.sigma_x2, rng)
        X[:, Tp:] = np.where(active, values, 0.0)
        support[:, Tp:] = active
        if cfg.beta == 0.0 or cfg.sigma_x2 == 0.0 or np.linalg.matrix_rank(X) == full_rank:
            break
    else:
        log.warning("signal frame still rank deficient after %d support draws", MAX_SUPPORT_REDRAWS)
    return SignalFrame(X=X, support=support, pilot_cols=tuple(range(Tp)))


def noiseless_tensor(Hr, He, Phi):
    """``Z[k, t, p] = sum_n Hr[k, n] He[n, t] Phi[p, n]`` via matrix products."""
    K, N = Hr.shape
    if He.shape[0] != N or Phi.shape[1] != N:
        raise DimensionError("factor dimensions disagree")
    # slice p: Hr diag(Phi[p]) He
    Z = np.stack([(Hr * Phi[p][None, :]) @ He for p in range(Phi.shape[0])], axis=2)
    return Z


def synthesize_received(ch: ChannelPair, sig: SignalFrame, ps: PhaseSchedule,
                        snr_db: float, rng: RngStream | None) -> ReceivedTensor:
    """Received tensor with noise scaled to the realized per-entry signal power.

    ``snr_db = inf`` (or ``None``) yields the noiseless tensor.
    """
    Hs, Hr, X, Phi = ch.Hs, ch.Hr, sig.X, ps.Phi
    if Hs.shape[1] != X.shape[0] or Hr.shape[1] != Hs.shape[0] or Phi.shape[1] != Hs.shape[0]:
        raise DimensionError("channel, signal and phase dimensions disagree")
    Z = noiseless_tensor(Hr, Hs @ X, Phi)
    if snr_db is None or np.isposinf(snr_db):
        return ReceivedTensor(Y=Z, noise_var=0.0)
    power = float(np.mean(np.abs(Z) ** 2))
    noise_var = power / 10.0 ** (snr_db / 10.0)
    if power == 0.0:
        # zero signal: fall back to unit-variance AWGN
        noise_var = 1.0
    K, T, P = Z.shape
    W = sample_complex_gaussian(K * T, P, noise_var, rng).reshape(K, T, P)
    return ReceivedTensor(Y=Z + W, noise_var=noise_var)


def noiseless_entry(ch: ChannelPair, He, ps: PhaseSchedule, k, t, p):
    """Direct summation of one noiseless tensor entry (test oracle)."""
    Hr, Phi = ch.Hr, ps.Phi
    K, N = Hr.shape
    T = He.shape[1]
    P = Phi.shape[0]
    if not (0 <= k < K and 0 <= t < T and 0 <= p < P):
        raise IndexError(f"({k}, {t}, {p}) outside ({K}, {T}, {P})")
    total = 0j
    for n in range(N):
        total += Hr[k, n] * He[n, t] * Phi[p, n]
    return complex(total)


def make_scene(cfg: SceneConfig, rng: RngStream) -> Scene:
    return Scene(cfg=cfg,
                 channels=gen_channels(cfg, rng.child("channels")),
                 signal=gen_signal(cfg, rng.child("signal")),
                 phases=phase_schedule(cfg.P, cfg.N))
