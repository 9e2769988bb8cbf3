"""Bilinear generalized AMP for ``He ~ Hs @ X`` with entrywise priors.

Shapes: ``He`` is N x T, ``Hs`` is N x M, ``X`` is M x T. Sums run over the
shared dimension: products and plug-in variances over ``m``, the
``r``-messages over ``n``, and the ``q``-messages over ``t``.

One iteration costs ``O(NMT)`` multiplications (six matrix products) plus
``O(NM + MT)`` for the denoisers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import RngStream, sample_complex_gaussian

VAR_FLOOR = 1e-14
# recovering runs spike to a few hundred times their best residual, runaway
# ones grow without bound (1e28 and beyond)
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class PriorDescriptor:
    """Entrywise prior for one factor.

    ``kind`` is ``"gaussian"`` (CN(0, variance)), ``"bernoulli_gaussian"``
    (``(1-beta) delta + beta CN(0, variance)``) or ``"pinned"`` (every entry
    fixed by ``pinned_values``). A ``support_mask`` marks entries whose
    activity is known: ``False`` entries are exactly zero and ``True`` entries
    are CN(0, variance). Entries selected by ``pinned_mask`` always take
    their ``pinned_values``.
    """
    kind: str = "gaussian"
    variance: float = 1.0
    beta: float = 1.0
    support_mask: np.ndarray | None = None
    pinned_values: np.ndarray | None = None
    pinned_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "bernoulli_gaussian", "pinned"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.variance < 0:
            raise ValueError("prior variance must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.kind == "pinned" and self.pinned_values is None:
            raise ValueError("pinned prior needs pinned_values")

    def pins(self, shape):
        """(mask, values) of pinned entries, broadcast to ``shape``."""
        if self.pinned_values is None:
            return np.zeros(shape, dtype=bool), np.zeros(shape, dtype=complex)
        values = np.broadcast_to(np.asarray(self.pinned_values, dtype=complex), shape)
        if self.kind == "pinned" and self.pinned_mask is None:
            mask = np.ones(shape, dtype=bool)
        else:
            mask = np.broadcast_to(np.asarray(self.pinned_mask, dtype=bool), shape)
        return mask, values

    def prior_mean_var(self, shape):
        """Prior moments, used to initialize the estimates."""
        mean = np.zeros(shape, dtype=complex)
        if self.kind == "bernoulli_gaussian" and self.support_mask is None:
            var = np.full(shape, self.beta * self.variance)
        else:
            var = np.full(shape, float(self.variance))
        if self.support_mask is not None:
            var = np.where(self.support_mask, var, 0.0)
        mask, values = self.pins(shape)
        mean = np.where(mask, values, mean)
        var = np.where(mask, 0.0, var)
        return mean, var

    def denoise(self, r_hat, nu_r):
        """Posterior mean and variance given ``r_hat = x + CN(0, nu_r)``."""
        if self.kind == "bernoulli_gaussian" and self.support_mask is None:
            mean, var = bg_denoise(r_hat, nu_r, self.beta, self.variance)
        else:
            mean, var = gaussian_denoise(r_hat, nu_r, self.variance)
        if self.support_mask is not None:
            mean = np.where(self.support_mask, mean, 0.0)
            var = np.where(self.support_mask, var, 0.0)
        mask, values = self.pins(np.shape(r_hat))
        if mask.any():
            mean = np.where(mask, values, mean)
            var = np.where(mask, 0.0, var)
        return mean, var


@dataclass(frozen=True)
class BigAmpOptions:
    i_max: int = 500
    epsilon: float = 1e-12
    damping: float = 1.0
    assumed_noise_var: float = 1e-12
    divergence_burn_in: int = 50

    def __post_init__(self):
        if self.i_max < 1:
            raise ValueError("i_max must be at least 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.assumed_noise_var < 0:
            raise ValueError("assumed_noise_var must be non-negative")


@dataclass
class BigAmpState:
    x_hat: np.ndarray
    nu_x: np.ndarray
    h_hat: np.ndarray
    nu_h: np.ndarray
    s_hat: np.ndarray
    p_bar: np.ndarray | None = None
    nu_p_bar: np.ndarray | None = None
    nu_p: np.ndarray | None = None
    # damped copies of x_hat / h_hat feeding the r and q messages
    x_bar: np.ndarray | None = None
    h_bar: np.ndarray | None = None

    def copy(self):
        return BigAmpState(*(None if v is None else v.copy() for v in
                             (self.x_hat, self.nu_x, self.h_hat, self.nu_h, self.s_hat,
                              self.p_bar, self.nu_p_bar, self.nu_p, self.x_bar, self.h_bar)))


@dataclass
class BigAmpResult:
    Hs_hat: np.ndarray
    X_hat: np.ndarray
    iterations: int
    stop_reason: str
    residuals: list = field(default_factory=list)
    diverged: bool = False
    best_iteration: int = 0
    state: BigAmpState | None = None


def gaussian_denoise(q_hat, nu_q, sigma2):
    """Conjugate posterior for a CN(0, sigma2) prior and CN(q_hat, nu_q) likelihood."""
    q_hat = np.asarray(q_hat)
    nu_q = np.asarray(nu_q, dtype=float)
    denom = sigma2 + nu_q
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(denom > 0, sigma2 / np.where(denom > 0, denom, 1.0), 0.0)
    mean = gain * q_hat
    var = gain * nu_q
    if mean.ndim == 0:
        return complex(mean), float(var)
    return mean, var


def bg_denoise(r_hat, nu_r, beta, sigma2):
    """Posterior moments under ``(1-beta) delta(x) + beta CN(0, sigma2)``."""
    r_hat = np.asarray(r_hat)
    nu_r = np.asarray(nu_r, dtype=float)
    m, v = gaussian_denoise(r_hat, nu_r, sigma2)
    if beta >= 1.0:
        return m, v
    if beta <= 0.0:
        zero = np.zeros_like(r_hat, dtype=complex)
        if zero.ndim == 0:
            return 0j, 0.0
        return zero, np.zeros(np.shape(r_hat))
    # log-likelihood ratio of active vs inactive, CN densities
    a2 = np.abs(r_hat) ** 2
    s1 = sigma2 + nu_r
    llr = (np.log(beta) - np.log1p(-beta) + np.log(nu_r) - np.log(s1)
           - a2 / s1 + a2 / nu_r)
    pi = 0.5 * (1.0 + np.tanh(0.5 * llr))  # logistic, overflow-safe
    mean = pi * m
    var = pi * (v + np.abs(m) ** 2) - np.abs(mean) ** 2
    var = np.maximum(var, 0.0)
    if np.ndim(mean) == 0:
        return complex(mean), float(var)
    return mean, var


def posterior_z(p_hat, nu_p, he_obs, nu_w):
    """Fuse the plug-in ``CN(p_hat, nu_p)`` with the observation ``he_obs`` under noise ``nu_w``."""
    p_hat = np.asarray(p_hat)
    nu_p = np.asarray(nu_p, dtype=float)
    he_obs = np.asarray(he_obs)
    if np.isposinf(nu_w):
        z, nz = p_hat, nu_p
    else:
        total = nu_p + nu_w
        z = (nu_p * he_obs + nu_w * p_hat) / total
        nz = nu_p * nu_w / total
    if np.ndim(z) == 0:
        return complex(z), float(nz)
    return z, np.broadcast_to(nz, np.shape(z)).astype(float)


def init_state(shape_h, shape_x, prior_h: PriorDescriptor, prior_x: PriorDescriptor,
               rng: RngStream | None):
    x_hat, nu_x = prior_x.prior_mean_var(shape_x)
    h_mean, nu_h = prior_h.prior_mean_var(shape_h)
    if rng is not None:
        draw = sample_complex_gaussian(*shape_h, prior_h.variance, rng)
        mask, values = prior_h.pins(shape_h)
        h_hat = np.where(mask, values, draw)
        if prior_h.support_mask is not None:
            h_hat = np.where(prior_h.support_mask, h_hat, 0.0)
    else:
        h_hat = h_mean
    s_hat = np.zeros((shape_h[0], shape_x[1]), dtype=complex)
    return BigAmpState(x_hat=x_hat, nu_x=np.maximum(nu_x, VAR_FLOOR),
                       h_hat=h_hat, nu_h=np.maximum(nu_h, VAR_FLOOR), s_hat=s_hat)


def bigamp_run(He_hat, prior_x: PriorDescriptor, prior_h: PriorDescriptor,
               opts: BigAmpOptions = BigAmpOptions(), rng: RngStream | None = None,
               M: int | None = None, state: BigAmpState | None = None) -> BigAmpResult:
    """Factor ``He_hat`` (N x T) into ``Hs_hat`` (N x M) and ``X_hat`` (M x T).

    ``M`` is taken from the priors' masks when not given. Without ``state``,
    ``x_hat`` starts at the prior mean (pilots where pinned), ``h_hat`` is a
    CN(0, variance) draw from ``rng`` and ``s_hat`` starts at zero.

    Divergence (a non-finite residual ``||He_hat - Hs X||_F``, or after
    ``divergence_burn_in`` iterations a residual above ``DIVERGENCE_FACTOR``
    times its running minimum) stops the run and returns the best iterate. The burn-in skips the
    transient growth typical of the first few dozen iterations from a random
    ``h_hat``.

    With ``damping < 1`` the plug-in quantities ``p_bar``, ``nu_p_bar``,
    ``nu_p`` and the residual messages ``s_hat`` are averaged with their
    previous values, and the r/q messages use running averages ``x_bar``,
    ``h_bar`` of the estimates rather than the latest denoiser outputs.
    """
    He_hat = np.asarray(He_hat, dtype=complex)
    N, T = He_hat.shape
    if M is None:
        M = _infer_rank(prior_x, prior_h, state)
    if state is None:
        st = init_state((N, M), (M, T), prior_h, prior_x, rng)
    else:
        st = state.copy()
    if st.x_hat.shape != (M, T) or st.h_hat.shape != (N, M):
        raise DimensionError("state does not match He_hat and M")
    x0, h0 = st.x_hat, st.h_hat

    nu_w = opts.assumed_noise_var
    if st.x_bar is None:
        st.x_bar = st.x_hat
    if st.h_bar is None:
        st.h_bar = st.h_hat

    residuals = []
    best = (np.inf, st.h_hat.copy(), st.x_hat.copy(), 0)
    stop_reason = "max_iter"
    diverged = False
    it = 0
    for it in range(1, opts.i_max + 1):
        prev_p_bar = st.p_bar
        st = _iterate(st, opts.damping, He_hat, prior_x, prior_h, nu_w)
        resid = float(np.linalg.norm(He_hat - st.h_hat @ st.x_hat))
        residuals.append(resid)
        if not np.isfinite(resid):
            diverged = True
            stop_reason = "diverged"
            break
        if resid < best[0]:
            best = (resid, st.h_hat.copy(), st.x_hat.copy(), it)
        elif (it > opts.divergence_burn_in and best[0] > 0
              and resid > DIVERGENCE_FACTOR * best[0]):
            diverged = True
            stop_reason = "diverged"
            break
        if prev_p_bar is not None:
            change = float(np.sum(np.abs(st.p_bar - prev_p_bar) ** 2))
            if change <= opts.epsilon * float(np.sum(np.abs(st.p_bar) ** 2)):
                stop_reason = "converged"
                break

    if diverged:
        _, h_out, x_out, best_it = best
        if best_it == 0:
            h_out, x_out = h0, x0
    else:
        h_out, x_out, best_it = st.h_hat, st.x_hat, it
    return BigAmpResult(Hs_hat=h_out, X_hat=x_out, iterations=it, stop_reason=stop_reason,
                        residuals=residuals, diverged=diverged, best_iteration=best_it,
                        state=st)


def _iterate(st: BigAmpState, damp, He_hat, prior_x, prior_h, nu_w) -> BigAmpState:
    """One pass of the message updates; ``st`` is left untouched."""
    x, nu_x, h, nu_h, s = st.x_hat, st.nu_x, st.h_hat, st.nu_h, st.s_hat
    abs_h2 = np.abs(h) ** 2
    abs_x2 = np.abs(x) ** 2
    # plug-in estimate and its variances
    nu_p_bar = abs_h2 @ nu_x + nu_h @ abs_x2
    nu_p = nu_p_bar + nu_h @ nu_x
    p_bar = h @ x
    if damp < 1.0 and st.p_bar is not None:
        nu_p_bar = damp * nu_p_bar + (1 - damp) * st.nu_p_bar
        nu_p = damp * nu_p + (1 - damp) * st.nu_p
        p_bar = damp * p_bar + (1 - damp) * st.p_bar
    nu_p_bar = np.maximum(nu_p_bar, VAR_FLOOR)
    nu_p = np.maximum(nu_p, VAR_FLOOR)
    # Onsager correction
    p_hat = p_bar - s * nu_p_bar
    z_hat, nu_z = posterior_z(p_hat, nu_p, He_hat, nu_w)
    nu_s = np.maximum((1.0 - nu_z / nu_p) / nu_p, VAR_FLOOR)
    s_new = (z_hat - p_hat) / nu_p
    if damp < 1.0:
        s = damp * s_new + (1 - damp) * s
        x_bar = damp * x + (1 - damp) * st.x_bar
        h_bar = damp * h + (1 - damp) * st.h_bar
    else:
        s, x_bar, h_bar = s_new, x, h

    nu_r = 1.0 / np.maximum(np.abs(h_bar.T) ** 2 @ nu_s, VAR_FLOOR)
    r_hat = x_bar * (1.0 - nu_r * (nu_h.T @ nu_s)) + nu_r * (h_bar.conj().T @ s)
    nu_q = 1.0 / np.maximum(nu_s @ np.abs(x_bar.T) ** 2, VAR_FLOOR)
    q_hat = h_bar * (1.0 - nu_q * (nu_s @ nu_x.T)) + nu_q * (s @ x_bar.conj().T)

    x_new, nu_x_new = prior_x.denoise(r_hat, np.maximum(nu_r, VAR_FLOOR))
    h_new, nu_h_new = prior_h.denoise(q_hat, np.maximum(nu_q, VAR_FLOOR))
    return BigAmpState(x_hat=x_new, nu_x=np.maximum(nu_x_new, VAR_FLOOR),
                       h_hat=h_new, nu_h=np.maximum(nu_h_new, VAR_FLOOR), s_hat=s,
                       p_bar=p_bar, nu_p_bar=nu_p_bar, nu_p=nu_p, x_bar=x_bar, h_bar=h_bar)


def _infer_rank(prior_x, prior_h, state):
    if state is not None:
        return state.x_hat.shape[0]
    for prior, axis in ((prior_x, 0), (prior_h, 1)):
        for arr in (prior.support_mask, prior.pinned_mask, prior.pinned_values):
            if arr is not None and np.ndim(arr) == 2:
                return np.shape(arr)[axis]
    raise ValueError("cannot infer the inner dimension M; pass M explicitly")
