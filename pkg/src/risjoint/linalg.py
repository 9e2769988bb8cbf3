"""Dense complex linear algebra used throughout the estimators.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``;
order-3 tensors are arrays of shape ``(K, T, P)``.
"""
from __future__ import annotations

import zlib

import numpy as np

from .errors import ContractViolation, DimensionError, InfeasibleError, NumericalError

EPS = np.finfo(np.float64).eps


class RngStream:
    """Reproducible random stream keyed by ``(master_seed, stream_id)``.

    Streams are derived through :class:`numpy.random.SeedSequence` spawn keys,
    so distinct ids (and distinct :meth:`child` paths) give independent
    generators while identical keys replay identical draws.
    """

    def __init__(self, master_seed: int, stream_id: int = 0, _path: tuple = ()):
        if master_seed < 0 or stream_id < 0:
            raise ValueError("seeds and stream ids must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path)
        seq = np.random.SeedSequence(entropy=self.master_seed,
                                     spawn_key=(self.stream_id,) + self._path)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, *keys) -> "RngStream":
        """Independent sub-stream; string keys are hashed with CRC32."""
        path = list(self._path)
        for key in keys:
            if isinstance(key, str):
                key = zlib.crc32(key.encode("utf-8"))
            path.append(int(key))
        return RngStream(self.master_seed, self.stream_id, tuple(path))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id}, path={self._path})"


def khatri_rao(A, B):
    """Column-wise Kronecker product; row ``i*J + j`` holds ``A[i, n] * B[j, n]``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("khatri_rao expects two matrices")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"column mismatch: {A.shape[1]} vs {B.shape[1]}")
    I, N = A.shape
    J = B.shape[0]
    if not (np.iscomplexobj(A) or np.iscomplexobj(B)):
        return (A[:, None, :] * B[None, :, :]).reshape(I * J, N)
    # Real arithmetic keeps every entry equal to the scalar product a*b; the
    # vectorized complex multiply may fuse operations and differ in the last bit.
    ar, ai = A.real[:, None, :], A.imag[:, None, :]
    br, bi = B.real[None, :, :], B.imag[None, :, :]
    out = np.empty((I, J, N), dtype=complex)
    out.real = ar * br - ai * bi
    out.imag = ar * bi + ai * br
    return out.reshape(I * J, N)


def _svd(A):
    try:
        return np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("SVD did not converge",
                             {"shape": A.shape, "finite": bool(np.all(np.isfinite(A)))}) from exc


def pinv_and_rank(A, tol=None):
    """Pseudoinverse plus the numerical rank used to build it."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        raise DimensionError("pseudo_inverse of an empty matrix")
    if tol is None:
        tol = max(A.shape) * EPS
    if tol < 0:
        raise ValueError("tol must be non-negative")
    U, s, Vh = _svd(A)
    cutoff = tol * (s[0] if s.size else 0.0)
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T, int(keep.sum())


def pseudo_inverse(A, tol=None):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``tol * s_max`` are treated as zero; ``tol``
    defaults to ``max(rows, cols) * eps``.
    """
    return pinv_and_rank(A, tol)[0]


def fix_phase(V):
    """Rotate each column so its largest-magnitude entry is real non-negative."""
    idx = np.argmax(np.abs(V), axis=0)
    lead = V[idx, np.arange(V.shape[1])]
    mag = np.abs(lead)
    rot = np.ones_like(lead)
    nz = mag > 0
    rot[nz] = mag[nz] / lead[nz]
    return V * rot[None, :]


def dominant_eigvecs(G, n, return_values=False):
    """Orthonormal eigenvectors of the ``n`` largest eigenvalues of Hermitian ``G``.

    Columns come out in descending eigenvalue order with each column rotated
    so its largest-magnitude entry is real and non-negative. Eigenvectors of
    numerically equal eigenvalues are ordered by descending lexicographic
    comparison of their (real, imag) entries.
    """
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionError("G must be square")
    T = G.shape[0]
    if n > T or n < 0:
        raise DimensionError(f"requested {n} eigenvectors of a {T}x{T} matrix")
    scale = max(1.0, float(np.max(np.abs(G))) if G.size else 1.0)
    if np.max(np.abs(G - G.conj().T), initial=0.0) > 1e-10 * scale:
        raise ContractViolation("G is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (G + G.conj().T))
    V = fix_phase(V)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]

    tie = 1e-10 * max(1.0, float(np.max(np.abs(w)))) if w.size else 0.0
    cols = list(range(T))
    start = 0
    while start < T:
        stop = start + 1
        while stop < T and abs(w[stop] - w[start]) <= tie:
            stop += 1
        if stop - start > 1:
            group = cols[start:stop]
            group.sort(key=lambda j: tuple(np.column_stack([V[:, j].real, V[:, j].imag]).ravel()),
                       reverse=True)
            cols[start:stop] = group
        start = stop
    V = V[:, cols[:n]]
    if return_values:
        return V, w[cols[:n]]
    return V


def dft_phase_matrix(P, N):
    """Unitary-scaled DFT columns: entry ``(p, n) = exp(-2j*pi*p*n/P) / sqrt(P)``."""
    if N < 1 or P < 1:
        raise DimensionError("P and N must be positive")
    if P < N:
        raise InfeasibleError(f"{P}x{N} matrix cannot have orthonormal columns")
    p = np.arange(P)[:, None]
    k = np.arange(N)[None, :]
    return np.exp(-2j * np.pi * ((p * k) % P) / P) / np.sqrt(P)


def sample_complex_gaussian(rows, cols, variance, rng: RngStream):
    """Circularly-symmetric CN(0, variance) matrix, variance split evenly over re/im."""
    if variance < 0 or not np.isfinite(variance):
        raise ValueError("variance must be finite and non-negative")
    gen = rng.generator if isinstance(rng, RngStream) else rng
    draws = gen.standard_normal((2, rows, cols))
    return np.sqrt(variance / 2.0) * (draws[0] + 1j * draws[1])
