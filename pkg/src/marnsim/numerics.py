"""Small dense complex linear algebra and reproducible random streams.

Matrices are plain ``numpy`` arrays. Every routine accepts leading batch
dimensions so that a whole block of Monte Carlo trials is processed with a
single call.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import SingularMatrix

MAX_HADAMARD_ORDER = 16
PIVOT_TOL = 1e-12


def hadamard(order_log2: int, *, max_order: int = MAX_HADAMARD_ORDER) -> np.ndarray:
    """Sylvester Hadamard matrix of size ``2**order_log2`` with +/-1 entries."""
    if order_log2 < 0:
        raise ValueError("order_log2 must be non-negative")
    if order_log2 > max_order:
        raise ValueError(f"Hadamard order 2**{order_log2} exceeds guard 2**{max_order}")
    return scipy.linalg.hadamard(2**order_log2, dtype=np.int64)


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def fro2(a: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm over the last two axes."""
    return np.sum(a.real**2 + a.imag**2, axis=(-2, -1))


def hermitian_inverse(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched inverse of Hermitian positive definite matrices via Cholesky.

    Returns
    -------
    inv : ndarray
        Inverses, same shape as `a`. Entries flagged as singular hold NaN.
    ok : ndarray of bool
        Batch mask, False where the smallest squared pivot falls below
        ``PIVOT_TOL * ||a||``.
    """
    a = np.asarray(a, dtype=complex)
    batch = a.shape[:-2]
    n = a.shape[-1]
    flat = a.reshape((-1, n, n))
    ok = np.ones(flat.shape[0], dtype=bool)
    try:
        chol = np.linalg.cholesky(flat)
    except np.linalg.LinAlgError:
        # rare path: locate the failing items one by one
        chol = np.empty_like(flat)
        for idx in range(flat.shape[0]):
            try:
                chol[idx] = np.linalg.cholesky(flat[idx])
            except np.linalg.LinAlgError:
                ok[idx] = False
                chol[idx] = np.eye(n)
    pivots = np.abs(np.diagonal(chol, axis1=-2, axis2=-1)) ** 2
    scale = np.sqrt(fro2(flat))
    ok &= pivots.min(axis=-1) >= PIVOT_TOL * scale
    chol[~ok] = np.eye(n)
    linv = np.linalg.inv(chol)
    inv = hermitian(linv) @ linv
    inv[~ok] = np.nan
    return inv.reshape(batch + (n, n)), ok.reshape(batch)


def invert_hermitian(a: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian positive definite matrix (or stack of them).

    Raises
    ------
    SingularMatrix
        If any matrix in the stack has a pivot below ``1e-12 * ||a||``.
    """
    inv, ok = hermitian_inverse(a)
    if not np.all(ok):
        raise SingularMatrix("matrix is not numerically positive definite")
    return inv


class RandomStream:
    """Reproducible random source keyed by ``(seed, substream)``.

    The substream may be an integer or a tuple of integers; distinct keys
    give independent PCG64 streams via ``numpy.random.SeedSequence``.
    """

    def __init__(self, seed: int, substream=0):
        key = tuple(substream) if isinstance(substream, (tuple, list)) else (int(substream),)
        self.seed = int(seed)
        self.substream = key
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key))
        )

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def cn(self, shape, variance: float = 1.0) -> np.ndarray:
        """Circularly symmetric complex Gaussian draws, CN(0, variance)."""
        x = self._gen.standard_normal(shape)
        y = self._gen.standard_normal(shape)
        return (x + 1j * y) * np.sqrt(variance / 2.0)

    def bits(self, shape) -> np.ndarray:
        return self._gen.integers(0, 2, size=shape, dtype=np.int8)

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, shape=None) -> np.ndarray:
        return self._gen.random(shape)

    def integers(self, low, high, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)
