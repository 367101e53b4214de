"""Space-time block codes: Alamouti, the recursive ABBA code and orthogonal designs.

Codewords are time x antenna matrices. Orthogonal designs are stored in
linear-dispersion form ``C(s) = sum_k Re(s_k) A_k + j Im(s_k) B_k`` with the
dispersion matrices obtained by probing the codeword function.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigError


def alamouti(s1, s2) -> np.ndarray:
    """``[[s1, s2], [-conj(s2), conj(s1)]]`` for scalars or broadcastable arrays."""
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    s1, s2 = np.broadcast_arrays(s1, s2)
    top = np.stack([s1, s2], axis=-1)
    bottom = np.stack([-np.conj(s2), np.conj(s1)], axis=-1)
    return np.stack([top, bottom], axis=-2)


def abba_encode(n: int, s) -> np.ndarray:
    """ABBA codeword ``S_n(s)`` of size ``2**n x 2**n``; `s` has length ``2**n`` on its last axis."""
    s = np.asarray(s, dtype=complex)
    if n < 1:
        raise ConfigError("ABBA recursion depth must be >= 1")
    if s.shape[-1] != 2**n:
        raise ConfigError(f"ABBA code of depth {n} needs {2**n} symbols, got {s.shape[-1]}")
    if n == 1:
        return alamouti(s[..., 0], s[..., 1])
    half = 2 ** (n - 1)
    a = abba_encode(n - 1, s[..., :half])
    b = abba_encode(n - 1, s[..., half:])
    return np.concatenate(
        [np.concatenate([a, b], axis=-1), np.concatenate([b, a], axis=-1)], axis=-2
    )


def truncate_columns(code: np.ndarray, num_antennas: int) -> np.ndarray:
    """Keep the first `num_antennas` columns (antennas) of a codeword."""
    if num_antennas > code.shape[-1]:
        raise ConfigError("cannot keep more columns than the code has")
    return code[..., :num_antennas]


@dataclass(frozen=True, eq=False)
class OrthogonalDesign:
    """``T2 x R_a`` generalized complex orthogonal design carrying `K` symbols."""

    name: str
    T2: int
    R_a: int
    K: int
    A: np.ndarray  # (K, T2, R_a)
    B: np.ndarray  # (K, T2, R_a)
    codeword_fn: Callable = field(repr=False)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.K, self.T2)

    def encode(self, s) -> np.ndarray:
        """Linear-dispersion codeword for symbols `s` (last axis of length K)."""
        s = np.asarray(s, dtype=complex)
        return np.einsum("...k,kta->...ta", s.real, self.A) + 1j * np.einsum(
            "...k,kta->...ta", s.imag, self.B
        )


def _alamouti_codeword(s):
    return alamouti(s[..., 0], s[..., 1])


def _rate34_codeword(s):
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
    z = np.zeros_like(s1)
    c = np.conj
    rows = [
        [s1, s2, s3, z],
        [-c(s2), c(s1), z, s3],
        [-c(s3), z, c(s1), -s2],
        [z, -c(s3), c(s2), s1],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


_DESIGNS = {
    "alamouti_2": (2, 2, 2, _alamouti_codeword),
    "rate34_4": (4, 4, 3, _rate34_codeword),
}


def make_design(name: str, R_a: int | None = None) -> OrthogonalDesign:
    """Build a registered design; `R_a`, if given, must match its antenna count."""
    if name not in _DESIGNS:
        raise ConfigError(f"unknown design {name!r}; choose from {sorted(_DESIGNS)}")
    T2, ra, K, fn = _DESIGNS[name]
    if R_a is not None and R_a != ra:
        raise ConfigError(f"design {name!r} is for R_a={ra}, not R_a={R_a}")
    eye = np.eye(K, dtype=complex)
    A = np.stack([fn(eye[k]) for k in range(K)])
    B = np.stack([-1j * fn(1j * eye[k]) for k in range(K)])
    return OrthogonalDesign(name=name, T2=T2, R_a=ra, K=K, A=A, B=B, codeword_fn=fn)


DEFAULT_DESIGN_FOR = {2: "alamouti_2", 4: "rate34_4"}


def default_design(R_a: int) -> OrthogonalDesign:
    if R_a not in DEFAULT_DESIGN_FOR:
        raise ConfigError(f"no orthogonal design registered for R_a={R_a}")
    return make_design(DEFAULT_DESIGN_FOR[R_a])


@dataclass(frozen=True, eq=False)
class RealExpansion:
    calA: np.ndarray  # (K, 2 T2, 2 R_a)
    calB: np.ndarray


def real_expand(design: OrthogonalDesign) -> RealExpansion:
    """Real ``2T2 x 2R_a`` matrices acting on ``[Re g; Im g]``."""
    A, B = design.A, design.B
    calA = np.block([[A.real, -A.imag], [A.imag, A.real]])
    calB = np.block([[-B.imag, -B.real], [B.real, -B.imag]])
    return RealExpansion(calA=calA, calB=calB)
