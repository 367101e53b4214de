"""Destination processing: matched filtering of the orthogonal design and ML detection.

After the real-stacked matched filter every soft symbol forwarded by the
relay reappears as ``c * s_k`` plus white noise of variance ``1/||G||^2``,
so each source decodes on its own from an equivalent system
``x = c sqrt(P/J_a) H s + u``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .constellation import ConstellationBank
from .errors import ConfigError, HypothesisSpaceTooLarge
from .numerics import fro2, hadamard, hermitian
from .stbc import OrthogonalDesign, alamouti, real_expand

MAX_HYPOTHESES = 2**20
G_NORM_TOL = 1e-12


def phase2_receive(t, G, noise=None):
    """``X = t G + W`` for relay frames ``t`` of shape ``(..., T2, R_a)``.

    `G` is ``(B, R_a, M)`` and broadcasts over any axes between the trial
    axis and the frame.
    """
    t = np.asarray(t)
    G = np.asarray(G)
    extra = t.ndim - G.ndim
    Gb = G.reshape(G.shape[:1] + (1,) * extra + G.shape[1:])
    X = t @ Gb
    if noise is not None:
        X = X + noise
    return X


def stacked_channel(G, design: OrthogonalDesign):
    """Real ``(2 T2 M, 2K)`` matrix mapping ``[Re s_k, Im s_k]`` to the stacked receive vector."""
    ex = real_expand(design)
    G = np.asarray(G)
    gt = np.concatenate([G.real, G.imag], axis=-2)  # (..., 2R_a, M)
    a = np.einsum("kts,...sm->...mtk", ex.calA, gt)
    b = np.einsum("kts,...sm->...mtk", ex.calB, gt)
    blk = np.stack([a, b], axis=-1)  # (..., M, 2T2, K, 2)
    return blk.reshape(blk.shape[:-4] + (blk.shape[-4] * blk.shape[-3], -1))


def stack_received(X):
    """``(..., T2, M)`` complex block -> ``(..., 2 T2 M)`` real vector, one antenna at a time."""
    Xt = np.swapaxes(np.asarray(X), -1, -2)  # (..., M, T2)
    v = np.concatenate([Xt.real, Xt.imag], axis=-1)
    return v.reshape(v.shape[:-2] + (-1,))


def matched_filter(X, G, design: OrthogonalDesign):
    """Per-symbol soft outputs ``(..., K)`` normalized by ``||G||^2``."""
    X = np.asarray(X)
    G = np.asarray(G)
    extra = X.ndim - G.ndim
    Gt = stacked_channel(G, design)
    Gt = Gt.reshape(Gt.shape[:1] + (1,) * extra + Gt.shape[1:])
    g2 = fro2(G).reshape(G.shape[:1] + (1,) * extra)
    g2 = np.where(g2 > G_NORM_TOL**2, g2, 1.0)  # callers drop trials with a vanishing G
    y = np.einsum("...rk,...r->...k", Gt, stack_received(X)) / g2[..., None]
    return y[..., 0::2] + 1j * y[..., 1::2]


def unschedule(x, schedule, num_symbols: int):
    """Undo the relay's grouping: ``(..., ncw, K)`` -> ``(..., num_symbols)``."""
    flat = x.reshape(x.shape[:-2] + (-1,))
    pos = schedule.ravel()
    keep = pos >= 0
    out = np.empty(x.shape[:-2] + (num_symbols,), dtype=complex)
    out[..., pos[keep]] = flat[..., keep]
    return out


def noise_covariance(gammas, gamma_g, c):
    """Diagonal of the equivalent-system noise covariance.

    ``2**(n-1) c^2 / gamma_l + 1/gamma_g`` for subsystem ``l``; `gammas`
    has the subsystem index on its last axis.
    """
    L = gammas.shape[-1]
    return L * c**2 / gammas + 1.0 / np.asarray(gamma_g)[..., None]


def normalized_receive_snr(gammas, gamma_g, c):
    """``sum_l 1 / (2**(n-1) c^2/gamma_l + 1/gamma_g)``."""
    return np.sum(1.0 / noise_covariance(gammas, gamma_g, c), axis=-1)


@dataclass(eq=False)
class EquivalentSystem:
    x_o: np.ndarray  # (..., L)
    x_e: np.ndarray  # (..., L)
    sigma: np.ndarray  # (..., L) diagonal of the noise covariance
    scale: np.ndarray  # c sqrt(P/J_a)
    H: np.ndarray


def equivalent_system(x_stream, gammas, gamma_g, c, P, J_a) -> EquivalentSystem:
    """Split one source's destination stream into its odd and even subsystems."""
    L = gammas.shape[-1]
    return EquivalentSystem(
        x_o=x_stream[..., 0::2],
        x_e=x_stream[..., 1::2],
        sigma=noise_covariance(gammas, gamma_g, c),
        scale=c * np.sqrt(P / J_a),
        H=hadamard(int(np.log2(L))),
    )


def candidate_table(bank: ConstellationBank, L: int):
    """All ``(label_1, ..., label_L)`` tuples in lexicographic order and their points."""
    count = bank.order**L
    if count > MAX_HYPOTHESES:
        raise HypothesisSpaceTooLarge(f"{count} hypotheses exceed guard {MAX_HYPOTHESES}")
    labels = np.array(list(itertools.product(range(bank.order), repeat=L)), dtype=np.int64)
    points = np.stack([bank[u].points[labels[:, u]] for u in range(L)], axis=-1)
    return labels, points


def ml_search(x, sigma, scale, H, bank: ConstellationBank, chunk: int = 4096):
    """``argmin_s sum_l |x_l - scale (H s)_l|^2 / sigma_l`` over the bank's product set.

    Ties go to the lexicographically smallest label tuple.
    """
    x = np.asarray(x)
    L = x.shape[-1]
    labels, points = candidate_table(bank, L)
    pred = points @ np.asarray(H).T  # (C, L)
    batch = x.shape[:-1]
    xf = x.reshape(-1, L)
    wf = np.broadcast_to(1.0 / np.asarray(sigma), x.shape).reshape(-1, L)
    af = np.broadcast_to(np.asarray(scale, dtype=float), batch).reshape(-1)
    out = np.empty((xf.shape[0], L), dtype=np.int64)
    for s in range(0, xf.shape[0], chunk):
        sl = slice(s, s + chunk)
        d = np.abs(xf[sl, None, :] - af[sl, None, None] * pred) ** 2
        out[sl] = labels[np.argmin(np.sum(d * wf[sl, None, :], axis=-1), axis=-1)]
    return out.reshape(batch + (L,))


def ml_decode(system: EquivalentSystem, bank: ConstellationBank):
    """Labels ``(..., 2L)`` for one source, back in stream order."""
    lo = ml_search(system.x_o, system.sigma, system.scale, system.H, bank)
    le = ml_search(system.x_e, system.sigma, system.scale, system.H, bank)
    return np.stack([lo, le], axis=-1).reshape(lo.shape[:-1] + (-1,))


def fast_path_observation(X):
    """Alamouti-domain vector ``[x_1, -conj(x_2)]`` from a single-antenna ``(..., 2, 1)`` block."""
    X = np.asarray(X)
    return np.stack([X[..., 0, 0], -np.conj(X[..., 1, 0])], axis=-1)


def fast_path_covariance(G, gamma_f, c):
    """Scalar noise variance of the ``(2,2,2,1)`` fast path: ``c^2 ||g||^2 / gamma_f + 1``."""
    return c**2 * fro2(G) / gamma_f + 1.0


def decode_2221_fast(xhat, G, c, P, bank: ConstellationBank):
    """Symbol-wise decisions for the ``(2,2,2,1)`` network.

    The composite channel ``c sqrt(P/2) S_1(g1, g2)`` is orthogonal, so its
    matched filter decouples the two symbols and the (white) noise scale
    drops out of the decision.
    """
    if np.shape(G)[-2:] != (2, 1):
        raise ConfigError("the fast path applies to the (2,2,2,1) network only")
    g = np.asarray(G)[..., :, 0]
    Hc = alamouti(g[..., 0], g[..., 1])
    z = (hermitian(Hc) @ xhat[..., None])[..., 0]
    z = z / (fro2(G) * c * np.sqrt(P / 2))[..., None]
    return np.stack([bank[0].nearest(z[..., 0]), bank[0].nearest(z[..., 1])], axis=-1)
