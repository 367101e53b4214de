"""Relay-side processing for IC-Relay-TDMA.

Phase 1 reception, Hadamard separation into Alamouti subsystems, the
iterative interference canceller, maximum-ratio combining and the Phase 2
orthogonal-design forwarding, plus the two decode-and-forward relay
variants used as baselines.

Array conventions: the received block ``R`` is ``(..., T1, R_a)`` with one
column per relay antenna. Per-subsystem stacks interleave antennas, two
rows per antenna, exactly as the stacked vectors ``r_l`` and ``F_l``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import NetworkConfig
from .constellation import ConstellationBank, labels_to_symbols
from .errors import HypothesisSpaceTooLarge
from .numerics import fro2, hadamard, hermitian, hermitian_inverse
from .stbc import OrthogonalDesign, abba_encode, alamouti, truncate_columns

BLOCK_NORM_TOL = 1e-12
TRACE_TOL = 1e-12
MAX_HYPOTHESES = 2**20


def phase1_receive(F, codewords, P, J_a, noise=None):
    """Superimposed first-hop block at every relay antenna.

    Parameters
    ----------
    F : ndarray, (..., J, Jp, R_a)
        Source-relay gains, zero-padded beyond `J_a`.
    codewords : ndarray, (..., J, Jp, Jp)
        ABBA codewords; only their first `J_a` columns are transmitted.
    noise : ndarray, (..., Jp, R_a), optional
        Relay AWGN. Omit for a noiseless block.
    """
    S = truncate_columns(np.asarray(codewords), J_a)
    R = np.sqrt(P / J_a) * np.einsum("...jta,...jai->...ti", S, F[..., :J_a, :])
    if noise is not None:
        R = R + noise
    return R


@dataclass(eq=False)
class AlamoutiSubsystem:
    l: int
    h: np.ndarray  # (L,) +/-1 Hadamard row
    F: np.ndarray  # (..., J, 2R_a, 2) stacked equivalent channel per source
    r: np.ndarray  # (..., 2R_a)

    @property
    def R_a(self) -> int:
        return self.F.shape[-2] // 2


def _alamouti_fold(x):
    """``[x1, x2] -> [x1, -conj(x2)]`` along axis -2, then stack antennas."""
    folded = np.stack([x[..., 0, :], -np.conj(x[..., 1, :])], axis=-1)  # (..., R_a, 2)
    return folded.reshape(folded.shape[:-2] + (-1,))


def separate_subsystems(R, F, n: int) -> list[AlamoutiSubsystem]:
    """Split a depth-`n` ABBA block into ``2**(n-1)`` equivalent Alamouti systems."""
    R = np.asarray(R)
    L = 2 ** (n - 1)
    H = hadamard(n - 1)
    R_a = R.shape[-1]
    R2 = R.reshape(R.shape[:-2] + (L, 2, R_a))
    subs = []
    for l in range(L):
        h = H[l]
        rt = np.einsum("b,...bti->...ti", h, R2)
        a = np.einsum("b,...jbi->...ji", h, F[..., 0::2, :])
        b = np.einsum("b,...jbi->...ji", h, F[..., 1::2, :])
        Fl = alamouti(a, b)  # (..., J, R_a, 2, 2)
        Fl = Fl.reshape(Fl.shape[:-3] + (2 * R_a, 2))
        subs.append(AlamoutiSubsystem(l=l, h=h, F=Fl, r=_alamouti_fold(rt)))
    return subs


def subsystem_noise(V, n: int) -> list[np.ndarray]:
    """The stacked noise vectors ``v_l`` that :func:`separate_subsystems` folds into ``r_l``."""
    L = 2 ** (n - 1)
    H = hadamard(n - 1)
    V2 = np.asarray(V).reshape(V.shape[:-2] + (L, 2, V.shape[-1]))
    return [_alamouti_fold(np.einsum("b,...bti->...ti", H[l], V2)) for l in range(L)]


def ic_matrix(Fi, q: int):
    """One cancellation step removing source block-column `q` from `Fi`.

    `Fi` is ``(..., 2 R, 2 J)``; the result has shape ``(..., 2(R-1), 2R)``
    with the first antenna's normalized inverse block repeated down the
    first block-column and one positive block per row.

    Returns
    -------
    W : ndarray
    ok : ndarray of bool
        False where some block norm fell below ``1e-12``.
    """
    R = Fi.shape[-2] // 2
    X = Fi[..., 2 * q : 2 * q + 2]
    X = X.reshape(X.shape[:-2] + (R, 2, 2))
    nrm = fro2(X)  # (..., R)
    ok = np.all(nrm > BLOCK_NORM_TOL**2, axis=-1)
    inv = 2 * hermitian(X) / np.where(nrm > 0, nrm, 1.0)[..., None, None]
    W = np.zeros(Fi.shape[:-2] + (R - 1, 2, R, 2), dtype=complex)
    for p in range(R - 1):
        W[..., p, :, 0, :] = -inv[..., 0, :, :]
        W[..., p, :, p + 1, :] = inv[..., p + 1, :, :]
    return W.reshape(Fi.shape[:-2] + (2 * (R - 1), 2 * R)), ok


@dataclass(eq=False)
class IcResult:
    r: np.ndarray  # (..., 2(R_a-J+1)) int-free observation
    canceller: np.ndarray  # (..., 2(R_a-J+1), 2 R_a), product of the step matrices
    F_keep: np.ndarray  # (..., 2R_a, 2)
    residual: np.ndarray  # (..., 2(R_a-J+1), 2J) channel after the last step
    steps: list
    ok: np.ndarray


def cancel_interference(sub: AlamoutiSubsystem, keep: int = 0) -> IcResult:
    """Iteratively null every source but `keep` in one Alamouti subsystem.

    Sources are relabelled so that `keep` takes the first slot; the others
    are cancelled from the last slot backwards.
    """
    J = sub.F.shape[-3]
    order = [keep] + [j for j in range(J) if j != keep]
    Fi = np.concatenate([sub.F[..., j, :, :] for j in order], axis=-1)  # (..., 2R_a, 2J)
    ri = sub.r
    total = np.broadcast_to(np.eye(Fi.shape[-2], dtype=complex), Fi.shape[:-1] + (Fi.shape[-2],))
    ok = np.ones(Fi.shape[:-2], dtype=bool)
    steps = []
    for i in range(J - 1):
        W, step_ok = ic_matrix(Fi, J - 1 - i)
        ok &= step_ok
        Fi = W @ Fi
        ri = (W @ ri[..., None])[..., 0]
        total = W @ total
        steps.append(W)
    return IcResult(r=ri, canceller=total, F_keep=sub.F[..., keep, :, :], residual=Fi, steps=steps, ok=ok)


@dataclass(eq=False)
class SoftEstimateBlock:
    s: np.ndarray  # (..., 2)
    gamma: np.ndarray  # (...,) = tr{...} / 2
    noise_var: np.ndarray  # (...,) per-entry variance of the residual noise
    weights: np.ndarray  # (..., 2, d) linear MRC map applied to the observation
    ok: np.ndarray


def mrc_weights(canceller, F_keep, hadamard_gain: int = 1):
    """MRC map ``2 F^* W^* (W W^*)^{-1} / tr{...}`` and the combining gain."""
    Y = canceller @ F_keep
    Ainv, ok = hermitian_inverse(canceller @ hermitian(canceller))
    Z = hermitian(Y) @ Ainv
    tr = np.real(np.trace(Z @ Y, axis1=-2, axis2=-1))
    ok = ok & (tr > TRACE_TOL)
    safe = np.where(ok, tr, 1.0)
    weights = 2 * Z / safe[..., None, None]
    gamma = tr / 2
    return weights, gamma, hadamard_gain / np.where(ok, gamma, 1.0), ok


def mrc_combine(r_keep, canceller, F_keep, hadamard_gain: int = 1) -> SoftEstimateBlock:
    """Combine the int-free observation into two soft symbol estimates.

    `hadamard_gain` is the per-entry variance of the stacked relay noise
    (``2**(n-1)``, the squared norm of a Hadamard row).
    """
    weights, gamma, noise_var, ok = mrc_weights(canceller, F_keep, hadamard_gain)
    s = (weights @ r_keep[..., None])[..., 0]
    return SoftEstimateBlock(s=s, gamma=gamma, noise_var=noise_var, weights=weights, ok=ok)


def relay_coefficient(P, T2, R_a, K, J) -> float:
    """Relay power normalization ``c``."""
    return float(np.sqrt(P * T2 / (R_a * K * (P / 2 + 1 / (2 * R_a - 2 * J + 1)))))


def forward_schedule(num_symbols: int, K: int) -> np.ndarray:
    """Stream positions carried by each codeword; ``-1`` marks a zero pad.

    Soft symbols stream in subsystem order ``s_1[0], s_1[1], s_2[0], ...``
    and are cut into consecutive groups of `K`.
    """
    ncw = -(-num_symbols // K)
    idx = np.full(ncw * K, -1, dtype=np.int64)
    idx[:num_symbols] = np.arange(num_symbols)
    return idx.reshape(ncw, K)


@dataclass(eq=False)
class RelayFrame:
    t: np.ndarray  # (..., ncw, T2, R_a); column i is the signal of relay antenna i
    c: float
    schedule: np.ndarray


def forward_encode(soft, design: OrthogonalDesign, c: float) -> RelayFrame:
    """Encode one source's soft-estimate stream (last axis) with `design`, scaled by `c`."""
    soft = np.asarray(soft, dtype=complex)
    sched = forward_schedule(soft.shape[-1], design.K)
    padded = np.concatenate([soft, np.zeros(soft.shape[:-1] + (1,), dtype=complex)], axis=-1)
    groups = padded[..., sched]  # -1 picks the zero pad
    return RelayFrame(t=c * design.encode(groups), c=c, schedule=sched)


@dataclass(eq=False)
class RelayOutput:
    soft: np.ndarray  # (..., J, Jp) soft estimates per source in stream order
    gammas: np.ndarray  # (..., J, L)
    noise_var: np.ndarray  # (..., J, L)
    ok: np.ndarray


def relay_soft_estimates(R, F, cfg: NetworkConfig) -> RelayOutput:
    """Separation, cancellation and MRC for every source."""
    n, J, L = cfg.n, cfg.J, cfg.num_subsystems
    batch = np.shape(R)[:-2]
    soft = np.zeros(batch + (J, cfg.Jp), dtype=complex)
    gammas = np.zeros(batch + (J, L))
    noise_var = np.zeros(batch + (J, L))
    ok = np.ones(batch, dtype=bool)
    for sub in separate_subsystems(R, F, n):
        for j in range(J):
            ic = cancel_interference(sub, j)
            blk = mrc_combine(ic.r, ic.canceller, ic.F_keep, L)
            soft[..., j, 2 * sub.l : 2 * sub.l + 2] = blk.s
            gammas[..., j, sub.l] = blk.gamma
            noise_var[..., j, sub.l] = blk.noise_var
            ok &= ic.ok & blk.ok
    return RelayOutput(soft=soft, gammas=gammas, noise_var=noise_var, ok=ok)


def relay_transmit(R, F, cfg: NetworkConfig, design: OrthogonalDesign):
    """Full linear AF relay: received block -> per-source frames ``(..., J, ncw, T2, R_a)``."""
    out = relay_soft_estimates(R, F, cfg)
    c = relay_coefficient(cfg.P, design.T2, design.R_a, design.K, cfg.J)
    frame = forward_encode(out.soft, design, c)
    return frame, out


def hadamard_combine(symbols, n: int):
    """Noise-free values of the subsystem streams: ``[h_l s_o, h_l s_e]`` for each l."""
    H = hadamard(n - 1)
    so = symbols[..., 0::2] @ H.T
    se = symbols[..., 1::2] @ H.T
    return np.stack([so, se], axis=-1).reshape(symbols.shape)


def relay_decode_after_ic(out: RelayOutput, bank: ConstellationBank, cfg: NetworkConfig):
    """Per-source ML on the MRC outputs; returns labels ``(..., J, Jp)``."""
    from .destination import ml_search

    scale = np.sqrt(cfg.P / cfg.J_a)
    H = hadamard(cfg.n - 1)
    labels = np.zeros(out.soft.shape, dtype=np.int64)
    for part in (0, 1):
        labels[..., part::2] = ml_search(
            out.soft[..., part::2], out.noise_var, scale, H, bank
        )
    return labels


def joint_hypotheses(cfg: NetworkConfig, bank: ConstellationBank) -> int:
    """Hypotheses per joint-ML search at the relay.

    A single-antenna source sends one symbol per slot, so the search splits
    into one small problem per slot.
    """
    if cfg.J_a == 1:
        return bank.order**cfg.J
    return bank.order ** (cfg.J * cfg.Jp)


def relay_joint_decode(R, F, bank: ConstellationBank, cfg: NetworkConfig, chunk: int = 256):
    """Exhaustive joint ML of all sources' symbols from the raw first-hop block."""
    count = joint_hypotheses(cfg, bank)
    if count > MAX_HYPOTHESES:
        raise HypothesisSpaceTooLarge(f"{count} hypotheses exceed guard {MAX_HYPOTHESES}")
    R = np.asarray(R)
    batch = R.shape[:-2]
    J, Jp, n = cfg.J, cfg.Jp, cfg.n
    scale = np.sqrt(cfg.P / cfg.J_a)
    Rf = R.reshape((-1,) + R.shape[-2:])
    Ff = F.reshape((-1,) + F.shape[-3:])
    out = np.zeros((Rf.shape[0], J, Jp), dtype=np.int64)
    if cfg.J_a == 1:
        # slot t carries position t of every source through antenna 1 only
        cand = np.array(list(itertools.product(range(bank.order), repeat=J)))
        for t in range(Jp):
            pts = bank.symbol_table[t][cand]  # (C, J)
            x = pts if t == 0 else -np.conj(pts)
            pred = scale * np.einsum("cj,bji->bci", x, Ff[:, :, 0, :])
            d = np.sum(np.abs(Rf[:, None, t, :] - pred) ** 2, axis=-1)
            out[:, :, t] = cand[np.argmin(d, axis=-1)]
        return out.reshape(batch + (J, Jp))
    cand = np.array(list(itertools.product(range(bank.order), repeat=J * Jp))).reshape(-1, J, Jp)
    syms = labels_to_symbols(bank, cand)  # (C, J, Jp)
    codes = truncate_columns(abba_encode(n, syms), cfg.J_a)  # (C, J, Jp, J_a)
    for start in range(0, Rf.shape[0], chunk):
        sl = slice(start, start + chunk)
        pred = scale * np.einsum("cjta,bjai->bcti", codes, Ff[sl, :, : cfg.J_a, :])
        d = np.sum(np.abs(Rf[sl, None] - pred) ** 2, axis=(-2, -1))
        out[sl] = cand[np.argmin(d, axis=-1)]
    return out.reshape(batch + (J, Jp))
