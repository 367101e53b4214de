"""Numerical self-checks exposed through ``marn-sim check``."""
from __future__ import annotations

import numpy as np

from ..channel import NetworkConfig, draw_channel, gamma_g
from ..constellation import default_bank, labels_to_symbols
from ..destination import (
    fast_path_covariance,
    matched_filter,
    noise_covariance,
    phase2_receive,
    unschedule,
)
from ..icrelay import (
    cancel_interference,
    hadamard_combine,
    phase1_receive,
    relay_transmit,
    separate_subsystems,
    subsystem_noise,
    mrc_weights,
    relay_coefficient,
)
from ..numerics import RandomStream, hermitian
from ..stbc import abba_encode, default_design
from .diversity import check_snr_upper_bound

ZF_PAIRS = ((2, 2), (2, 4), (3, 4), (4, 4))
BOUND_CONFIGS = ((2, 2, 2, 1), (2, 2, 4, 2))


def _left_null_basis(A):
    """Orthonormal basis ``(..., rows, rows - rank)`` of ``{u : u^* A = 0}`` via SVD."""
    U, _, _ = np.linalg.svd(A)
    return U[..., :, A.shape[-1]:]


def zf_residuals(cfg: NetworkConfig, F):
    """Worst leakage ratio and worst principal angle to the SVD null space, per trial."""
    R = np.zeros(F.shape[:-3] + (cfg.Jp, cfg.R_a), dtype=complex)
    leak = np.zeros(F.shape[0])
    angle = np.zeros(F.shape[0])
    for sub in separate_subsystems(R, F, cfg.n):
        for j in range(cfg.J):
            W = cancel_interference(sub, j).canceller
            others = [k for k in range(cfg.J) if k != j]
            for k in others:
                Fk = sub.F[:, k]
                ratio = np.linalg.norm(W @ Fk, axis=(-2, -1)) / np.linalg.norm(Fk, axis=(-2, -1))
                leak = np.maximum(leak, ratio)
            A = np.concatenate([sub.F[:, k] for k in others], axis=-1)
            N = _left_null_basis(A)
            Q, _ = np.linalg.qr(hermitian(W))
            # sine of the largest principal angle between span(W^*) and the null space
            resid = Q - N @ (hermitian(N) @ Q)
            sin = np.linalg.norm(resid, ord=2, axis=(-2, -1))
            angle = np.maximum(angle, np.arcsin(np.clip(sin, 0, 1)))
    return leak, angle


def zf_suite(channels: int = 10_000, seed: int = 0, pairs=ZF_PAIRS):
    rows = []
    for J, R_a in pairs:
        cfg = NetworkConfig(J, 2, R_a, 1)
        ch = draw_channel(cfg, RandomStream(seed, (J, R_a)), channels)
        leak, angle = zf_residuals(cfg, ch.F)
        rows.append({"J": J, "R_a": R_a, "max_leakage": float(leak.max()), "max_angle": float(angle.max()),
                     "pass": bool(leak.max() <= 1e-10 and angle.max() < 1e-8)})
    return rows


def relay_noise_covariance(cfg: NetworkConfig, F, draws: int, rng: RandomStream, source: int = 0):
    """Empirical vs predicted covariance of the MRC output noise, per subsystem, at one channel."""
    V = rng.cn((draws, cfg.Jp, cfg.R_a))
    R0 = np.zeros((1, cfg.Jp, cfg.R_a), dtype=complex)
    out = []
    for sub, v in zip(separate_subsystems(R0, F, cfg.n), subsystem_noise(V, cfg.n)):
        ic = cancel_interference(sub, source)
        weights, gamma, var, _ = mrc_weights(ic.canceller, ic.F_keep, cfg.num_subsystems)
        e = (weights[0] @ ic.canceller[0] @ v.T).T  # (draws, 2)
        emp = e.T @ np.conj(e) / draws
        out.append((emp, float(var[0]) * np.eye(2)))
    return out


def destination_noise_variance(cfg: NetworkConfig, F, G, draws: int, rng: RandomStream, source: int = 0):
    """Empirical and predicted per-subsystem noise variance of the equivalent system."""
    design = default_design(cfg.R_a)
    bank = default_bank(cfg.Jp, 2)
    labels = rng.integers(0, 2, (draws, cfg.J, cfg.Jp))
    syms = labels_to_symbols(bank, labels)
    Fb = np.broadcast_to(F, (draws,) + F.shape[1:])
    Gb = np.broadcast_to(G, (draws,) + G.shape[1:])
    R = phase1_receive(Fb, abba_encode(cfg.n, syms), cfg.P, cfg.J_a, rng.cn((draws, cfg.Jp, cfg.R_a)))
    frame, relay = relay_transmit(R, Fb, cfg, design)
    X = phase2_receive(frame.t, Gb, rng.cn(frame.t.shape[:-1] + (cfg.M,)))
    x = unschedule(matched_filter(X, Gb, design), frame.schedule, cfg.Jp)[:, source]
    clean = frame.c * np.sqrt(cfg.P / cfg.J_a) * hadamard_combine(syms[:, source], cfg.n)
    u = x - clean
    emp = np.mean(np.abs(u) ** 2, axis=0)  # (Jp,) stream order
    pred = noise_covariance(relay.gammas[0, source], gamma_g(G[0]), frame.c)
    return emp.reshape(-1, 2), np.repeat(pred[:, None], 2, axis=1)


def covariance_suite(draws: int = 100_000, seed: int = 0, configs=((2, 2, 2, 1), (2, 4, 4, 1), (3, 2, 4, 2))):
    rows = []
    for dims in configs:
        cfg = NetworkConfig(*dims, P=10.0)
        rng = RandomStream(seed, dims)
        ch = draw_channel(cfg, rng, 1)
        relay_err = max(
            np.max(np.abs(emp - pred)) / pred[0, 0]
            for emp, pred in relay_noise_covariance(cfg, ch.F, draws, rng)
        )
        emp, pred = destination_noise_variance(cfg, ch.F, ch.G, draws, rng)
        dest_err = float(np.max(np.abs(emp - pred) / pred))
        row = {"network": dims, "mrc_rel_err": float(relay_err), "sigma_rel_err": dest_err}
        ok = relay_err < 0.03 and dest_err < 0.03
        if dims == (2, 2, 2, 1):
            design = default_design(2)
            c = relay_coefficient(cfg.P, design.T2, 2, design.K, 2)
            R0 = np.zeros((1, 2, 2), dtype=complex)
            sub = separate_subsystems(R0, ch.F, 1)[0]
            _, gam, _, _ = mrc_weights(cancel_interference(sub, 0).canceller, sub.F[:, 0], 1)
            g = gamma_g(ch.G)
            fast = fast_path_covariance(ch.G, gam, c) / g
            general = noise_covariance(gam[:, None], g, c)[:, 0]
            row["fast_path_abs_err"] = float(np.max(np.abs(fast - general)))
            ok = ok and row["fast_path_abs_err"] <= 1e-12
        row["pass"] = bool(ok)
        rows.append(row)
    return rows


def snr_bound_suite(trials: int = 1_000_000, seed: int = 0, configs=BOUND_CONFIGS):
    rows = []
    for dims in configs:
        v = check_snr_upper_bound(NetworkConfig(*dims, P=10.0), trials, seed)
        rows.append({"network": dims, "trials": trials, "violations": v, "pass": v == 0})
    return rows


SUITES = {"zf": zf_suite, "covariance": covariance_suite, "lemma2": snr_bound_suite}
