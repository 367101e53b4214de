"""Diversity estimation from BER curves and from the outage of the receive SNR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from ..channel import NetworkConfig, draw_channel, gamma_g
from ..destination import normalized_receive_snr
from ..errors import InsufficientData
from ..icrelay import cancel_interference, mrc_weights, relay_coefficient, separate_subsystems
from ..numerics import RandomStream, hadamard, hermitian, hermitian_inverse
from ..stbc import OrthogonalDesign, default_design

MIN_OUTAGE_EVENTS = 50


@dataclass
class DiversityFit:
    slope: float
    stderr: float
    used: np.ndarray  # mask of the points that entered the fit

    def __float__(self):
        return self.slope


def _loglog_fit(x, y, mask) -> DiversityFit:
    if mask.sum() < 3:
        raise InsufficientData(f"only {int(mask.sum())} usable points; need at least 3")
    fit = linregress(np.log10(x[mask]), np.log10(y[mask]))
    return DiversityFit(slope=float(fit.slope), stderr=float(fit.stderr), used=mask)


def fit_diversity(snr_db, ber, errors=None, ber_window=(1e-5, 1e-2), min_errors: int = 100) -> DiversityFit:
    """Negated least-squares slope of ``log10 BER`` against ``log10 P``.

    Only points whose BER lies inside `ber_window` and, when `errors` is
    given, that collected at least `min_errors` bit errors are used.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    lo, hi = ber_window
    mask = (ber >= lo) & (ber <= hi)
    if errors is not None:
        mask &= np.asarray(errors) >= min_errors
    P = 10 ** (snr_db / 10)
    fit = _loglog_fit(P, ber, mask)
    fit.slope = -fit.slope
    return fit


def fit_result(result, ber_window=(1e-5, 1e-2), min_errors: int = 100, source=None) -> DiversityFit:
    return fit_diversity(result.snr_db, result.ber(source), result.errors(source), ber_window, min_errors)


# -- receive SNR ---------------------------------------------------------------


def subsystem_gains(cfg: NetworkConfig, F, source: int = 0):
    """``gamma_l`` for one source, shape ``(B, L)``, plus the IC validity mask."""
    R = np.zeros(F.shape[:-3] + (cfg.Jp, cfg.R_a), dtype=complex)
    L = cfg.num_subsystems
    gammas, ok = [], np.ones(F.shape[:-3], dtype=bool)
    for sub in separate_subsystems(R, F, cfg.n):
        ic = cancel_interference(sub, source)
        _, g, _, good = mrc_weights(ic.canceller, ic.F_keep, L)
        gammas.append(g)
        ok &= ic.ok & good
    return np.stack(gammas, axis=-1), ok


def coefficient(cfg: NetworkConfig, design: OrthogonalDesign | None = None) -> float:
    design = design or default_design(cfg.R_a)
    return relay_coefficient(cfg.P, design.T2, design.R_a, design.K, cfg.J)


def receive_snr(cfg: NetworkConfig, F, G, design=None, source: int = 0):
    """Instantaneous normalized receive SNR of `source` for each trial."""
    gammas, ok = subsystem_gains(cfg, F, source)
    gamma = normalized_receive_snr(gammas, gamma_g(G), coefficient(cfg, design))
    return np.where(ok, gamma, 0.0)


def snr_upper_bound(gammas, g, c):
    """``min{sum_l gamma_l / (L c^2), L gamma_g}``."""
    L = gammas.shape[-1]
    return np.minimum(np.sum(gammas, axis=-1) / (L * c**2), L * g)


def check_snr_upper_bound(cfg: NetworkConfig, trials: int, seed: int = 0, chunk: int = 100_000,
                       infinite_gamma_g: bool = False, rtol: float = 1e-12) -> int:
    """Count draws where the receive SNR exceeds its per-sample upper bound."""
    c = coefficient(cfg)
    violations = 0
    for k, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        ch = draw_channel(cfg, RandomStream(seed, (k,)), size)
        g = np.full(size, np.inf) if infinite_gamma_g else gamma_g(ch.G)
        for j in range(cfg.J):
            gammas, ok = subsystem_gains(cfg, ch.F, j)
            gamma = normalized_receive_snr(gammas, g, c)
            bound = snr_upper_bound(gammas, g, c)
            violations += int(np.sum(ok & (gamma > bound * (1 + rtol))))
    return violations


# -- outage ----------------------------------------------------------------------


@dataclass
class OutageResult:
    epsilon: np.ndarray
    probability: np.ndarray
    events: np.ndarray  # raw counts of draws with gamma < eps
    slope: float
    stderr: float
    method: str

    @property
    def halfwidth(self) -> float:
        return 1.96 * self.stderr


def _finish(eps, prob, events, method) -> OutageResult:
    eps = np.asarray(eps, dtype=float)
    if events[np.argmax(eps)] < MIN_OUTAGE_EVENTS:
        raise InsufficientData(f"{events[np.argmax(eps)]} outage events at the largest epsilon; need {MIN_OUTAGE_EVENTS}")
    fit = _loglog_fit(eps, prob, (events >= MIN_OUTAGE_EVENTS) & (prob > 0))
    return OutageResult(eps, prob, events, fit.slope, fit.stderr, method)


def outage_from_samples(samples, eps, weights=None, method="mc") -> OutageResult:
    """Empirical ``P(gamma < eps)`` from (optionally weighted) draws and its log-log slope."""
    samples = np.asarray(samples)
    w = np.ones_like(samples, dtype=float) if weights is None else np.asarray(weights)
    eps = np.asarray(eps, dtype=float)
    below = samples[None, :] < eps[:, None]
    prob = (below * w).sum(axis=1) / samples.size
    return _finish(eps, prob, below.sum(axis=1), method)


def _extract(kind, cfg, ch, design):
    if kind == "gamma":
        return receive_snr(cfg, ch.F, ch.G, design)
    if kind == "gamma_g":
        return gamma_g(ch.G)
    raise ValueError(f"unknown extractor {kind!r}")


def estimate_outage(cfg: NetworkConfig, eps, trials: int, seed: int = 0, extractor="gamma",
                    method: str = "auto", design=None, chunk: int = 200_000) -> OutageResult:
    """Outage probability ``P(gamma < eps)`` and its log-log slope.

    `extractor` is ``"gamma"`` (the full receive SNR), ``"gamma_g"`` or a
    callable ``(cfg, rng, size) -> samples``. With ``method="is"`` the
    full receive SNR is estimated by importance sampling, which resolves
    the small probabilities of high-diversity networks; ``"auto"`` picks it
    whenever ``J_a`` is a power of two.
    """
    cfg = cfg.with_power(1.0)
    design = design or default_design(cfg.R_a)
    if method == "auto":
        method = "is" if extractor == "gamma" and cfg.J_a == cfg.Jp else "mc"
    if method == "is":
        if extractor != "gamma" or cfg.J_a != cfg.Jp:
            raise ValueError("importance sampling is implemented for the full receive SNR with J_a a power of two")
        return _outage_is(cfg, eps, trials, seed, design, chunk)
    eps = np.asarray(eps, dtype=float)
    events = np.zeros(eps.size, dtype=np.int64)
    for k, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = RandomStream(seed, (k,))
        x = extractor(cfg, rng, size) if callable(extractor) else _extract(extractor, cfg, draw_channel(cfg, rng, size), design)
        hit = x[None, :] < eps[:, None]
        events += hit.sum(axis=1)
    return _finish(eps, events / trials, events, "mc")


# Importance sampling. Given the interferers, the source's equivalent
# channel enters gamma_l only through P_l y_l, where P_l projects onto the
# rank-r row space of the interference canceller and y_l (the first column
# of its Alamouti channel) is CN(0, L I). The proposal is a defensive
# mixture that shrinks P_l y_l, or G, by a common factor.

IS_SCALES = 10.0 ** (-np.arange(1, 9) / 2)
IS_NOMINAL_WEIGHT = 0.1


def _canceller_projectors(cfg, F):
    """``P_l = W^* (W W^*)^{-1} W`` per subsystem; only the interferers of source 0 matter."""
    R = np.zeros(F.shape[:-3] + (cfg.Jp, cfg.R_a), dtype=complex)
    projs, ok = [], np.ones(F.shape[:-3], dtype=bool)
    for sub in separate_subsystems(R, F, cfg.n):
        ic = cancel_interference(sub, 0)
        W = ic.canceller
        inv, good = hermitian_inverse(W @ hermitian(W))
        projs.append(hermitian(W) @ inv @ W)
        ok &= ic.ok & good
    return projs, ok


def _source_from_columns(cfg, ys):
    """Rebuild source 0's padded channel ``(B, Jp, R_a)`` from the first Alamouti columns ``y_l``."""
    L = cfg.num_subsystems
    H = hadamard(cfg.n - 1)
    Y = np.stack(ys, axis=1).reshape(ys[0].shape[0], L, cfg.R_a, 2)
    a = Y[..., 0]
    b = -np.conj(Y[..., 1])
    f = np.zeros((a.shape[0], cfg.Jp, cfg.R_a), dtype=complex)
    f[:, 0::2] = np.einsum("lk,bli->bki", H, a) / L
    f[:, 1::2] = np.einsum("lk,bli->bki", H, b) / L
    return f


def _outage_is(cfg, eps, trials, seed, design, chunk):
    L, R_a, M = cfg.num_subsystems, cfg.R_a, cfg.M
    r = 2 * (R_a - cfg.J + 1)
    scales = IS_SCALES
    n_comp = 2 * len(scales)
    alpha = np.concatenate([[IS_NOMINAL_WEIGHT], np.full(n_comp, (1 - IS_NOMINAL_WEIGHT) / n_comp)])
    c = coefficient(cfg, design)
    eps = np.asarray(eps, dtype=float)
    acc = np.zeros(eps.size)
    events = np.zeros(eps.size, dtype=np.int64)
    for k, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        rng = RandomStream(seed, (k, 1))
        comp = rng.generator.choice(alpha.size, size=size, p=alpha)
        s_f = np.ones(size)
        s_g = np.ones(size)
        is_f = (comp >= 1) & (comp <= len(scales))
        is_g = comp > len(scales)
        s_f[is_f] = scales[comp[is_f] - 1]
        s_g[is_g] = scales[comp[is_g] - 1 - len(scales)]
        F = draw_channel(cfg, rng, size).F
        projs, ok = _canceller_projectors(cfg, F)
        ys, u = [], np.zeros(size)
        for Pl in projs:
            z = rng.cn((size, 2 * R_a), variance=L)
            pz = (Pl @ z[..., None])[..., 0]
            y = np.sqrt(s_f)[:, None] * pz + (z - pz)
            ys.append(y)
            u += np.sum(np.abs((Pl @ y[..., None])[..., 0]) ** 2, axis=-1) / L
        F[:, 0] = _source_from_columns(cfg, ys)
        G = np.sqrt(s_g)[:, None, None] * rng.cn((size, R_a, M))
        g = gamma_g(G)
        # likelihood ratios q_k / p of every mixture component at each draw
        ratio_f = scales[None, :] ** (-r * L) * np.exp(u[:, None] * (1 - 1 / scales[None, :]))
        ratio_g = scales[None, :] ** (-R_a * M) * np.exp(g[:, None] * (1 - 1 / scales[None, :]))
        mix = alpha[0] + ratio_f @ alpha[1 : 1 + len(scales)] + ratio_g @ alpha[1 + len(scales) :]
        w = np.where(ok, 1.0 / mix, 0.0)
        gammas, good = subsystem_gains(cfg, F, 0)
        gamma = normalized_receive_snr(gammas, g, c)
        hit = (gamma[None, :] < eps[:, None]) & (ok & good)[None, :]
        acc += (hit * w).sum(axis=1)
        events += hit.sum(axis=1)
    return _finish(eps, acc / trials, events, "is")
