"""End-to-end transmission schemes over one batch of coherence blocks.

Every runner takes source bits ``(B, J, nbits)`` and a channel draw and
returns decoded bits with a per-trial validity mask. Noise is drawn from
`rng` in a fixed order (relay noise, then destination noise) so two
schemes fed the same stream see common random numbers. ``rng=None`` runs
the scheme noiselessly.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import destination as dst
from . import icrelay
from .channel import ChannelRealization, NetworkConfig, gamma_g
from .constellation import ConstellationBank, bits_to_labels, labels_to_bits, labels_to_symbols
from .errors import ConfigError, HypothesisSpaceTooLarge
from .numerics import RandomStream, hadamard
from .stbc import OrthogonalDesign, abba_encode


class Scheme(enum.IntEnum):
    IC_RELAY_TDMA = 1
    FULL_TDMA_DSTC = 3
    DSTC_JOINT_ML = 5
    IC_RELAY_TDMA_DF = 6
    JOINT_DF_TDMA = 7


@dataclass(frozen=True)
class SchemeInfo:
    label: str
    linear: bool
    default_order: int  # PSK order used in the equal-rate comparison


SCHEME_INFO = {
    Scheme.IC_RELAY_TDMA: SchemeInfo("IC-Relay-TDMA", True, 8),
    Scheme.FULL_TDMA_DSTC: SchemeInfo("Full-TDMA-DSTC", True, 16),
    Scheme.DSTC_JOINT_ML: SchemeInfo("DSTC-Joint-ML", False, 4),
    Scheme.IC_RELAY_TDMA_DF: SchemeInfo("IC-Relay-TDMA-DF", False, 8),
    Scheme.JOINT_DF_TDMA: SchemeInfo("Joint-DF-TDMA", False, 8),
}


def parse_scheme(value) -> Scheme:
    try:
        return Scheme(int(value))
    except (ValueError, TypeError):
        raise ConfigError(f"unknown scheme {value!r}; choose from {[s.value for s in Scheme]}") from None


def symbol_rate(scheme, J: int, R_o) -> Fraction:
    """Source symbols per channel use, counting both hops."""
    scheme = parse_scheme(scheme)
    R_o = Fraction(R_o)
    if scheme is Scheme.FULL_TDMA_DSTC:
        return R_o / (J * (1 + R_o))
    if scheme is Scheme.DSTC_JOINT_ML:
        return Fraction(1, 2)
    return R_o / (J + R_o)


def theoretical_diversity(cfg: NetworkConfig) -> int:
    return min(cfg.J_a * (cfg.R_a - cfg.J + 1), cfg.R_a * cfg.M)


def int_free_condition(cfg: NetworkConfig) -> bool:
    """True when the first hop limits diversity: ``M <= J_a (1 - (J-1)/R_a)``."""
    return cfg.M <= cfg.J_a * (1 - Fraction(cfg.J - 1, cfg.R_a))


@dataclass(eq=False)
class SchemeOutcome:
    bits: np.ndarray  # (B, J, nbits) decoded
    ok: np.ndarray  # (B,) trials that were not discarded


def bits_per_frame(cfg: NetworkConfig, bank: ConstellationBank) -> int:
    return cfg.Jp * bank.bits_per_symbol


def _source_symbols(bank, bits):
    labels = bits_to_labels(bits, bank.bits_per_symbol)
    return labels_to_symbols(bank, labels)


def _g_ok(G):
    return gamma_g(G) > dst.G_NORM_TOL**2


def _noise(rng, shape):
    return None if rng is None else rng.cn(shape)


def _to_bits(labels, bank):
    return labels_to_bits(labels, bank.bits_per_symbol)


def _first_hop(cfg, channel, bits, rng, bank):
    """Superimposed first-hop block at the relay, all sources transmitting at once."""
    B = bits.shape[0]
    syms = _source_symbols(bank, bits)
    return icrelay.phase1_receive(channel.F, abba_encode(cfg.n, syms), cfg.P, cfg.J_a, _noise(rng, (B, cfg.Jp, cfg.R_a)))


def run_ic_relay_tdma(cfg, channel: ChannelRealization, bits, rng: RandomStream | None, design: OrthogonalDesign, bank):
    """Scheme 1: linear IC at the relay, orthogonal-design forwarding, ML per source."""
    cfg.check_coherence(design.T2)
    R = _first_hop(cfg, channel, bits, rng, bank)
    frame, relay = icrelay.relay_transmit(R, channel.F, cfg, design)
    x = _destination_streams(cfg, frame, channel.G, rng, design)
    sys = dst.equivalent_system(x, relay.gammas, gamma_g(channel.G)[:, None], frame.c, cfg.P, cfg.J_a)
    return SchemeOutcome(_to_bits(dst.ml_decode(sys, bank), bank), relay.ok & _g_ok(channel.G))


def _destination_streams(cfg, frame, G, rng, design):
    noise = _noise(rng, frame.t.shape[:-1] + (G.shape[-1],))
    X = dst.phase2_receive(frame.t, G, noise)
    return dst.unschedule(dst.matched_filter(X, G, design), frame.schedule, cfg.Jp)


def df_relay_frame(cfg, R, F, design, bank):
    """Scheme 6 relay: ML after cancellation, then clean re-modulation of ``sqrt(P/J_a) H s``."""
    relay = icrelay.relay_soft_estimates(R, F, cfg)
    labels = icrelay.relay_decode_after_ic(relay, bank, cfg)
    clean = np.sqrt(cfg.P / cfg.J_a) * icrelay.hadamard_combine(labels_to_symbols(bank, labels), cfg.n)
    # clean symbols carry energy (P/J_a) 2^(n-1) each
    energy = cfg.P / cfg.J_a * cfg.num_subsystems
    c = float(np.sqrt(cfg.P * design.T2 / (design.R_a * design.K * energy)))
    return icrelay.forward_encode(clean, design, c), relay


def joint_df_relay_frame(cfg, R, F, design, bank):
    """Scheme 7 relay: joint ML of every source, forwarding unit-energy hard symbols."""
    labels = icrelay.relay_joint_decode(R, F, bank, cfg)
    c = float(np.sqrt(cfg.P * design.T2 / (design.R_a * design.K)))
    return icrelay.forward_encode(labels_to_symbols(bank, labels), design, c)


def relay_frame(scheme, cfg, R, F, design, bank):
    """Phase-2 relay transmission of the relaying schemes that forward per source."""
    scheme = parse_scheme(scheme)
    if scheme is Scheme.IC_RELAY_TDMA:
        return icrelay.relay_transmit(R, F, cfg, design)[0]
    if scheme is Scheme.IC_RELAY_TDMA_DF:
        return df_relay_frame(cfg, R, F, design, bank)[0]
    if scheme is Scheme.JOINT_DF_TDMA:
        return joint_df_relay_frame(cfg, R, F, design, bank)
    raise ConfigError(f"scheme {scheme.value} does not use a per-source relay frame")


def run_ic_relay_tdma_df(cfg, channel, bits, rng, design, bank):
    """Scheme 6: Scheme 1 with ML at the relay and clean re-modulation."""
    cfg.check_coherence(design.T2)
    R = _first_hop(cfg, channel, bits, rng, bank)
    frame, relay = df_relay_frame(cfg, R, channel.F, design, bank)
    x = _destination_streams(cfg, frame, channel.G, rng, design)
    g = gamma_g(channel.G)[:, None, None]
    sys = dst.EquivalentSystem(
        x_o=x[..., 0::2], x_e=x[..., 1::2], sigma=np.broadcast_to(1.0 / g, relay.gammas.shape),
        scale=frame.c * np.sqrt(cfg.P / cfg.J_a), H=hadamard(cfg.n - 1),
    )
    return SchemeOutcome(_to_bits(dst.ml_decode(sys, bank), bank), relay.ok & _g_ok(channel.G))


def run_joint_df_tdma(cfg, channel, bits, rng, design, bank):
    """Scheme 7: joint ML of all sources at the relay, per-source orthogonal-design forwarding."""
    cfg.check_coherence(design.T2)
    R = _first_hop(cfg, channel, bits, rng, bank)
    frame = joint_df_relay_frame(cfg, R, channel.F, design, bank)
    x = _destination_streams(cfg, frame, channel.G, rng, design)
    d = np.abs(x[..., None] / frame.c - bank.symbol_table) ** 2  # (B, J, Jp, order)
    return SchemeOutcome(_to_bits(np.argmin(d, axis=-1), bank), _g_ok(channel.G))


# Distributed Alamouti for the amplify-and-forward baselines: antenna 1
# repeats its block, antenna 2 sends [[0, -1], [1, 0]] conj(r).
_AF_ROTATION = np.array([[0, -1], [1, 0]], dtype=complex)


def _af_dstc(r, rho):
    """``(..., 2, 2)`` received block (time x antenna) -> relay transmission."""
    t1 = rho * r[..., :, 0]
    t2 = rho * np.einsum("st,...t->...s", _AF_ROTATION, np.conj(r[..., :, 1]))
    return np.stack([t1, t2], axis=-1)


def _check_af(cfg):
    if cfg.R_a != 2 or cfg.Jp != 2:
        raise ConfigError("the distributed-Alamouti baselines need R_a = 2 and J_a <= 2")


def _af_ml(X, F_eff, G, rho, scale, bank, sources: int, chunk: int = 256):
    """Exhaustive ML over `sources` jointly-transmitted ABBA blocks through the AF relay.

    `F_eff` is ``(B, sources, 2, R_a)``. The relay noise passes through the
    same distributed code, so the destination noise is white over time with
    per-slot spatial covariance ``rho^2 G^T conj(G) + I``.
    """
    Jp = 2
    count = bank.order ** (sources * Jp)
    if count > MAX_AF_HYPOTHESES:
        raise HypothesisSpaceTooLarge(f"{count} hypotheses exceed guard {MAX_AF_HYPOTHESES}")
    cand = np.array(list(itertools.product(range(bank.order), repeat=sources * Jp))).reshape(-1, sources, Jp)
    codes = abba_encode(1, labels_to_symbols(bank, cand))  # (C, s, 2, 2)
    B = X.shape[0]
    K = rho**2 * np.swapaxes(G, -1, -2) @ np.conj(G) + np.eye(G.shape[-1])
    Kinv = np.linalg.inv(K)
    out = np.empty((B, sources, Jp), dtype=np.int64)
    for s in range(0, B, chunk):
        sl = slice(s, s + chunk)
        r = scale * np.einsum("cjta,bjai->bcti", codes, F_eff[sl])  # (b, C, 2, R_a)
        pred = _af_dstc(r, rho) @ G[sl, None]  # (b, C, 2, M)
        e = X[sl, None] - pred
        metric = np.real(np.einsum("bctm,bmn,bctn->bc", np.conj(e), Kinv[sl], e))
        out[sl] = cand[np.argmin(metric, axis=-1)]
    return out


MAX_AF_HYPOTHESES = 2**16


def run_full_tdma_dstc(cfg, channel, bits, rng, design, bank):
    """Scheme 3: one source at a time, distributed-Alamouti AF relay, ML per source."""
    _check_af(cfg)
    B = bits.shape[0]
    syms = _source_symbols(bank, bits)
    scale = np.sqrt(cfg.P / cfg.J_a)
    rho = np.sqrt(cfg.P / (cfg.R_a * (cfg.P + 1)))
    F = channel.F
    labels = np.empty(syms.shape, dtype=np.int64)
    for j in range(cfg.J):
        Rj = icrelay.phase1_receive(F[:, j : j + 1], abba_encode(1, syms[:, j : j + 1]), cfg.P, cfg.J_a, _noise(rng, (B, 2, 2)))
        X = dst.phase2_receive(_af_dstc(Rj, rho), channel.G, _noise(rng, (B, 2, cfg.M)))
        F_eff = np.zeros_like(F[:, j : j + 1])
        F_eff[:, :, : cfg.J_a] = F[:, j : j + 1, : cfg.J_a]
        labels[:, j : j + 1] = _af_ml(X, F_eff, channel.G, rho, scale, bank, 1)
    return SchemeOutcome(_to_bits(labels, bank), np.ones(B, dtype=bool))


def run_dstc_joint_ml(cfg, channel, bits, rng, design, bank):
    """Scheme 5: all sources at once, distributed-Alamouti AF relay, joint ML."""
    _check_af(cfg)
    B = bits.shape[0]
    syms = _source_symbols(bank, bits)
    R = icrelay.phase1_receive(channel.F, abba_encode(1, syms), cfg.P, cfg.J_a, _noise(rng, (B, 2, 2)))
    rho = np.sqrt(cfg.P / (cfg.R_a * (cfg.J * cfg.P + 1)))
    X = dst.phase2_receive(_af_dstc(R, rho), channel.G, _noise(rng, (B, 2, cfg.M)))
    labels = _af_ml(X, channel.F, channel.G, rho, np.sqrt(cfg.P / cfg.J_a), bank, cfg.J)
    return SchemeOutcome(_to_bits(labels, bank), np.ones(B, dtype=bool))


RUNNERS = {
    Scheme.IC_RELAY_TDMA: run_ic_relay_tdma,
    Scheme.FULL_TDMA_DSTC: run_full_tdma_dstc,
    Scheme.DSTC_JOINT_ML: run_dstc_joint_ml,
    Scheme.IC_RELAY_TDMA_DF: run_ic_relay_tdma_df,
    Scheme.JOINT_DF_TDMA: run_joint_df_tdma,
}


def run_scheme(scheme, cfg, channel, bits, rng, design, bank) -> SchemeOutcome:
    return RUNNERS[parse_scheme(scheme)](cfg, channel, bits, rng, design, bank)


def run_flow_profile(cfg: NetworkConfig, channel: ChannelRealization, Gs, bits, rng, design, bank):
    """Scheme 1 towards several destinations sharing one relay transmission.

    `Gs` holds one ``(B, R_a, M_n)`` channel per destination. Returns the
    relay frame and, per destination, decoded bits for its wanted sources.
    """
    flows = cfg.flows
    if flows is None or len(Gs) != len(flows.wanted):
        raise ConfigError("one relay-destination channel per flow-profile destination is required")
    R = _first_hop(cfg, channel, bits, rng, bank)
    frame, relay = icrelay.relay_transmit(R, channel.F, cfg, design)
    decoded = []
    for wanted, G in zip(flows.wanted, Gs):
        x = _destination_streams(cfg, frame, G, rng, design)
        sys = dst.equivalent_system(x, relay.gammas, gamma_g(G)[:, None], frame.c, cfg.P, cfg.J_a)
        labels = dst.ml_decode(sys, bank)
        decoded.append({j: _to_bits(labels[:, j], bank) for j in wanted})
    return frame, decoded, relay.ok & np.all([_g_ok(G) for G in Gs], axis=0)


