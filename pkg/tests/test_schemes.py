from fractions import Fraction

import numpy as np
import pytest

from marnsim import schemes
from marnsim.channel import FlowProfile, NetworkConfig, draw_channel
from marnsim.constellation import default_bank
from marnsim.errors import ConfigError
from marnsim.numerics import RandomStream
from marnsim.schemes import Scheme
from marnsim.stbc import default_design


def draw(dims, order, B=300, P=10.0, seed=0, flows=None):
    cfg = NetworkConfig(*dims, P=P, flows=flows)
    rng = RandomStream(seed, 0)
    bank = default_bank(cfg.Jp, order)
    bits = rng.bits((B, cfg.J, cfg.Jp * bank.bits_per_symbol))
    return cfg, rng, bank, bits, draw_channel(cfg, rng, B)


NOISELESS_CASES = [
    (Scheme.IC_RELAY_TDMA, (2, 2, 2, 1), 8),
    (Scheme.IC_RELAY_TDMA, (2, 1, 2, 1), 2),
    (Scheme.IC_RELAY_TDMA, (2, 3, 4, 1), 4),
    (Scheme.IC_RELAY_TDMA, (3, 4, 4, 2), 4),
    (Scheme.IC_RELAY_TDMA, (4, 8, 4, 1), 2),
    (Scheme.FULL_TDMA_DSTC, (2, 2, 2, 1), 16),
    (Scheme.FULL_TDMA_DSTC, (2, 1, 2, 2), 4),
    (Scheme.DSTC_JOINT_ML, (2, 2, 2, 1), 4),
    (Scheme.IC_RELAY_TDMA_DF, (2, 2, 2, 1), 8),
    (Scheme.IC_RELAY_TDMA_DF, (2, 4, 4, 1), 4),
    (Scheme.JOINT_DF_TDMA, (2, 1, 2, 2), 8),
    (Scheme.JOINT_DF_TDMA, (2, 2, 2, 1), 2),
]


@pytest.mark.parametrize("scheme,dims,order", NOISELESS_CASES)
def test_noiseless_runs_are_error_free(scheme, dims, order):
    cfg, _, bank, bits, ch = draw(dims, order)
    out = schemes.run_scheme(scheme, cfg, ch, bits, None, default_design(cfg.R_a), bank)
    assert np.array_equal(out.bits, bits)
    assert out.ok.all()


def test_sources_are_symmetric():
    cfg, rng, bank, bits, ch = draw((2, 2, 2, 1), 2, B=200_000, P=10.0)
    out = schemes.run_ic_relay_tdma(cfg, ch, bits, rng, default_design(2), bank)
    errs = np.sum(out.bits != bits, axis=(0, 2))
    n = bits.shape[0] * bits.shape[2]
    p = errs / n
    # two-proportion z statistic
    pooled = errs.sum() / (2 * n)
    z = abs(p[0] - p[1]) / np.sqrt(2 * pooled * (1 - pooled) / n)
    assert z < 4


class TestRates:
    def test_examples(self):
        assert schemes.symbol_rate(1, 2, 1) == Fraction(1, 3)
        assert schemes.symbol_rate(3, 2, 1) == Fraction(1, 4)
        assert schemes.symbol_rate(1, 2, Fraction(3, 4)) == Fraction(3, 11)
        assert schemes.symbol_rate(5, 2, 1) == Fraction(1, 2)
        assert schemes.symbol_rate(6, 2, 1) == schemes.symbol_rate(7, 2, 1) == Fraction(1, 3)

    def test_linearity_flags(self):
        linear = {s for s, info in schemes.SCHEME_INFO.items() if info.linear}
        assert linear == {Scheme.IC_RELAY_TDMA, Scheme.FULL_TDMA_DSTC}

    def test_unknown(self):
        with pytest.raises(ConfigError):
            schemes.parse_scheme(2)


class TestDiversity:
    @pytest.mark.parametrize("dims,d,cond", [((2, 2, 2, 1), 2, True), ((2, 1, 2, 1), 1, False), ((2, 2, 4, 1), 4, True),
                                             ((2, 4, 2, 1), 2, True), ((2, 2, 4, 2), 6, False)])
    def test_formula(self, dims, d, cond):
        cfg = NetworkConfig(*dims)
        assert schemes.theoretical_diversity(cfg) == d
        assert schemes.int_free_condition(cfg) == cond


class TestRelayLinearity:
    def probe(self, scheme, dims, order):
        cfg, rng, bank, _, ch = draw(dims, order, B=200, P=10.0)
        design = default_design(cfg.R_a)
        R1, R2 = 3 * rng.cn((200, cfg.Jp, cfg.R_a)), 3 * rng.cn((200, cfg.Jp, cfg.R_a))
        t = lambda R: schemes.relay_frame(scheme, cfg, R, ch.F, design, bank).t
        return np.max(np.abs(t(R1 + 0.5 * R2) - t(R1) - 0.5 * t(R2)))

    def test_scheme1_is_linear(self):
        assert self.probe(Scheme.IC_RELAY_TDMA, (2, 2, 2, 1), 8) < 1e-9

    @pytest.mark.parametrize("scheme,dims", [(Scheme.IC_RELAY_TDMA_DF, (2, 2, 2, 1)), (Scheme.JOINT_DF_TDMA, (2, 1, 2, 2))])
    def test_decoding_relays_are_not(self, scheme, dims):
        assert self.probe(scheme, dims, 8) > 1e-3


class TestFlowProfile:
    def test_single_destination_reduces_to_scheme1(self):
        flows = FlowProfile(((0, 1),))
        cfg, _, bank, bits, ch = draw((2, 2, 2, 1), 8, flows=flows)
        d = default_design(2)
        ref = schemes.run_ic_relay_tdma(cfg, ch, bits, RandomStream(5, 1), d, bank)
        _, decoded, ok = schemes.run_flow_profile(cfg, ch, [ch.G], bits, RandomStream(5, 1), d, bank)
        assert np.array_equal(decoded[0][0], ref.bits[:, 0])
        assert np.array_equal(decoded[0][1], ref.bits[:, 1])
        assert np.array_equal(ok, ref.ok)

    def test_two_destinations_share_source(self):
        flows = FlowProfile(((0, 1), (1, 2)))
        cfg, rng, bank, bits, ch = draw((3, 2, 4, 1), 4, flows=flows)
        G2 = rng.cn((bits.shape[0], 4, 2))
        _, decoded, _ = schemes.run_flow_profile(cfg, ch, [ch.G, G2], bits, None, default_design(4), bank)
        assert set(decoded[0]) == {0, 1} and set(decoded[1]) == {1, 2}
        assert np.array_equal(decoded[0][1], decoded[1][1])
        assert np.array_equal(decoded[1][1], bits[:, 1])

    def test_relay_frame_independent_of_destinations(self):
        flows_a = FlowProfile(((0, 1, 2),))
        flows_b = FlowProfile(((0, 1), (1, 2), (2,)))
        cfg, rng, bank, bits, ch = draw((3, 2, 4, 1), 4, flows=flows_a)
        cfg_b = NetworkConfig(3, 2, 4, 1, P=cfg.P, flows=flows_b)
        extra = [rng.cn((bits.shape[0], 4, m)) for m in (1, 3)]
        fa, _, _ = schemes.run_flow_profile(cfg, ch, [ch.G], bits, RandomStream(1, 0), default_design(4), bank)
        fb, _, _ = schemes.run_flow_profile(cfg_b, ch, [ch.G] + extra, bits, RandomStream(1, 0), default_design(4), bank)
        assert np.array_equal(fa.t, fb.t)

    def test_channel_count_must_match(self):
        cfg, _, bank, bits, ch = draw((2, 2, 2, 1), 2, flows=FlowProfile(((0,), (1,))))
        with pytest.raises(ConfigError):
            schemes.run_flow_profile(cfg, ch, [ch.G], bits, None, default_design(2), bank)


def test_af_baselines_need_two_relay_antennas():
    cfg, _, bank, bits, ch = draw((2, 2, 4, 1), 2)
    with pytest.raises(ConfigError):
        schemes.run_full_tdma_dstc(cfg, ch, bits, None, default_design(4), bank)
