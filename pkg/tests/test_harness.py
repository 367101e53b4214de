import json

import numpy as np
import pytest
from statsmodels.stats.proportion import proportion_confint

from marnsim.channel import NetworkConfig
from marnsim.errors import ConfigError, InsufficientData
from marnsim.harness import cli
from marnsim.harness.config import load_config, parse_range
from marnsim.harness.diversity import check_snr_upper_bound, estimate_outage, fit_diversity, outage_from_samples
from marnsim.harness.engine import SweepResult, SweepSpec, run_sweep, wilson_interval
from marnsim.harness.io import CSV_COLUMNS, emit, from_json, load_result, to_csv, to_json


@pytest.fixture(scope="module")
def small_sweep():
    spec = SweepSpec(scheme=1, network=(2, 2, 2, 1), snr_db=(0.0, 6.0, 12.0, 18.0), max_trials=20_000,
                     target_bit_errors=300, seed=7, chunk_size=2000)
    return run_sweep(spec)


class TestSweepSpec:
    @pytest.mark.parametrize("kw", [dict(snr_db=(10.0, 10.0)), dict(snr_db=(20.0, 10.0)), dict(max_trials=0),
                                    dict(network=(3, 2, 2, 1)), dict(scheme=4), dict(snr_db=())])
    def test_rejects(self, kw):
        base = dict(scheme=1, network=(2, 2, 2, 1), snr_db=(10.0,))
        base.update(kw)
        with pytest.raises(ConfigError):
            SweepSpec(**base)


class TestRunSweep:
    def test_ber_decreases(self, small_sweep):
        ber = small_sweep.ber()
        assert np.all(np.diff(ber) < 0)

    def test_ber_bookkeeping(self, small_sweep):
        for p in small_sweep.points:
            assert p.ber() == sum(p.bit_errors) / sum(p.bits)
            assert sum(p.bits) == p.trials * 2 * 2
            assert p.discarded == 0

    def test_early_stop_at_first_chunk_over_target(self):
        base = dict(scheme=1, network=(2, 2, 2, 1), snr_db=(12.0,), seed=5, chunk_size=500)
        point = run_sweep(SweepSpec(**base, max_trials=50_000, target_bit_errors=200)).points[0]
        assert sum(point.bit_errors) >= 200
        assert point.trials % 500 == 0 and point.trials < 50_000
        # one chunk fewer had not reached the target yet
        shorter = run_sweep(SweepSpec(**base, max_trials=point.trials - 500)).points[0]
        assert sum(shorter.bit_errors) < 200

    def test_worker_count_does_not_matter(self):
        spec = SweepSpec(scheme=1, network=(2, 2, 2, 1), snr_db=(5.0, 15.0), max_trials=6000,
                         target_bit_errors=500, seed=3, chunk_size=1000)
        assert to_csv(run_sweep(spec, workers=1)) == to_csv(run_sweep(spec, workers=3))

    def test_high_snr_is_error_free(self):
        spec = SweepSpec(scheme=1, network=(2, 2, 2, 1), snr_db=(60.0,), max_trials=100_000, seed=1, chunk_size=20_000)
        assert sum(run_sweep(spec).points[0].bit_errors) == 0

    @pytest.mark.parametrize("errors,n", [(0, 100), (5, 1000), (200, 10_000), (1000, 1000)])
    def test_wilson_matches_reference(self, errors, n):
        lo, hi = wilson_interval(errors, n)
        ref = proportion_confint(errors, n, alpha=0.05, method="wilson")
        assert lo == pytest.approx(ref[0], abs=1e-12) and hi == pytest.approx(ref[1], abs=1e-12)


class TestFitDiversity:
    def test_exact_power_law(self):
        snr = np.arange(10, 41, 5.0)
        fit = fit_diversity(snr, (10 ** (snr / 10)) ** -2.0, ber_window=(1e-9, 1))
        assert fit.slope == pytest.approx(2.0, abs=1e-3)

    def test_log_factor_converges_from_below(self):
        snr = np.arange(0, 121, 5.0)
        P = 10 ** (snr / 10)
        ber = 0.1 * np.log(P + 1) / P
        low = fit_diversity(snr[4:9], ber[4:9], ber_window=(0, 1)).slope
        high = fit_diversity(snr[-5:], ber[-5:], ber_window=(0, 1)).slope
        # local slope of log(P)/P is 1 - 1/ln P
        assert low < high < 1
        assert high == pytest.approx(1 - 1 / np.log(10 ** 11), abs=0.01)

    def test_window_and_error_filters(self):
        snr = np.array([0.0, 10, 20, 30, 40])
        ber = np.array([0.2, 1e-2, 1e-3, 1e-4, 1e-5])
        fit = fit_diversity(snr, ber, errors=[500, 500, 500, 500, 50], ber_window=(1e-5, 1e-2))
        assert fit.used.tolist() == [False, True, True, True, False]
        with pytest.raises(InsufficientData):
            fit_diversity(snr, ber, errors=[500, 500, 500, 50, 50])


class TestOutage:
    EPS = np.logspace(-3, -1, 5)

    def test_exponential(self):
        x = np.random.default_rng(0).exponential(size=2_000_000)
        assert outage_from_samples(x, self.EPS).slope == pytest.approx(1, abs=0.1)

    def test_gamma_g(self):
        res = estimate_outage(NetworkConfig(2, 2, 2, 1), self.EPS, 2_000_000, seed=1, extractor="gamma_g")
        assert res.slope == pytest.approx(2, abs=0.2)

    def test_full_gamma_and_monotone(self):
        res = estimate_outage(NetworkConfig(2, 2, 2, 1), self.EPS, 200_000, seed=1)
        assert res.method == "is"
        assert res.slope == pytest.approx(2, abs=0.2)
        assert np.all(np.diff(res.probability) >= 0)

    def test_importance_sampling_agrees_with_plain(self):
        eps = np.array([0.03, 0.1, 0.3])
        cfg = NetworkConfig(2, 2, 2, 1)
        plain = estimate_outage(cfg, eps, 2_000_000, seed=2, method="mc")
        weighted = estimate_outage(cfg, eps, 400_000, seed=3, method="is")
        # plain-MC relative standard error is about 1/sqrt(events)
        tol = 4 / np.sqrt(plain.events)
        np.testing.assert_allclose(weighted.probability, plain.probability, rtol=np.max(tol) + 0.02)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            estimate_outage(NetworkConfig(2, 2, 4, 1), self.EPS, 10_000, method="mc")


class TestReceiveSnrBound:
    @pytest.mark.parametrize("dims", [(2, 2, 2, 1), (2, 2, 4, 2), (3, 4, 4, 1)])
    def test_no_violations(self, dims):
        assert check_snr_upper_bound(NetworkConfig(*dims, P=10.0), 100_000, seed=4) == 0

    def test_infinite_destination_gain(self):
        assert check_snr_upper_bound(NetworkConfig(2, 2, 2, 1, P=10.0), 50_000, infinite_gamma_g=True) == 0


class TestEmit:
    def test_empty_sweep_is_header_only(self):
        spec = SweepSpec(scheme=1, network=(2, 2, 2, 1), snr_db=(10.0,))
        assert to_csv(SweepResult(spec=spec)) == ",".join(CSV_COLUMNS) + "\n"

    def test_rows(self, small_sweep):
        lines = to_csv(small_sweep).splitlines()
        assert lines[0].split(",") == list(CSV_COLUMNS)
        assert len(lines) == 1 + 3 * len(small_sweep.points)
        assert [ln.split(",")[-1] for ln in lines[1:4]] == ["1", "2", "all"]

    def test_json_round_trip(self, small_sweep, tmp_path):
        path = tmp_path / "r.json"
        emit(small_sweep, "json", path)
        back = load_result(path)
        assert back == small_sweep
        assert to_json(back) == to_json(small_sweep)
        assert from_json(path.read_text()).metadata["config_hash"] == small_sweep.spec.digest()

    def test_plot_cols(self, small_sweep):
        lines = to_csv(small_sweep, plot_cols=("snr_db", "ber")).splitlines()
        assert lines[0] == "snr_db,ber" and len(lines) == 1 + len(small_sweep.points)

    def test_io_error_names_path(self, small_sweep, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            emit(small_sweep, "csv", blocker / "out.csv")


class TestConfig:
    def test_ranges(self):
        assert parse_range("10:2:16") == [10, 12, 14, 16]
        assert parse_range("1,2.5") == [1, 2.5]
        np.testing.assert_allclose(parse_range("1e-3:1e-1:3", log=True), [1e-3, 1e-2, 1e-1])
        with pytest.raises(ConfigError):
            parse_range("10:0:20")

    def test_load(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("network: 2,2,2,1\nsnr-db: 10:5:20\n")
        assert load_config(p) == {"network": "2,2,2,1", "snr_db": "10:5:20"}
        p.write_text("- a\n- b\n")
        with pytest.raises(ConfigError):
            load_config(p)


class TestCli:
    def test_rate(self, capsys):
        assert cli.main(["rate", "--scheme", "ic-relay-tdma", "--J", "2", "--Ro", "3/4"]) == 0
        assert capsys.readouterr().out.strip() == "3/11"

    def test_sweep_with_config_and_override(self, tmp_path):
        conf = tmp_path / "c.yaml"
        conf.write_text("network: 2,2,2,1\nsnr_db: 0:10:20\ntrials: 4000\nseed: 1\nchunk_size: 1000\n")
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        fig = tmp_path / "f.png"
        assert cli.main(["sweep", "--config", str(conf), "--out", str(out1), "--figure", str(fig)]) == 0
        assert cli.main(["sweep", "--config", str(conf), "--seed", "2", "--out", str(out2)]) == 0
        assert out1.read_text() != out2.read_text()
        assert fig.stat().st_size > 0
        assert len(out1.read_text().splitlines()) == 1 + 3 * 3

    def test_json_output(self, tmp_path):
        out = tmp_path / "r.json"
        assert cli.main(["sweep", "--snr-db", "10", "--trials", "1000", "--format", "json", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["metadata"]["scheme"] == "IC-Relay-TDMA"

    @pytest.mark.parametrize("argv", [["sweep", "--network", "2,2,1"], ["sweep", "--snr-db", "20,10"],
                                      ["sweep", "--scheme", "2"], ["sweep", "--trials", "-5"],
                                      ["sweep", "--network", "2,2,4,1", "--design", "alamouti_2"],
                                      ["rate", "--Ro", "x"]])
    def test_validation_exit_code(self, argv):
        assert cli.main(argv) == 2

    def test_insufficient_data_exit_code(self):
        assert cli.main(["outage", "--network", "2,2,4,1", "--trials", "1000", "--method", "mc"]) == 3

    def test_outage(self, tmp_path):
        out = tmp_path / "o.csv"
        assert cli.main(["outage", "--network", "2,2,2,1", "--trials", "1e5", "--out", str(out),
                         "--figure", str(tmp_path / "o.png")]) == 0
        assert out.read_text().splitlines()[0] == "epsilon,probability,events"

    def test_check(self, capsys):
        assert cli.main(["check", "--suite", "zf", "--trials", "200"]) == 0
        rows = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
        assert len(rows) == 4 and all(r["pass"] for r in rows)

    def test_fig4_recipe(self, tmp_path, monkeypatch):
        small = {k: (v[0], v[1], v[2][:3]) for k, v in cli.FIG4_NETWORKS.items()}
        monkeypatch.setattr(cli, "FIG4_NETWORKS", small)
        assert cli.main(["fig4", "--out-dir", str(tmp_path), "--trials", "2000", "--target-errors", "100"]) == 0
        assert sorted(p.name for p in tmp_path.glob("*.csv")) == [f"fig4_net{i}.csv" for i in range(1, 5)]
        assert (tmp_path / "fig4.png").exists()
