"""``marn-sim`` command line.

Every flag can also come from ``--config FILE`` (YAML mapping whose keys
are the long flag names); flags given on the command line win.
Exit status: 0 success, 1 a check failed, 2 invalid input, 3 too little
data for a fit.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path


from ..channel import NetworkConfig
from ..constellation import parse_constellation
from ..errors import ConfigError, InsufficientData
from ..schemes import SCHEME_INFO, Scheme, parse_scheme, symbol_rate, theoretical_diversity
from .checks import SUITES
from .config import load_config, parse_range
from .diversity import estimate_outage, fit_result
from .engine import SweepSpec, run_sweep
from .io import emit

SCHEME_NAMES = {info.label.lower(): s for s, info in SCHEME_INFO.items()}

# the four networks of the diversity-slope figure and the SNR grids that
# put at least three points inside the [1e-5, 1e-2] BER window
FIG4_NETWORKS = {
    "net1": ((2, 1, 2, 1), "alamouti_2", (10, 15, 20, 25, 30, 35)),
    "net2": ((2, 2, 2, 1), "alamouti_2", (10, 14, 18, 22, 26, 30)),
    "net3": ((2, 4, 2, 1), "alamouti_2", (8, 12, 16, 20, 24, 28)),
    "net4": ((2, 2, 4, 1), "rate34_4", (4, 6, 8, 10, 12, 14)),
}

DEFAULTS = {
    "sweep": dict(scheme="ic-relay-tdma", network="2,2,2,1", snr_db="10:5:30", trials=100_000, target_errors=None,
                  mod="bpsk", design=None, seed=0, out=None, format="csv", workers=1, plot_cols=None,
                  figure=None, chunk_size=4096),
    "outage": dict(network="2,2,2,1", eps="1e-3:1e-1", trials=1_000_000, seed=0, extractor="gamma",
                   method="auto", out=None, figure=None),
    "check": dict(suite="zf", trials=None, seed=0),
    "rate": dict(scheme="ic-relay-tdma", J=2, Ro="1"),
    "fig4": dict(out_dir="fig4", trials=2_000_000, target_errors=200, seed=0, workers=1, figure=True),
}


def scheme_arg(value) -> Scheme:
    key = str(value).strip().lower()
    if key in SCHEME_NAMES:
        return SCHEME_NAMES[key]
    return parse_scheme(key)


def count_arg(value) -> int:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a count, got {value!r}") from None
    if x != int(x) or x < 1:
        raise ConfigError(f"expected a positive integer count, got {value!r}")
    return int(x)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marn-sim", description="Monte Carlo simulator for multi-access relay networks")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML file with default values for any flag")
        return sp

    s = common(sub.add_parser("sweep", help="BER against SNR"))
    s.add_argument("--scheme")
    s.add_argument("--network", help="J,J_a,R_a,M")
    s.add_argument("--snr-db", help="start:step:stop or comma list")
    s.add_argument("--trials", help="maximum trials per SNR point")
    s.add_argument("--target-errors", help="stop a point after this many bit errors")
    s.add_argument("--mod", help="bpsk, qpsk, 8psk or 16psk")
    s.add_argument("--design", help="alamouti_2 or rate34_4")
    s.add_argument("--seed")
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--workers")
    s.add_argument("--plot-cols", help="emit only two columns, e.g. snr_db,ber")
    s.add_argument("--figure", help="also render the BER curve to this image file")
    s.add_argument("--chunk-size")

    o = common(sub.add_parser("outage", help="outage probability of the receive SNR"))
    o.add_argument("--network")
    o.add_argument("--eps", help="lo:hi[:count] (log spaced) or comma list")
    o.add_argument("--trials")
    o.add_argument("--seed")
    o.add_argument("--extractor", choices=("gamma", "gamma_g"))
    o.add_argument("--method", choices=("auto", "mc", "is"))
    o.add_argument("--out")
    o.add_argument("--figure")

    c = common(sub.add_parser("check", help="numerical self-checks"))
    c.add_argument("--suite", choices=sorted(SUITES))
    c.add_argument("--trials")
    c.add_argument("--seed")

    r = common(sub.add_parser("rate", help="symbol rate of a scheme"))
    r.add_argument("--scheme")
    r.add_argument("--J")
    r.add_argument("--Ro", help="outer code rate, e.g. 1 or 3/4")

    f = common(sub.add_parser("fig4", help="BER curves of the four diversity-slope networks"))
    f.add_argument("--out-dir")
    f.add_argument("--trials")
    f.add_argument("--target-errors")
    f.add_argument("--seed")
    f.add_argument("--workers")
    return p


def resolve(args) -> dict:
    opts = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        unknown = set(cfg) - set(opts)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return opts


def _network(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    return NetworkConfig.parse(str(text)).dims


def cmd_sweep(o, out=None):
    out = out or sys.stdout
    order, rotation = parse_constellation(o["mod"])
    target = o["target_errors"]
    spec = SweepSpec(
        scheme=int(scheme_arg(o["scheme"])),
        network=_network(o["network"]),
        snr_db=tuple(parse_range(o["snr_db"])),
        max_trials=count_arg(o["trials"]),
        target_bit_errors=None if target is None else count_arg(target),
        seed=int(o["seed"]),
        order=order,
        rotation=rotation,
        design=o["design"],
        chunk_size=count_arg(o["chunk_size"]),
    )
    spec.orthogonal_design()
    result = run_sweep(spec, workers=count_arg(o["workers"]))
    plot_cols = o["plot_cols"]
    if isinstance(plot_cols, str):
        plot_cols = [x.strip() for x in plot_cols.split(",")]
        if len(plot_cols) != 2:
            raise ConfigError("--plot-cols takes exactly two column names")
    text = emit(result, o["format"], o["out"], plot_cols)
    if o["out"] is None:
        out.write(text)
    if o["figure"]:
        from .plotting import plot_ber

        plot_ber([result], o["figure"])
    return 0


def cmd_outage(o, out=None):
    out = out or sys.stdout
    cfg = NetworkConfig(*_network(o["network"]))
    eps = parse_range(o["eps"], log=True)
    res = estimate_outage(cfg, eps, count_arg(o["trials"]), seed=int(o["seed"]),
                          extractor=o["extractor"], method=o["method"])
    lines = ["epsilon,probability,events"]
    lines += [f"{e!r},{p!r},{n}" for e, p, n in zip(res.epsilon.tolist(), res.probability.tolist(), res.events.tolist())]
    text = "\n".join(lines) + "\n"
    if o["out"]:
        Path(o["out"]).write_text(text)
    else:
        out.write(text)
    expected = theoretical_diversity(cfg) if o["extractor"] == "gamma" else cfg.R_a * cfg.M
    print(f"slope {res.slope:.3f} +/- {res.halfwidth:.3f} (method {res.method}, expected {expected})", file=sys.stderr)
    if o["figure"]:
        from .plotting import plot_outage

        plot_outage(res, o["figure"])
    return 0


def cmd_check(o, out=None):
    out = out or sys.stdout
    kw = {"seed": int(o["seed"])}
    if o["trials"] is not None:
        key = {"zf": "channels", "covariance": "draws", "lemma2": "trials"}[o["suite"]]
        kw[key] = count_arg(o["trials"])
    rows = SUITES[o["suite"]](**kw)
    for row in rows:
        out.write(json.dumps(row, default=list) + "\n")
    return 0 if all(r["pass"] for r in rows) else 1


def cmd_rate(o, out=None):
    out = out or sys.stdout
    try:
        Ro = Fraction(str(o["Ro"]))
    except ValueError:
        raise ConfigError(f"bad rate {o['Ro']!r}") from None
    out.write(f"{symbol_rate(scheme_arg(o['scheme']), int(o['J']), Ro)}\n")
    return 0


def cmd_fig4(o, out=None):
    out = out or sys.stdout
    from .plotting import plot_ber

    root = Path(o["out_dir"])
    results = []
    for name, (dims, design, snrs) in FIG4_NETWORKS.items():
        spec = SweepSpec(scheme=1, network=dims, snr_db=snrs, max_trials=count_arg(o["trials"]),
                         target_bit_errors=count_arg(o["target_errors"]), seed=int(o["seed"]), order=2, design=design)
        res = run_sweep(spec, workers=count_arg(o["workers"]))
        emit(res, "csv", root / f"fig4_{name}.csv")
        try:
            slope = f"{fit_result(res, min_errors=count_arg(o['target_errors'])).slope:.2f}"
        except InsufficientData:
            slope = "n/a"
        out.write(f"{name} {dims}: diversity slope {slope}, expected {theoretical_diversity(NetworkConfig(*dims))}\n")
        results.append(res)
    if o["figure"]:
        plot_ber(results, root / "fig4.png", labels=[f"{k} {v[0]}" for k, v in FIG4_NETWORKS.items()])
    return 0


COMMANDS = {"sweep": cmd_sweep, "outage": cmd_outage, "check": cmd_check, "rate": cmd_rate, "fig4": cmd_fig4}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](resolve(args))
    except InsufficientData as exc:
        print(f"marn-sim: insufficient data: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"marn-sim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
