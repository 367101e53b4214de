"""Deterministic Monte Carlo SNR sweeps.

Trials run in fixed-size chunks. Chunk ``k`` of SNR point ``i`` draws all
of its randomness from ``RandomStream(seed, (i, k))``, and chunks are
reduced in index order, so the result does not depend on how many worker
processes evaluate them.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from ..channel import NetworkConfig, draw_channel
from ..constellation import default_bank
from ..errors import ConfigError
from ..numerics import RandomStream
from ..schemes import SCHEME_INFO, parse_scheme, run_scheme
from ..stbc import default_design, make_design

DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class SweepSpec:
    scheme: int
    network: tuple
    snr_db: tuple
    max_trials: int = 100_000
    target_bit_errors: int | None = None
    seed: int = 0
    order: int = 2
    rotation: float = 0.0
    design: str | None = None
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        parse_scheme(self.scheme)
        if len(self.network) != 4:
            raise ConfigError("network must have four entries (J, J_a, R_a, M)")
        NetworkConfig(*self.network)
        if not self.snr_db:
            raise ConfigError("at least one SNR point is required")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ConfigError("snr_db must be strictly increasing")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be >= 1")
        if self.target_bit_errors is not None and self.target_bit_errors < 1:
            raise ConfigError("target_bit_errors must be positive")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")

    def config(self, snr_db: float | None = None) -> NetworkConfig:
        P = 1.0 if snr_db is None else 10 ** (snr_db / 10)
        return NetworkConfig(*self.network, P=P)

    def bank(self):
        cfg = self.config()
        return default_bank(cfg.Jp, self.order, self.rotation)

    def orthogonal_design(self):
        R_a = self.network[2]
        return make_design(self.design, R_a) if self.design else default_design(R_a)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["network"] = list(self.network)
        d["snr_db"] = list(self.snr_db)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        d["network"] = tuple(d["network"])
        d["snr_db"] = tuple(float(x) for x in d["snr_db"])
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class PointRecord:
    snr_db: float
    trials: int
    discarded: int
    bits: list  # per source
    bit_errors: list  # per source

    def ber(self, source=None) -> float:
        b = sum(self.bits) if source is None else self.bits[source]
        e = sum(self.bit_errors) if source is None else self.bit_errors[source]
        return e / b if b else float("nan")


@dataclass
class SweepResult:
    spec: SweepSpec
    points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def ber(self, source=None) -> np.ndarray:
        return np.array([p.ber(source) for p in self.points])

    def errors(self, source=None) -> np.ndarray:
        return np.array([sum(p.bit_errors) if source is None else p.bit_errors[source] for p in self.points])

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    def __eq__(self, other):
        if not isinstance(other, SweepResult):
            return NotImplemented
        strip = lambda m: {k: v for k, v in m.items() if k != "created"}
        return self.spec == other.spec and self.points == other.points and strip(self.metadata) == strip(other.metadata)


def wilson_interval(errors: int, n: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return float("nan"), float("nan")
    z = norm.ppf(0.5 + confidence / 2)
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def simulate_chunk(spec: SweepSpec, snr_index: int, chunk_index: int, size: int):
    """Run one chunk; returns ``(valid, discarded, bits[J], errors[J])``."""
    cfg = spec.config(spec.snr_db[snr_index])
    bank = spec.bank()
    design = spec.orthogonal_design()
    rng = RandomStream(spec.seed, (snr_index, chunk_index))
    bits = rng.bits((size, cfg.J, cfg.Jp * bank.bits_per_symbol))
    channel = draw_channel(cfg, rng, size)
    out = run_scheme(spec.scheme, cfg, channel, bits, rng, design, bank)
    ok = out.ok
    errs = np.sum(out.bits[ok] != bits[ok], axis=(0, 2))
    valid = int(ok.sum())
    return valid, size - valid, [valid * bits.shape[-1]] * cfg.J, [int(e) for e in errs]


def _chunk_sizes(spec):
    full, rest = divmod(spec.max_trials, spec.chunk_size)
    return [spec.chunk_size] * full + ([rest] if rest else [])


def _run_point(spec, i, pool, workers):
    sizes = _chunk_sizes(spec)
    J = spec.network[0]
    valid = discarded = 0
    bits = [0] * J
    errors = [0] * J
    k = 0
    while k < len(sizes):
        batch = range(k, min(k + workers, len(sizes)))
        if pool is None:
            tallies = [simulate_chunk(spec, i, c, sizes[c]) for c in batch]
        else:
            tallies = list(pool.map(simulate_chunk, [spec] * len(batch), [i] * len(batch), batch, [sizes[c] for c in batch]))
        for tally in tallies:
            k += 1
            v, d, b, e = tally
            valid += v
            discarded += d
            bits = [x + y for x, y in zip(bits, b)]
            errors = [x + y for x, y in zip(errors, e)]
            if spec.target_bit_errors is not None and sum(errors) >= spec.target_bit_errors:
                return PointRecord(spec.snr_db[i], valid, discarded, bits, errors)
    return PointRecord(spec.snr_db[i], valid, discarded, bits, errors)


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepResult:
    """Simulate every SNR point of `spec`.

    Each point stops after the first chunk whose cumulative bit-error count
    reaches ``target_bit_errors``, or after ``max_trials`` trials.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    result = SweepResult(spec=spec, metadata=sweep_metadata(spec))
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for i in range(len(spec.snr_db)):
            rec = _run_point(spec, i, pool, workers)
            result.points.append(rec)
            if progress is not None:
                progress(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def sweep_metadata(spec: SweepSpec) -> dict:
    from datetime import datetime, timezone

    scheme = parse_scheme(spec.scheme)
    return {
        "seed": spec.seed,
        "scheme": SCHEME_INFO[scheme].label,
        "network": list(spec.network),
        "modulation": f"{spec.order}psk",
        "design": spec.orthogonal_design().name,
        "config_hash": spec.digest(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
