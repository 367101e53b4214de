"""Rotated PSK constellation banks for the ABBA-coded first hop.

A source with ``2**n`` (possibly padded) antennas draws symbols
``s_{2u-1}, s_{2u}`` from constellation ``u`` of a bank of ``2**(n-1)``
members. The bank must satisfy the non-cancellation condition checked by
:func:`validate_bank`; otherwise the Hadamard-combined symbols
``h_l s`` can collide and diversity is lost.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError

SUPPORTED_PSK = (2, 4, 8, 16)
ZERO_TOL = 1e-9


def gray(k):
    return k ^ (k >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit average power point set; ``points[label]`` is the symbol for `label`."""

    points: np.ndarray
    bits_per_symbol: int
    rotation: float = 0.0

    def __post_init__(self):
        if len(self.points) != 2**self.bits_per_symbol:
            raise ConfigError("constellation size must be 2**bits_per_symbol")

    @property
    def order(self) -> int:
        return len(self.points)

    def nearest(self, symbols: np.ndarray) -> np.ndarray:
        """Label of the nearest point for each symbol (ties go to the lowest label)."""
        d = np.abs(np.asarray(symbols)[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)


def build_psk(order: int, rotation: float = 0.0) -> Constellation:
    """Gray-labelled PSK rotated by `rotation` radians.

    Point ``k`` sits at angle ``pi + rotation + 2 pi k / order`` and carries
    label ``gray(k)``, so BPSK maps label 0 to -1 and label 1 to +1.
    """
    if order not in SUPPORTED_PSK:
        raise ConfigError(f"unsupported PSK order {order}; expected one of {SUPPORTED_PSK}")
    k = np.arange(order)
    angles = np.pi + rotation + 2 * np.pi * k / order
    pts = np.empty(order, dtype=complex)
    pts[gray(k)] = np.exp(1j * angles)
    # snap rounding noise so that e.g. BPSK is exactly {-1, +1}
    pts = np.round(pts.real, 15) + 1j * np.round(pts.imag, 15)
    return Constellation(points=pts, bits_per_symbol=int(np.log2(order)), rotation=rotation)


@dataclass(frozen=True, eq=False)
class ConstellationBank:
    constellations: tuple

    def __post_init__(self):
        if not self.constellations:
            raise ConfigError("constellation bank is empty")
        bps = {c.bits_per_symbol for c in self.constellations}
        if len(bps) != 1:
            raise ConfigError("bank members must share bits_per_symbol")

    def __len__(self):
        return len(self.constellations)

    def __getitem__(self, u) -> Constellation:
        return self.constellations[u]

    @property
    def bits_per_symbol(self) -> int:
        return self.constellations[0].bits_per_symbol

    @property
    def order(self) -> int:
        return self.constellations[0].order

    @cached_property
    def min_distance(self) -> float:
        return min(_pair_distances(c.points).min() for c in self.constellations)

    @cached_property
    def max_distance(self) -> float:
        return max(_pair_distances(c.points).max() for c in self.constellations)

    @cached_property
    def symbol_table(self) -> np.ndarray:
        """``(2*len(bank), order)`` table: row ``k`` lists the points usable at position ``k``."""
        return np.repeat(np.stack([c.points for c in self.constellations]), 2, axis=0)


def _pair_distances(points):
    d = np.abs(points[:, None] - points[None, :])
    return d[~np.eye(len(points), dtype=bool)]


def default_bank(num_symbols: int, order: int, base_rotation: float = 0.0) -> ConstellationBank:
    """Bank of ``num_symbols // 2`` PSK constellations interleaved in angle.

    Member ``u`` (1-based) is rotated clockwise by ``(u-1) 2 pi / (order m)``
    relative to the base, which spreads the ``m`` copies evenly inside one
    PSK sector. For BPSK and ``m = 2`` this yields ``{-1, 1}`` and ``{j, -j}``.
    """
    m = max(1, num_symbols // 2)
    members = []
    for u in range(m):
        rot = (base_rotation - u * 2 * np.pi / (order * m)) % (2 * np.pi)
        members.append(build_psk(order, rot))
    return ConstellationBank(tuple(members))


def validate_bank(bank: ConstellationBank) -> bool:
    """True iff no nontrivial {-1, 0, 1} combination of one point per member vanishes."""
    m = len(bank)
    coeffs = np.array([c for c in itertools.product((-1, 0, 1), repeat=m) if any(c)], dtype=float)
    # all symbol choices, one per member: shape (choices, m)
    grids = np.meshgrid(*[c.points for c in bank.constellations], indexing="ij")
    choices = np.stack([g.ravel() for g in grids], axis=-1)
    sums = choices @ coeffs.T
    return bool(np.all(np.abs(sums) > ZERO_TOL))


def bits_to_labels(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Group the last axis of a bit array into MSB-first integer labels."""
    bits = np.asarray(bits)
    if bits.shape[-1] % bits_per_symbol:
        raise ConfigError("bit count is not a multiple of bits_per_symbol")
    b = bits.reshape(bits.shape[:-1] + (-1, bits_per_symbol)).astype(np.int64)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return b @ weights


def labels_to_bits(labels: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    b = (labels[..., None] >> shifts) & 1
    return b.reshape(labels.shape[:-1] + (-1,)).astype(np.int8)


def labels_to_symbols(bank: ConstellationBank, labels: np.ndarray) -> np.ndarray:
    """Symbols for a label array whose last axis walks the source's symbol positions."""
    labels = np.asarray(labels, dtype=np.int64)
    table = bank.symbol_table
    k = labels.shape[-1]
    if k != table.shape[0]:
        raise ConfigError(f"expected {table.shape[0]} symbols per source, got {k}")
    return table[np.arange(k), labels]


def map_bits(bank: ConstellationBank, bits: np.ndarray) -> np.ndarray:
    """Map ``2*len(bank)*bits_per_symbol`` bits (last axis) to one source's symbol vector."""
    bits = np.asarray(bits)
    expected = bank.symbol_table.shape[0] * bank.bits_per_symbol
    if bits.shape[-1] != expected:
        raise ConfigError(f"expected {expected} bits, got {bits.shape[-1]}")
    return labels_to_symbols(bank, bits_to_labels(bits, bank.bits_per_symbol))


def demap(bank: ConstellationBank, symbols: np.ndarray) -> np.ndarray:
    """Hard nearest-point demapping back to bits."""
    symbols = np.asarray(symbols)
    table = bank.symbol_table
    if symbols.shape[-1] != table.shape[0]:
        raise ConfigError(f"expected {table.shape[0]} symbols, got {symbols.shape[-1]}")
    d = np.abs(symbols[..., None] - table) ** 2
    return labels_to_bits(np.argmin(d, axis=-1), bank.bits_per_symbol)


def parse_constellation(spec) -> tuple[int, float]:
    """``{"type": "psk", "order": 8, "rotation_degrees": 0}`` or a name like ``"8psk"``."""
    if isinstance(spec, str):
        name = spec.strip().lower()
        aliases = {"bpsk": 2, "qpsk": 4}
        if name in aliases:
            return aliases[name], 0.0
        if name.endswith("psk") and name[:-3].isdigit():
            return int(name[:-3]), 0.0
        raise ConfigError(f"unknown modulation {spec!r}")
    if spec.get("type", "psk") != "psk":
        raise ConfigError("only PSK constellations are supported")
    return int(spec["order"]), np.deg2rad(float(spec.get("rotation_degrees", 0.0)))
