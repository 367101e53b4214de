"""Network configuration and i.i.d. Rayleigh block fading.

Channel arrays carry a leading trial axis. ``F[b, j, k, i]`` is the gain
from antenna ``k`` of source ``j`` to relay antenna ``i``; the antenna axis
is padded to the next power of two with exact zeros. ``G[b, i, m]`` is the
gain from relay antenna ``i`` to destination antenna ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import RandomStream, fro2


@dataclass(frozen=True)
class FlowProfile:
    """Which sources each destination wants, e.g. ``((0, 1), (1, 2))``."""

    wanted: tuple
    antennas: tuple = ()

    def validate(self, J: int):
        if not self.wanted:
            raise ConfigError("flow profile has no destinations")
        seen = set()
        for group in self.wanted:
            for j in group:
                if not 0 <= j < J:
                    raise ConfigError(f"flow profile names unknown source {j}")
                seen.add(j)
        if seen != set(range(J)):
            raise ConfigError("every source must be wanted by at least one destination")
        if self.antennas and len(self.antennas) != len(self.wanted):
            raise ConfigError("flow profile antenna list length mismatch")

    def antennas_of(self, n: int, default: int) -> int:
        return self.antennas[n] if self.antennas else default


@dataclass(frozen=True)
class NetworkConfig:
    """A ``(J, J_a, R_a, M)`` multi-access relay network at transmit power `P`."""

    J: int
    J_a: int
    R_a: int
    M: int
    P: float = 1.0
    T: int | None = None
    flows: FlowProfile | None = field(default=None)

    def __post_init__(self):
        if min(self.J, self.J_a, self.R_a, self.M) < 1:
            raise ConfigError("J, J_a, R_a and M must all be >= 1")
        if self.R_a < self.J:
            raise ConfigError(f"interference cancellation needs R_a >= J (got R_a={self.R_a}, J={self.J})")
        if not self.P > 0:
            raise ConfigError("P must be positive")
        if self.T is not None and self.T < self.T1:
            raise ConfigError(f"coherence interval T={self.T} shorter than first hop T1={self.T1}")
        if self.flows is not None:
            self.flows.validate(self.J)

    @classmethod
    def parse(cls, text: str, **kw) -> "NetworkConfig":
        """From ``"J,J_a,R_a,M"``."""
        try:
            J, J_a, R_a, M = (int(x) for x in text.replace("(", "").replace(")", "").split(","))
        except ValueError:
            raise ConfigError(f"network must be 'J,J_a,R_a,M', got {text!r}") from None
        return cls(J, J_a, R_a, M, **kw)

    @property
    def n(self) -> int:
        """ABBA depth; ``J_a = 1`` still uses the 2x2 Alamouti block."""
        return max(1, math.ceil(math.log2(self.J_a)))

    @property
    def Jp(self) -> int:
        """Padded antenna count ``2**n`` (also symbols per source per frame)."""
        return 2**self.n

    @property
    def T1(self) -> int:
        return self.Jp

    @property
    def num_subsystems(self) -> int:
        return 2 ** (self.n - 1)

    @property
    def dims(self):
        return (self.J, self.J_a, self.R_a, self.M)

    def with_power(self, P: float) -> "NetworkConfig":
        return NetworkConfig(self.J, self.J_a, self.R_a, self.M, P, self.T, self.flows)

    def check_coherence(self, T2: int):
        if self.T is not None and self.T < T2:
            raise ConfigError(f"coherence interval T={self.T} shorter than second hop T2={T2}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    F: np.ndarray  # (..., J, Jp, R_a)
    G: np.ndarray  # (..., R_a, M)

    @property
    def batch(self) -> int:
        return self.F.shape[0]


def draw_channel(cfg: NetworkConfig, rng: RandomStream, batch: int = 1) -> ChannelRealization:
    """Fresh CN(0,1) draws for `batch` coherence blocks; padded rows stay zero."""
    F = np.zeros((batch, cfg.J, cfg.Jp, cfg.R_a), dtype=complex)
    F[:, :, : cfg.J_a, :] = rng.cn((batch, cfg.J, cfg.J_a, cfg.R_a))
    G = rng.cn((batch, cfg.R_a, cfg.M))
    return ChannelRealization(F=F, G=G)


def awgn(shape, rng: RandomStream) -> np.ndarray:
    """Unit-variance circular complex white noise."""
    if isinstance(shape, int):
        shape = (shape,)
    return rng.cn(shape)


def gamma_g(G: np.ndarray) -> np.ndarray:
    """Relay-destination channel energy ``||G||^2``."""
    return fro2(np.asarray(G))
