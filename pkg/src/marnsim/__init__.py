"""Monte Carlo link-level simulator for multi-access relay networks."""
from .channel import FlowProfile, NetworkConfig, draw_channel
from .constellation import ConstellationBank, build_psk, default_bank
from .errors import ConfigError, DegenerateChannel, HypothesisSpaceTooLarge, InsufficientData, SingularMatrix
from .schemes import Scheme, run_scheme, symbol_rate, theoretical_diversity
from .stbc import default_design, make_design

__version__ = "0.1.0"
