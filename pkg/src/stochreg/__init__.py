"""Deterministic (sigma, rho) and stochastic (sigma*, rho) traffic regulators."""
from .analysis import RunReport, delay_stats, verify_bound, workload_ccdf
from .bounds import BoundFunction, BoundGrid, ConfigError, default_bound_function, make_grid, m_max
from .deterministic import ShapeRun, shape_deterministic
from .model import Packet, RegulatorParams, ShapedPacket, Trace, validate_trace
from .stochastic import FloorError, shape_stochastic
from .traffic import SourceConfig, empirical_rate, generate
from .workload import SamplePath, check_sigma_rho, workload_at

__version__ = "0.1.0"
