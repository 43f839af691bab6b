"""Simulation of distributed optimization with spatio-temporal compression."""

from .algorithms import ALGORITHMS, AlgorithmState, StepSizes, init_state
from .certify import (
    CertificationReport,
    certify_contraction,
    certify_induced_decay,
    certify_pe,
    estimate_delta,
)
from .compressors import CompressorSpec, CostModel, byte_cost, compress, compress_rows
from .config import RunConfig, load_config, parse_config
from .errors import (
    ConfigError,
    DivergenceError,
    InvalidTopologyError,
    NumericInputError,
    ObserverConsistencyError,
    STCompError,
)
from .graph import Graph, build_complete, build_ring, laplacian, random_connected, spectrum
from .objectives import LeastSquares, RosenbrockSum, make_least_squares, make_rosenbrock_sum
from .runner import run
from .telemetry import RunRecord, Trace, fit_linear_rate, summarize

__version__ = "0.1.0"
