"""Robust quantum gate pulses with Smolyak sparse-grid sampling of uncertainties."""

from ._accel import ENV_FLAG, backend_name
from .objective import RobustObjective, Uncertainty, UncertaintyModel, phi1, phi2, phi3
from .optimize import OptimizerAbort, OptimizerConfig, OptimizerTrace, minimize
from .pulses import FixtureError, FourierPulse, PiecewisePulse, load_pulse, save_pulse
from .qdyn import HamiltonianModel, PropagationGrid, propagate, propagate_with_gradient
from .quadrature import InvalidArgument, Measure, gauss_hermite_prob, gauss_legendre, integrate_1d
from .sparsegrid import SamplingSet, dense_grid, estimate, monte_carlo_set, smolyak_grid

__version__ = "0.1.0"

__all__ = [
    "ENV_FLAG",
    "backend_name",
    "RobustObjective",
    "Uncertainty",
    "UncertaintyModel",
    "phi1",
    "phi2",
    "phi3",
    "OptimizerAbort",
    "OptimizerConfig",
    "OptimizerTrace",
    "minimize",
    "FixtureError",
    "FourierPulse",
    "PiecewisePulse",
    "load_pulse",
    "save_pulse",
    "HamiltonianModel",
    "PropagationGrid",
    "propagate",
    "propagate_with_gradient",
    "InvalidArgument",
    "Measure",
    "gauss_hermite_prob",
    "gauss_legendre",
    "integrate_1d",
    "SamplingSet",
    "dense_grid",
    "estimate",
    "monte_carlo_set",
    "smolyak_grid",
]
