"""Learn delays, model parameters and history functions of delay ODEs with adjoint gradients."""

from .adjoint import GradientBundle, compute_gradients, quad_modified_trapezoid
from .config import RunConfig, load as load_config
from .data import Dataset, NoiseSpec, add_noise, generate_true, read_csv, write_csv
from .gradcheck import check_problem, compare, fd_gradient
from .loss import LossConfig, NormKind, pointwise_loss, pointwise_loss_grad, total_loss
from .models import CATALOG, make_ic, make_model
from .optim import AdamState, LrSchedule, adam_step, clamp_tau, lr_at
from .problem import Problem
from .solver import make_grid, solve_forward
from .spline import CubicSpline
from .trainer import FitConfig, FitResult, fit
from .types import (
    ConfigError, DelayFitError, DimensionMismatch, NonFiniteState, ParseError, SingularDynamics,
    Trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "CATALOG", "ConfigError", "CubicSpline", "Dataset", "DelayFitError",
    "DimensionMismatch", "FitConfig", "FitResult", "GradientBundle", "LossConfig", "LrSchedule",
    "NoiseSpec", "NonFiniteState", "NormKind", "ParseError", "Problem", "RunConfig",
    "SingularDynamics", "Trajectory", "adam_step", "add_noise", "check_problem", "clamp_tau",
    "compare", "compute_gradients", "fd_gradient", "fit", "generate_true", "load_config",
    "lr_at", "make_grid", "make_ic", "make_model", "pointwise_loss", "pointwise_loss_grad",
    "quad_modified_trapezoid", "read_csv", "solve_forward", "total_loss", "write_csv",
]
