"""Adaptive one-step integrators for ``M y' = fe(t, y) + fi(t, y) + ff(t, y)``.

Explicit, diagonally implicit and ImEx additive Runge-Kutta steppers share
one adaptive driver (:class:`Integrator`) with error control, dense output,
event location and inequality constraints. :class:`MriStepper` adds
fixed-step multirate methods with a pluggable fast integrator.
"""

from ._kernels import BACKEND
from .adaptivity import AdaptivityParams, ControllerKind, StepSizeError
from .ark import ArkStepper
from .base import RhsFailure, StepAttempt, StepContext, Stepper, StepperStats
from .core import (BandedMatrix, DenseMatrix, IllegalWeightError, MassOperator,
                   SingularMatrixError, Tolerances, UsageError, error_weights, wrms_norm)
from .erk import ErkStepper
from .integrator import IntegrationError, Integrator, Mode, Status
from .interpolation import HermiteInterpolant, LagrangeInterpolant, make_interpolant
from .mri import (ArkInner, BrokenResetInner, ExactLinearInner, ForcingPolynomial,
                  InnerStepper, MriStepper, SdirkInner, build_forcing, wrap_ark_as_inner)
from .solvers import NewtonConfig, PredictorKind, SolverFailure
from .tableaux import (ButcherTable, MriCoupling, TableError, available, compose_mri, get,
                       load_table, mis_to_mri, save_table)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdaptivityParams", "ControllerKind", "StepSizeError", "ArkStepper",
    "RhsFailure", "StepAttempt", "StepContext", "Stepper", "StepperStats", "BandedMatrix",
    "DenseMatrix", "IllegalWeightError", "MassOperator", "SingularMatrixError", "Tolerances",
    "UsageError", "error_weights", "wrms_norm", "ErkStepper", "IntegrationError", "Integrator",
    "Mode", "Status", "HermiteInterpolant", "LagrangeInterpolant", "make_interpolant",
    "ArkInner", "BrokenResetInner", "ExactLinearInner", "ForcingPolynomial", "InnerStepper",
    "MriStepper", "SdirkInner", "build_forcing", "wrap_ark_as_inner", "NewtonConfig",
    "PredictorKind", "SolverFailure", "ButcherTable", "MriCoupling", "TableError", "available",
    "compose_mri", "get", "load_table", "mis_to_mri", "save_table",
]
