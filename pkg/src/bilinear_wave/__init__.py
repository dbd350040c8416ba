"""Optimal bilinear control of the damped wave equation on finite-difference grids.

The state ``y`` solves ``y'' + y' = Δy + u y + f`` with homogeneous Dirichlet
data; the control ``u`` is chosen in a box ``[α, β]`` to minimise a tracking
cost with Tikhonov term ``(γ/2)||u||²``.
"""

from .adjoint import AdjointTrajectory, DecayCertificate, adjoint_for_source, decay_certificate, solve_adjoint
from .checks import CheckResult, VerifySuiteReport, run_verify_suite
from .domain import SpatialGrid, TimeGrid
from .errors import (
    DegenerateCone,
    InstabilityDetected,
    LineSearchStalled,
    ScenarioError,
    ShapeError,
    SingularStep,
    SolverError,
)
from .objective import (
    CostReport,
    GradientField,
    cost,
    directional_derivative,
    evaluate_cost,
    gradient,
    hessian_apply,
    second_derivative,
)
from .optimizer import (
    CriticalCone,
    OptimizeResult,
    OptimizerConfig,
    SecondOrderReport,
    kkt_residual,
    project,
    projected_gradient_solve,
    second_order_report,
)
from .scenario import Scenario, load_scenario, parse_scenario, serialize_scenario
from .sensitivity import solve_linearized, solve_second_linearized
from .state import (
    EnergyReport,
    StateTrajectory,
    WaveProblem,
    lipschitz_probe,
    solve_forward,
    verify_accel_estimate,
    verify_energy_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "adjoint_for_source",
    "AdjointTrajectory",
    "CheckResult",
    "cost",
    "CostReport",
    "CriticalCone",
    "decay_certificate",
    "DecayCertificate",
    "DegenerateCone",
    "directional_derivative",
    "EnergyReport",
    "evaluate_cost",
    "gradient",
    "GradientField",
    "hessian_apply",
    "InstabilityDetected",
    "kkt_residual",
    "LineSearchStalled",
    "lipschitz_probe",
    "load_scenario",
    "OptimizerConfig",
    "OptimizeResult",
    "parse_scenario",
    "project",
    "projected_gradient_solve",
    "run_verify_suite",
    "Scenario",
    "ScenarioError",
    "second_derivative",
    "second_order_report",
    "SecondOrderReport",
    "serialize_scenario",
    "ShapeError",
    "SingularStep",
    "solve_adjoint",
    "solve_forward",
    "solve_linearized",
    "solve_second_linearized",
    "SolverError",
    "SpatialGrid",
    "StateTrajectory",
    "TimeGrid",
    "verify_accel_estimate",
    "verify_energy_estimate",
    "VerifySuiteReport",
    "WaveProblem",
]
