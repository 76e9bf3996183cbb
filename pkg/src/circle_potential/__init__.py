"""Potential theory on the unit circle grid: fractional Dirichlet
energies, Riesz and L2 capacities, a reflection extension operator, a
capacitary Poincare verifier, and series diagnostics for uniqueness
sets."""

from . import _threads  # noqa: F401  (thread caps must precede numpy import)

from .circle import (
    Angle,
    Arc,
    ArcFamily,
    CircleGrid,
    FULL_CIRCLE,
    GridSet,
    chord_distance,
    normalize_angle,
    vitali_disjoint_subfamily,
)
from .energy import (
    BoundarySamples,
    DiscreteMeasure,
    FourierCoeffs,
    dirichlet_energy_global,
    dirichlet_energy_local,
    energy_weight,
    fourier_energy,
    fourier_from_samples,
    kernel_k,
    monomial,
    mu_energy,
    random_trig_polynomial,
)
from .capacity import (
    CapacityEstimate,
    ComparabilityReport,
    SolverConfig,
    classical_capacity,
    comparability_report,
    kernel_exponents,
    l2_capacity,
)
from .extension import (
    ExtensionSetup,
    RATIO_CEILING,
    bump_phi,
    extend,
    extension_ratio,
    six_term_decomposition,
    test_function_F,
)
from .poincare import PoincareReport, constant_estimate, poincare_check, spike_function
from .uniqueness import (
    CantorSpec,
    PowerChoice,
    RatioRule,
    SeriesDiagnostic,
    TableRule,
    cantor_build,
    cantor_capacity_series,
    cantor_grid_set,
    carleson_sum,
    classify_trend,
    geometric_arcs,
    log_reciprocal_arcs,
    uniqueness_series,
)
from .acceptance import run_all
from .errors import (
    CirclePotentialError,
    ConstructionError,
    ConvergenceError,
    DegenerateInputError,
    PreconditionError,
    ResolutionError,
    SetupError,
    SingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "Angle",
    "Arc",
    "ArcFamily",
    "BoundarySamples",
    "CantorSpec",
    "CapacityEstimate",
    "CircleGrid",
    "CirclePotentialError",
    "ComparabilityReport",
    "ConstructionError",
    "ConvergenceError",
    "DegenerateInputError",
    "DiscreteMeasure",
    "ExtensionSetup",
    "FULL_CIRCLE",
    "FourierCoeffs",
    "GridSet",
    "PoincareReport",
    "PowerChoice",
    "PreconditionError",
    "RATIO_CEILING",
    "RatioRule",
    "ResolutionError",
    "SeriesDiagnostic",
    "SetupError",
    "SingularityError",
    "SolverConfig",
    "TableRule",
    "bump_phi",
    "cantor_build",
    "cantor_capacity_series",
    "cantor_grid_set",
    "carleson_sum",
    "chord_distance",
    "classical_capacity",
    "classify_trend",
    "comparability_report",
    "constant_estimate",
    "dirichlet_energy_global",
    "dirichlet_energy_local",
    "energy_weight",
    "extend",
    "extension_ratio",
    "fourier_energy",
    "fourier_from_samples",
    "geometric_arcs",
    "kernel_exponents",
    "kernel_k",
    "l2_capacity",
    "log_reciprocal_arcs",
    "monomial",
    "mu_energy",
    "normalize_angle",
    "poincare_check",
    "random_trig_polynomial",
    "run_all",
    "six_term_decomposition",
    "spike_function",
    "test_function_F",
    "uniqueness_series",
    "vitali_disjoint_subfamily",
]
