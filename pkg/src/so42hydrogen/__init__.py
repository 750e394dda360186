"""Numerical toolkit for the so(4,2) structure of the hydrogen atom.

Verifies the 15-generator commutator table and its classical Poisson
realizations, builds the bound-state matrix representation on |nlm>
kets, checks the hypotheses of strong analytic controllability on
finite truncations, and simulates and optimizes piecewise-constant
control schedules.
"""

from .algebra import (
    Subalgebra,
    bracket,
    generated_subalgebra,
    generated_subalgebra_names,
    jacobi_defect,
    killing_form,
    structure_constants,
    structure_constants_array,
    verify_table,
)
from .classical import (
    RelationReport,
    eval_generator,
    poisson_bracket,
    realization,
    verify_relations,
)
from .controllability import (
    ControllabilityReport,
    ControlSystem,
    b1_residual,
    check_ideal_condition,
    controllability_report,
    drift_only_system,
    five_generator_system,
    full_system,
    lie_span_controls,
    orbit_dimension,
)
from .errors import ConstraintError, DomainError, RankAmbiguous, SymmetryError
from .generators import NAMES, N_GENERATORS, parse_generator
from .representation import (
    BasisState,
    RepSet,
    build_basis,
    build_rep,
    casimir_check,
    check_commutators,
    heisenberg_generator,
    ladder_coefficient,
)
from .simulator import (
    PulseSchedule,
    Trajectory,
    fidelity,
    matrix_exponential,
    observable_expectation,
    optimize_pulse,
    propagate,
)

__version__ = "0.1.0"

__all__ = [
    "BasisState",
    "ConstraintError",
    "ControlSystem",
    "ControllabilityReport",
    "DomainError",
    "NAMES",
    "N_GENERATORS",
    "PulseSchedule",
    "RankAmbiguous",
    "RelationReport",
    "RepSet",
    "Subalgebra",
    "SymmetryError",
    "Trajectory",
    "b1_residual",
    "bracket",
    "build_basis",
    "build_rep",
    "casimir_check",
    "check_commutators",
    "check_ideal_condition",
    "controllability_report",
    "drift_only_system",
    "eval_generator",
    "fidelity",
    "five_generator_system",
    "full_system",
    "generated_subalgebra",
    "generated_subalgebra_names",
    "heisenberg_generator",
    "jacobi_defect",
    "killing_form",
    "lie_span_controls",
    "matrix_exponential",
    "observable_expectation",
    "optimize_pulse",
    "orbit_dimension",
    "ladder_coefficient",
    "parse_generator",
    "poisson_bracket",
    "propagate",
    "realization",
    "structure_constants",
    "structure_constants_array",
    "verify_relations",
    "verify_table",
]
