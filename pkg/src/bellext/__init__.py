"""Extremality certification toolkit for two-input/two-output Bell correlations."""

from .model import (
    CHSH_EXPRESSION,
    P_L,
    PR,
    I,
    T,
    BellExpression,
    Correlation,
    ProbabilityTable,
    bell_value,
    chsh_value,
    correlators_to_probabilities,
    is_nonlocal,
    min_probability,
    mix,
    probabilities_to_correlators,
)
from .realization import (
    BlochAngles,
    GuessVector,
    TwoQubitRealization,
    WitnessParams,
    bloch_angles,
    correlation_of,
    cqb_check,
    guessing_vector,
    helstrom_oracle,
    matrix_oracle,
    tlm_saturation_products,
)
from .criterion import (
    ExtremalityReport,
    QuadraticRoots,
    condition2_bounds,
    condition3,
    delta,
    extremality_verdict,
    quadratic_roots,
    reconstruct_two_qubit,
    scaled_tlm_residuals,
)
from .sdp import SdpConstraint, SdpProblem, SdpSettings, SdpSolution, feasibility, solve
from .npa import LambdaScan, MomentStructure, bell_upper_bound, build_guess_structure, di_upper_bound, lambda_max
from .seesaw import SeesawResult, SeesawSettings, maximize_bell, random_bell_expression
from .experiments import RunConfig, check_point, run_fig1, run_fig2, run_fig3, run_root_match

__version__ = "0.1.0"
