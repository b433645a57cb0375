"""transportlab: a laboratory for finite optimal-transport duality.

Everything works on finite weighted point sets with costs in
(-inf, +inf]. The library solves small instances exactly, certifies
optimality through cyclical monotonicity and dual potentials, extracts
potentials from two-sheet chain conditions, prices stabilizing subsidies,
stress-tests a cyclic-gain bound against multi-marginal couplings, and
ships a gallery of instances with machine-checked facts. The companion
CLI (``transportlab``) wraps all of it with deterministic JSON reports.
"""

from .core import (
    FEASIBILITY_TOL,
    MARGINAL_TOL,
    MEASURE_TOL,
    SUPPORT_EQUALITY_TOL,
    CostMatrix,
    DiscreteMeasure,
    FeasibilityVerdict,
    PotentialPair,
    TransportPlan,
    check_feasible_potentials,
    check_marginals,
    dual_value,
    plan_cost,
    shift_cost,
    truncate_potentials,
)
from .errors import (
    DimensionMismatchError,
    InputValidationError,
    NonMonotoneSupportError,
    ParseError,
    SandwichConditionError,
    SizeCapError,
    TransportLabError,
    UnsupportedInstanceError,
    VerificationError,
)
from .extreal import INF, ext_add, ext_sub, ext_sub_array, fmt_ext, parse_ext
from .gallery import (
    GENERATOR_NAMES,
    Fact,
    FactReport,
    Instance,
    gen_instance,
    reciprocal_integrability_stat,
    run_gallery,
)
from .monotonicity import (
    CYCLE_TOL,
    CycleCertificate,
    SupportSet,
    check_cyclical_monotonicity,
    cycle_chain_sum,
    improve_plan,
    pair_rerouting_weights,
    solve_by_cycle_canceling,
)
from .multimarginal import (
    CyclicGain,
    MultiCoupling,
    build_cyclic_gain,
    candidate_couplings,
    check_coupling_bound,
    symmetrize,
)
from .potentials import (
    RectangleCertificate,
    SandwichInput,
    check_sandwich_condition,
    decompose_exact,
    potentials_from_support,
    sandwich_potentials,
    verify_strong_monotonicity,
)
from .solver import (
    SolveResult,
    SweepResult,
    brute_force_value,
    solve_min_cost,
    truncation_sweep,
)
from .subsidy import (
    SUBSIDY_TOL,
    ConstraintTag,
    SubsidyFunction,
    compute_subsidy,
    verify_lower_bound,
    verify_subsidy_constraint,
)

__version__ = "0.1.0"

__all__ = [
    "CYCLE_TOL",
    "ConstraintTag",
    "CostMatrix",
    "CycleCertificate",
    "CyclicGain",
    "DimensionMismatchError",
    "DiscreteMeasure",
    "FEASIBILITY_TOL",
    "Fact",
    "FactReport",
    "FeasibilityVerdict",
    "GENERATOR_NAMES",
    "INF",
    "InputValidationError",
    "Instance",
    "MARGINAL_TOL",
    "MEASURE_TOL",
    "MultiCoupling",
    "NonMonotoneSupportError",
    "ParseError",
    "PotentialPair",
    "RectangleCertificate",
    "SUBSIDY_TOL",
    "SUPPORT_EQUALITY_TOL",
    "SandwichConditionError",
    "SandwichInput",
    "SizeCapError",
    "SolveResult",
    "SubsidyFunction",
    "SupportSet",
    "SweepResult",
    "TransportLabError",
    "TransportPlan",
    "UnsupportedInstanceError",
    "VerificationError",
    "brute_force_value",
    "build_cyclic_gain",
    "candidate_couplings",
    "check_coupling_bound",
    "check_cyclical_monotonicity",
    "check_feasible_potentials",
    "check_marginals",
    "check_sandwich_condition",
    "compute_subsidy",
    "cycle_chain_sum",
    "decompose_exact",
    "dual_value",
    "ext_add",
    "ext_sub",
    "ext_sub_array",
    "fmt_ext",
    "gen_instance",
    "improve_plan",
    "pair_rerouting_weights",
    "parse_ext",
    "plan_cost",
    "potentials_from_support",
    "reciprocal_integrability_stat",
    "run_gallery",
    "sandwich_potentials",
    "shift_cost",
    "solve_by_cycle_canceling",
    "solve_min_cost",
    "symmetrize",
    "truncate_potentials",
    "truncation_sweep",
    "verify_lower_bound",
    "verify_strong_monotonicity",
    "verify_subsidy_constraint",
    "__version__",
]
