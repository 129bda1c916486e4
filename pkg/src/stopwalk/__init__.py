"""stopwalk: exact-arithmetic random walks on discrete groups and semigroups.

Stopping-time transforms of generating measures, Green and Martin
kernels, harmonicity checks, free covers and a Monte Carlo validator,
all over exact rationals where the mathematics is exact.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    ConfigError,
    ContractError,
    DivergenceError,
    EvaluationError,
    GroupMismatchError,
    NotReachedError,
    StopwalkError,
    UndecidablePrefixError,
)
from .groups import (
    FreeGroup,
    FreeSemigroup,
    GroupSpec,
    Homomorphism,
    InfiniteWord,
    IntegerLattice,
    evaluate_hom,
    prefix_leq,
    quotient,
    word_length,
)
from .measures import (
    Measure,
    MeasureDeficit,
    as_fraction,
    convolution_power,
    convolve,
    format_fraction,
    measure_from_json,
    measure_to_json,
    mix,
    restrict,
    total_variation,
)
from .stopping import (
    HittingRule,
    MixtureRule,
    StoppingRule,
    compose_rules,
    constant_time,
    first_hit_capped,
    iterate_transform,
    make_mu_tau_t,
    random_rule,
    table_rule,
    transform_bounded,
    transform_hitting,
    transform_mixture,
)
from .kernels import (
    BoundarySequence,
    KernelReport,
    PowerTable,
    classify_free_sequence,
    green_free,
    green_truncated,
    kernel_closed_form_audit,
    kernel_sequence,
    martin_free,
    martin_truncated,
    step_weight_product,
)
from .harmonic import (
    GeodesicChain,
    HarmonicFn,
    HarmonicityReport,
    apply_P,
    build_conditional_chain,
    check_convex_theorem,
    check_harmonic,
    constant_fn,
    geodesic_support_probe,
    geodesic_window,
    lattice_exponential,
    minimal_witness,
    power_indicator,
    solve_chain_harmonic,
    table_fn,
    word_ball,
)
from .cover import (
    FreeCover,
    build_cover,
    check_phi_invariant,
    lift_fn,
    lift_rule,
    pushforward,
    restrict_fn,
    transfer_harmonicity,
)
from .montecarlo import (
    CompareReport,
    EmpiricalMeasure,
    PositionHit,
    SampleConfig,
    compare,
    estimate_transform,
    sample_walk,
)
