"""Asymptotic equivalence and contiguity diagnostics for Bernoulli products and random graphs."""
__version__ = "0.1.0"

from .measures import (
    ProbPair, DistanceReport, EnumerationTooLarge, rho, rho_alt, hellinger_bernoulli,
    hellinger_product, log_hellinger_product, tv_bounds, tv_exact_enumerate, second_moment_ratio,
)
from .criteria import (
    SequencePair, CriterionVerdict, Tolerances, rho_sum_diagnostic, tail_sums, tail_condition,
    c1_diagnostic, c2_diagnostic, kakutani_partial_sums,
)
from .coupling import (
    CouplingOutcome, InfeasibleError, binomial_tv_exact, clt_limit, edge_count_coupling,
    edgewise_coupling, edgewise_disagreement_exact, equality_rate_experiment,
)
from .models import CAP, EXP_LINK, ODDS, ModelFamily, realize, pair_models
from .specs import preset, parse_model_spec, load_model_spec

