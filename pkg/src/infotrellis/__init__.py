"""Information-assisted dynamic programming for constrained discrete allocation."""

from .baselines import exhaustive_search, naive_constrained_dp, nlbb_solve
from .beta import BsConfig, SweepConfig, TradeoffPoint, binary_search_beta, sweep
from .conditionals import BaaConfig, SigmoidConditionalConfig, baa_conditional, baa_update, sigmoid_conditional
from .distributions import ConditionalModel, SamplerConfig, estimate_prior, kl_divergence
from .problem import (
    BitAllocInstance,
    CoeffRanges,
    ProblemInstance,
    csf,
    csf_partial,
    generate_instance,
    power,
    reward,
)
from .trellis import SolveReport, SolverConfig, information_to_go, path_metric_increment, viterbi_solve

__version__ = "0.1.0"
