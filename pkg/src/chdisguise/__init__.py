"""Trade-off profiles for disguising one quantum channel as another.

The package computes, for a pair of channels, how much probabilistic
mixing with auxiliary channels is needed to make the two identical, as a
two-dimensional (p, q) trade-off curve: analytic lower/upper bounds, an
exact feasibility-based solve at fixed trade-off ratio, and derived
relations (containment, triangle propagation, composition, diamond-norm
bracketing and a key-rate bound).
"""

from .channels import (
    ChoiRep,
    KrausChannel,
    appendix_b_pair,
    apply,
    bit_flip,
    channel_from_dict,
    channel_sum,
    channel_to_dict,
    choi_from_kraus,
    compose,
    dumps_channel,
    kraus_from_choi,
    loads_channel,
    mix,
    phase_flip,
    random_channel,
    xz_flip,
)
from .disguise import (
    BetaSample,
    FlipTradeoff,
    ProfileCurve,
    TradeoffPoint,
    alpha_bounds,
    alpha_to_pq,
    analytic_flip_profile,
    default_beta_grid,
    delta_split,
    trace_profile,
    upper_hull,
)
from .errors import ChdisguiseError, NumericalError, ValidationError
from .matkit import (
    EigenSystem,
    hermitian_eig,
    project_psd,
    spectral_norm,
    split_pos_neg,
)
from .relations import (
    ContainmentResult,
    DiamondBracket,
    compose_mixing,
    containment_min_q,
    diamond_bracket,
    qkd_rate_bound,
    triangle_combine,
    triangle_region,
)
from .sdp_exact import (
    ExactSolution,
    SolverOptions,
    feasibility,
    recover_harmonizers,
    solve_alpha,
    solve_pair,
)

__version__ = "0.1.0"
