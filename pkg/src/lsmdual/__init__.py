"""Interacting particle systems with annihilation, branching, coalescence,
death, and exclusion; their contact-voter and walk-system parameterizations;
local mean-field diffusion limits; and mechanical verification of the
duality, thinning, and Poissonization relations connecting them — exactly on
small lattices via generator matrices, statistically via simulation.
"""

__version__ = "0.1.0"

from .kernels import (
    Kernel,
    colony_kernel,
    complete_kernel,
    kernel_from_preset,
    make_kernel,
    pair_kernel,
    raw_kernel,
    ring_kernel,
)
from .models import (
    BpsParams,
    Config,
    CvpParams,
    GeneralLsmRates,
    JumpModel,
    LsmRates,
    NoiseConvention,
    RwParams,
    SrwParams,
    SsmParams,
    Variant,
    bps_jumps,
    bps_model,
    cvp_as_lsm,
    cvp_model,
    lsm_jumps,
    lsm_model,
    rw_as_lsm,
    rw_jumps,
    rw_model,
)
from .duality import (
    DualityParameter,
    DualPairReport,
    cvp_dual_family,
    cvp_rw_dual_pair,
    dual_rates,
    dual_rates_general,
    poissonization_weight,
    rw_cvp_dual_pair,
    self_duality_parameter,
    thinning_factor,
)
from .exact import (
    GapReport,
    GeneratorMatrix,
    StateSpace,
    build_generator,
    count_space,
    duality_gap,
    evolve_distribution,
    intertwining_gap,
    psi_matrix,
    spin_space,
    thinning_kernel_matrix,
    verify_dupar,
)
from .thinning import (
    ThinningProfile,
    poisson_field,
    thin,
    thin_composition_check,
    thin_generating_check,
    thin_per_particle,
)
from .gillespie import Trajectory, batch_final_states, simulate_jump_process
from .sde import simulate_srw, simulate_ssm, srw_batch, ssm_batch
from .oracle import OracleFamily, OracleResult, generator_identity_oracle
from .estimators import (
    EstimatorPair,
    estimate_duality_functional,
    exact_duality_value,
    poissonization_check,
    z_threshold,
)
from .meanfield import (
    CvpLimitScaling,
    SrwLimitScaling,
    meanfield_cv_experiment,
    meanfield_srw_experiment,
)
from .rng import Seed, make_rng, stream_id
