"""Slow-time radar code synthesis jointly trading detection SINR against
delay-Doppler estimation accuracy, with closed-form block updates inside a
maximum-block-improvement solver."""

from .analysis import (
    DopplerSweep,
    MonteCarloPd,
    ParetoPoint,
    detection_probability,
    doppler_sweep,
    marcum_q1,
    monte_carlo_pd,
    pareto_sweep,
)
from .crb import (
    ChirpSamples,
    CrbPair,
    DegenerateCodeError,
    FullFim,
    crb_from_full_fim,
    crb_pair,
    full_fim,
    sample_chirp,
)
from .model import (
    CodeVector,
    ModelMatrices,
    RadarScenario,
    default_scenario,
    exp_covariance,
    generalized_barker_code,
    isl,
    load_reference_code,
    model_matrices,
    p3_code,
    papr,
    sinr,
    steering_vector,
    to_db,
)
from .objective import (
    BlockRestriction,
    BlockSet,
    ScalarizationParams,
    augmented_objective,
    block_restriction,
    mu1_bound,
    mu2_bound,
    multilinear_form,
    scalarized_objective,
)
from .solver import (
    InfeasibleInitError,
    SolveTrace,
    SolverConfig,
    SolverError,
    SynthesisResult,
    TerminationReason,
    benchmark_crb_code,
    benchmark_sinr_code,
    block_update,
    mbi_solve,
    objective_db,
    relax_and_select,
)

__version__ = "0.1.0"
