"""Exact single-loop boson sampler simulation with bit-string TSP formulations."""

from .encodings import (
    BinaryPenaltyFormulation,
    DecodedOutcome,
    PenaltyFreeFormulation,
    PenaltyParams,
    QuboFormulation,
    QuboParams,
    binary_penalty_length,
    decode_binary_penalty,
    decode_penalty_free,
    make_formulation,
    penalty_free_length,
    qubo_build,
    qubo_evaluate,
    qubo_length,
)
from .estimator import BosonTSPSolver
from .experiment import ExperimentSpec, compare_formulations, run_experiment
from .instances import InstanceFile, load_bundled, parse_instance
from .optimizer import (
    BestRecord,
    TrainingConfig,
    TrainingTrace,
    estimate_objective,
    shift_rule_gradient,
    spsa_step,
    train,
)
from .sampler import (
    FockState,
    Polarity,
    SamplerConfig,
    beam_splitter_fock_transform,
    exact_distribution,
    four_configurations,
    parity_map,
    sample_batch,
    sample_sequential,
)
from .tsp import DistanceMatrix, QualityReport, Tour, brute_force_optimum, solution_quality, tour_distance

__version__ = "0.1.0"
