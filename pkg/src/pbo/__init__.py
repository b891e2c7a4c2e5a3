"""Black-box optimization driven by pairwise preference duels.

The engine models duel outcomes with a GP classifier over concatenated
point pairs, scores candidates by their soft-Copeland (landmark-averaged
win probability), and proposes duels through pure-exploration, Copeland
expected-improvement, or dueling-Thompson policies.  A benchmark harness
with a simulated Bernoulli oracle and an interactive HTTP session service
sit on top.
"""

from .benchmarks import (
    BENCHMARKS,
    Domain,
    Duel,
    DuelOutcome,
    eval_objective,
    make_grid,
    sample_duel_outcome,
    true_preference_prob,
)
from .copeland import CopelandEstimate, LandmarkSet, condorcet_winner, soft_copeland_at
from .gp import (
    DuelDataset,
    HyperBounds,
    KernelParams,
    LaplacePosterior,
    PreferencePrediction,
    augment_symmetric,
    fit_laplace,
    fit_preference_model,
    kernel_eval,
    log_marginal_and_grad,
    optimize_hyperparams,
    predict_latent,
    predict_preference,
)
from .harness import ExperimentConfig, ExperimentRecord, run_experiment, run_pbo, write_results

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS",
    "CopelandEstimate",
    "Domain",
    "Duel",
    "DuelDataset",
    "DuelOutcome",
    "ExperimentConfig",
    "ExperimentRecord",
    "HyperBounds",
    "KernelParams",
    "LandmarkSet",
    "LaplacePosterior",
    "PreferencePrediction",
    "augment_symmetric",
    "condorcet_winner",
    "eval_objective",
    "fit_laplace",
    "fit_preference_model",
    "kernel_eval",
    "log_marginal_and_grad",
    "make_grid",
    "optimize_hyperparams",
    "predict_latent",
    "predict_preference",
    "run_experiment",
    "run_pbo",
    "sample_duel_outcome",
    "soft_copeland_at",
    "true_preference_prob",
    "write_results",
]
