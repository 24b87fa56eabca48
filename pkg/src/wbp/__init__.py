"""Persuasive storyline assembly from visual materials.

Learns a bell-shaped persuasiveness response (difference of a reward and a
punishment sigmoid over accumulated stimulus intensity) from small rated
datasets, then selects and orders materials into a length-constrained,
cluster-contiguous storyline via per-cluster sequence search and a grouped
knapsack.
"""

from .clustering import ClusterAssignment, choose_k, cluster_materials, kmeans
from .errors import (
    InputError,
    LoadError,
    NumericError,
    TrainingError,
    UsageError,
    WbpError,
)
from .features import (
    Material,
    MaterialSet,
    clustering_distance,
    dissimilarity,
    dissimilarity_matrix,
    fallback_embedding,
    load_manifest,
    save_manifest,
    sequence_features,
    ssim,
)
from .model import (
    AccumulatorParams,
    FeatureSequence,
    LwcModel,
    PARAM_NAMES,
    WundtParams,
    accumulate_channel,
    canonical_model,
    load_model,
    punishment,
    reward,
    save_model,
    sequence_score,
    stimulus_intensity,
    wundt_eval,
)
from .oracle import (
    RevenueCategory,
    RevenueInput,
    baseline_greedy,
    baseline_random,
    brute_force_storyline,
    expected_revenue_uplift,
)
from .sequencer import (
    BestSequenceEntry,
    KnapsackSolution,
    SolverConfig,
    StoryBlock,
    Storyline,
    best_sequences_beam,
    best_sequences_exact,
    generate_storyline,
    grouped_knapsack,
    save_storyline,
)
from .training import (
    TrainConfig,
    TrainingExample,
    analytic_gradients,
    finite_difference_gradients,
    gradient_check,
    initial_model,
    mse_loss,
    synth_dataset,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
