"""thoughtbeam: adaptive beam search over reasoning-thought trees.

The pipeline has three stages, all generator-agnostic:

1. collect exhaustive thought trees, verify the leaves, and propagate
   discounted scores upward into per-node labels;
2. train a gradient-boosted tree evaluator on (embedding + consistency)
   features against those labels;
3. search with a predict-first beam: score one candidate per node first
   and skip sibling generation whenever the evaluator is confident.
"""

from .collect import (
    CollectConfig,
    TrainingExample,
    build_tree,
    emit_dataset,
    propagate_scores,
)
from .core import (
    FeatureVector,
    Problem,
    ReasoningState,
    SearchConfig,
    Thought,
    ThoughtTree,
    extend_state,
    make_root_state,
    path_of,
)
from .exceptions import (
    ConfigurationError,
    DataError,
    GenerationError,
    ProtocolError,
    ReplayError,
    ThoughtbeamError,
)
from .features import (
    assemble_features,
    candidate_features,
    consistency_score,
    cosine_similarity,
)
from .gbdt import GbdtModel, GradientBoostedTrees, load_model, save_model, train
from .generators import (
    Candidate,
    GeneratorMeta,
    RecordingGenerator,
    ScriptedGenerator,
    SyntheticConfig,
    SyntheticWorld,
    ThoughtGenerator,
    seed_context,
)
from .llm_client import HttpGenerator, fetch_meta
from .search import (
    CoinFlipPredictor,
    EmbeddingScorePredictor,
    SearchResult,
    adaptive_search,
    beam_search_reference,
    expected_beam_width,
    greedy_search,
    measure_effective_beam,
    replay_shortcut_rates,
)
from .verify import (
    extract_answer,
    label_leaf,
    leaf_labeler,
    make_verifier,
    verify_exact,
    verify_numeric,
)

__version__ = "0.1.0"

__all__ = [
    "CollectConfig",
    "CoinFlipPredictor",
    "Candidate",
    "ConfigurationError",
    "DataError",
    "EmbeddingScorePredictor",
    "FeatureVector",
    "GbdtModel",
    "GenerationError",
    "GeneratorMeta",
    "GradientBoostedTrees",
    "HttpGenerator",
    "Problem",
    "ProtocolError",
    "ReasoningState",
    "RecordingGenerator",
    "ReplayError",
    "ScriptedGenerator",
    "SearchConfig",
    "SearchResult",
    "SyntheticConfig",
    "SyntheticWorld",
    "Thought",
    "ThoughtGenerator",
    "ThoughtTree",
    "ThoughtbeamError",
    "TrainingExample",
    "adaptive_search",
    "assemble_features",
    "beam_search_reference",
    "build_tree",
    "candidate_features",
    "consistency_score",
    "cosine_similarity",
    "emit_dataset",
    "expected_beam_width",
    "extend_state",
    "extract_answer",
    "fetch_meta",
    "greedy_search",
    "label_leaf",
    "leaf_labeler",
    "load_model",
    "make_root_state",
    "make_verifier",
    "measure_effective_beam",
    "path_of",
    "propagate_scores",
    "replay_shortcut_rates",
    "save_model",
    "seed_context",
    "train",
    "verify_exact",
    "verify_numeric",
]
