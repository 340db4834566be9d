"""Fairness without sensitive labels: pseudo groups from prompt similarity.

The toolkit infers sensitive-attribute pseudo groups by clustering
prompt-image similarity scores per target class, then trains an
embedding-space classifier whose minibatch sampler re-balances clusters
by their recent training loss. A synthetic lab measures how partition
quality (adjusted Rand index against the true groups) translates into
worst-group accuracy.
"""

from .clustering import (
    KMeansResult,
    PseudoGrouping,
    build_pseudo_groups,
    grouping_from_labels,
    kmeans,
    single_cluster_grouping,
)
from .data import (
    Dataset,
    EmbeddingMatrix,
    Manifest,
    Sample,
    bind_dataset,
    load_embeddings,
    load_manifest,
    write_embeddings,
    write_manifest,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DataError,
    DomainError,
    FairproxyError,
    FormatError,
    TrainingError,
)
from .metrics import (
    CorrelationReport,
    FairnessSummary,
    GroupAccuracyTable,
    adjusted_rand_index,
    attribute_target_correlation,
    fairness_summary,
    group_accuracies,
    representation_std,
)
from .similarity import (
    PromptSet,
    ScoreMatrix,
    cosine_similarity,
    ensemble_scores,
    load_prompt_set,
    save_prompt_set,
    similarity_matrix,
)
from .synthlab import (
    SweepCell,
    SweepResult,
    SweepRow,
    SynthConfig,
    calibrate_ari,
    corrupt_partition,
    default_joint,
    format_sweep_table,
    gen_synthetic,
    run_ari_sweep,
    run_cluster_sweep,
    run_theta_sweep,
    write_sweep_csv,
)
from .training import (
    SamplerState,
    TrainConfig,
    TrainedModel,
    init_sampler,
    load_model,
    predict,
    record_epoch_losses,
    sample_batch,
    save_history,
    save_model,
    train,
    update_probs,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "FairproxyError", "FormatError", "DataError", "DomainError",
    "ConfigError", "TrainingError", "CalibrationError",
    # data
    "EmbeddingMatrix", "Sample", "Manifest", "Dataset",
    "load_embeddings", "write_embeddings", "load_manifest", "write_manifest",
    "bind_dataset",
    # similarity
    "PromptSet", "ScoreMatrix", "cosine_similarity", "similarity_matrix",
    "ensemble_scores", "load_prompt_set", "save_prompt_set",
    # clustering
    "KMeansResult", "PseudoGrouping", "kmeans", "build_pseudo_groups",
    "grouping_from_labels", "single_cluster_grouping",
    # metrics
    "adjusted_rand_index", "attribute_target_correlation", "representation_std",
    "group_accuracies", "fairness_summary",
    "CorrelationReport", "GroupAccuracyTable", "FairnessSummary",
    # training
    "SamplerState", "TrainConfig", "TrainedModel",
    "init_sampler", "record_epoch_losses", "update_probs", "sample_batch",
    "train", "predict", "save_model", "load_model", "save_history",
    # synthlab
    "SynthConfig", "SweepCell", "SweepRow", "SweepResult",
    "default_joint", "gen_synthetic", "corrupt_partition", "calibrate_ari",
    "run_ari_sweep", "run_cluster_sweep", "run_theta_sweep",
    "write_sweep_csv", "format_sweep_table",
]
