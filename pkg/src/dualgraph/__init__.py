"""Dual-modality graph classification.

Each sample is a pair of graphs extracted from one binary (a static call
graph and a dynamic process graph) plus its file entropy. Two independent
message-passing branches encode the pair, a learnable softmax gate fuses
the pooled embeddings, and a fully connected head classifies. The package
also ships the merged-graph and single-graph baselines, a seeded synthetic
data generator, stratified 5-fold cross-validation, and a rank-based
statistics pipeline for comparing configuration groups.
"""

from .autodiff import SparseMatrix, Tensor2
from .config import (
    ArchKind,
    GraphType,
    JoinMode,
    ModelConfig,
    SchedulerKind,
    TrainConfig,
    config_fingerprint,
)
from .evaluate import (
    GridSpec,
    RunSummary,
    cross_validate,
    read_fold_csv,
    run_grid,
    stratified_folds,
    write_fold_csv,
    write_summary_csv,
)
from .features import FeatureMode, build_features, local_degree_profile, shannon_entropy
from .graphs import (
    Dataset,
    DatasetFormatError,
    Graph,
    SamplePair,
    ValidationError,
    canonicalize,
    load_dataset,
    merge_graphs,
    store_dataset,
)
from .metrics import f1_score
from .model import (
    Model,
    gated_fusion,
    global_pool,
    init_params,
    load_params,
    prepare_sample,
    save_params,
)
from .stats import (
    ScoreGroup,
    TestReport,
    boxplot_summary,
    chi2_sf,
    compare_groups,
    dunn_posthoc,
    kruskal_wallis,
    top_k_by_group,
)
from .synth import GenSpec, SignalMode, generate
from .train import (
    AdamState,
    EpochRecord,
    PlateauState,
    TrainResult,
    adam_step,
    cross_entropy_grad,
    cross_entropy_loss,
    one_cycle_lr,
    train_run,
    write_run_log,
)

__version__ = "0.1.0"

__all__ = [
    "ArchKind",
    "AdamState",
    "Dataset",
    "DatasetFormatError",
    "EpochRecord",
    "FeatureMode",
    "GenSpec",
    "Graph",
    "GraphType",
    "GridSpec",
    "JoinMode",
    "Model",
    "ModelConfig",
    "PlateauState",
    "RunSummary",
    "SamplePair",
    "SchedulerKind",
    "ScoreGroup",
    "SignalMode",
    "SparseMatrix",
    "Tensor2",
    "TestReport",
    "TrainConfig",
    "TrainResult",
    "ValidationError",
    "adam_step",
    "boxplot_summary",
    "build_features",
    "canonicalize",
    "chi2_sf",
    "compare_groups",
    "config_fingerprint",
    "cross_entropy_grad",
    "cross_entropy_loss",
    "cross_validate",
    "dunn_posthoc",
    "f1_score",
    "gated_fusion",
    "generate",
    "global_pool",
    "init_params",
    "kruskal_wallis",
    "load_dataset",
    "load_params",
    "local_degree_profile",
    "merge_graphs",
    "one_cycle_lr",
    "prepare_sample",
    "read_fold_csv",
    "run_grid",
    "save_params",
    "shannon_entropy",
    "store_dataset",
    "stratified_folds",
    "top_k_by_group",
    "train_run",
    "write_fold_csv",
    "write_run_log",
    "write_summary_csv",
]
