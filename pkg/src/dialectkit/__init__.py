"""Dialect-robustness toolkit.

A numpy library for the desk-scale math of dialect-robust multimodal
generation: prompt-pair corpus handling, bit-exact embedding stores, the
three encoder-alignment losses with analytic gradients, an AdamW training
loop for a linear target-encoder adapter, and benchmark drop-metric
evaluation that reproduces the bundled published result tables.
"""

__version__ = "0.1.0"

from .adapter import (
    CheckpointError,
    LinearAdapter,
    adapter_forward,
    load_checkpoint,
    save_checkpoint,
)
from .dataset import (
    AnnotationRecord,
    DatasetError,
    DatasetFormatError,
    DialectRegistry,
    PairSet,
    PromptPair,
    SplitAssignment,
    apply_annotation_filter,
    load_annotations,
    load_dataset,
    read_split,
    split_dataset,
    validate_prompt_style,
    write_split,
)
from .evaluation import (
    DialectReport,
    EvaluationError,
    GenerationScores,
    ScoreFormatError,
    build_report,
    dialect_drop,
    overall_drop,
    pair_drop,
    pair_performance,
    pearson_r,
    read_score_csv,
    render_markdown,
    report_csv,
    scale_human_scores,
    write_score_csv,
)
from .losses import (
    LossBreakdown,
    LossError,
    SurrogateLogits,
    dialect_learning_loss,
    frozen_logit_cache,
    kl_divergence,
    kl_regularization_loss,
    polysemy_control_loss,
    softmax,
    surrogate_logits,
    total_loss,
)
from .optim import NumericalError, OptimizerState, adamw_step, cosine_annealed_lr
from .store import (
    AnchorSet,
    EmbeddingMatrix,
    EmbeddingStore,
    StoreError,
    StoreFormatError,
    cosine_similarity,
    read_store,
    write_store,
)
from .trainer import (
    GradCheckResult,
    PairEmbeddings,
    TrainerConfig,
    TrainingData,
    TrainingDataError,
    TrainResult,
    assemble_training_data,
    evaluate_losses,
    finite_difference_gradcheck,
    history_csv,
    make_synthetic_alignment_task,
    mean_anchor_cosine,
    mean_pair_cosine,
    train,
)
