"""Global bimodal contrastive objectives at desk scale.

A numpy library implementing the CLIP/InfoNCE batch losses, the dataset-wide
contrastive objective with its moving-average mini-batch estimator, and the
augmented multi-view objective families (amclr, xamclr), together with
synthetic paired data, small analytically-checkable encoders, retrieval and
zero-shot metrics, and an experiment CLI.
"""

from .augment import AugmentPlan, AugmentSpec, apply, identity_plan, sample_transforms
from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .data import BimodalDataset, GenConfig, generate, load, make_class_prototypes, save
from .encoders import (
    EncoderArch,
    EncoderParams,
    backward,
    flatten,
    forward,
    init,
    param_count,
    unflatten,
)
from .errors import (
    ColdStartError,
    ConfigError,
    DataFormatError,
    DataIntegrityError,
    DegenerateEmbeddingError,
    EmptyDenominatorError,
    GclrError,
    NumericAbortError,
    OracleScaleError,
    ShapeError,
    UnsupportedDatasetError,
)
from .estimator import (
    EstimatorState,
    StepReport,
    amclr_step,
    batch_g,
    gradient_estimator,
    init_state,
    sogclr_step,
    update_u,
    xamclr_step,
)
from .evaluation import MetricsRecord, RunMeta, retrieval_topk, zero_shot_classify
from .experiment import (
    GradcheckReport,
    OracleCompareReport,
    RunArtifacts,
    SweepResult,
    gradcheck,
    oracle_compare,
    sweep,
    train,
)
from .numerics import Rng, logsumexp_rows, matmul, row_l2_normalize
from .objectives import (
    CombinationDescriptor,
    EmbeddedViews,
    LossBreakdown,
    ViewRef,
    amclr_batch_loss,
    clip_batch_loss,
    closed_form_kappa,
    combination_loss,
    enumerate_combinations,
    global_objective_exact,
    global_objective_exact_gradient,
    infonce_loss,
    xamclr_batch_loss,
)
from .optimizers import (
    OptimizerState,
    adamp_state,
    adamp_step,
    adamw_state,
    adamw_step,
    momentum_state,
    momentum_step,
)

__version__ = "0.1.0"
