# Algorithms package for the Behavioural Cloning Toolkit
from algorithms.replay_validator import (
    ReplayValidator,
    ValidationResult,
    validate_replay
)
from algorithms.sampler import (
    SequenceSample,
    frame_offsets,
    build_sequence,
    average_target,
    balanced_batches
)
from algorithms.loss import (
    LossBreakdown,
    sign_mask,
    mouse_loss,
    bce_loss,
    combined_loss,
    warmup_lr
)
from algorithms.policy import (
    ArchitectureSpec,
    SurrogatePolicy,
    cnn_width,
    convlstm_width,
    mlp_width,
    train_step
)
from algorithms.analysis import (
    OccupancyGrid,
    EmpiricalDistribution,
    GaussianFit,
    occupancy_heatmap,
    camera_series,
    histogram,
    fit_gaussian,
    wasserstein1,
    synth_camera_stream
)
from algorithms.eval_harness import (
    GameResult,
    EvalSummary,
    aggregate,
    compare
)
