"""Emerging-topic detection from anomalies in who-mentions-whom.

Each post is scored by how surprising its mentions are for its author; the
scores are aggregated into a regular series and watched by two detectors,
a two-layer SDNML change-point scorer with dynamic thresholding and a
two-state burst model.
"""

from .aggregate import ScoredPost, ScoreSeries, StreamingAggregator, aggregate_scores
from .burst import (
    BurstConfig,
    BurstPath,
    OnlineBurstDetector,
    burst_alarms,
    burst_viterbi,
    default_filter_threshold,
    filter_events,
)
from .dto import (
    AlarmEvent,
    DynamicThreshold,
    ThresholdHistogram,
    dto_alarm,
    dto_init,
    dto_run,
    dto_threshold,
    dto_update,
)
from .errors import InsufficientDataError, PostParseError, StreamOrderError
from .mention import (
    MentionModel,
    MentionModelParams,
    Post,
    UserHistory,
    geometric_pmf,
    link_anomaly_score,
    predict_mention_count,
    predict_mentionee,
    update_history,
)
from .pipeline import (
    PipelineConfig,
    RunArtifacts,
    emit_results,
    parse_post,
    read_posts,
    rho_sweep,
    run_pipeline,
    write_posts,
)
from .sdnml import (
    SDNML,
    ChangeScoreSeries,
    SdnmlConfig,
    TwoLayerScorer,
    discounted_ar_update,
    sdnml_step,
    smooth_log_loss,
    two_layer_score,
)
from .synthetic import SyntheticScenario, generate_synthetic_stream

__version__ = "0.1.0"

__all__ = [
    "AlarmEvent",
    "BurstConfig",
    "BurstPath",
    "ChangeScoreSeries",
    "DynamicThreshold",
    "InsufficientDataError",
    "MentionModel",
    "MentionModelParams",
    "OnlineBurstDetector",
    "PipelineConfig",
    "Post",
    "PostParseError",
    "RunArtifacts",
    "ScoredPost",
    "ScoreSeries",
    "SDNML",
    "SdnmlConfig",
    "StreamingAggregator",
    "StreamOrderError",
    "SyntheticScenario",
    "ThresholdHistogram",
    "TwoLayerScorer",
    "UserHistory",
    "aggregate_scores",
    "burst_alarms",
    "burst_viterbi",
    "default_filter_threshold",
    "discounted_ar_update",
    "dto_alarm",
    "dto_init",
    "dto_run",
    "dto_threshold",
    "dto_update",
    "emit_results",
    "filter_events",
    "generate_synthetic_stream",
    "geometric_pmf",
    "link_anomaly_score",
    "parse_post",
    "predict_mention_count",
    "predict_mentionee",
    "read_posts",
    "rho_sweep",
    "run_pipeline",
    "sdnml_step",
    "smooth_log_loss",
    "two_layer_score",
    "update_history",
    "write_posts",
]
