"""Detection-ensemble fusion (WBF, NMS, soft-NMS), detection metrics and a toy bridge network."""

from .evaluation import (
    ApReport,
    GroundTruthBox,
    MatchResult,
    Metrics,
    PRCurve,
    ap_report,
    average_precision,
    match_detections,
    pr_curve,
    precision_recall_f1,
)
from .fusion import (
    Cluster,
    DegenerateClusterError,
    Detection,
    FusedBox,
    FusionConfig,
    fuse_cluster,
    nms,
    rescale_confidence,
    soft_nms,
    weighted_boxes_fusion,
)
from .geometry import Box, area, iou

__version__ = "0.1.0"
