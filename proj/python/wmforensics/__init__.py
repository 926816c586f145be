from ._wmforensics import (  # noqa: F401
    AttackRecord,
    BridgeError,
    DetectionReport,
    DetectorConfig,
    DomainError,
    GenParams,
    KgwParams,
    ProbDist,
    Sequence,
    SyntheticLM,
    Theta,
    WatermarkKey,
    apply_attack,
    confusion_metrics,
    detect,
    filter_top_k,
    filter_top_p,
    generate_kgw,
    generate_plain,
    generate_watermarked,
    green_mask,
    roc_auc,
    sample_delta,
    theta,
    z_score,
)
