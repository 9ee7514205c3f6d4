from enum import Enum


class AttentionMode(Enum):
    """How the windowed attention stage pairs the two modalities."""

    CROSS = "cross"
    SELF = "self"
    NONE = "none"


class ProbeStage(Enum):
    """Which pipeline output a probe loss is measured on."""

    FUSED = "fused"
    BLEND = "blend"


class GradcheckMode(Enum):
    TOWARD_FILTERED = "toward-filtered"
    TOWARD_RAW = "toward-raw"
    RESOLUTION_SWEEP = "resolution-sweep"
