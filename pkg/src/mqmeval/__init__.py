"""Interpretable machine-translation quality assessment from LLM completions."""

from mqmeval.mqm_core import (
    ErrorAnnotation,
    ErrorCategory,
    Segment,
    SegmentAssessment,
    Severity,
    WeightScheme,
    aggregate_raters,
    score_annotations,
    system_score,
)

__version__ = "0.1.0"
