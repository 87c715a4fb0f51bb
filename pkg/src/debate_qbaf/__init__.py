"""Argumentation-based evaluation of parliamentary debate summaries."""

from debate_qbaf.graph import (
    Argument,
    ArgumentKind,
    Edge,
    Polarity,
    Qbaf,
    QbafMeta,
    direct_relations,
    enumerate_paths,
    pro_con,
    validate,
)
from debate_qbaf.semantics import SemanticsConfig, StrengthMap, evaluate

__all__ = [
    "Argument",
    "ArgumentKind",
    "Edge",
    "Polarity",
    "Qbaf",
    "QbafMeta",
    "SemanticsConfig",
    "StrengthMap",
    "direct_relations",
    "enumerate_paths",
    "evaluate",
    "pro_con",
    "validate",
]

__version__ = "0.1.0"
