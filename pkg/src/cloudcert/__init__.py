"""Deterministic certified robustness for point-cloud classification."""

__version__ = "0.1.0"

from .core import AttackType, PointCloud, canonical_encode, dedupe, perturbation_size
from .partition import HashRule, Partition, assign, balance_stats, partition
from .ensemble import (
    Certificate,
    LabelFrequencies,
    certify,
    label_frequencies,
    predict_and_certify,
    vote,
)

__all__ = [
    "AttackType",
    "Certificate",
    "HashRule",
    "LabelFrequencies",
    "Partition",
    "PointCloud",
    "assign",
    "balance_stats",
    "canonical_encode",
    "certify",
    "dedupe",
    "label_frequencies",
    "partition",
    "perturbation_size",
    "predict_and_certify",
    "vote",
]
