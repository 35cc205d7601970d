"""Majority-vote ensemble over sub-point clouds and its certified
perturbation sizes.

The vote counts one label per *non-empty* bucket; ties break toward the
smallest label index. For a winner y with margin
gap = M_y - max_{l != y}(M_l + [y > l]), the prediction is provably stable
under any attack whose size is at most floor(gap / (2 * impact_factor)).
"""

from __future__ import annotations

from dataclasses import dataclass

from .classifier import BaseClassifier
from .core import AttackType, PointCloud
from .errors import NoEvidenceError
from .partition import HashRule, Partition, partition


@dataclass(frozen=True)
class LabelFrequencies:
    counts: tuple[int, ...]
    m: int

    @property
    def classes(self) -> int:
        return len(self.counts)

    @property
    def nonempty_total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class Certificate:
    label: int
    frequencies: LabelFrequencies
    certified_size: dict[AttackType, int]


def label_frequencies(part: Partition, clf: BaseClassifier) -> LabelFrequencies:
    """Count, per label, the non-empty buckets the classifier assigns to it."""
    counts = [0] * clf.classes
    for sub in part.subclouds:
        if len(sub) == 0:
            continue
        counts[clf.classify(sub) - 1] += 1
    return LabelFrequencies(counts=tuple(counts), m=part.m)


def vote(freq: LabelFrequencies) -> int:
    """Winning label; tied largest frequencies resolve to the smallest label."""
    if freq.nonempty_total == 0:
        raise NoEvidenceError("all sub-point clouds are empty")
    best = max(freq.counts)
    return freq.counts.index(best) + 1


def challenger_score(freq: LabelFrequencies, y: int) -> int:
    """max over l != y of counts[l] + [y > l] (the tie-break-adjusted rival)."""
    return max(
        freq.counts[l - 1] + (1 if y > l else 0)
        for l in range(1, freq.classes + 1)
        if l != y
    )


def certify(freq: LabelFrequencies) -> Certificate:
    """Certificate for all four attack types; the margin is shared, only the
    impact factor differs."""
    y = vote(freq)
    if freq.classes < 2:
        raise NoEvidenceError("certification needs at least 2 classes")
    gap = freq.counts[y - 1] - challenger_score(freq, y)
    assert gap >= 0
    sizes = {kind: gap // (2 * kind.impact_factor) for kind in AttackType}
    return Certificate(label=y, frequencies=freq, certified_size=sizes)


def predict_and_certify(
    cloud: PointCloud, m: int, rule: HashRule, clf: BaseClassifier
) -> Certificate:
    """End-to-end: partition, classify buckets, vote, certify."""
    if len(cloud) == 0:
        raise NoEvidenceError("cannot certify an empty cloud")
    part = partition(cloud, m, rule)
    freq = label_frequencies(part, clf)
    assert freq.nonempty_total >= 1  # every point lands in some bucket
    return certify(freq)
