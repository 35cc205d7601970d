"""Comparison baselines: smoothing-radius conversion to a discrete
perturbation size, and a fixed-seed subsampling ensemble with worst-case
certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import BaseClassifier
from .core import AttackType, PointCloud
from .errors import BudgetError, ConfigError
from .ensemble import LabelFrequencies, challenger_score, vote


@dataclass(frozen=True)
class RsConversion:
    gamma: float  # certified L2 radius
    eta: float  # diameter bound of the coordinate space

    # Common diameter bounds: a [-1,1]^3 cube and a sqrt(15)-diameter space.
    ETA_CUBE = 2.0 * math.sqrt(3.0)
    ETA_SCAN = math.sqrt(15.0)


def rs_to_perturbation_size(conv: RsConversion) -> int:
    """floor(gamma^2 / eta^2): L2 radius expressed as a point count."""
    if conv.eta <= 0:
        raise ConfigError(f"eta must be > 0, got {conv.eta}")
    if conv.gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {conv.gamma}")
    return int(conv.gamma**2 // conv.eta**2)


@dataclass(frozen=True)
class SubsampleBaseline:
    k: int  # points per subsample
    n_subsamples: int
    seed: int

    def __post_init__(self):
        if self.k < 1 or self.n_subsamples < 1:
            raise ConfigError("k and the subsample count must be >= 1")


@dataclass(frozen=True)
class SubsampleCertificate:
    label: int
    frequencies: LabelFrequencies
    certified_size: dict[AttackType, int]
    max_containment: int  # most subsamples any single point appears in


def det_subsample_certify(
    cloud: PointCloud, base: SubsampleBaseline, clf: BaseClassifier
) -> SubsampleCertificate:
    """Vote over N fixed-seed k-point subsamples, certified with worst-case
    impact: one added point can land in every subsample (impact N), and
    deleting a point affects every subsample that drew it."""
    if base.k > len(cloud):
        raise BudgetError(f"cannot subsample {base.k} of {len(cloud)} points")
    rng = np.random.default_rng(base.seed)
    encodings = cloud.sorted_encodings()
    counts = [0] * clf.classes
    containment: dict[bytes, int] = {}
    for _ in range(base.n_subsamples):
        chosen = rng.choice(len(encodings), size=base.k, replace=False)
        picked = [encodings[i] for i in chosen]
        for enc in picked:
            containment[enc] = containment.get(enc, 0) + 1
        sub = PointCloud(cloud.point_for(enc) for enc in picked)
        counts[clf.classify(sub) - 1] += 1
    freq = LabelFrequencies(counts=tuple(counts), m=base.n_subsamples)
    y = vote(freq)
    gap = freq.counts[y - 1] - challenger_score(freq, y)
    max_contain = max(containment.values())
    add_impact = base.n_subsamples
    sizes = {
        AttackType.ADDITION: gap // (2 * add_impact),
        AttackType.DELETION: gap // (2 * max_contain),
        AttackType.MODIFICATION: gap // (2 * (add_impact + max_contain)),
        AttackType.PERTURBATION: gap // (2 * (add_impact + max_contain)),
    }
    return SubsampleCertificate(
        label=y, frequencies=freq, certified_size=sizes, max_containment=max_contain
    )
