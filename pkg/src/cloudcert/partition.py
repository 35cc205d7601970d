"""Deterministic division of a cloud into m disjoint sub-point clouds.

Two bucket rules are provided: an MD5 rule (digest of the canonical encoding
mod m) and a mean-digit rule (first four digits of the coordinate mean).
"""

from __future__ import annotations

import enum
import hashlib
import statistics
from dataclasses import dataclass
from typing import Sequence

from .core import Point, PointCloud, canonical_encode
from .errors import ConfigError


class HashRule(enum.Enum):
    MD5 = "md5"
    MEAN_DIGITS = "mean"


def assign(point: Sequence[float], m: int, rule: HashRule) -> int:
    """Bucket index in [0, m) for one point under the given rule."""
    if m < 1:
        raise ConfigError(f"bucket count must be >= 1, got {m}")
    if rule is HashRule.MD5:
        digest = hashlib.md5(canonical_encode(point)).digest()
        return int.from_bytes(digest, "big") % m
    # Mean-digit rule: format |mean| as signed fixed-point with 6 decimals,
    # strip sign and decimal point, read the first four digit characters.
    mean = sum(float(x) for x in point) / len(point)
    text = f"{abs(mean):+.6f}".lstrip("+-").replace(".", "")
    digits = text[:4]
    return int(digits) % m


@dataclass(frozen=True)
class Partition:
    m: int
    subclouds: tuple[PointCloud, ...]
    source_size: int

    def nonempty_indices(self) -> list[int]:
        return [i for i, sub in enumerate(self.subclouds) if len(sub) > 0]


def partition(cloud: PointCloud, m: int, rule: HashRule) -> Partition:
    """Place every point into its assigned bucket. Empty buckets are kept."""
    if m < 1:
        raise ConfigError(f"bucket count must be >= 1, got {m}")
    buckets: list[dict[bytes, Point]] = [{} for _ in range(m)]
    if rule is HashRule.MD5:
        # Hash the stored encodings directly instead of re-encoding each point.
        for enc, pt in cloud.items():
            digest = hashlib.md5(enc).digest()
            buckets[int.from_bytes(digest, "big") % m][enc] = pt
    else:
        for enc, pt in cloud.items():
            buckets[assign(pt, m, rule)][enc] = pt
    dim = cloud.dim
    subclouds = tuple(
        PointCloud._from_mapping(b, dim if b else None) for b in buckets
    )
    return Partition(m=m, subclouds=subclouds, source_size=len(cloud))


@dataclass(frozen=True)
class BalanceStats:
    min_size: int
    max_size: int
    mean_size: float
    stddev_size: float
    empty_buckets: int


def balance_stats(part: Partition) -> BalanceStats:
    sizes = [len(sub) for sub in part.subclouds]
    return BalanceStats(
        min_size=min(sizes),
        max_size=max(sizes),
        mean_size=statistics.fmean(sizes),
        stddev_size=statistics.pstdev(sizes),
        empty_buckets=sum(1 for s in sizes if s == 0),
    )
