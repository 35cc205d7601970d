"""Completion-side loss machinery: Chamfer reconstruction loss, 0/1
classification loss over completed clouds, and their weighted combination.

Completion functions are pluggable and deterministic; training a completion
network is out of scope, these are evaluation tools.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .classifier import BaseClassifier, _LineSession
from .core import PointCloud
from .errors import ClassifierBackendError, EmptyInputError


def chamfer(a: PointCloud, b: PointCloud) -> float:
    """Bidirectional mean nearest-neighbor L2 distance (distances, not
    squared distances)."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyInputError("Chamfer distance needs two non-empty clouds")
    arr_a = a.to_array()
    arr_b = b.to_array()
    d_ab, _ = cKDTree(arr_b).query(arr_a)
    d_ba, _ = cKDTree(arr_a).query(arr_b)
    return float(np.mean(d_ab) + np.mean(d_ba))


class CompletionFn:
    """Deterministic mapping from a sub-point cloud to a completed cloud."""

    def complete(self, cloud: PointCloud) -> PointCloud:
        raise NotImplementedError


class IdentityCompletion(CompletionFn):
    def complete(self, cloud: PointCloud) -> PointCloud:
        return cloud


class CentroidUpsample(CompletionFn):
    """Densify a sparse subcloud by adding up to k midpoints between each
    point (in canonical order, cycling) and the cloud centroid."""

    def __init__(self, k: int):
        if k < 0:
            raise ValueError("k must be >= 0")
        self.k = k

    def complete(self, cloud: PointCloud) -> PointCloud:
        if len(cloud) == 0:
            return cloud
        centroid = np.asarray(cloud.mean_point())
        points = list(cloud)
        out = cloud
        for i in range(self.k):
            base = np.asarray(points[i % len(points)])
            # Successive passes move halfway again toward the centroid.
            frac = 0.5 ** (1 + i // len(points))
            extra = base + (centroid - base) * frac
            out = out.with_point(tuple(round(float(v), 6) for v in extra))
        return out


class ExternalCompletion(CompletionFn):
    """Completion served by a child process over the same line protocol as
    external classifiers, with "complete" requests."""

    def __init__(self, cmd: Sequence[str], timeout: float = 30.0):
        self._session = _LineSession(cmd, timeout)
        self._session.handshake()

    def complete(self, cloud: PointCloud) -> PointCloud:
        points = [list(pt) for pt in cloud]
        resp = self._session.request("complete", {"points": points})
        if resp.get("type") != "points" or not isinstance(resp.get("points"), list):
            raise ClassifierBackendError(f"unexpected completion response: {resp!r}")
        return PointCloud(resp["points"])

    def close(self) -> None:
        self._session.close()


@dataclass(frozen=True)
class CompletionPair:
    sub: PointCloud
    source: PointCloud


def reconstruction_loss(pairs: Sequence[CompletionPair], comp: CompletionFn) -> float:
    """Mean Chamfer distance between completed subclouds and their sources."""
    if not pairs:
        raise EmptyInputError("no completion pairs given")
    return sum(chamfer(comp.complete(p.sub), p.source) for p in pairs) / len(pairs)


def classification_loss(
    labeled: Sequence[tuple[PointCloud, int]],
    comp: CompletionFn,
    clf: BaseClassifier,
) -> float:
    """Mean 0/1 loss of the classifier on completed clouds."""
    if not labeled:
        raise EmptyInputError("no labeled clouds given")
    wrong = sum(1 for cloud, label in labeled if clf.classify(comp.complete(cloud)) != label)
    return wrong / len(labeled)


def combined_loss(
    pairs: Sequence[CompletionPair],
    labeled: Sequence[tuple[PointCloud, int]],
    comp: CompletionFn,
    clf: BaseClassifier,
    lam: float,
) -> float:
    """Reconstruction loss plus lam times classification loss. lam = 0 falls
    back to the pure completion objective."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return reconstruction_loss(pairs, comp) + lam * classification_loss(labeled, comp, clf)


class CompletedClassifier(BaseClassifier):
    """Classifier that completes its input before delegating."""

    def __init__(self, base: BaseClassifier, comp: CompletionFn):
        self.base = base
        self.comp = comp
        self.classes = base.classes

    def classify(self, cloud: PointCloud) -> int:
        self._require_nonempty(cloud)
        return self.base.classify(self.comp.complete(cloud))
