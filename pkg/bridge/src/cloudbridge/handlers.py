"""Built-in handlers mirroring the toolkit's reference classifiers: fixed
label, lookup table from a JSON file, and nearest-centroid from a JSON
prototype file. Tie-breaks and encodings match the in-process versions bit
for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .encoding import canonical_encode, cloud_key

Points = Sequence[Sequence[float]]
ClassifyHandler = Callable[[Points], int]
CompleteHandler = Callable[[Points], list[list[float]]]


def constant(label: int, classes: int) -> tuple[ClassifyHandler, int]:
    if not 1 <= label <= classes:
        raise ValueError(f"label {label} outside [1, {classes}]")

    def handler(points: Points) -> int:
        if not points:
            raise ValueError("cannot classify an empty cloud")
        return label

    return handler, classes


def lookup_from_file(path: str | Path) -> tuple[ClassifyHandler, int]:
    """JSON file with {"classes", "default", "entries": [{"points", "label"}]}."""
    doc = json.loads(Path(path).read_text())
    classes = int(doc.get("classes", 2))
    default = int(doc.get("default", 1))
    table = {
        cloud_key(entry["points"]): int(entry["label"])
        for entry in doc.get("entries", [])
    }

    def handler(points: Points) -> int:
        if not points:
            raise ValueError("cannot classify an empty cloud")
        return table.get(cloud_key(points), default)

    return handler, classes


def centroid_from_file(path: str | Path) -> tuple[ClassifyHandler, int]:
    """JSON file with {"prototypes": [[...], ...]}; nearest prototype by
    squared Euclidean distance to the mean point, first minimum wins."""
    doc = json.loads(Path(path).read_text())
    prototypes = np.asarray(doc["prototypes"], dtype=float)
    if prototypes.ndim != 2 or prototypes.shape[0] < 2:
        raise ValueError("need a (c, o) prototype matrix with c >= 2")

    def handler(points: Points) -> int:
        if not points:
            raise ValueError("cannot classify an empty cloud")
        # Mean over encoding-sorted unique points, matching the toolkit.
        unique = {canonical_encode(p): [float(v) for v in p] for p in points}
        arr = np.array([unique[k] for k in sorted(unique)], dtype=float)
        mean = arr.mean(axis=0)
        d2 = ((prototypes - mean) ** 2).sum(axis=1)
        return int(np.argmin(d2)) + 1

    return handler, int(prototypes.shape[0])


def identity_completion() -> CompleteHandler:
    def handler(points: Points) -> list[list[float]]:
        return [[float(v) for v in p] for p in points]

    return handler
