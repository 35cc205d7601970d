"""Point-cloud data model, set-semantics perturbation metric, canonical encoding.

A point is a fixed-length tuple of finite floats (>= 3 coordinates). A cloud
is a *set* of points: equality is defined by the canonical byte encoding of
each point, which is also what gets hashed for bucket assignment.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, EncodingError

# Fixed-point format: explicit sign, 6 fractional digits. Width cap keeps the
# formatting total (no overflow into a wider field).
_FRACTION_DIGITS = 6
_MAX_WIDTH = 1 + 4 + 1 + _FRACTION_DIGITS  # sign + "9999" + "." + 6 digits
_DELIMITER = b"|"

Point = tuple[float, ...]


class AttackType(enum.Enum):
    ADDITION = "add"
    DELETION = "delete"
    MODIFICATION = "modify"
    PERTURBATION = "perturb"

    @property
    def impact_factor(self) -> int:
        """Worst-case number of buckets one perturbed point can affect."""
        if self in (AttackType.ADDITION, AttackType.DELETION):
            return 1
        return 2


def canonical_encode(point: Sequence[float]) -> bytes:
    """Encode a point as a deterministic byte string.

    Each coordinate is rendered as signed fixed-point with 6 fractional
    digits (round-half-to-even), coordinates joined with ``|``. Identical
    coordinates always produce identical bytes on every platform.
    """
    parts = []
    for x in point:
        x = float(x)
        if not math.isfinite(x):
            raise EncodingError(f"non-finite coordinate: {x!r}")
        if x == 0.0:
            x = 0.0  # normalize -0.0
        text = f"{x:+.{_FRACTION_DIGITS}f}"
        if len(text) > _MAX_WIDTH:
            raise EncodingError(f"coordinate out of range (+/-9999.999999): {x!r}")
        parts.append(text.encode("ascii"))
    return _DELIMITER.join(parts)


def as_point(coords: Sequence[float]) -> Point:
    """Validate and normalize a coordinate sequence into a point tuple."""
    if len(coords) < 3:
        raise DimensionError(f"a point needs at least 3 coordinates, got {len(coords)}")
    pt = tuple(float(x) for x in coords)
    canonical_encode(pt)  # raises on non-finite / out-of-range values
    return pt


class PointCloud:
    """An immutable set of same-dimension points, keyed by canonical encoding."""

    __slots__ = ("_points", "_dim")

    def __init__(self, points: Iterable[Sequence[float]] = ()):
        mapping: dict[bytes, Point] = {}
        dim: int | None = None
        for raw in points:
            pt = as_point(raw)
            if dim is None:
                dim = len(pt)
            elif len(pt) != dim:
                raise DimensionError(f"mixed dimensions: {dim} vs {len(pt)}")
            mapping[canonical_encode(pt)] = pt
        self._points = mapping
        self._dim = dim

    @classmethod
    def _from_mapping(cls, mapping: dict[bytes, Point], dim: int | None) -> "PointCloud":
        cloud = cls.__new__(cls)
        cloud._points = mapping
        cloud._dim = dim
        return cloud

    @property
    def dim(self) -> int | None:
        """Point dimension, or None for the empty cloud."""
        return self._dim

    def __len__(self) -> int:
        return len(self._points)

    def __bool__(self) -> bool:
        return bool(self._points)

    def __iter__(self) -> Iterator[Point]:
        # Sorted by encoding so iteration order is deterministic everywhere.
        for key in sorted(self._points):
            yield self._points[key]

    def __contains__(self, point: Sequence[float]) -> bool:
        return canonical_encode(point) in self._points

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self._points.keys() == other._points.keys()

    def __hash__(self) -> int:
        return hash(frozenset(self._points))

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, dim={self._dim})"

    def encodings(self) -> frozenset[bytes]:
        return frozenset(self._points)

    def items(self) -> Iterator[tuple[bytes, Point]]:
        """(encoding, point) pairs in canonical order."""
        for key in sorted(self._points):
            yield key, self._points[key]

    def sorted_encodings(self) -> list[bytes]:
        return sorted(self._points)

    def point_for(self, encoding: bytes) -> Point:
        return self._points[encoding]

    def with_point(self, point: Sequence[float]) -> "PointCloud":
        pt = as_point(point)
        if self._dim is not None and len(pt) != self._dim:
            raise DimensionError(f"mixed dimensions: {self._dim} vs {len(pt)}")
        mapping = dict(self._points)
        mapping[canonical_encode(pt)] = pt
        return PointCloud._from_mapping(mapping, self._dim or len(pt))

    def without_encodings(self, encodings: Iterable[bytes]) -> "PointCloud":
        drop = set(encodings)
        mapping = {k: v for k, v in self._points.items() if k not in drop}
        return PointCloud._from_mapping(mapping, self._dim if mapping else None)

    def to_array(self) -> np.ndarray:
        """Points as an (n, dim) array in canonical (encoding-sorted) order."""
        if not self._points:
            return np.zeros((0, self._dim or 3))
        return np.array([self._points[k] for k in sorted(self._points)], dtype=float)

    def mean_point(self) -> Point:
        if not self._points:
            raise DimensionError("mean of an empty cloud is undefined")
        return tuple(self.to_array().mean(axis=0))


def dedupe(points: Iterable[Sequence[float]]) -> tuple[PointCloud, int]:
    """Build a cloud from raw points, returning (cloud, duplicates_dropped)."""
    raw = [as_point(p) for p in points]
    cloud = PointCloud(raw)
    return cloud, len(raw) - len(cloud)


def perturbation_size(p: PointCloud, q: PointCloud) -> int:
    """Set-perturbation distance: max(|P|,|Q|) - |P intersect Q|.

    This is the minimum number of added, deleted, and/or modified points
    needed to turn one cloud into the other.
    """
    if p.dim is not None and q.dim is not None and p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")
    shared = len(p.encodings() & q.encodings())
    return max(len(p), len(q)) - shared
