"""Canonical point encoding shared with the certification toolkit.

Coordinates render as signed fixed-point with six fractional digits and are
joined with ``|``; a cloud key is the sorted encodings joined by newlines.
Matching these bytes exactly is what makes lookup-table handlers agree with
their in-process counterparts.
"""

from __future__ import annotations

import math
from typing import Sequence

_FRACTION_DIGITS = 6
_MAX_WIDTH = 1 + 4 + 1 + _FRACTION_DIGITS


def canonical_encode(point: Sequence[float]) -> bytes:
    parts = []
    for x in point:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite coordinate: {x!r}")
        if x == 0.0:
            x = 0.0  # fold -0.0 into +0.0
        text = f"{x:+.{_FRACTION_DIGITS}f}"
        if len(text) > _MAX_WIDTH:
            raise ValueError(f"coordinate out of range (+/-9999.999999): {x!r}")
        parts.append(text.encode("ascii"))
    return b"|".join(parts)


def cloud_key(points: Sequence[Sequence[float]]) -> bytes:
    """Order-insensitive key over a list of points, duplicates collapsed."""
    return b"\n".join(sorted({canonical_encode(p) for p in points}))
