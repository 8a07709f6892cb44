# Licensed under the MIT License.
"""Classes [x] of vectors in R^d with a unit coordinate, up to unit scaling."""
from __future__ import annotations

import functools
import itertools
from typing import Dict, Sequence, Tuple

import attrs

from ring_core import RingElem, RingSpec
from vr_utils import (
    DegenerateVectorError,
    DimensionMismatchError,
    RingMismatchError,
    check_capacity,
)


@attrs.frozen
class ProjClass:
    """Canonical representative: the leftmost unit coordinate equals 1."""

    ring: RingSpec
    coords: Tuple[RingElem, ...] = attrs.field(converter=tuple)

    @property
    def d(self) -> int:
        return len(self.coords)

    def __str__(self) -> str:
        return "[" + ":".join(self.ring.format_elem(c) for c in self.coords) + "]"


def class_count(ring: RingSpec, d: int) -> int:
    """q^((d-1)(r-1)) (q^d - 1)/(q - 1)."""
    q, r = ring.q, ring.r
    return q ** ((d - 1) * (r - 1)) * (q**d - 1) // (q - 1)


def scale(ring: RingSpec, t: RingElem, raw: Sequence[RingElem]) -> Tuple[RingElem, ...]:
    return tuple(ring.mul(t, c) for c in raw)


def canonicalize(ring: RingSpec, raw: Sequence[RingElem]) -> ProjClass:
    """Scales raw so that its leftmost unit coordinate becomes 1."""
    coords = tuple(ring.check(c) for c in raw)
    for c in coords:
        if ring.is_unit(c):
            return ProjClass(ring, scale(ring, ring.inverse(c), coords))
    text = ", ".join(ring.format_elem(c) for c in coords)
    raise DegenerateVectorError(f"({text}) has no unit coordinate in {ring}")


def enumerate_classes(ring: RingSpec, d: int) -> Tuple[ProjClass, ...]:
    """All classes, grouped by position of the leading 1, then lexicographic."""
    if d < 2:
        raise DimensionMismatchError(f"dimension must be >= 2, got {d}")
    check_capacity(f"vectors of {ring}^{d}", ring.order**d, ring.order_cap)
    return _enumerate_classes(ring, d)


@functools.lru_cache(maxsize=32)
def _enumerate_classes(ring: RingSpec, d: int) -> Tuple[ProjClass, ...]:
    nonunits = ring.nonunits()
    elements = ring.elements()
    one = ring.from_int(1)
    classes = []
    for lead in range(d):
        for prefix in itertools.product(nonunits, repeat=lead):
            for suffix in itertools.product(elements, repeat=d - 1 - lead):
                classes.append(ProjClass(ring, prefix + (one,) + suffix))
    return tuple(classes)


def class_index(classes: Sequence[ProjClass]) -> Dict[Tuple[RingElem, ...], int]:
    """Canonical coordinates -> ordinal."""
    return {c.coords: i for i, c in enumerate(classes)}


def vector_dot(
    ring: RingSpec, u: Sequence[RingElem], v: Sequence[RingElem]
) -> RingElem:
    """Sum of u_i v_i."""
    if len(u) != len(v):
        raise DimensionMismatchError(f"dimensions {len(u)} and {len(v)} differ")
    total = 0
    for a, b in zip(u, v):
        total = ring.add(total, ring.mul(a, b))
    return total


def dot(x: ProjClass, y: ProjClass) -> RingElem:
    """Dot product of the canonical representatives."""
    if x.ring != y.ring:
        raise RingMismatchError(f"{x.ring} and {y.ring} differ")
    return vector_dot(x.ring, x.coords, y.coords)


def incident(x: ProjClass, y: ProjClass) -> bool:
    """Edge predicate of the Erdos-Renyi graph: x . y = 0."""
    return dot(x, y) == 0
