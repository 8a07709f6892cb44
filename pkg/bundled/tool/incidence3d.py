# Licensed under the MIT License.
"""Point-plane incidences in R^3 and their embedding into E_{q,4}(R)."""
from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import attrs
import numpy as np

from projective import (
    ProjClass,
    canonicalize,
    class_index,
    enumerate_classes,
    incident,
    vector_dot,
)
from ring_core import RingElem, RingSpec
from spectral_graph import BipartiteGraph
from vr_utils import (
    DimensionMismatchError,
    RingMismatchError,
    ValringError,
    check_capacity,
    sqrt_le,
)

DEFAULT_INCIDENCE_CAP = 4 * 10**6


@attrs.frozen
class Point3:
    ring: RingSpec
    x1: RingElem
    x2: RingElem
    x3: RingElem

    def __attrs_post_init__(self):
        for c in self.coords:
            self.ring.check(c)

    @property
    def coords(self) -> Tuple[RingElem, RingElem, RingElem]:
        return (self.x1, self.x2, self.x3)

    def __str__(self) -> str:
        return "(" + ",".join(self.ring.format_elem(c) for c in self.coords) + ")"


@attrs.frozen
class Plane3:
    """ax + by + cz = d, stored as the class [a:b:c:-d]."""

    coeffs: ProjClass

    def __attrs_post_init__(self):
        if self.coeffs.d != 4:
            raise DimensionMismatchError("a plane of R^3 has 4 coefficients")

    @classmethod
    def from_equation(
        cls, ring: RingSpec, a: RingElem, b: RingElem, c: RingElem, d: RingElem
    ) -> Plane3:
        return cls(canonicalize(ring, (a, b, c, ring.neg(d))))

    @property
    def ring(self) -> RingSpec:
        return self.coeffs.ring

    def __str__(self) -> str:
        return str(self.coeffs)


def is_on(point: Point3, plane: Plane3) -> bool:
    """a x1 + b x2 + c x3 = d, i.e. (x1, x2, x3, 1) . (a, b, c, -d) = 0."""
    if point.ring != plane.ring:
        raise RingMismatchError(f"{point.ring} and {plane.ring} differ")
    one = point.ring.from_int(1)
    return vector_dot(point.ring, point.coords + (one,), plane.coeffs.coords) == 0


def embed_point(point: Point3) -> ProjClass:
    return canonicalize(point.ring, point.coords + (point.ring.from_int(1),))


def embed(
    points: Sequence[Point3], planes: Sequence[Plane3]
) -> Tuple[List[ProjClass], List[ProjClass]]:
    """Vertex sets of E_{q,4}(R): [x1:x2:x3:1] and [a:b:c:-d]."""
    return [embed_point(p) for p in points], [h.coeffs for h in planes]


@attrs.frozen
class IncidenceReport:
    points: int
    planes: int
    incidences: int
    main_term: Fraction
    error_bound: float
    passed: bool
    upper_bound: float
    upper_passed: bool
    cross_check_edges: int


def main_coefficient(ring: RingSpec) -> Fraction:
    """(1/q^(r-1)) (q^2+q+1)/(q^3+q^2+q+1), equal to degree/part size of E_{q,4}."""
    q = ring.q
    return Fraction(q * q + q + 1, q ** (ring.r - 1) * (q**3 + q * q + q + 1))


def count_incidences(
    points: Sequence[Point3],
    planes: Sequence[Plane3],
    graph: Optional[BipartiteGraph] = None,
    cap: int = DEFAULT_INCIDENCE_CAP,
) -> IncidenceReport:
    """Brute-force I(Q, Pi) with the two-sided bound and the graph cross-check.

    The cross-check counts edges between the embedded vertex sets, through
    the bitset rows of `graph` when given and pairwise otherwise.
    """
    points = list(dict.fromkeys(points))
    planes = list(dict.fromkeys(planes))
    check_capacity("point-plane pairs", len(points) * len(planes), cap)
    rings = {p.ring for p in points} | {h.ring for h in planes}
    if len(rings) > 1:
        raise RingMismatchError("points and planes live over different rings")

    incidences = sum(1 for h in planes for p in points if is_on(p, h))

    point_classes, plane_classes = embed(points, planes)
    if graph is not None and (points or planes):
        if graph.d != 4 or graph.ring not in rings:
            raise RingMismatchError(
                "cross-check graph must be E_{q,4} of the same ring"
            )
        index = class_index(graph.classes)
        try:
            edges = graph.edges_between(
                [index[c.coords] for c in point_classes],
                [index[c.coords] for c in plane_classes],
            )
        except KeyError as err:
            raise ValringError(
                f"class {err.args[0]} is not a vertex of E_(q,4)({graph.ring})"
            ) from None
    else:
        edges = sum(1 for x in point_classes for y in plane_classes if incident(x, y))

    if rings:
        ring = next(iter(rings))
        q, r = ring.q, ring.r
        main = main_coefficient(ring) * len(points) * len(planes)
        error_coeff = q ** (2 * r - 1)
        one_sided_main = Fraction(len(points) * len(planes), q**r)
    else:
        main, error_coeff, one_sided_main = Fraction(0), 0, Fraction(0)
    product = len(points) * len(planes)
    root = product**0.5
    return IncidenceReport(
        points=len(points),
        planes=len(planes),
        incidences=incidences,
        main_term=main,
        error_bound=error_coeff * root,
        passed=sqrt_le(
            abs(incidences - main), Fraction(error_coeff), Fraction(product)
        ),
        upper_bound=float(one_sided_main) + error_coeff * root,
        upper_passed=sqrt_le(
            incidences - one_sided_main, Fraction(error_coeff), Fraction(product)
        ),
        cross_check_edges=edges,
    )


def sample_points(ring: RingSpec, rng: np.random.Generator, size: int) -> List[Point3]:
    """`size` distinct points drawn uniformly from R^3."""
    n = ring.order
    check_capacity(f"points of {ring}^3", size, n**3)
    chosen = rng.choice(n**3, size=size, replace=False)
    return [
        Point3(ring, int(v) % n, int(v) // n % n, int(v) // (n * n)) for v in chosen
    ]


def sample_planes(ring: RingSpec, rng: np.random.Generator, size: int) -> List[Plane3]:
    """`size` distinct planes drawn uniformly from the classes of R^4."""
    classes = enumerate_classes(ring, 4)
    check_capacity(f"planes of {ring}^3", size, len(classes))
    chosen = rng.choice(len(classes), size=size, replace=False)
    return [Plane3(classes[int(i)]) for i in chosen]


def all_points(ring: RingSpec) -> List[Point3]:
    elements = ring.elements()
    return [Point3(ring, a, b, c) for a in elements for b in elements for c in elements]


def all_planes(ring: RingSpec) -> List[Plane3]:
    return [Plane3(c) for c in enumerate_classes(ring, 4)]
