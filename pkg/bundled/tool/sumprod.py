# Licensed under the MIT License.
"""Set arithmetic, line families, collision energy and the sum-product checks.

All inequalities are decided exactly on integers and fractions; floats appear
only in reported ratios.
"""
from __future__ import annotations

import collections
import itertools
import math
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Optional, Tuple

import attrs
import numpy as np

from incidence3d import IncidenceReport, Plane3, Point3, count_incidences
from ring_core import RingElem, RingSpec
from vr_utils import RingMismatchError, check_capacity

DEFAULT_ENERGY_CAP = 10**6
DEFAULT_THEOREM2_CAP = 40
DEFAULT_PLUNNECKE_CAP = 12

Line = Tuple[RingElem, RingElem]


def _sorted_members(values: Iterable[RingElem]) -> Tuple[RingElem, ...]:
    return tuple(sorted(set(int(v) for v in values)))


@attrs.frozen
class ElemSet:
    """A subset of R, kept sorted and deduplicated."""

    ring: RingSpec
    members: Tuple[RingElem, ...] = attrs.field(converter=_sorted_members)

    def __attrs_post_init__(self):
        for x in self.members:
            self.ring.check(x)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[RingElem]:
        return iter(self.members)

    def __contains__(self, x: object) -> bool:
        return x in self.members

    def __str__(self) -> str:
        return "{" + ",".join(self.ring.format_elem(x) for x in self.members) + "}"


def _same_ring(*sets: ElemSet) -> RingSpec:
    rings = {s.ring for s in sets}
    if len(rings) != 1:
        raise RingMismatchError("sets live over different rings")
    return sets[0].ring


def sumset(a: ElemSet, b: ElemSet) -> ElemSet:
    ring = _same_ring(a, b)
    return ElemSet(ring, (ring.add(x, y) for x in a for y in b))


def productset(a: ElemSet, b: ElemSet) -> ElemSet:
    ring = _same_ring(a, b)
    return ElemSet(ring, (ring.mul(x, y) for x in a for y in b))


def powerset_n(a: ElemSet, n: int) -> ElemSet:
    """A^n = {a^n : a in A}, elementwise powers."""
    if n < 1:
        raise ValueError(f"exponent must be >= 1, got {n}")
    return ElemSet(a.ring, (a.ring.power(x, n) for x in a))


def kfold_sumset(b: ElemSet, k: int) -> ElemSet:
    """kB = B + ... + B (k copies)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    total = b
    for _ in range(k - 1):
        total = sumset(total, b)
    return total


def ba_plus_c(a: ElemSet, b: ElemSet, c: ElemSet) -> ElemSet:
    """BA + C by the direct triple loop."""
    ring = _same_ring(a, b, c)
    return ElemSet(ring, (ring.add(ring.mul(y, x), z) for x in a for y in b for z in c))


# *****************************************************
# Line families.
# *****************************************************
def _sorted_entries(entries) -> Tuple[Tuple[Line, int], ...]:
    items = entries.items() if isinstance(entries, dict) else entries
    return tuple(sorted((tuple(line), int(count)) for line, count in items))


@attrs.frozen
class LineFamily:
    """Multiset of lines l_{m,b}(a) = m a + b, as ((m, b), multiplicity) pairs."""

    ring: RingSpec
    entries: Tuple[Tuple[Line, int], ...] = attrs.field(converter=_sorted_entries)

    def __attrs_post_init__(self):
        for (m, b), count in self.entries:
            self.ring.check(m)
            self.ring.check(b)
            if count < 1:
                raise ValueError(f"multiplicity of l_({m},{b}) must be >= 1")

    @classmethod
    def from_pairs(cls, ring: RingSpec, pairs: Iterable[Line]) -> LineFamily:
        return cls(ring, dict(collections.Counter(tuple(p) for p in pairs)))

    @property
    def distinct(self) -> int:
        return len(self.entries)

    @property
    def weight(self) -> int:
        return sum(count for _, count in self.entries)

    def items(self) -> Tuple[Tuple[Line, int], ...]:
        return self.entries


def lines_from_product(b: ElemSet, c: ElemSet) -> LineFamily:
    """L_P for P = B x C, every line once."""
    ring = _same_ring(b, c)
    return LineFamily(ring, {(m, k): 1 for m in b for k in c})


def lines_theorem2(a: ElemSet) -> LineFamily:
    """(2s, c^2 - s^2) for s in A+A, c in A, counted with multiplicity."""
    ring = a.ring
    two = ring.from_int(2)
    return LineFamily.from_pairs(
        ring,
        (
            (ring.mul(two, s), ring.sub(ring.mul(c, c), ring.mul(s, s)))
            for s in sumset(a, a)
            for c in a
        ),
    )


def r_function(lines: LineFamily, a: ElemSet) -> Dict[RingElem, int]:
    """y -> number of ((m, b), a) with m a + b = y, lines counted with multiplicity."""
    if lines.ring != a.ring:
        raise RingMismatchError(f"{lines.ring} and {a.ring} differ")
    ring = a.ring
    counts: Dict[RingElem, int] = collections.Counter()
    for (m, b), mult in lines.items():
        for x in a:
            counts[ring.add(ring.mul(m, x), b)] += mult
    return dict(sorted(counts.items()))


def evaluate_lines(lines: LineFamily, a: ElemSet) -> ElemSet:
    """L(A) as a set."""
    return ElemSet(a.ring, r_function(lines, a))


@attrs.frozen
class EnergyReport:
    energy: int
    lines: int
    weight: int
    set_size: int
    rhs: Fraction
    passed: bool
    evaluation_set_size: int
    r_histogram: Tuple[Tuple[RingElem, int], ...]
    cauchy_schwarz_passed: bool
    lower_bound: Fraction
    lower_passed: bool


def collision_rhs(ring: RingSpec, weight: int, set_size: int) -> Fraction:
    """|L|^2 |A|^2 / q^r + q^(2r-1) |L| |A|."""
    q, r = ring.q, ring.r
    mass = weight * set_size
    return Fraction(mass * mass, q**r) + q ** (2 * r - 1) * mass


def energy(
    lines: LineFamily, a: ElemSet, cap: int = DEFAULT_ENERGY_CAP
) -> EnergyReport:
    """E(L, A) = sum_y r(y)^2 with the collision upper bound and the
    evaluation-set lower bounds implied by Cauchy-Schwarz."""
    check_capacity("line-element pairs", lines.distinct * len(a), cap)
    ring = a.ring
    histogram = r_function(lines, a)
    total = sum(c * c for c in histogram.values())
    mass = lines.weight * len(a)
    rhs = collision_rhs(ring, lines.weight, len(a))
    q, r = ring.q, ring.r
    lower = Fraction(1, 2) * min(Fraction(q**r), Fraction(mass, q ** (2 * r - 1)))
    evaluation_size = len(histogram)
    return EnergyReport(
        energy=total,
        lines=lines.distinct,
        weight=lines.weight,
        set_size=len(a),
        rhs=rhs,
        passed=total <= rhs,
        evaluation_set_size=evaluation_size,
        r_histogram=tuple(histogram.items()),
        cauchy_schwarz_passed=evaluation_size * total >= mass * mass,
        lower_bound=lower,
        lower_passed=mass == 0 or evaluation_size >= lower,
    )


def collision_incidences(lines: LineFamily, a: ElemSet) -> IncidenceReport:
    """E(L, A) as point-plane incidences.

    Points (m, b, a') and planes a x + y - m' z = b'. For multiplicity-one
    families the incidence count equals the energy.
    """
    ring = a.ring
    one = ring.from_int(1)
    points = [Point3(ring, m, b, x) for (m, b), _ in lines.items() for x in a]
    planes = [
        Plane3.from_equation(ring, x, one, ring.neg(m), b)
        for (m, b), _ in lines.items()
        for x in a
    ]
    return count_incidences(points, planes)


# *****************************************************
# Theorem checks.
# *****************************************************
@attrs.frozen
class Theorem1Report:
    sizes: Tuple[int, int, int]
    value: int
    rhs: Fraction
    ratio: float
    identity_holds: bool
    saturated: bool
    passed: bool


def theorem1_rhs(ring: RingSpec, product: int) -> Fraction:
    """1/2 min{q^r, |A||B||C| / q^(2r-1)}."""
    q, r = ring.q, ring.r
    return Fraction(1, 2) * min(Fraction(q**r), Fraction(product, q ** (2 * r - 1)))


def check_theorem1(a: ElemSet, b: ElemSet, c: ElemSet) -> Theorem1Report:
    """|BA + C| >= 1/2 min{q^r, |A||B||C|/q^(2r-1)}.

    The constant 1/2 comes from x^2/(u+v) >= min(x^2/u, x^2/v)/2 applied to
    the Cauchy-Schwarz step of the collision bound.
    """
    ring = _same_ring(a, b, c)
    value_set = ba_plus_c(a, b, c)
    product = len(a) * len(b) * len(c)
    rhs = theorem1_rhs(ring, product)
    return Theorem1Report(
        sizes=(len(a), len(b), len(c)),
        value=len(value_set),
        rhs=rhs,
        ratio=float(len(value_set) / rhs) if rhs else math.inf,
        identity_holds=value_set == evaluate_lines(lines_from_product(b, c), a),
        saturated=product * ring.q > ring.q ** (3 * ring.r),
        passed=len(value_set) >= rhs,
    )


def check_aa_plus_a(a: ElemSet) -> Theorem1Report:
    """|AA + A|; saturated means |A| > q^(r - 1/3)."""
    return check_theorem1(a, a, a)


def energy_squares(a: ElemSet, cap: int = DEFAULT_THEOREM2_CAP) -> int:
    """#{c^2 + a^2 + b'^2 = c'^2 + a'^2 + b^2}, via the histogram of c^2 + a^2 - b^2."""
    check_capacity("set for the square energy", len(a), cap)
    ring = a.ring
    squares = [ring.mul(x, x) for x in a]
    pairs = collections.Counter(ring.add(u, v) for u in squares for v in squares)
    values: Dict[RingElem, int] = collections.Counter()
    for u, count in pairs.items():
        for w in squares:
            values[ring.sub(u, w)] += count
    return sum(c * c for c in values.values())


@attrs.frozen
class PlunneckeWitness:
    found: bool
    witness: Tuple[RingElem, ...]
    k: int
    delta: Fraction
    growth: Fraction
    lhs: int
    rhs: Fraction


def plunnecke_verify(
    a: ElemSet,
    b: ElemSet,
    delta: Fraction,
    k: int,
    cap: int = DEFAULT_PLUNNECKE_CAP,
) -> PlunneckeWitness:
    """Exhaustive search for X in A, |X| >= (1-delta)|A|, |X + kB| < (K/delta)^k |X|.

    K = |A + B|/|A|. Larger subsets are tried first, each size in
    lexicographic order.
    """
    check_capacity("set for the Plunnecke search", len(a), cap)
    _same_ring(a, b)
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not len(a) or not len(b):
        raise ValueError("A and B must be nonempty")
    growth = Fraction(len(sumset(a, b)), len(a))
    factor = (growth / delta) ** k
    multiple = kfold_sumset(b, k)
    smallest = max(1, math.ceil((1 - delta) * len(a)))
    for size in range(len(a), smallest - 1, -1):
        for subset in itertools.combinations(a.members, size):
            lhs = len(sumset(ElemSet(a.ring, subset), multiple))
            if lhs < factor * size:
                return PlunneckeWitness(
                    True, subset, k, delta, growth, lhs, factor * size
                )
    return PlunneckeWitness(False, (), k, delta, growth, 0, Fraction(0))


@attrs.frozen
class Theorem2Report:
    size: int
    sumset_size: int
    square_sumset_size: int
    triple_square_sumset_size: int
    energy_squares: int
    line_energy: int
    line_weight: int
    collision_rhs: Fraction
    cauchy_schwarz_passed: bool
    relaxation_passed: bool
    collision_passed: bool
    hypothesis: bool
    ratio: Optional[float]
    characteristic_two: bool
    refinement_found: Optional[bool]
    passed: bool


def check_theorem2(a: ElemSet, cap: int = DEFAULT_THEOREM2_CAP) -> Theorem2Report:
    """Every explicit inequality of the |A^2+A^2||A+A| argument, in order.

    (i) |A|^6 <= |A^2+A^2+A^2| E, (ii) E <= E(L, A) for the family of
    lines_theorem2, (iii) the collision bound with |L| = |A+A||A|, and when
    |A+A||A|^2 > q^(3r-1) the ratio |A^2+A^2||A+A| / (q^(r/2)|A|^(3/2)),
    reported only. When p = 2 the slopes 2s are nonunits and the collision step
    is recorded but left out of `passed`.
    """
    ring = a.ring
    n = len(a)
    if not n:
        raise ValueError("A must be nonempty")
    e_squares = energy_squares(a, cap)
    squares = powerset_n(a, 2)
    square_sum = sumset(squares, squares)
    triple_square_sum = sumset(square_sum, squares)
    doubled = sumset(a, a)

    lines = lines_theorem2(a)
    line_report = energy(lines, a)
    collision_passed = line_report.passed and lines.weight <= len(doubled) * n

    q, r = ring.q, ring.r
    hypothesis = len(doubled) * n * n > q ** (3 * r - 1)
    ratio = None
    if hypothesis:
        ratio = len(square_sum) * len(doubled) / (math.sqrt(q**r) * n**1.5)

    refinement = None
    if len(squares) <= DEFAULT_PLUNNECKE_CAP:
        refinement = plunnecke_verify(squares, squares, Fraction(1, 2), 2).found

    cauchy_schwarz = n**6 <= len(triple_square_sum) * e_squares
    relaxation = e_squares <= line_report.energy
    return Theorem2Report(
        size=n,
        sumset_size=len(doubled),
        square_sumset_size=len(square_sum),
        triple_square_sumset_size=len(triple_square_sum),
        energy_squares=e_squares,
        line_energy=line_report.energy,
        line_weight=lines.weight,
        collision_rhs=line_report.rhs,
        cauchy_schwarz_passed=cauchy_schwarz,
        relaxation_passed=relaxation,
        collision_passed=collision_passed,
        hypothesis=hypothesis,
        ratio=ratio,
        characteristic_two=ring.p == 2,
        refinement_found=refinement,
        passed=(
            cauchy_schwarz
            and relaxation
            and (collision_passed or ring.p == 2)
            and (ratio is None or ratio > 0)
            and refinement is not False
        ),
    )


# *****************************************************
# Sampling.
# *****************************************************
def random_subset(ring: RingSpec, rng: np.random.Generator, size: int) -> ElemSet:
    """`size` distinct elements, uniformly."""
    check_capacity(f"subset of {ring}", size, ring.order)
    chosen = rng.choice(ring.order, size=size, replace=False)
    return ElemSet(ring, (int(x) for x in chosen))


def random_lines(ring: RingSpec, rng: np.random.Generator, size: int) -> LineFamily:
    """`size` distinct lines (m, b), uniformly from R^2, multiplicity one."""
    n = ring.order
    check_capacity(f"lines over {ring}", size, n * n)
    chosen = rng.choice(n * n, size=size, replace=False)
    return LineFamily(ring, {(int(v) // n, int(v) % n): 1 for v in chosen})
