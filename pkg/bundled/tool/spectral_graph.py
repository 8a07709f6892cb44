# Licensed under the MIT License.
"""The bipartite Erdos-Renyi graph E_{q,d}(R), its spectrum and the mixing check.

Rows of the biadjacency matrix are stored as Python integers used as bitsets;
both parts are the same ordered class list, so the matrix is symmetric.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Sequence, Tuple

import attrs
import numpy as np

from projective import ProjClass, class_count, enumerate_classes
from ring_core import RingSpec
from vr_utils import NumericalError, check_capacity, popcount

DEFAULT_GRAPH_CAP = 5000
SOLVER_TOLERANCE = 1e-8
BOUND_SLACK = 1e-6
ROW_BLOCK = 256
SOLVERS = ("eigh", "jacobi")


def degree_formula(ring: RingSpec, d: int) -> int:
    """q^((d-2)(r-1)) (q^(d-1) - 1)/(q - 1)."""
    q, r = ring.q, ring.r
    return q ** ((d - 2) * (r - 1)) * (q ** (d - 1) - 1) // (q - 1)


def spectral_bound(ring: RingSpec, d: int) -> float:
    """q^((d-2)(2r-1)/2)."""
    return math.sqrt(ring.q ** ((d - 2) * (2 * ring.r - 1)))


@attrs.frozen
class BipartiteGraph:
    ring: RingSpec
    d: int
    classes: Tuple[ProjClass, ...]
    rows: Tuple[int, ...]

    @property
    def part_a(self) -> Tuple[ProjClass, ...]:
        return self.classes

    @property
    def part_b(self) -> Tuple[ProjClass, ...]:
        return self.classes

    @property
    def part_size(self) -> int:
        return len(self.classes)

    def degrees(self) -> List[int]:
        return [popcount(row) for row in self.rows]

    def column_degrees(self) -> List[int]:
        return [int(c) for c in self.biadjacency().sum(axis=0, dtype=np.int64)]

    def biadjacency(self) -> np.ndarray:
        """Dense 0/1 matrix (uint8)."""
        n = self.part_size
        width = (n + 7) // 8
        packed = np.frombuffer(
            b"".join(row.to_bytes(width, "little") for row in self.rows),
            dtype=np.uint8,
        ).reshape(n, width)
        return np.unpackbits(packed, axis=1, count=n, bitorder="little")

    def edges_between(self, xs: Sequence[int], ys: Sequence[int]) -> int:
        """e(X, Y) for vertex ordinals X in part A and Y in part B."""
        mask = 0
        for j in ys:
            mask |= 1 << j
        return sum(popcount(self.rows[i] & mask) for i in xs)


def build_graph(
    ring: RingSpec, d: int, cap: int = DEFAULT_GRAPH_CAP
) -> BipartiteGraph:
    """Builds E_{q,d}(R) with the dot products evaluated through ring tables."""
    check_capacity(f"part of E_(q,{d})({ring})", class_count(ring, d), cap)
    classes = enumerate_classes(ring, d)
    add, mul = ring.operation_tables(cap)
    coords = np.array([c.coords for c in classes], dtype=np.int64)
    rows: List[int] = []
    for start in range(0, len(classes), ROW_BLOCK):
        block = coords[start : start + ROW_BLOCK]
        total = mul[block[:, 0][:, None], coords[:, 0][None, :]]
        for i in range(1, d):
            total = add[total, mul[block[:, i][:, None], coords[:, i][None, :]]]
        packed = np.packbits(total == 0, axis=1, bitorder="little")
        rows.extend(int.from_bytes(line.tobytes(), "little") for line in packed)
    return BipartiteGraph(ring, d, classes, tuple(rows))


# *****************************************************
# Spectrum.
# *****************************************************
@attrs.frozen
class SpectralReport:
    ring: str
    d: int
    part_size: int
    degree: int
    singular_values: Tuple[float, ...]
    lambda3: float
    bound: float
    passed: bool
    top_matches_degree: bool
    solver: str
    solver_tolerance: float = SOLVER_TOLERANCE
    iterations: int = 0


def jacobi_eigenvalues(
    matrix: Sequence[Sequence[float]],
    tolerance: float = 1e-12,
    max_sweeps: int = 64,
) -> Tuple[List[float], int]:
    """Cyclic Jacobi rotations on a symmetric matrix, pure Python.

    Returns the eigenvalues (unordered) and the number of sweeps used.
    """
    a = [[float(x) for x in row] for row in matrix]
    n = len(a)
    scale = math.sqrt(sum(x * x for row in a for x in row)) or 1.0
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(
            2.0 * sum(a[i][j] ** 2 for i in range(n) for j in range(i + 1, n))
        )
        if off <= tolerance * scale:
            return [a[i][i] for i in range(n)], sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    raise NumericalError("Jacobi rotations did not converge", max_sweeps)


def spectrum(
    graph: BipartiteGraph,
    solver: str = "eigh",
    tolerance: float = SOLVER_TOLERANCE,
) -> SpectralReport:
    """Singular values of the biadjacency matrix from the eigenvalues of B B^T.

    lambda3 is the second largest singular value, the third eigenvalue of the
    bipartite adjacency matrix ordered by absolute value.
    """
    matrix = graph.biadjacency().astype(np.float64)
    gram = matrix @ matrix.T
    iterations = 0
    if solver == "eigh":
        try:
            eigenvalues = np.linalg.eigvalsh(gram)
        except np.linalg.LinAlgError as err:
            raise NumericalError(f"eigh failed: {err}", iterations) from None
    elif solver == "jacobi":
        values, iterations = jacobi_eigenvalues(gram.tolist())
        eigenvalues = np.array(values)
    else:
        raise ValueError(f"unknown solver '{solver}', expected one of {SOLVERS}")

    eigenvalues = np.clip(np.sort(eigenvalues)[::-1], 0.0, None)
    singular = tuple(float(s) for s in np.sqrt(eigenvalues))
    degree = degree_formula(graph.ring, graph.d)
    lambda3 = singular[1] if len(singular) > 1 else 0.0
    bound = spectral_bound(graph.ring, graph.d)
    return SpectralReport(
        ring=str(graph.ring),
        d=graph.d,
        part_size=graph.part_size,
        degree=degree,
        singular_values=singular,
        lambda3=lambda3,
        bound=bound,
        passed=lambda3 <= bound + BOUND_SLACK,
        top_matches_degree=abs(singular[0] - degree) <= tolerance * degree,
        solver=solver,
        solver_tolerance=tolerance,
        iterations=iterations,
    )


# *****************************************************
# Mixing.
# *****************************************************
@attrs.frozen
class MixingReport:
    x_size: int
    y_size: int
    edges: int
    main_term: Fraction
    deviation: Fraction
    error_bound: float
    passed: bool


def mixing_check(
    graph: BipartiteGraph,
    xs: Sequence[int],
    ys: Sequence[int],
    lambda3: float,
) -> MixingReport:
    """|e(X,Y) - (a/|B|)|X||Y|| <= lambda3 sqrt(|X||Y|), e(X,Y) by brute force."""
    xs, ys = sorted(set(xs)), sorted(set(ys))
    edges = graph.edges_between(xs, ys)
    degree = degree_formula(graph.ring, graph.d)
    main = Fraction(degree * len(xs) * len(ys), graph.part_size)
    deviation = abs(edges - main)
    error_bound = lambda3 * math.sqrt(len(xs) * len(ys))
    return MixingReport(
        x_size=len(xs),
        y_size=len(ys),
        edges=edges,
        main_term=main,
        deviation=deviation,
        error_bound=error_bound,
        passed=float(deviation) <= error_bound + BOUND_SLACK,
    )


def sample_subsets(
    graph: BipartiteGraph, rng: np.random.Generator
) -> Tuple[List[int], List[int]]:
    """Independent vertex inclusion with one probability in {0.1, ..., 0.9}."""
    n = graph.part_size
    probability = rng.choice(np.arange(1, 10)) / 10.0
    xs = np.flatnonzero(rng.random(n) < probability)
    ys = np.flatnonzero(rng.random(n) < probability)
    return [int(i) for i in xs], [int(j) for j in ys]
