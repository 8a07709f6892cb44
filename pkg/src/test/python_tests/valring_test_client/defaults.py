# Licensed under the MIT License.
"""
Ring grids shared by the tests.
"""

# Rings small enough for exhaustive checks.
TINY_RINGS = ("Z/2", "Z/3", "Z/2^2", "Z/3^2", "GF(2)[t]/t^2", "GF(2)[t]/t^3")

# Every ring family and shape the library supports, still cheap to enumerate.
ARITHMETIC_RINGS = TINY_RINGS + (
    "Z/2^3",
    "Z/5^2",
    "GF(3)[t]/t^2",
    "GF(4)[t]/t^2",
    "GF(4:x^2+x+1)[t]/t^1",
    "GF(9)[t]/t^2",
    "GF(8)[t]/t^1",
)

# The incidence and energy grid.
SMALL_GRID = ("Z/2^2", "Z/3^2", "GF(2)[t]/t^2", "GF(3)[t]/t^2")

# The grid of a full `run`.
RUN_GRID = ("Z/2^2", "Z/2^3", "Z/3^2", "GF(2)[t]/t^2", "GF(3)[t]/t^2")

PLUNNECKE_GRID = ("Z/2^2", "Z/2^3", "Z/3^2")

GRAPH_PART_CAP = 5000


def part_size(q: int, r: int, d: int) -> int:
    return q ** ((d - 1) * (r - 1)) * (q**d - 1) // (q - 1)


def _graph_rings():
    for q in (2, 3, 5):
        for r in (1, 2, 3):
            yield q, r, f"Z/{q}" if r == 1 else f"Z/{q}^{r}"
            if r > 1:
                yield q, r, f"GF({q})[t]/t^{r}"


# (ring, d) pairs for the structure and spectrum checks: q in {2, 3, 5},
# r in {1, 2, 3}, d in {3, 4}, both families, part size <= 5000.
GRAPH_GRID = tuple(
    (spec, d)
    for q, r, spec in _graph_rings()
    for d in (3, 4)
    if part_size(q, r, d) <= GRAPH_PART_CAP
)

SEED = 42
