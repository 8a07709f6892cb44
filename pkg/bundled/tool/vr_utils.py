# Licensed under the MIT License.
"""Utility functions and classes shared by the valring modules."""
from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from typing import Any, List, Tuple, Union

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class ValringError(Exception):
    """Base class for all errors raised by valring."""


class InvalidElementError(ValringError):
    """Element index is outside [0, order) for its ring."""


class NotInvertibleError(ValringError):
    """Inverse requested for a nonunit."""


class DegenerateVectorError(ValringError):
    """Vector has no unit coordinate, so it has no projective class."""


class CapacityError(ValringError):
    """Requested enumeration is larger than the configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class DimensionMismatchError(ValringError):
    """Vectors of different dimension were combined."""


class RingMismatchError(ValringError):
    """Objects over different rings were combined."""


class NumericalError(ValringError):
    """Eigensolver did not converge."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class ConfigError(ValringError):
    """Configuration or command line could not be used."""


class ExperimentRegistrationError(ValringError):
    """Same experiment id registered twice."""

    def __init__(self, experiment: str):
        super().__init__(f"Experiment '{experiment}' is already registered.")


def as_list(content: Union[Any, List[Any], Tuple[Any]]) -> List[Any]:
    """Ensures we always get a list"""
    if isinstance(content, (list, tuple)):
        return list(content)
    return [content]


def check_capacity(what: str, size: int, cap: int) -> None:
    """Raises CapacityError when `size` is above `cap`."""
    if size > cap:
        raise CapacityError(what, size, cap)


def popcount(bits: int) -> int:
    """Number of set bits in a non-negative integer."""
    return bin(bits).count("1")


# *****************************************************
# Per-trial random streams.
# *****************************************************
def _splitmix64(state: int) -> Tuple[int, int]:
    """One SplitMix64 step: returns (next state, output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def stream_key(experiment_id: str) -> int:
    """Stable 64-bit key of an experiment id (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(experiment_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream_seed(master_seed: int, experiment_id: str, trial_index: int) -> int:
    """64-bit seed of one trial stream.

    The master seed is mixed with the experiment key through one SplitMix64
    step, then the trial index is xored into the resulting state and mixed
    again. Both mixing steps are bijections of the 64-bit state, so for a fixed
    (master_seed, experiment_id) distinct trial indices below 2**64 never share
    a seed.
    """
    _, z = _splitmix64((master_seed & MASK64) ^ stream_key(experiment_id))
    _, z = _splitmix64(z ^ (trial_index & MASK64))
    return z


def derive_substream(
    master_seed: int, experiment_id: str, trial_index: int
) -> np.random.Generator:
    """Returns the random generator for one trial."""
    return np.random.Generator(
        np.random.PCG64(substream_seed(master_seed, experiment_id, trial_index))
    )


# *****************************************************
# Report formatting.
# *****************************************************
def format_float(value: float) -> str:
    """Shortest round-trip text of a float, 17 significant digits otherwise."""
    if not math.isfinite(value):
        return repr(value)
    text = repr(value)
    if float(text) != value:
        text = format(value, ".17g")
    return text


def format_value(value: Any) -> str:
    """Formats one CSV cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (float, Fraction)):
        return format_float(float(value))
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def sqrt_le(lhs: Fraction, coefficient: Fraction, radicand: Fraction) -> bool:
    """Decides lhs <= coefficient * sqrt(radicand) exactly, coefficient >= 0."""
    if lhs <= 0:
        return True
    return lhs * lhs <= coefficient * coefficient * radicand

