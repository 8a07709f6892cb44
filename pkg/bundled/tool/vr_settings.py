# Licensed under the MIT License.
"""Experiment configuration: flat `key = value` files, flags and defaults."""
from __future__ import annotations

import os
import pathlib
from typing import Any, Dict, List, Optional, Tuple

import attrs
import cattrs
from cattrs.errors import BaseValidationError

from ring_core import DEFAULT_ORDER_CAP, parse_ring
from spectral_graph import DEFAULT_GRAPH_CAP, SOLVERS
from sumprod import DEFAULT_ENERGY_CAP, DEFAULT_PLUNNECKE_CAP, DEFAULT_THEOREM2_CAP
from vr_utils import CapacityError, ConfigError, as_list

EXPERIMENTS = ("spectrum", "mixing", "incidence", "energy", "thm1", "thm2", "plunnecke")
DEFAULT_GRID = ("Z/2^2", "Z/2^3", "Z/3^2", "GF(2)[t]/t^2", "GF(3)[t]/t^2")
DEFAULT_DIMS = (3, 4)
FORMATS = ("csv", "json")

# Keys that may repeat in a config file; values accumulate.
REPEATED_KEYS = {"ring": "rings", "d": "dims"}
SCALAR_KEYS = {
    "experiment",
    "trials",
    "seed",
    "points",
    "planes",
    "lines",
    "set_size",
    "sizes",
    "size",
    "plunnecke_max",
    "order_cap",
    "graph_cap",
    "theorem2_cap",
    "energy_cap",
    "solver",
    "workers",
    "output",
    "format",
}


def _positive(_instance, attribute, value) -> None:
    values = value if isinstance(value, tuple) else (value,)
    if any(v < 1 for v in values):
        raise ValueError(f"{attribute.name} must be >= 1, got {value}")


@attrs.frozen
class ExperimentConfig:
    rings: Tuple[str, ...] = DEFAULT_GRID
    experiment: str = attrs.field(
        default="all", validator=attrs.validators.in_(EXPERIMENTS + ("all",))
    )
    trials: int = attrs.field(default=100, validator=_positive)
    seed: int = attrs.field(default=42, validator=attrs.validators.ge(0))
    dims: Tuple[int, ...] = attrs.field(default=DEFAULT_DIMS)
    points: int = attrs.field(default=20, validator=_positive)
    planes: int = attrs.field(default=20, validator=_positive)
    lines: int = attrs.field(default=10, validator=_positive)
    set_size: int = attrs.field(default=6, validator=_positive)
    sizes: Tuple[int, ...] = attrs.field(default=(4, 4, 4), validator=_positive)
    size: int = attrs.field(default=6, validator=_positive)
    plunnecke_max: int = attrs.field(default=8, validator=_positive)
    order_cap: int = attrs.field(default=DEFAULT_ORDER_CAP, validator=_positive)
    graph_cap: int = attrs.field(default=DEFAULT_GRAPH_CAP, validator=_positive)
    theorem2_cap: int = attrs.field(default=DEFAULT_THEOREM2_CAP, validator=_positive)
    energy_cap: int = attrs.field(default=DEFAULT_ENERGY_CAP, validator=_positive)
    solver: str = attrs.field(default="eigh", validator=attrs.validators.in_(SOLVERS))
    workers: int = attrs.field(default=1, validator=_positive)
    output: Optional[str] = None
    format: str = attrs.field(default="csv", validator=attrs.validators.in_(FORMATS))

    def __attrs_post_init__(self):
        if not self.rings:
            raise ValueError("at least one ring is required")
        if not self.dims or any(d < 2 for d in self.dims):
            raise ValueError(f"dimensions must be >= 2, got {self.dims}")
        if len(self.sizes) not in (1, 3):
            raise ValueError(f"sizes takes n or a,b,c, got {self.sizes}")
        if self.size > self.theorem2_cap:
            raise ValueError(
                f"size {self.size} exceeds theorem2_cap {self.theorem2_cap}"
            )
        if self.plunnecke_max > DEFAULT_PLUNNECKE_CAP:
            raise ValueError(
                f"plunnecke_max must be <= {DEFAULT_PLUNNECKE_CAP},"
                f" got {self.plunnecke_max}"
            )
        for spec in self.rings:
            parse_ring(spec, self.order_cap)

    @property
    def experiments(self) -> Tuple[str, ...]:
        return EXPERIMENTS if self.experiment == "all" else (self.experiment,)


def _int_tuple(value: Any, _type) -> Tuple[int, ...]:
    return tuple(
        int(part)
        for item in as_list(value)
        for part in str(item).split(",")
        if part.strip()
    )


def _str_tuple(value: Any, _type) -> Tuple[str, ...]:
    return tuple(str(item).strip() for item in as_list(value))


CONVERTER = cattrs.Converter()
CONVERTER.register_structure_hook_func(lambda t: t == Tuple[int, ...], _int_tuple)
CONVERTER.register_structure_hook_func(lambda t: t == Tuple[str, ...], _str_tuple)


def _get_global_defaults() -> Dict[str, Any]:
    defaults: Dict[str, Any] = {}
    threads = os.getenv("VALRING_THREADS")
    if threads:
        defaults["workers"] = threads
    return defaults


def read_config_file(path: str) -> Dict[str, Any]:
    """Parses `key = value` lines; `ring` and `d` may repeat."""
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None

    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{number}: expected 'key = value', got '{raw}'")
        if key in REPEATED_KEYS:
            values.setdefault(REPEATED_KEYS[key], []).append(value)
        elif key in SCALAR_KEYS:
            if key in values:
                raise ConfigError(f"{path}:{number}: '{key}' given twice")
            values[key] = value
        else:
            raise ConfigError(f"{path}:{number}: unknown key '{key}'")
    return values


def load_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """Defaults < environment < config file < command line flags."""
    values = _get_global_defaults()
    if path:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return structure_config(values)


def structure_config(values: Dict[str, Any]) -> ExperimentConfig:
    try:
        return CONVERTER.structure(values, ExperimentConfig)
    except ConfigError:
        raise
    except CapacityError as err:
        raise ConfigError(str(err)) from None
    except (BaseValidationError, ValueError, TypeError) as err:
        raise ConfigError(f"invalid configuration: {_describe(err)}") from None


def _describe(err: BaseException) -> str:
    if isinstance(err, BaseValidationError):
        return "; ".join(_describe(e) for e in err.exceptions)
    if isinstance(err, ConfigError):
        return str(err)
    return str(err) or type(err).__name__


def unstructure_config(config: ExperimentConfig) -> Dict[str, Any]:
    return CONVERTER.unstructure(config)


def config_lines(config: ExperimentConfig) -> List[str]:
    """The config as `key = value` lines, in file syntax."""
    lines = [f"ring = {spec}" for spec in config.rings]
    lines += [f"d = {d}" for d in config.dims]
    for key in sorted(SCALAR_KEYS):
        value = getattr(config, key)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return lines
