# Licensed under the MIT License.
"""
Test for config files, environment defaults and flag precedence.
"""
import pytest
from hamcrest import assert_that, contains_string, is_

import vr_settings
from vr_utils import ConfigError

from .valring_test_client import constants

GRID_CONFIG = constants.TEST_DATA / "grid.cfg"


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv("VALRING_THREADS", raising=False)


def test_defaults():
    config = vr_settings.load_config()
    assert_that(config.rings, is_(vr_settings.DEFAULT_GRID))
    assert_that((config.trials, config.seed, config.workers), is_((100, 42, 1)))
    assert_that(config.experiments, is_(vr_settings.EXPERIMENTS))


def test_config_file():
    values = vr_settings.read_config_file(str(GRID_CONFIG))
    rings = ["Z/2^2", "Z/3^2", "GF(2)[t]/t^2", "GF(3)[t]/t^2"]
    assert_that(values["rings"], is_(rings))
    config = vr_settings.load_config(str(GRID_CONFIG))
    assert_that(config.rings, is_(tuple(rings)))
    assert_that((config.experiment, config.trials, config.seed), is_(("thm1", 5, 7)))
    assert_that(config.dims, is_((3,)))
    assert_that(config.sizes, is_((3, 3, 2)))


def test_flags_override_file_and_file_overrides_environment(monkeypatch):
    monkeypatch.setenv("VALRING_THREADS", "3")
    assert_that(vr_settings.load_config().workers, is_(3))
    config = vr_settings.load_config(str(GRID_CONFIG), {"workers": 2, "seed": None})
    assert_that(config.workers, is_(2))
    assert_that(config.seed, is_(7))
    config = vr_settings.load_config(str(GRID_CONFIG), {"trials": 9})
    assert_that(config.trials, is_(9))


@pytest.mark.parametrize(
    "overrides, message",
    [
        ({"trials": 0}, "trials"),
        ({"trials": "many"}, "invalid configuration"),
        ({"experiment": "thm3"}, "experiment"),
        ({"rings": ["Z/6"]}, "Z/6"),
        ({"rings": ["Z/2^30"]}, "exceeds cap"),
        ({"dims": [1]}, "dimensions"),
        ({"sizes": [1, 2]}, "sizes"),
        ({"solver": "lanczos"}, "solver"),
        ({"format": "xml"}, "format"),
        ({"plunnecke_max": 13}, "plunnecke_max"),
    ],
)
def test_invalid_values(overrides, message):
    with pytest.raises(ConfigError) as err:
        vr_settings.load_config(overrides=overrides)
    assert_that(str(err.value), contains_string(message))


@pytest.mark.parametrize(
    "text, message",
    [
        ("trials\n", "expected 'key = value'"),
        ("colour = red\n", "unknown key 'colour'"),
        ("seed = 1\nseed = 2\n", "'seed' given twice"),
    ],
)
def test_malformed_files(tmp_path, text, message):
    path = tmp_path / "bad.cfg"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError) as err:
        vr_settings.read_config_file(str(path))
    assert_that(str(err.value), contains_string(message))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        vr_settings.load_config(str(tmp_path / "missing.cfg"))


def test_config_lines_read_back(tmp_path):
    config = vr_settings.load_config(str(GRID_CONFIG), {"output": "out.csv"})
    path = tmp_path / "echo.cfg"
    text = "\n".join(vr_settings.config_lines(config)) + "\n"
    path.write_text(text, encoding="utf-8")
    assert_that(vr_settings.load_config(str(path)), is_(config))
