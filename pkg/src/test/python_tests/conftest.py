# Licensed under the MIT License.
"""
Makes the bundled tool modules importable by name.
"""
import os
import sys

from .valring_test_client.constants import TOOL_ROOT

if os.fspath(TOOL_ROOT) not in sys.path:
    sys.path.insert(0, os.fspath(TOOL_ROOT))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full acceptance sweeps over a grid")
