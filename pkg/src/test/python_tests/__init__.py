# Licensed under the MIT License.
"""Tests for the valring command line tool and its modules."""
