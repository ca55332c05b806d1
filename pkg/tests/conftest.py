"""
Root conftest.py — shared fixtures for all test tiers.

Fixtures defined here are automatically available to every test file
without needing an import.
"""

import os
import sys
import pytest
from hypothesis import settings

# Ensure the project root is on sys.path so 'triples' and 'triple_lab' are importable
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)


@pytest.fixture(autouse=True)
def reset_globals():
    """Clear module-level caches between tests to prevent cross-contamination."""
    from triples.config import _config_cache
    from triples.herglotz import clear_cache

    _config_cache.clear()
    clear_cache()
    yield


@pytest.fixture
def corpus_dir():
    """Return the path to the bundled corpus/ directory."""
    return os.path.join(PROJECT_ROOT, "corpus")


@pytest.fixture
def grid():
    """The standard 20-point grid."""
    from triples.grid import standard_grid

    return standard_grid()


@pytest.fixture
def small_grid():
    """A handful of points for the slower quadrature-backed checks."""
    return (1j, 0.5 + 0.5j, -1 + 2j, 0.3 + 0.1j)


@pytest.fixture
def half_line_triple():
    """4/π on (1, ∞) with κ = 0.3."""
    from triples.measure import interval_density, normalize
    from triples.transform import ModelTriple

    return ModelTriple(normalize(interval_density(1.0, float("inf"), 4 / 3.141592653589793)), 0.3)


# Property suites: seeded by default; HYPOTHESIS_PROFILE=acceptance runs 1000 cases per property
settings.register_profile("default", max_examples=200, derandomize=True, deadline=None)
settings.register_profile("acceptance", max_examples=1000, derandomize=True, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))
