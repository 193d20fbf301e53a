"""Shared fixtures: standard geometries and solved family charts.

The charts are expensive (hundreds of HYM solves), so they are built once
per session and shared between the module tests and the acceptance suite.
"""

import numpy as np
import pytest

from higgslab.geometry import TorusGeometry
from higgslab.scenarios import BUILTIN, build_chart, validate


@pytest.fixture(scope="session")
def unit_torus():
    """Volume-one torus: L = 1, M = 1/2, g = 1."""
    return TorusGeometry(1, [(1.0, 0.5)], [[1.0]], 32)


@pytest.fixture(scope="session")
def torus_n2():
    metric = np.array([[1.3, 0.2 + 0.1j], [0.2 - 0.1j, 0.9]])
    return TorusGeometry(2, [(1.0, 0.7), (0.9, 1.1)], metric, 16)


@pytest.fixture()
def rng():
    # fresh deterministic stream per test keeps them order-independent
    return np.random.default_rng(np.random.Philox(20260809))


@pytest.fixture(scope="session")
def chart_rank1(unit_torus):
    scn = validate(BUILTIN["rank1-tstar-jacobian"])
    return scn, build_chart(scn)


@pytest.fixture(scope="session")
def chart_rank2(unit_torus):
    scn = validate(BUILTIN["rank2-normal-n1"])
    return scn, build_chart(scn)


@pytest.fixture(scope="session")
def chart_twisted():
    scn = validate(BUILTIN["rank1-twisted-deg1"])
    return scn, build_chart(scn)


@pytest.fixture(scope="session")
def chart_n2():
    scn = validate(BUILTIN["rank1-n2"])
    return scn, build_chart(scn)
