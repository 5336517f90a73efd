"""
Shared meshes and matrices for the test suite.
"""

import numpy as np
import pytest

from robin_insulation.core.assembly import assemble_operators
from robin_insulation.core.mesher import build_mesh
from robin_insulation.models.domain import DomainSpec


@pytest.fixture(scope="session")
def disk_mesh():
    return build_mesh(DomainSpec.disk(1.0, target_h=0.2))


@pytest.fixture(scope="session")
def disk_operators(disk_mesh):
    return assemble_operators(disk_mesh)


@pytest.fixture(scope="session")
def square_mesh():
    return build_mesh(DomainSpec.rectangle(1.0, 1.0, target_h=0.1))


@pytest.fixture(scope="session")
def square_operators(square_mesh):
    return assemble_operators(square_mesh)


@pytest.fixture(scope="session")
def hexagon_mesh():
    return build_mesh(DomainSpec.regular_polygon(6, 1.0, target_h=0.3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
