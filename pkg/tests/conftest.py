"""Shared fixtures."""
import numpy as np
import pytest

from flow_topopt.fem.cases import CaseName, generate_case_mesh, structured_mesh
from flow_topopt.fem.mesh import Mesh
from flow_topopt.presets import phase_params


@pytest.fixture
def unit_square() -> Mesh:
    """8 x 8 right-triangle mesh of the unit square, walls everywhere"""
    return structured_mesh((0.0, 1.0), (0.0, 1.0), 8)


@pytest.fixture
def pipe_mesh() -> Mesh:
    return generate_case_mesh(CaseName.PIPE_BEND, 10)


@pytest.fixture
def pipe_params():
    return phase_params(CaseName.PIPE_BEND)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
