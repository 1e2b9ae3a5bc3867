import numpy as np
import pytest

from blockenc.block_encoding import Workspace
from circuit.ir import Register
from problem.plasma_model import PlasmaParams, make_grid


@pytest.fixture
def params():
    return PlasmaParams.default()


@pytest.fixture
def grid(params):
    return make_grid(params, 3, 2)


@pytest.fixture
def workspace():
    return Workspace.standard(3, 2)


@pytest.fixture
def small_params():
    """x_max=8, v_max=1: dx=1 on n_x=3 and dv=0.5 on n_v=2"""
    return PlasmaParams.default(x_max=8.0, v_max=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def register3():
    return Register('r', 3)
