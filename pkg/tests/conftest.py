import numpy as np
import pytest

from cfmanip.core.contact_assembly import ContactJacobianBlock, LinearizedSystem, stack_contact_system
from cfmanip.scenarios.scenes import build_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def vertical_system():
    """Objet à un degré de liberté vertical : Q = 50, b = −0.0981, h = 0.1"""
    return LinearizedSystem(np.array([[50.0]]), np.array([-0.0981]), 0.1)


@pytest.fixture
def ground_contact():
    """Contact sol pour l'objet vertical : lignes tangentielles nulles, n_d = 4"""
    def make(phi=0.0, mu=0.5):
        block = ContactJacobianBlock(np.array([1.0]), np.zeros((4, 1)))
        normal = np.array([[0.0, 0.0, 1.0]])
        tangents = np.array([[[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]]])
        return stack_contact_system([block], [phi], [mu], n_v=1, normals=normal, tangents=tangents)
    return make


@pytest.fixture
def fingertip_scene():
    return build_scene('fingertips_box')


@pytest.fixture
def sliding_cube():
    return build_scene('sliding_cube')
