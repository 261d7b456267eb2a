import numpy as np
import pytest

from ewlab.elflow import ELParams, HopfJet, Trajectory, integrate_el
from ewlab.killing import GenusConstants, integrate_flow

EL_PARAMS = ELParams(1.0, 0.1)
EL_JET = HopfJet(0.4 + 0.2j, 0.1 - 0.3j, xi_im=0.05)


def make_constant_trajectory(q0: complex, length: float, n: int,
                             params=None) -> Trajectory:
    """Synthetic trajectory with constant q (a homogeneous potential)."""
    y = np.linspace(0.0, length, n + 1)
    z = np.zeros(n + 1, dtype=complex)
    return Trajectory(y, np.full(n + 1, q0, dtype=complex), z.copy(),
                      z.copy(), z.copy(), np.zeros(n + 1), y[1] - y[0],
                      params)


@pytest.fixture(scope="session")
def el_traj() -> Trajectory:
    """Generic genus-3 EL run with real lambda."""
    return integrate_el(EL_JET, EL_PARAMS, 10.0, 1e-3)


@pytest.fixture(scope="session")
def g1_traj() -> Trajectory:
    """Real elastic (genus-1) flow solution, started at a maximum."""
    return integrate_flow(1, 0.5, 0.0, 0.0, GenusConstants(c=0.25),
                          12.0, 1e-3)


@pytest.fixture(scope="session")
def g2_traj() -> Trajectory:
    """Hopf-type genus-2 solution q = kappa/4 + i/2 of the flow with
    d = 0 (real q', q'' keep the line form)."""
    return integrate_flow(2, 0.3 + 0.5j, 0.07, -0.12, GenusConstants(c=0.1),
                          12.0, 1e-3)


@pytest.fixture(scope="session")
def hopf_traj() -> Trajectory:
    """Homogeneous potential q = i/2 over one closing period pi."""
    return make_constant_trajectory(0.5j, np.pi, 4000)
