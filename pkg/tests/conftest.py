import pytest

from relorbit.core import PhysicalParams, make_potential
from relorbit.coulomb import existence_witness
from relorbit.dynamics import IntegratorConfig, integrate


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def coulomb_pot(params):
    return make_potential("coulomb", 1.0, params)


@pytest.fixture(scope="session")
def cm_pot(params):
    return make_potential("constant-momentum", 1.0, params)


@pytest.fixture(scope="session")
def bounded_traj(params, coulomb_pot):
    """Bounded Coulomb orbit (ell=2, h=-0.05) over 10^3 time units at tol 1e-12.

    Long enough for five radial periods; shared by the conservation,
    Runge-Lenz and cross-reduction tests.
    """
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    return integrate(s0, (0.0, 1000.0), coulomb_pot, params, IntegratorConfig())


@pytest.fixture(scope="session")
def family_half(params):
    from relorbit.bertrand import build_family

    return build_family(0.5, 1.0, 2.0, (0.4, 2.4), params)
