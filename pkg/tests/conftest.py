import numpy as np
import pytest

import kirchhoff4 as k4


@pytest.fixture(scope="session")
def spectral64():
    return k4.build_grid(64, "spectral-even")


@pytest.fixture(scope="session")
def spectral32():
    return k4.build_grid(32, "spectral-even")


@pytest.fixture(scope="session")
def fd400():
    return k4.build_grid(400, "uniform-fd")


@pytest.fixture(scope="session")
def params_cp2():
    """Concrete power coefficient: exercises the exponential regime."""
    return k4.default_params(cp=2.0)


@pytest.fixture(scope="session")
def search_default():
    return k4.SearchConfig(starts=8, max_iter=300, tol=1e-6, seed=1)


@pytest.fixture(scope="session")
def resolved_default(spectral64, params_cp2, search_default):
    """Default configuration: cp fixed at 1.1 x its admissibility threshold."""
    params, aux, threshold = k4.resolve_auto_cp(spectral64, params_cp2, search_default)
    return params, aux, threshold


@pytest.fixture(scope="session")
def ground_default(spectral64, resolved_default, search_default):
    params, aux, _ = resolved_default
    return k4.ground_state(spectral64, params, search_default, extra_starts=(aux.w_p,))


def unit_profile(grid, beta, seed):
    u = k4.random_clamped_profile(grid, np.random.default_rng(seed))
    return u.scaled(1.0 / k4.w_norm(u, beta))
