import time

import numpy as np
import pytest

from outflow import AngularGrid, FluidParams, RadialGrid, solve_steady
from outflow.evolve_axi import AxiRunConfig, run_axi_stability
from outflow.evolve_sym import SymRunConfig, run_sym_stability


@pytest.fixture(scope="session")
def acc_params():
    return FluidParams(gamma=1.4, k_pressure=1.0, mu=1.0, lam=0.0,
                       rho_plus=1.0, u_b=-0.05, dim_n=3)


@pytest.fixture(scope="session")
def acc_profile(acc_params):
    """High-resolution stationary profile of the acceptance configuration."""
    grid = RadialGrid.geometric(200.0, 2048)
    return solve_steady(acc_params, grid, tol=1e-8)


@pytest.fixture(scope="session")
def run_profile(acc_params):
    """Evolution-scale profile: 1024 uniform nodes for explicit stepping."""
    grid = RadialGrid.uniform(100.0, 1023)
    return solve_steady(acc_params, grid, tol=1e-8)


@pytest.fixture(scope="session")
def small_profile(acc_params):
    grid = RadialGrid.uniform(20.0, 128)
    return solve_steady(acc_params, grid, tol=1e-8)


@pytest.fixture(scope="session")
def axi_profile(acc_params):
    """128 radial nodes for the 128 x 32 axisymmetric acceptance run."""
    grid = RadialGrid.uniform(20.0, 127)
    return solve_steady(acc_params, grid, tol=1e-8)


@pytest.fixture(scope="session")
def sym_acceptance_run(run_profile, acc_params):
    cfg = SymRunConfig(t_end=200.0, amplitude=0.02, support=(1.5, 3.0),
                       output_every=250, decay_target=10.0, reform_every=10)
    t0 = time.time()
    res = run_sym_stability(run_profile, acc_params, cfg)
    return res, time.time() - t0


@pytest.fixture(scope="session")
def axi_acceptance_run(axi_profile, acc_params):
    agrid = AngularGrid(n_cells=32)
    cfg = AxiRunConfig(t_end=200.0, amplitude=0.02, support=(1.5, 3.0),
                       mode_ell=1, output_every=400, decay_target=5.0,
                       reform_every=10)
    t0 = time.time()
    res = run_axi_stability(axi_profile, acc_params, agrid, cfg)
    return res, time.time() - t0


def assert_close(a, b, tol, label=""):
    gap = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    assert gap <= tol, f"{label}: |diff| = {gap:.3e} > {tol:g}"
