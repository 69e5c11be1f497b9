import numpy as np
import pytest

from slablens import (AdmissibleBounds, DesignField, Grid, build_setup,
                      default_n_trunc, make_quadrature)


def make_symmetric_design(grid, bounds, seed, lossy=False):
    """Random admissible design, x-symmetric, strictly inside the box."""
    rng = np.random.default_rng(seed)
    lo, hi = bounds.rho_r0, bounds.rho_r1
    pad = 0.05 * (hi - lo)
    re = rng.uniform(lo + pad, hi - pad, size=(grid.ny, grid.nx))
    if lossy and bounds.rho_i1 > bounds.rho_i0:
        ilo, ihi = bounds.rho_i0, bounds.rho_i1
        ipad = 0.05 * (ihi - ilo)
        im = rng.uniform(ilo + ipad, ihi - ipad, size=(grid.ny, grid.nx))
    else:
        im = np.full((grid.ny, grid.nx), bounds.rho_i0)
    vals = re + 1j * im
    vals = 0.5 * (vals + vals[:, ::-1])
    return DesignField(grid, bounds, vals)


def make_symmetric_direction(grid, seed, complex_part=True):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((grid.ny, grid.nx)).astype(complex)
    if complex_part:
        d = d + 1j * rng.standard_normal((grid.ny, grid.nx))
    return 0.5 * (d + d[:, ::-1])


@pytest.fixture(scope="session")
def small_setup():
    """16x12 grid, two quadrature points; cheap enough for sweeps in tests."""
    grid = Grid(16, 12, np.pi)
    omega = 1.0
    n_trunc = default_n_trunc(omega, grid.nx)
    quadrature = make_quadrature(2, omega, n_trunc)
    return build_setup(grid, omega, 2.5, 2.5, quadrature, n_trunc)


@pytest.fixture(scope="session")
def small_bounds():
    return AdmissibleBounds(1.0, 12.0, 0.0, 1.0)
