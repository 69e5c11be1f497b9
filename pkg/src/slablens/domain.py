"""Periodic slab geometry, admissible material sets, and design fields.

The computational cell is one period S x (-b, 0) with S = R/2piZ.  Designs
are piecewise-constant complex permittivities rho on a uniform nx-by-ny
cell grid; nodes are bilinear FEM degrees of freedom, periodic in x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "AdmissibleBounds",
    "DesignField",
    "project_to_admissible",
    "symmetrize_x",
    "initial_design",
    "save_design",
    "load_design",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on one period: nx cells across, ny cells deep.

    Nodes are indexed (i, j) with i in [0, nx) periodic and j in [0, ny]
    from the bottom boundary Gamma_b (y = -b) up to Gamma_0 (y = 0);
    the flat node index is j*nx + i.  Cell (i, j) spans
    [i*hx, (i+1)*hx] x [-b + j*hy, -b + (j+1)*hy].
    """

    nx: int
    ny: int
    b: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 2:
            raise ValueError("grid too coarse: need nx >= 4, ny >= 2")
        if self.b <= 0:
            raise ValueError("slab depth b must be positive")

    @property
    def hx(self) -> float:
        return 2.0 * np.pi / self.nx

    @property
    def hy(self) -> float:
        return self.b / self.ny

    @property
    def node_count(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def cell_count(self) -> int:
        return self.nx * self.ny

    def node_x(self) -> np.ndarray:
        return self.hx * np.arange(self.nx)

    def node_y(self) -> np.ndarray:
        return -self.b + self.hy * np.arange(self.ny + 1)

    def bottom_nodes(self) -> np.ndarray:
        return np.arange(self.nx)

    def top_nodes(self) -> np.ndarray:
        return np.arange(self.ny * self.nx, (self.ny + 1) * self.nx)

    def cell_corner_nodes(self) -> np.ndarray:
        """(cell_count, 4) array of flat node ids per cell.

        Local corner order (0,0), (1,0), (1,1), (0,1) counterclockwise,
        with x-periodic wraparound; cells are enumerated row-major, i
        fastest, j from the bottom.
        """
        jj, ii = np.meshgrid(np.arange(self.ny), np.arange(self.nx), indexing="ij")
        ii = ii.ravel()
        jj = jj.ravel()
        ip = (ii + 1) % self.nx
        return np.stack(
            [jj * self.nx + ii,
             jj * self.nx + ip,
             (jj + 1) * self.nx + ip,
             (jj + 1) * self.nx + ii],
            axis=1,
        )


@dataclass(frozen=True)
class AdmissibleBounds:
    """Box constraints for the design: rho_r in [rho_r0, rho_r1], rho_i in [rho_i0, rho_i1]."""

    rho_r0: float
    rho_r1: float
    rho_i0: float = 0.0
    rho_i1: float = 0.0

    def __post_init__(self):
        if not (0 < self.rho_r0 <= self.rho_r1):
            raise ValueError("need 0 < rho_r0 <= rho_r1")
        if not (0 <= self.rho_i0 <= self.rho_i1):
            raise ValueError("need 0 <= rho_i0 <= rho_i1")


@dataclass
class DesignField:
    """Piecewise-constant complex permittivity, one value per cell.

    values has shape (ny, nx): row j holds the cells between y-levels j
    and j+1 counted from the bottom.
    """

    grid: Grid
    bounds: AdmissibleBounds
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(
                f"design shape {self.values.shape} does not match grid "
                f"({self.grid.ny}, {self.grid.nx})"
            )

    def copy(self) -> "DesignField":
        return DesignField(self.grid, self.bounds, self.values.copy())

    def is_admissible(self, tol: float = 0.0) -> bool:
        r = self.values.real
        im = self.values.imag
        bd = self.bounds
        return bool(
            np.all(r >= bd.rho_r0 - tol) and np.all(r <= bd.rho_r1 + tol)
            and np.all(im >= bd.rho_i0 - tol) and np.all(im <= bd.rho_i1 + tol)
        )

    def is_symmetric(self, tol: float = 0.0) -> bool:
        m = self.values[:, ::-1]
        return bool(np.max(np.abs(self.values - m)) <= tol)


def project_to_admissible(design: DesignField) -> DesignField:
    """Componentwise clamp of Re/Im onto the admissible box. Idempotent."""
    bd = design.bounds
    r = np.clip(design.values.real, bd.rho_r0, bd.rho_r1)
    im = np.clip(design.values.imag, bd.rho_i0, bd.rho_i1)
    return DesignField(design.grid, bd, r + 1j * im)


def symmetrize_x(design: DesignField) -> DesignField:
    """Average the design with its mirror image about x = 0.

    Cell i reflects to cell nx-1-i under the periodic mirror; the result
    is exactly x-symmetric and the operation is idempotent.  Projection
    and symmetrization commute because the mirror is an isometry of the
    box constraints.
    """
    v = 0.5 * (design.values + design.values[:, ::-1])
    return DesignField(design.grid, design.bounds, v)


def _photonic_crystal_values(grid: Grid, rod_eps: complex, background_eps: complex,
                             rod_radius: float, pitch: float) -> np.ndarray:
    """Square lattice of circular rods rasterized by cell-center membership."""
    if pitch <= 0 or rod_radius < 0:
        raise ValueError("photonic_crystal needs pitch > 0 and rod_radius >= 0")
    xc = grid.hx * (np.arange(grid.nx) + 0.5)
    yc = -grid.b + grid.hy * (np.arange(grid.ny) + 0.5)
    # rod centers: x on multiples of pitch (x = 0 is a center, keeping the
    # raster x-symmetric), y rows centered inside the slab
    n_rows = max(1, int(np.floor(grid.b / pitch)))
    y0 = -grid.b / 2 + (n_rows - 1) * pitch / 2
    ycenters = y0 - pitch * np.arange(n_rows)
    # periodic distance of each cell-center x to the nearest lattice column
    dx = np.remainder(xc, pitch)
    dx = np.minimum(dx, pitch - dx)
    vals = np.full((grid.ny, grid.nx), background_eps, dtype=complex)
    for yc_rod in ycenters:
        dy = yc - yc_rod
        inside = (dx[None, :] ** 2 + dy[:, None] ** 2) <= rod_radius ** 2
        vals[inside] = rod_eps
    return vals


def initial_design(grid: Grid, bounds: AdmissibleBounds, kind: str,
                   params: tuple = ()) -> DesignField:
    """Construct a starting design of the given kind.

    kind 'uniform': params (c,) or (c_re, c_im); constant design.
    kind 'photonic_crystal': params (rod_eps, background_eps, rod_radius, pitch).
    kind 'random': params (seed,); iid uniform in the admissible box.

    The result is always x-symmetric and admissible.
    """
    if kind == "uniform":
        if len(params) not in (1, 2):
            raise ValueError("uniform init takes (value,) or (re, im)")
        c = float(params[0]) + 1j * (float(params[1]) if len(params) == 2 else bounds.rho_i0)
        vals = np.full((grid.ny, grid.nx), c, dtype=complex)
    elif kind == "photonic_crystal":
        if len(params) != 4:
            raise ValueError("photonic_crystal init takes (rod_eps, background_eps, rod_radius, pitch)")
        vals = _photonic_crystal_values(grid, complex(params[0]), complex(params[1]),
                                        float(params[2]), float(params[3]))
    elif kind == "random":
        seed = int(params[0]) if params else 0
        rng = np.random.default_rng(seed)
        r = rng.uniform(bounds.rho_r0, bounds.rho_r1, size=(grid.ny, grid.nx))
        im = rng.uniform(bounds.rho_i0, bounds.rho_i1, size=(grid.ny, grid.nx))
        vals = r + 1j * im
    else:
        raise ValueError(f"unknown initial design kind {kind!r}")
    design = DesignField(grid, bounds, vals)
    return project_to_admissible(symmetrize_x(design))


# ---------------------------------------------------------------------------
# Text serialization: single header line
#   nx ny b rho_r0 rho_r1 rho_i0 rho_i1
# then nx*ny lines "re im" in row-major cell order (j from the bottom, i
# fastest), all numbers at 17 significant digits so round-trips are exact.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_design(design: DesignField, path) -> None:
    bd = design.bounds
    g = design.grid
    lines = [" ".join([str(g.nx), str(g.ny), _fmt(g.b), _fmt(bd.rho_r0),
                       _fmt(bd.rho_r1), _fmt(bd.rho_i0), _fmt(bd.rho_i1)])]
    flat = design.values.reshape(-1)
    for v in flat:
        lines.append(f"{_fmt(v.real)} {_fmt(v.imag)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_design(path) -> DesignField:
    with open(path) as fh:
        tokens = fh.readline().split()
        if len(tokens) != 7:
            raise ValueError(f"bad design header in {path}: expected 7 fields")
        nx, ny = int(tokens[0]), int(tokens[1])
        b, r0, r1, i0, i1 = map(float, tokens[2:])
        vals = np.empty(nx * ny, dtype=complex)
        for k in range(nx * ny):
            parts = fh.readline().split()
            if len(parts) != 2:
                raise ValueError(f"bad design row {k} in {path}")
            vals[k] = float(parts[0]) + 1j * float(parts[1])
    grid = Grid(nx, ny, b)
    bounds = AdmissibleBounds(r0, r1, i0, i1)
    return DesignField(grid, bounds, vals.reshape(ny, nx))
