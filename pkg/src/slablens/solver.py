"""Bilinear FEM discretization of the quasi-periodic Helmholtz problem.

For each Floquet parameter alpha the variational problem is

  a(u,v) = int grad u . grad conj(v) - w^2 int rho u conj(v)
         + alpha^2 int u conj(v) - 2 i alpha int (d_x u) conj(v)
         - int_G0 (T_a u) conj(v) - int_Gb (T_a u) conj(v)
       = 2 int_G0 g_a conj(v)

on one period, periodic in x, with the dense DtN blocks closing both
horizontal boundaries.  Elements are bilinear on the uniform rectangle
grid; all alpha-dependent element integrals are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import DesignField, Grid
from .dtn import DtnMatrix
from .source import ModalTrace

__all__ = [
    "SolverError",
    "AssembledSystem",
    "FloquetSolution",
    "element_matrices",
    "assemble",
    "solve_forward",
    "extract_trace",
    "save_field",
    "load_field",
]

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """Factorization failure or unacceptably large linear-solve residual."""


def element_matrices(hx: float, hy: float):
    """Exact 4x4 element matrices on an hx-by-hy rectangle.

    Local corner order (0,0), (1,0), (1,1), (0,1).  Returns (K, M, Dx)
    with K the Laplace stiffness, M the mass, and Dx[m, k] the
    first-derivative coupling int (d_x phi_k) phi_m.  The assembled global
    Dx is exactly antisymmetric by x-periodicity, which keeps the
    -2 i alpha term Hermitian.
    """
    K = (hy / (6 * hx)) * np.array(
        [[2, -2, -1, 1], [-2, 2, 1, -1], [-1, 1, 2, -2], [1, -1, -2, 2]], float
    ) + (hx / (6 * hy)) * np.array(
        [[2, 1, -1, -2], [1, 2, -2, -1], [-1, -2, 2, 1], [-2, -1, 1, 2]], float
    )
    M = (hx * hy / 36.0) * np.array(
        [[4, 2, 1, 2], [2, 4, 2, 1], [1, 2, 4, 2], [2, 1, 2, 4]], float
    )
    # tensor product of 1-D factors: S1[p,q] = int A_p' A_q, M1[p,q] = int A_p A_q
    s1 = np.array([[-0.5, -0.5], [0.5, 0.5]])
    m1 = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
    loc = [(0, 0), (1, 0), (1, 1), (0, 1)]
    Dx = np.zeros((4, 4))
    for m, (mx, my) in enumerate(loc):
        for k, (kx, ky) in enumerate(loc):
            Dx[m, k] = hy * s1[kx, mx] * m1[ky, my]
    return K, M, Dx


def _assemble_volume(grid: Grid, cell_values: np.ndarray, elem: np.ndarray) -> sp.csc_matrix:
    """Sum of elem scaled per cell by cell_values over the whole grid."""
    corners = grid.cell_corner_nodes()
    vals = cell_values.reshape(-1)[:, None, None] * elem[None, :, :]
    rows = np.repeat(corners, 4, axis=1).ravel()
    cols = np.tile(corners, (1, 4)).ravel()
    n = grid.node_count
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsc()


def mass_matrix(grid: Grid, cell_weights=None) -> sp.csc_matrix:
    """Consistent global mass matrix, optionally weighted per cell."""
    _, M, _ = element_matrices(grid.hx, grid.hy)
    w = np.ones(grid.cell_count) if cell_weights is None else np.asarray(cell_weights)
    return _assemble_volume(grid, w.astype(complex), M.astype(complex))


def stiffness_matrix(grid: Grid) -> sp.csc_matrix:
    K, _, _ = element_matrices(grid.hx, grid.hy)
    return _assemble_volume(grid, np.ones(grid.cell_count, dtype=complex), K.astype(complex))


def l2_norm(grid: Grid, values: np.ndarray) -> float:
    m = mass_matrix(grid)
    return float(np.sqrt(np.real(np.conj(values) @ (m @ values))))


def h1_norm(grid: Grid, values: np.ndarray) -> float:
    g = mass_matrix(grid) + stiffness_matrix(grid)
    return float(np.sqrt(np.real(np.conj(values) @ (g @ values))))


@dataclass
class AssembledSystem:
    """One factorizable linear system A u = rhs at fixed alpha."""

    alpha: float
    omega: float
    grid: Grid
    matrix: sp.csc_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    dtn_pair: tuple = field(repr=False)
    _lu: object = field(default=None, repr=False, compare=False)

    def factor(self):
        """Sparse LU of the full system; cached and reused for the adjoint
        solve (trans='H') at the same alpha."""
        if self._lu is None:
            try:
                self._lu = splu(self.matrix)
            except RuntimeError as exc:  # singular factorization
                raise SolverError(f"factorization failed at alpha={self.alpha}: {exc}") from exc
        return self._lu

    def solve(self, rhs: np.ndarray, trans: str = "N") -> np.ndarray:
        return self.factor().solve(rhs, trans=trans)


def assemble(design: DesignField, alpha: float, omega: float,
             dtn_pair: tuple, g_trace: ModalTrace) -> AssembledSystem:
    """Assemble the discrete system for one alpha.

    :param dtn_pair: (Gamma_0 block, Gamma_b block); normally two
        references to the same forward-flavor DtnMatrix.
    :param g_trace: modal coefficients of g_alpha on Gamma_0 driving the
        right side b(v) = 2 int g conj(v).
    """
    grid = design.grid
    dtn_top, dtn_bot = dtn_pair
    for d in (dtn_top, dtn_bot):
        if d.nx != grid.nx:
            raise ValueError("DtN block size does not match the grid")
    if g_trace.n_trunc != dtn_top.n_trunc:
        raise ValueError("g trace truncation does not match the DtN block")
    K, M, Dx = element_matrices(grid.hx, grid.hy)
    ones = np.ones(grid.cell_count, dtype=complex)
    elem = (K + alpha * alpha * M - 2j * alpha * Dx).astype(complex)
    A = _assemble_volume(grid, ones, elem)
    A = A - (omega * omega) * _assemble_volume(grid, design.values, M.astype(complex))
    # dense transparent-boundary blocks, quadratic form scaled by 2 pi
    top = grid.top_nodes()
    bot = grid.bottom_nodes()
    n = grid.node_count
    blocks = []
    for nodes, d in ((top, dtn_top), (bot, dtn_bot)):
        r = np.repeat(nodes, grid.nx)
        c = np.tile(nodes, grid.nx)
        blocks.append(sp.coo_matrix(((-2 * np.pi) * d.matrix.ravel(), (r, c)), shape=(n, n)))
    A = (A + blocks[0] + blocks[1]).tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[top] = 4.0 * np.pi * (dtn_top.e_matrix.conj().T @ g_trace.coeffs)
    return AssembledSystem(alpha, omega, grid, A, rhs, (dtn_top, dtn_bot))


@dataclass
class FloquetSolution:
    """Nodal solution of one alpha problem."""

    alpha: float
    omega: float
    grid: Grid
    values: np.ndarray = field(repr=False)
    design: DesignField = field(repr=False, default=None)

    def on_grid(self) -> np.ndarray:
        """(ny+1, nx) view, row j from the bottom boundary."""
        return self.values.reshape(self.grid.ny + 1, self.grid.nx)


def solve_forward(system: AssembledSystem, design: DesignField = None) -> FloquetSolution:
    """Direct solve with residual verification."""
    u = system.solve(system.rhs)
    if not np.all(np.isfinite(u)):
        raise SolverError(f"non-finite solution at alpha={system.alpha}")
    denom = np.linalg.norm(system.rhs)
    resid = np.linalg.norm(system.matrix @ u - system.rhs) / denom if denom > 0 else 0.0
    if resid > RESIDUAL_TOL:
        raise SolverError(
            f"linear solve residual {resid:.3e} above {RESIDUAL_TOL} at alpha={system.alpha}"
        )
    return FloquetSolution(system.alpha, system.omega, system.grid, u, design)


def extract_trace(solution: FloquetSolution, which: str,
                  dtn: DtnMatrix = None, n_trunc: int = None) -> ModalTrace:
    """Fourier coefficients of the solution's piecewise-linear boundary
    trace, via the exact hat transform.

    :param which: 'top' (Gamma_0) or 'bottom' (Gamma_b).
    """
    grid = solution.grid
    if which == "top":
        nodal = solution.values[grid.top_nodes()]
    elif which == "bottom":
        nodal = solution.values[grid.bottom_nodes()]
    else:
        raise ValueError("which must be 'top' or 'bottom'")
    if dtn is not None:
        e = dtn.e_matrix
        n_tr = dtn.n_trunc
    else:
        from .dtn import hat_transform_matrix
        if n_trunc is None:
            raise ValueError("need dtn or n_trunc to fix the truncation")
        e = hat_transform_matrix(grid.nx, n_trunc)
        n_tr = n_trunc
    return ModalTrace(solution.alpha, n_tr, e @ nodal)


def save_field(solution: FloquetSolution, path, j_value: float = None) -> None:
    """Text dump: 'nx ny' header, metadata line, then nodal 're im' rows
    (j from the bottom, i fastest)."""
    grid = solution.grid
    jtxt = format(j_value, ".17g") if j_value is not None else "na"
    lines = [
        f"{grid.nx} {grid.ny}",
        f"alpha={format(solution.alpha, '.17g')} omega={format(solution.omega, '.17g')} j={jtxt}",
    ]
    for v in solution.values:
        lines.append(f"{format(v.real, '.17g')} {format(v.imag, '.17g')}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path, b: float = None) -> FloquetSolution:
    """Inverse of save_field; b (slab depth) is not stored in the dump, so
    pass it to rebuild the grid, else a unit-depth placeholder is used."""
    with open(path) as fh:
        nx, ny = map(int, fh.readline().split())
        meta = dict(tok.split("=") for tok in fh.readline().split())
        vals = np.empty(nx * (ny + 1), dtype=complex)
        for k in range(vals.size):
            re, im = map(float, fh.readline().split())
            vals[k] = re + 1j * im
    grid = Grid(nx, ny, b if b is not None else 1.0)
    return FloquetSolution(float(meta["alpha"]), float(meta["omega"]), grid, vals)
