"""Adjoint solves and the objective gradient with respect to the design.

The discrete adjoint of the assembled system is its conjugate transpose,
so the forward factorization is reused (trans='H').  The gradient density
on each cell is

  G(cell) = sum_alpha 2 * weight * omega^2 * int_cell u_alpha conj(w_alpha),

the omega^2 factor following the consistent linearization of the volume
term; DJ(delta rho) = Re sum_cells delta_rho * G.  For x-symmetric
designs G is symmetrized over the mirror, which is exact for the
symmetric perturbations the optimizer takes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import DesignField
from .solver import AssembledSystem, FloquetSolution, element_matrices
from .source import ModalTrace

__all__ = ["GradientField", "solve_adjoint", "gradient", "directional_derivative",
           "fd_gradient_check"]


@dataclass
class GradientField:
    """Per-cell gradient integrals, shape (ny, nx) like the design."""

    grid: object
    values: np.ndarray = field(repr=False)
    quadrature: object = field(default=None, repr=False)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def solve_adjoint(system: AssembledSystem, psi: ModalTrace,
                  design: DesignField = None) -> FloquetSolution:
    """Solve the adjoint problem with residual load psi on Gamma_b.

    Variationally a*(w, v) = int_Gamma_b psi conj(v); the matrix is the
    conjugate transpose of the forward system (conjugated rho, adjoint
    DtN flavor), realized through the cached factorization.
    """
    grid = system.grid
    dtn_bot = system.dtn_pair[1]
    if psi.n_trunc != dtn_bot.n_trunc:
        raise ValueError("psi truncation does not match the system's DtN block")
    rhs = np.zeros(grid.node_count, dtype=complex)
    rhs[grid.bottom_nodes()] = 2.0 * np.pi * (dtn_bot.e_matrix.conj().T @ psi.coeffs)
    w = system.solve(rhs, trans="H")
    return FloquetSolution(system.alpha, system.omega, grid, w, design)


def _cell_products(grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """int_cell u conj(w) for every cell, exact for bilinear u, w."""
    _, M, _ = element_matrices(grid.hx, grid.hy)
    corners = grid.cell_corner_nodes()
    U = u[corners]
    W = w[corners]
    return np.einsum("cm,mk,ck->c", np.conj(W), M.astype(complex), U)


def gradient(design: DesignField, forward_solutions, adjoint_solutions,
             quadrature, omega: float = None) -> GradientField:
    """Accumulate the gradient field from paired forward/adjoint solves.

    Accepts FloquetSolution objects or raw nodal arrays; the alpha order
    must match the quadrature nodes.  The reduction is a fixed-order
    numpy sum, so results do not depend on how the solves were scheduled.
    """
    grid = design.grid
    if omega is None:
        omega = forward_solutions[0].omega
    per_alpha = []
    for k, wk in enumerate(quadrature.weights):
        u = getattr(forward_solutions[k], "values", forward_solutions[k])
        w = getattr(adjoint_solutions[k], "values", adjoint_solutions[k])
        scale = quadrature.symmetry_factor * wk * omega * omega
        per_alpha.append(scale * _cell_products(grid, u, w))
    g = np.sum(np.stack(per_alpha, axis=0), axis=0).reshape(grid.ny, grid.nx)
    g = 0.5 * (g + g[:, ::-1])
    return GradientField(grid, g, quadrature)


def directional_derivative(grad: GradientField, direction: np.ndarray) -> float:
    """DJ in the direction delta rho (per-cell constants): Re sum d * G."""
    return float(np.real(np.sum(np.asarray(direction) * grad.values)))


def fd_gradient_check(design: DesignField, direction: np.ndarray, step_sizes,
                      setup, jobs: int = 1) -> list:
    """Compare the adjoint directional derivative against central finite
    differences of J along delta rho.

    Returns one row per step: dict(t, fd, adjoint, rel_err).  The adjoint
    value is computed once at the base design; rel_err should shrink like
    O(t^2) until the solver precision floor.
    """
    from .objective import evaluate_J
    from .pipeline import gradient_sweep

    direction = np.asarray(direction, dtype=complex)
    records = gradient_sweep(design, setup, jobs=jobs)
    grad = gradient(design, [r.u for r in records], [r.w for r in records],
                    setup.quadrature, setup.omega)
    adj = directional_derivative(grad, direction)

    def j_at(values) -> float:
        trial = DesignField(design.grid, design.bounds, values)
        j, _ = evaluate_J(trial, setup.quadrature, setup.g_traces,
                          setup.q_traces, setup.omega,
                          dtn_blocks=setup.dtn_blocks, jobs=jobs)
        return j

    rows = []
    for t in step_sizes:
        jp = j_at(design.values + t * direction)
        jm = j_at(design.values - t * direction)
        fd = (jp - jm) / (2.0 * t)
        denom = max(abs(adj), 1e-300)
        rows.append({"t": float(t), "fd": fd, "adjoint": adj,
                     "rel_err": abs(fd - adj) / denom})
    return rows
