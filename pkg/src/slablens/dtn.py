"""Dirichlet-to-Neumann maps on the periodic boundary lines.

T_alpha u = sum_n i beta(n+alpha) u_n e^{inx} truncated to |n| <= n_trunc,
realized against the piecewise-linear trace basis as the dense quadratic
form matrix E^H D E, where E holds the exact hat-function Fourier
coefficients and D the modal multipliers.  The adjoint flavor carries the
multipliers -i conj(beta), i.e. the conjugate transpose of the forward map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .numerics import WoodAnomalyError, beta_array, hat_trace_fourier, where_wood

__all__ = ["DtnMatrix", "build_dtn", "default_n_trunc", "hat_transform_matrix"]


def default_n_trunc(omega: float, nx: int, extra: int = 20) -> int:
    """All propagating orders plus `extra` evanescent ones per side,
    capped at nx/2 - 1 to stay below the grid Nyquist mode."""
    n_prop = int(np.floor(omega + 0.5))
    return min(n_prop + extra, nx // 2 - 1)


def hat_transform_matrix(nx: int, n_trunc: int) -> np.ndarray:
    """(2*n_trunc+1, nx) map from nodal boundary values to Fourier
    coefficients of the piecewise-linear trace, modes -n_trunc..n_trunc."""
    ns = np.arange(-n_trunc, n_trunc + 1)
    js = np.arange(nx)
    return hat_trace_fourier(js[None, :], ns[:, None], nx)


@dataclass
class DtnMatrix:
    """Dense realization of the (possibly adjoint) DtN quadratic form.

    matrix[m, k] approximates (1/2pi) * integral (T phi_k) conj(phi_m);
    assembly scales by 2 pi.  multipliers holds the modal diagonal.
    """

    alpha: float
    omega: float
    n_trunc: int
    flavor: str
    matrix: np.ndarray = field(repr=False)
    e_matrix: np.ndarray = field(repr=False)
    multipliers: np.ndarray = field(repr=False)

    @property
    def nx(self) -> int:
        return self.matrix.shape[0]

    def apply_to_nodal(self, values: np.ndarray) -> np.ndarray:
        """Nodal action of the map: inverts the boundary mass matrix so a
        sampled mode e^{inx} returns ~ multiplier * e^{inx}.  Test hook."""
        nx = self.nx
        rhs = 2.0 * np.pi * (self.e_matrix.conj().T @ (self.multipliers * (self.e_matrix @ values)))
        return np.linalg.solve(_boundary_mass(nx), rhs)


def _boundary_mass(nx: int) -> np.ndarray:
    hx = 2.0 * np.pi / nx
    m = np.zeros((nx, nx))
    idx = np.arange(nx)
    m[idx, idx] = 2.0 * hx / 3.0
    m[idx, (idx + 1) % nx] = hx / 6.0
    m[idx, (idx - 1) % nx] = hx / 6.0
    return m


def build_dtn(nx: int, omega: float, alpha: float, n_trunc: int,
              flavor: str = "forward") -> DtnMatrix:
    """Assemble the dense DtN block for one boundary line.

    :param nx: number of boundary nodes (one per period column).
    :param flavor: 'forward' uses i*beta(n+alpha); 'adjoint' uses
        -i*conj(beta), the conjugate transpose of the forward map.
    """
    if flavor not in ("forward", "adjoint"):
        raise ValueError(f"unknown DtN flavor {flavor!r}")
    if n_trunc < ceil(omega) + 1:
        raise ValueError(
            f"n_trunc={n_trunc} too small: need >= ceil(omega)+1 = {ceil(omega)+1} "
            "so every propagating mode is included"
        )
    if n_trunc > nx // 2 - 1:
        raise ValueError(f"n_trunc={n_trunc} exceeds grid cap nx/2 - 1 = {nx//2 - 1}")
    ns = np.arange(-n_trunc, n_trunc + 1)
    xi = ns + alpha
    if np.any(where_wood(xi, omega)):
        bad = ns[where_wood(xi, omega)][0]
        raise WoodAnomalyError(f"mode n={bad} at alpha={alpha} sits on a Wood anomaly")
    bet = beta_array(xi, omega)
    mult = 1j * bet if flavor == "forward" else -1j * np.conj(bet)
    e = hat_transform_matrix(nx, n_trunc)
    matrix = e.conj().T @ (mult[:, None] * e)
    return DtnMatrix(alpha, omega, n_trunc, flavor, matrix, e, mult)
