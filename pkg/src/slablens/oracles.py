"""Independent reference solutions for validating the solver chain.

Each function here deliberately avoids the finite element path: the
vacuum reference is the closed-form Floquet expansion of the incident
field, the layered reference is a per-mode 1-D transfer-matrix solve,
and the point-source field is a direct Sommerfeld integral evaluated by
adaptive quadrature.  Agreement with these is the correctness evidence
for the assembled solver.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .domain import Grid
from .numerics import beta_array
from .source import ModalTrace, incident_dirichlet_trace

__all__ = ["vacuum_field", "vacuum_bottom_trace", "layered_reference",
           "sommerfeld_point_field"]


def vacuum_field(grid: Grid, omega: float, h: float, alpha: float,
                 n_trunc: int) -> np.ndarray:
    """Exact nodal field for rho = 1: the incident expansion continued
    through the slab.

    The physical field u(x, y) = sum_n f_n e^{i(n+alpha)x} e^{-i beta_n y}
    for y <= 0 satisfies the radiation conditions on both artificial
    boundaries, so the scattered part vanishes identically.  Nodal values
    are those of the periodic factor u e^{-i alpha x} (the solver's
    unknown), hence the e^{i n x} phases.
    """
    f = incident_dirichlet_trace(omega, h, alpha, n_trunc)
    beta = beta_array(f.ns + alpha, omega)
    x = grid.node_x()
    y = grid.node_y()
    phase_x = np.exp(1j * np.outer(x, f.ns))
    decay_y = np.exp(-1j * np.outer(y, beta))
    return ((decay_y * f.coeffs) @ phase_x.T).reshape(-1)


def vacuum_bottom_trace(omega: float, h: float, b: float, alpha: float,
                        n_trunc: int) -> ModalTrace:
    """Trace of the vacuum field on Gamma_b: f_n e^{i beta_n b}."""
    f = incident_dirichlet_trace(omega, h, alpha, n_trunc)
    beta = beta_array(f.ns + alpha, omega)
    return ModalTrace(alpha, n_trunc, f.coeffs * np.exp(1j * beta * b))


def _layer_matrix(gamma_sq: complex, d: float) -> np.ndarray:
    """Transfer matrix of (u, u') across one homogeneous layer.

    Entries are even functions of gamma, so the square-root branch is
    immaterial; the gamma -> 0 limit is handled by the sinc series.
    """
    gamma = np.sqrt(complex(gamma_sq))
    z = gamma * d
    c = np.cos(z)
    if abs(z) < 1e-8:
        s = d * (1.0 - z * z / 6.0)
    else:
        s = np.sin(z) / gamma
    return np.array([[c, s], [-gamma_sq * s, c]], dtype=complex)


def layered_reference(rho_rows: np.ndarray, hy: float, omega: float,
                      alpha: float, g_trace: ModalTrace):
    """Per-mode solve of the x-invariant layered slab.

    For rho depending on y only, modes decouple: each coefficient obeys
    c'' + (omega^2 rho(y) - (n+alpha)^2) c = 0 through the layers, with
    the outgoing conditions c' = -i beta c at the bottom and
    c' - i beta c = 2 g_n at the top.  Returns (top_coeffs, bottom_coeffs)
    aligned with g_trace.ns.

    :param rho_rows: layer densities from the bottom layer up, each of
        thickness hy.
    """
    rho_rows = np.asarray(rho_rows, dtype=complex)
    xi = g_trace.ns + alpha
    beta = beta_array(xi, omega)
    top = np.empty_like(g_trace.coeffs)
    bot = np.empty_like(g_trace.coeffs)
    for m, x in enumerate(xi):
        t = np.eye(2, dtype=complex)
        for rho in rho_rows:
            gamma_sq = omega * omega * rho - x * x
            t = _layer_matrix(gamma_sq, hy) @ t
        state_b = np.array([1.0, -1j * beta[m]], dtype=complex)
        p, q = t @ state_b
        denom = q - 1j * beta[m] * p
        c_bottom = 2.0 * g_trace.coeffs[m] / denom
        bot[m] = c_bottom
        top[m] = p * c_bottom
    return top, bot


def sommerfeld_point_field(omega: float, dx: float, dy: float) -> complex:
    """Field of the free 2-D point source at horizontal offset dx and
    vertical separation dy > 0, in the normalization of the incident
    traces: (1/pi) integral e^{i(xi dx + beta(xi) dy)} / beta(xi) dxi.

    Evaluated by splitting at |xi| = omega and substituting xi =
    omega sin(theta) on the propagating part and xi = omega sqrt(1+s^2)
    on each evanescent tail, which makes both integrands smooth and the
    tails exponentially damped.  Equals the outgoing cylindrical wave
    H0^(1)(omega sqrt(dx^2 + dy^2)).
    """
    if dy <= 0:
        raise ValueError("vertical separation must be positive")

    def prop_re(th):
        return np.cos(omega * (dx * np.sin(th) + dy * np.cos(th)))

    def prop_im(th):
        return np.sin(omega * (dx * np.sin(th) + dy * np.cos(th)))

    def evan(s):
        return (np.cos(omega * dx * np.sqrt(1.0 + s * s))
                * np.exp(-omega * dy * s) / np.sqrt(1.0 + s * s))

    re, _ = quad(prop_re, -np.pi / 2, np.pi / 2, limit=400, epsabs=1e-13,
                 epsrel=1e-13)
    im, _ = quad(prop_im, -np.pi / 2, np.pi / 2, limit=400, epsabs=1e-13,
                 epsrel=1e-13)
    tail, _ = quad(evan, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-13)
    return (re + 1j * im - 2j * tail) / np.pi
