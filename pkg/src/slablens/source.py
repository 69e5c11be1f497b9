"""Incident point-source data and focusing targets as modal traces.

A point source at (0, h) above the slab radiates u_i = H0^(1)(omega*r).
Its Floquet components on the top boundary y = 0 have closed-form
coefficients; the focusing target on the bottom boundary y = -b is the
trace of the conjugate-phase field H0^(2) of a mirror image point at
(0, -(b + h1)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import WoodAnomalyError, beta_array, where_wood

__all__ = [
    "ModalTrace",
    "incident_dirichlet_trace",
    "incident_neumann_trace",
    "target_dirichlet_trace",
    "synthesize",
    "synthesize_fold",
    "trace_norm",
    "save_trace",
    "load_trace",
]


@dataclass
class ModalTrace:
    """Fourier data of a quasi-periodic boundary trace at one alpha.

    The trace is e^{i alpha x} * sum_n coeffs[n] e^{inx} with modes
    n = -n_trunc .. n_trunc stored in ascending order.
    """

    alpha: float
    n_trunc: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2 * self.n_trunc + 1,):
            raise ValueError("coeffs must have length 2*n_trunc + 1")

    @property
    def ns(self) -> np.ndarray:
        return np.arange(-self.n_trunc, self.n_trunc + 1)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.n_trunc:
            raise IndexError(f"mode {n} outside truncation {self.n_trunc}")
        return complex(self.coeffs[n + self.n_trunc])


def _checked_beta(alpha: float, omega: float, n_trunc: int, what: str) -> np.ndarray:
    ns = np.arange(-n_trunc, n_trunc + 1)
    xi = ns + alpha
    wood = where_wood(xi, omega)
    if np.any(wood):
        bad = ns[wood][0]
        raise WoodAnomalyError(
            f"{what}: mode n={bad} at alpha={alpha} sits on a Wood anomaly"
        )
    return beta_array(xi, omega)


def incident_dirichlet_trace(omega: float, h: float, alpha: float,
                             n_trunc: int) -> ModalTrace:
    """Trace of the incident field on Gamma_0 for a source at height h > 0.

    coeff(n) = (1/pi) e^{i beta_n h} / beta_n; evanescent entries decay
    like e^{-|beta_n| h}.
    """
    if h <= 0:
        raise ValueError("source height h must be positive")
    bet = _checked_beta(alpha, omega, n_trunc, "incident_dirichlet_trace")
    coeffs = np.exp(1j * bet * h) / (np.pi * bet)
    return ModalTrace(alpha, n_trunc, coeffs)


def incident_neumann_trace(omega: float, h: float, alpha: float,
                           n_trunc: int) -> ModalTrace:
    """Coefficients of g_alpha = (d/dy - T_alpha)/2 applied to the incident
    field on Gamma_0: coeff(n) = (-i/pi) e^{i beta_n h}.

    Satisfies coeff_g(n) = -i beta_n coeff_f(n); bounded at band edges.
    """
    if h <= 0:
        raise ValueError("source height h must be positive")
    ns = np.arange(-n_trunc, n_trunc + 1)
    bet = beta_array(ns + alpha, omega)
    coeffs = (-1j / np.pi) * np.exp(1j * bet * h)
    return ModalTrace(alpha, n_trunc, coeffs)


def target_dirichlet_trace(omega: float, h1: float, alpha: float,
                           n_trunc: int) -> ModalTrace:
    """Focusing target on Gamma_b: trace of H0^(2) from an image point a
    distance h1 below the slab.

    coeff(n) = (1/pi) e^{-i conj(beta_n) h1} / conj(beta_n).  Propagating
    modes carry conjugate phase (converging toward the image point);
    evanescent modes decay like e^{-|beta_n| h1}.
    """
    if h1 <= 0:
        raise ValueError("image depth h1 must be positive")
    bet = _checked_beta(alpha, omega, n_trunc, "target_dirichlet_trace")
    bc = np.conj(bet)
    coeffs = np.exp(-1j * bc * h1) / (np.pi * bc)
    return ModalTrace(alpha, n_trunc, coeffs)


def synthesize(trace: ModalTrace, x, quasi_phase: bool = True) -> np.ndarray:
    """Evaluate the trace at points x.

    With quasi_phase, returns the physical quasi-periodic trace
    sum_n coeff e^{i(n+alpha)x}; otherwise just the periodic part.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    exponents = trace.ns + (trace.alpha if quasi_phase else 0.0)
    return np.exp(1j * np.outer(x, exponents)) @ trace.coeffs


def synthesize_fold(traces, quadrature, x) -> np.ndarray:
    """Approximate the full-line field sum over alpha in [-1/2, 1/2].

    Uses the x -> -x mirror identity for symmetric problems to fold the
    negative alphas: u(x) = sum_k 2 w_k sum_n coeff cos((n + alpha_k) x),
    which is exact for data even in x (the point source on the axis).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    acc = np.zeros(x.shape, dtype=complex)
    for trace, wk in zip(traces, quadrature.weights):
        exponents = trace.ns + trace.alpha
        acc += quadrature.symmetry_factor * wk * (
            np.cos(np.outer(x, exponents)) @ trace.coeffs
        )
    return acc


def trace_norm(trace: ModalTrace) -> float:
    """L2 norm over one period: sqrt(2 pi sum |coeff|^2) by Parseval."""
    return float(np.sqrt(2.0 * np.pi * np.sum(np.abs(trace.coeffs) ** 2)))


def save_trace(trace: ModalTrace, path) -> None:
    """Text format: header 'alpha n_trunc', then one 'n re im' line per mode."""
    lines = [f"{format(trace.alpha, '.17g')} {trace.n_trunc}"]
    for n, c in zip(trace.ns, trace.coeffs):
        lines.append(f"{n} {format(c.real, '.17g')} {format(c.imag, '.17g')}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trace(path) -> ModalTrace:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise ValueError(f"bad trace header in {path}")
        alpha, n_trunc = float(head[0]), int(head[1])
        coeffs = np.zeros(2 * n_trunc + 1, dtype=complex)
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            n = int(parts[0])
            coeffs[n + n_trunc] = float(parts[1]) + 1j * float(parts[2])
    return ModalTrace(alpha, n_trunc, coeffs)
