"""Post-processing of solved designs.

Field reconstruction below the slab from the bottom traces, focal-spot
metrics (FWHM of |u|^2 on the image line, in wavelengths), evanescent
mode spectra and their overlap with the target, the discrete energy
balance, and the coercivity bound diagnostic for absorbing designs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from .numerics import beta_array
from .solver import (AssembledSystem, FloquetSolution, extract_trace,
                     mass_matrix, h1_norm, stiffness_matrix)
from .source import ModalTrace

__all__ = ["ImageMetrics", "EnergyBalance", "reconstruct_below", "focal_line",
           "spot_size", "evanescent_spectrum", "evanescent_overlap",
           "energy_balance", "coercivity_constant", "h1_bound",
           "write_metrics", "write_columns"]


@dataclass
class ImageMetrics:
    """Focal-spot measurement on the image line.

    spot_size_lambda is None when |u|^2 never falls to half maximum
    inside the window (unfocused field, not measurable).
    """

    spot_size_lambda: float
    peak_position: tuple
    peak_intensity: float
    x: np.ndarray = field(repr=False)
    cross_section: np.ndarray = field(repr=False)

    @property
    def measurable(self) -> bool:
        return self.spot_size_lambda is not None


@dataclass
class EnergyBalance:
    """Per-alpha flux accounting in modal units (beta |coeff|^2)."""

    incident: float
    reflected: float
    transmitted: float
    absorbed: float

    @property
    def residual(self) -> float:
        gap = self.incident - self.reflected - self.transmitted - self.absorbed
        return abs(gap) / max(abs(self.incident), 1e-300)


def reconstruct_below(traces, quadrature, omega: float, b: float,
                      x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Radiate the bottom traces downward: field on the (y, x) grid.

    Each mode continues as coeff * e^{-i beta (y+b)} * phase in x; the
    mirror fold over +/-alpha (valid for x-symmetric designs) turns the
    phase into cos((n+alpha)x), and evanescent modes decay as y drops.
    Only y <= -b is meaningful; points above the slab bottom are
    rejected.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y > -b + 1e-12):
        raise ValueError("reconstruction region must lie at or below y = -b")
    out = np.zeros((y.size, x.size), dtype=complex)
    for k, tr in enumerate(traces):
        xi = tr.ns + tr.alpha
        beta = beta_array(xi, omega)
        scale = quadrature.symmetry_factor * quadrature.weights[k]
        depth_factor = np.exp(-1j * np.outer(y + b, beta))
        phase = np.cos(np.outer(x, xi))
        out += scale * ((depth_factor * tr.coeffs) @ phase.T)
    return out


def focal_line(traces, quadrature, omega: float, b: float, h1: float,
               samples: int = 2048, periods: int = 1):
    """Sample the reconstruction on the image line y = -(b + h1).

    Returns (x, field_row); x spans `periods` periods centered on x = 0.
    """
    if samples < 512:
        raise ValueError("need at least 512 samples across the image line")
    half = periods * np.pi
    x = np.linspace(-half, half, samples, endpoint=False)
    row = reconstruct_below(traces, quadrature, omega, b, x,
                            np.array([-(b + h1)]))[0]
    return x, row


def spot_size(x: np.ndarray, fld: np.ndarray, omega: float,
              image_line_y: float = 0.0) -> ImageMetrics:
    """FWHM of |fld|^2 about its global peak, in wavelengths 2 pi/omega.

    Half-max crossings are located by linear interpolation on the
    sampled intensity.  A peak whose intensity never falls to half
    maximum on a side within the window is reported unmeasurable
    (spot_size_lambda None), never extrapolated.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 512:
        raise ValueError("spot measurement needs at least 512 samples")
    intensity = np.abs(np.asarray(fld)) ** 2
    ipk = int(np.argmax(intensity))
    peak = intensity[ipk]
    half = 0.5 * peak

    def cross(direction: int):
        i = ipk
        while 0 <= i + direction < x.size:
            j = i + direction
            if intensity[j] < half:
                t = (intensity[i] - half) / (intensity[i] - intensity[j])
                return x[i] + t * (x[j] - x[i])
            i = j
        return None

    left, right = cross(-1), cross(+1)
    lam = 2.0 * np.pi / omega
    width = None if left is None or right is None else (right - left) / lam
    return ImageMetrics(width, (float(x[ipk]), float(image_line_y)),
                        float(peak), x, intensity)


def evanescent_spectrum(trace: ModalTrace, omega: float) -> list:
    """(n, |coeff|) for the modes with |n + alpha| > omega."""
    xi = trace.ns + trace.alpha
    mask = xi * xi > omega * omega
    return [(int(n), float(abs(c)))
            for n, c in zip(trace.ns[mask], trace.coeffs[mask])]


def evanescent_overlap(traces, targets, omega: float) -> float:
    """Cosine similarity of the stacked evanescent magnitude vectors.

    1.0 means the achieved evanescent spectrum is proportional to the
    target's across all quadrature alphas; the quantity is scale
    invariant, so it isolates spectral shape from overall amplitude.
    """
    a_parts, b_parts = [], []
    for tr, tg in zip(traces, targets):
        xi = tr.ns + tr.alpha
        mask = xi * xi > omega * omega
        a_parts.append(np.abs(tr.coeffs[mask]))
        b_parts.append(np.abs(tg.coeffs[mask]))
    a = np.concatenate(a_parts)
    bvec = np.concatenate(b_parts)
    denom = np.linalg.norm(a) * np.linalg.norm(bvec)
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, bvec) / denom)


def energy_balance(solution: FloquetSolution, f_trace: ModalTrace) -> EnergyBalance:
    """Flux accounting for one alpha solve against its incident trace.

    incident carries, besides the propagating-mode flux of the source
    field, the near-field exchange -2 sum_ev |beta| Im(f conj(s)) between
    the evanescent source components and the scattered field; without it
    the balance only closes far from the source.  absorbed integrates
    omega^2 rho_i |u|^2 over the slab (element-exact), scaled by 1/(2 pi)
    to match the modal flux units.
    """
    if solution.design is None:
        raise ValueError("energy balance needs the solution's design")
    tr_top = extract_trace(solution, "top", n_trunc=f_trace.n_trunc)
    tr_bot = extract_trace(solution, "bottom", n_trunc=f_trace.n_trunc)
    s = tr_top.coeffs - f_trace.coeffs
    xi = f_trace.ns + f_trace.alpha
    beta = beta_array(xi, solution.omega)
    prop = beta.real > 0
    ev = ~prop
    f = f_trace.coeffs
    incident = float(np.sum(beta.real[prop] * np.abs(f[prop]) ** 2))
    incident -= 2.0 * float(np.sum(beta.imag[ev] * np.imag(f[ev] * np.conj(s[ev]))))
    reflected = float(np.sum(beta.real[prop] * np.abs(s[prop]) ** 2))
    transmitted = float(np.sum(beta.real[prop] * np.abs(tr_bot.coeffs[prop]) ** 2))
    grid = solution.grid
    rho_i = solution.design.values.imag.reshape(-1)
    m = mass_matrix(grid, cell_weights=rho_i)
    u = solution.values
    absorbed = solution.omega ** 2 * float(np.real(np.conj(u) @ (m @ u))) / (2.0 * np.pi)
    return EnergyBalance(incident, reflected, transmitted, absorbed)


def coercivity_constant(rho_i0: float, omega: float, rho_r1: float) -> float:
    """min(omega^2 rho_i0 / (4 (1 + rho_r1)), 1/4); needs absorption."""
    if rho_i0 <= 0:
        raise ValueError("coercivity constant requires rho_i0 > 0")
    return min(omega * omega * rho_i0 / (4.0 * (1.0 + rho_r1)), 0.25)


def h1_bound(system: AssembledSystem, u: np.ndarray, c: float):
    """Solution H1 norm against the a-priori bound ||rhs||_dual / c.

    The dual norm is taken in the discrete H1 inner product K + M:
    ||r||_dual = sqrt(r^H (K+M)^{-1} r).  Returns (h1_norm, bound).
    """
    grid = system.grid
    km = (stiffness_matrix(grid) + mass_matrix(grid)).tocsc()
    r = system.rhs
    z = splu(km).solve(r)
    dual = float(np.sqrt(np.real(np.conj(r) @ z)))
    return h1_norm(grid, u), dual / c


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_metrics(path, metrics: dict) -> None:
    """Plain-text `key value` summary, keys sorted for reproducibility."""
    with open(path, "w") as fh:
        for key in sorted(metrics):
            v = metrics[key]
            fh.write(f"{key} {v if isinstance(v, str) else _fmt(v)}\n")


def write_columns(path, header: str, columns) -> None:
    """Comma-separated columns with a single header line."""
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
