"""Image-mismatch objective over the Floquet parameter.

J(rho) = 1/2 integral_{-1/2}^{1/2} || F(rho, alpha) - q_alpha ||^2_{L2(Gamma_b)} d alpha,

approximated by a midpoint rule on the positive half interval with the
x-mirror symmetry supplying the factor 2.  F is the bottom trace of the
forward solution; norms are evaluated by Parseval on the modal
coefficients, consistent with the solver's trace truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import DesignField
from .dtn import build_dtn
from .pipeline import solve_alpha

__all__ = ["AlphaQuadrature", "make_quadrature", "evaluate_J", "reduce_records"]

WOOD_GUARD = 1e-8


@dataclass(frozen=True)
class AlphaQuadrature:
    """Nodes and weights on (0, 1/2]; symmetry_factor folds the mirrored
    negative half so that symmetry_factor * sum(weights) == 1."""

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    symmetry_factor: float = 2.0

    @property
    def count(self) -> int:
        return len(self.points)


def _wood_distance(alpha: float, omega: float, n_trunc: int) -> float:
    ns = np.arange(-n_trunc, n_trunc + 1)
    return float(np.min(np.abs((ns + alpha) ** 2 - omega * omega)))


def make_quadrature(count: int, omega: float, n_trunc: int,
                    guard: float = WOOD_GUARD) -> AlphaQuadrature:
    """Midpoint rule: alpha_k = (k - 1/2)/(2*count), weight 1/(2*count).

    Any node landing within guard*omega^2 of a Wood anomaly
    ((n + alpha)^2 = omega^2 for some |n| <= n_trunc) is shifted minimally
    until clear; weights are unchanged.
    """
    if count < 1:
        raise ValueError("quadrature needs at least one point")
    pts = (np.arange(1, count + 1) - 0.5) / (2.0 * count)
    w = np.full(count, 1.0 / (2.0 * count))
    tol = guard * omega * omega
    half_cell = 0.5 / (2.0 * count)
    for k in range(count):
        step = 2.0 * tol
        while _wood_distance(pts[k], omega, n_trunc) < tol:
            trial = pts[k] + step
            if trial > 0.5 or abs(trial - pts[k]) > half_cell:
                trial = pts[k] - step
            if trial <= 0.0:
                raise ValueError("cannot shift quadrature node off a Wood anomaly")
            pts[k] = trial
            step *= 2.0
    return AlphaQuadrature(pts, w)


def reduce_records(quadrature: AlphaQuadrature, records) -> float:
    """J from per-alpha records: sum of symmetry * weight * j_half.

    Fixed-order numpy reduction, independent of solve scheduling.
    """
    contributions = np.array([r.j_half for r in records])
    return float(np.sum(quadrature.symmetry_factor * quadrature.weights * contributions))


def evaluate_J(design: DesignField, quadrature: AlphaQuadrature, sources,
               targets, omega: float, dtn_blocks=None, jobs: int = 1,
               return_records: bool = False):
    """Objective value for one design.

    :param sources: per-alpha incident Neumann traces g_alpha.
    :param targets: per-alpha target traces q_alpha, same truncation.
    :returns: (J, residual traces); with return_records, (J, records) where
        each record also carries the solution and boundary traces.

    J = 1/2 * sum_k symmetry_factor * weight_k * ||F_k - q_k||^2.
    """
    if not (len(sources) == len(targets) == quadrature.count):
        raise ValueError("sources/targets must align with the quadrature")
    if dtn_blocks is None:
        n_trunc = sources[0].n_trunc
        dtn_blocks = [build_dtn(design.grid.nx, omega, a, n_trunc)
                      for a in quadrature.points]

    def run(k):
        return solve_alpha(design, omega, dtn_blocks[k], sources[k],
                           targets[k], need_adjoint=False, index=k)

    if jobs <= 1 or quadrature.count == 1:
        records = [run(k) for k in range(quadrature.count)]
    else:
        from concurrent.futures import ProcessPoolExecutor
        from .pipeline import _task
        tasks = [(design, omega, dtn_blocks[k], sources[k], targets[k], False, k)
                 for k in range(quadrature.count)]
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            records = list(pool.map(_task, tasks))
        records.sort(key=lambda r: r.index)

    j = reduce_records(quadrature, records)
    if return_records:
        return j, records
    return j, [r.residual for r in records]
