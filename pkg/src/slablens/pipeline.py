"""Per-alpha problem setup and solve sweeps.

Solves at distinct alpha are independent; sweeps fan out over a process
pool when jobs > 1 and results are reduced in fixed alpha order, so the
outcome does not depend on the parallel schedule.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import DesignField, Grid
from .dtn import DtnMatrix, build_dtn, default_n_trunc
from .solver import AssembledSystem, FloquetSolution, assemble, solve_forward
from .source import (ModalTrace, incident_dirichlet_trace,
                     incident_neumann_trace, target_dirichlet_trace)

__all__ = ["AlphaRecord", "ProblemSetup", "build_setup", "forward_sweep",
           "gradient_sweep", "default_jobs"]


def default_jobs() -> int:
    return os.cpu_count() or 1


@dataclass
class AlphaRecord:
    """Outcome of one alpha solve (and optional adjoint solve)."""

    index: int
    alpha: float
    u: np.ndarray = field(repr=False)
    trace_top: ModalTrace = field(repr=False)
    trace_bottom: ModalTrace = field(repr=False)
    residual: ModalTrace = field(repr=False)
    j_half: float = 0.0
    w: np.ndarray = field(default=None, repr=False)


@dataclass
class ProblemSetup:
    """Immutable per-experiment data shared by all solves: quadrature
    nodes, source and target traces, and forward DtN blocks per alpha."""

    grid: Grid
    omega: float
    h: float
    h1: float
    n_trunc: int
    quadrature: object
    g_traces: list = field(repr=False)
    q_traces: list = field(repr=False)
    f_traces: list = field(repr=False)
    dtn_blocks: list = field(repr=False)


def build_setup(grid: Grid, omega: float, h: float, h1: float,
                quadrature, n_trunc: int = None) -> ProblemSetup:
    if n_trunc is None:
        n_trunc = default_n_trunc(omega, grid.nx)
    g, q, f, blocks = [], [], [], []
    for a in quadrature.points:
        g.append(incident_neumann_trace(omega, h, a, n_trunc))
        q.append(target_dirichlet_trace(omega, h1, a, n_trunc))
        f.append(incident_dirichlet_trace(omega, h, a, n_trunc))
        blocks.append(build_dtn(grid.nx, omega, a, n_trunc))
    return ProblemSetup(grid, omega, h, h1, n_trunc, quadrature, g, q, f, blocks)


def solve_alpha(design: DesignField, omega: float, dtn: DtnMatrix,
                g_trace: ModalTrace, q_trace: ModalTrace,
                need_adjoint: bool, index: int = 0) -> AlphaRecord:
    """Assemble, factor, and solve one alpha problem; optionally also the
    adjoint problem, reusing the factorization via the conjugate
    transpose solve."""
    from .solver import extract_trace

    system = assemble(design, dtn.alpha, omega, (dtn, dtn), g_trace)
    sol = solve_forward(system, design)
    t_top = extract_trace(sol, "top", dtn=dtn)
    t_bot = extract_trace(sol, "bottom", dtn=dtn)
    psi = ModalTrace(dtn.alpha, dtn.n_trunc, t_bot.coeffs - q_trace.coeffs)
    j_half = float(np.pi * np.sum(np.abs(psi.coeffs) ** 2))
    w = None
    if need_adjoint:
        rhs = np.zeros(design.grid.node_count, dtype=complex)
        rhs[design.grid.bottom_nodes()] = 2.0 * np.pi * (dtn.e_matrix.conj().T @ psi.coeffs)
        w = system.solve(rhs, trans="H")
    return AlphaRecord(index, dtn.alpha, sol.values, t_top, t_bot, psi, j_half, w)


def _task(args):
    design, omega, dtn, g_trace, q_trace, need_adjoint, index = args
    return solve_alpha(design, omega, dtn, g_trace, q_trace, need_adjoint, index)


def _sweep(design: DesignField, setup: ProblemSetup, need_adjoint: bool,
           jobs: int) -> list:
    tasks = [
        (design, setup.omega, setup.dtn_blocks[k], setup.g_traces[k],
         setup.q_traces[k], need_adjoint, k)
        for k in range(len(setup.quadrature.points))
    ]
    if jobs <= 1 or len(tasks) == 1:
        records = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            records = list(pool.map(_task, tasks))
    records.sort(key=lambda r: r.index)
    return records


def forward_sweep(design: DesignField, setup: ProblemSetup, jobs: int = 1) -> list:
    """Forward solves at every quadrature alpha, in alpha order."""
    return _sweep(design, setup, need_adjoint=False, jobs=jobs)


def gradient_sweep(design: DesignField, setup: ProblemSetup, jobs: int = 1) -> list:
    """Forward plus adjoint solves at every quadrature alpha."""
    return _sweep(design, setup, need_adjoint=True, jobs=jobs)
