"""Projected gradient descent over the admissible box.

The update at step length s is rho_r <- rho_r - s*Re G, rho_i <- rho_i
+ s*Im G (together: rho <- rho - s*conj(G)), then x-symmetrization, then
projection onto the box; projection comes last so values pinned at a
bound are exact.  Armijo backtracking halves s until

    J(rho) - J(trial) >= 1e-4 * ||trial - rho||^2 / s,

the sufficient-decrease condition with the projected gradient
(rho - trial)/s.  Accepted J values therefore decrease monotonically.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import GradientField, gradient
from .domain import (DesignField, initial_design, load_design,
                     project_to_admissible, save_design, symmetrize_x)
from .objective import reduce_records
from .pipeline import ProblemSetup, gradient_sweep

__all__ = ["OptimizerState", "descent_step", "kkt_residual",
           "kkt_violation_field", "run", "LOG_NAME", "DESIGN_NAME"]

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 30
STALL_WINDOW = 10

LOG_NAME = "optimize_log.txt"
DESIGN_NAME = "design_current.txt"


@dataclass
class OptimizerState:
    """One point of the descent trajectory plus its bookkeeping."""

    iteration: int
    design: DesignField
    j_value: float
    step_len: float = 0.0
    grad: GradientField = field(default=None, repr=False)
    records: list = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)
    stalled: bool = False
    reason: str = ""

    def grad_norm(self) -> float:
        return self.grad.max_abs() if self.grad is not None else 0.0


def _box_violation(x: np.ndarray, dj_dx: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """First-order optimality violation of min over [lo, hi], per cell.

    Interior: |dJ/dx|; at the lower bound dJ/dx >= 0 is consistent
    (violation max(0, -dJ/dx)); at the upper bound dJ/dx <= 0 is
    consistent (violation max(0, dJ/dx)); a degenerate box never
    contributes.
    """
    if hi <= lo:
        return np.zeros_like(x)
    at_lo = x <= lo
    at_hi = x >= hi
    viol = np.abs(dj_dx)
    viol = np.where(at_lo, np.maximum(0.0, -dj_dx), viol)
    viol = np.where(at_hi, np.maximum(0.0, dj_dx), viol)
    return viol


def kkt_violation_field(design: DesignField, grad: GradientField) -> np.ndarray:
    """Cellwise optimality violation, shape (ny, nx).

    dJ/drho_r = Re G and dJ/drho_i = -Im G, so the sign conditions for
    the imaginary part are reversed: Im G < 0 is consistent at rho_i0,
    Im G > 0 at rho_i1.
    """
    g = grad.values
    bd = design.bounds
    vr = _box_violation(design.values.real, g.real, bd.rho_r0, bd.rho_r1)
    vi = _box_violation(design.values.imag, -g.imag, bd.rho_i0, bd.rho_i1)
    return np.maximum(vr, vi)


def kkt_residual(design: DesignField, grad: GradientField) -> float:
    """Max over cells of the cellwise optimality violation."""
    return float(np.max(kkt_violation_field(design, grad)))


def _state_at(design: DesignField, setup: ProblemSetup, iteration: int,
              step_len: float, jobs: int, history: list) -> OptimizerState:
    records = gradient_sweep(design, setup, jobs=jobs)
    j = reduce_records(setup.quadrature, records)
    grad = gradient(design, [r.u for r in records], [r.w for r in records],
                    setup.quadrature, setup.omega)
    return OptimizerState(iteration, design, j, step_len, grad, records, history)


def descent_step(state: OptimizerState, grad: GradientField,
                 setup: ProblemSetup, jobs: int = 1) -> OptimizerState:
    """One projected-gradient step with Armijo backtracking.

    Exhausting the backtracks (or hitting a projected stationary point)
    returns the same design with the stalled flag set, not an exception.
    """
    design = state.design
    gmax = grad.max_abs()
    if gmax == 0.0:
        return replace(state, stalled=True, reason="zero gradient")
    s = 2.0 * state.step_len if state.step_len > 0.0 else 1.0 / gmax
    for _ in range(MAX_BACKTRACKS + 1):
        trial = DesignField(design.grid, design.bounds,
                            design.values - s * np.conj(grad.values))
        trial = project_to_admissible(symmetrize_x(trial))
        delta2 = float(np.sum(np.abs(trial.values - design.values) ** 2))
        if delta2 == 0.0:
            return replace(state, stalled=True, reason="projected stationary point")
        records = gradient_sweep(trial, setup, jobs=jobs)
        j_trial = reduce_records(setup.quadrature, records)
        if state.j_value - j_trial >= ARMIJO_C * delta2 / s:
            new_grad = gradient(trial, [r.u for r in records],
                                [r.w for r in records], setup.quadrature,
                                setup.omega)
            return OptimizerState(state.iteration + 1, trial, j_trial, s,
                                  new_grad, records, state.history)
        s *= 0.5
    return replace(state, stalled=True, reason="line search exhausted")


def _log_line(state: OptimizerState, kkt: float) -> str:
    return (f"{state.iteration} {state.j_value:.17g} {state.step_len:.17g} "
            f"{state.grad_norm():.17g} {kkt:.17g}")


def _append_log(outdir, line: str) -> None:
    if outdir is None:
        return
    with open(os.path.join(outdir, LOG_NAME), "a") as fh:
        fh.write(line + "\n")


def _stalled_by_j(history: list, tol_j: float) -> bool:
    """Relative J decrease over the last STALL_WINDOW accepted iterations."""
    if len(history) <= STALL_WINDOW:
        return False
    j_then = history[-1 - STALL_WINDOW]["J"]
    j_now = history[-1]["J"]
    return (j_then - j_now) <= tol_j * max(abs(j_then), 1e-300)


def run(config, setup: ProblemSetup = None, jobs: int = None,
        resume: bool = False, initial: DesignField = None) -> OptimizerState:
    """Drive the descent from a config; write iterate log and design.

    Termination: iteration budget, KKT residual below tol_kkt, relative J
    decrease below tol_j over 10 iterations, or a stalled line search.
    Artifacts in config.outdir: one `iter J step_len grad_norm
    kkt_residual` line per accepted iterate and the current design, which
    together are enough to resume an interrupted run.  `initial`
    overrides the config's starting design (warm starts); a resumed run
    in turn overrides `initial`.
    """
    from .config import problem_from_config

    design0, built_setup = problem_from_config(config, setup)
    setup = built_setup
    if initial is not None:
        design0 = initial
    if jobs is None:
        jobs = 1
    outdir = getattr(config, "outdir", None)
    if outdir:
        os.makedirs(outdir, exist_ok=True)

    start_iter, start_step = 0, 0.0
    if resume and outdir:
        log_path = os.path.join(outdir, LOG_NAME)
        design_path = os.path.join(outdir, DESIGN_NAME)
        if os.path.exists(log_path) and os.path.exists(design_path):
            with open(log_path) as fh:
                lines = [ln.split() for ln in fh if ln.strip()]
            if lines:
                start_iter = int(lines[-1][0])
                start_step = float(lines[-1][2])
                design0 = load_design(design_path)

    history = []
    state = _state_at(design0, setup, start_iter, start_step, jobs, history)
    kkt = kkt_residual(state.design, state.grad)
    history.append({"iter": state.iteration, "J": state.j_value,
                    "step_len": state.step_len,
                    "grad_norm": state.grad_norm(), "kkt_residual": kkt})
    if not resume or start_iter == 0:
        if outdir:
            log_path = os.path.join(outdir, LOG_NAME)
            with open(log_path, "w"):
                pass
            save_design(state.design, os.path.join(outdir, "design_initial.txt"))
        _append_log(outdir, _log_line(state, kkt))
    if outdir:
        save_design(state.design, os.path.join(outdir, DESIGN_NAME))

    budget = max(config.max_iter - start_iter, 0)
    steps_taken = 0
    while True:
        if kkt < config.tol_kkt:
            state = replace(state, reason="kkt tolerance reached")
            break
        if steps_taken >= budget:
            state = replace(state, reason="iteration budget reached")
            break
        nxt = descent_step(state, state.grad, setup, jobs=jobs)
        if nxt.stalled:
            state = nxt
            break
        state = nxt
        steps_taken += 1
        kkt = kkt_residual(state.design, state.grad)
        history.append({"iter": state.iteration, "J": state.j_value,
                        "step_len": state.step_len,
                        "grad_norm": state.grad_norm(),
                        "kkt_residual": kkt})
        _append_log(outdir, _log_line(state, kkt))
        if outdir:
            save_design(state.design, os.path.join(outdir, DESIGN_NAME))
        if _stalled_by_j(history, config.tol_j):
            state = replace(state, reason="J decrease below tolerance")
            break

    if outdir:
        save_design(state.design, os.path.join(outdir, DESIGN_NAME))
        save_design(state.design, os.path.join(outdir, "design_final.txt"))
    return state
