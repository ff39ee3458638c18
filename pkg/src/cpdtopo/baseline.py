"""SIMP baseline without a density filter, for side-by-side comparisons.

Optimality-criteria update with bisection on the volume multiplier. The
r_min parameter is accepted for interface parity but deliberately inert: the
comparison target is the unfiltered variant.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import fem
from .cpd import ConvergenceRecord
from .errors import SolverFailureError
from .mesh import DESIGNABLE, FORCED_SOLID, FORCED_VOID, ProblemDef

log = logging.getLogger(__name__)


@dataclass
class SimpConfig:
    penal: float = 3.0
    move: float = 0.2
    rho_min: float = 1e-3
    tol: float = 0.01           # max-norm design-change stopping tolerance
    max_iters: int = 200
    volume_tol: float = 1e-6    # per-iterate volume constraint tolerance
    r_min: float = 1.5          # accepted but unused (no filter)
    solver_tol: float = 1e-8
    solver_method: str = "auto"

    def __post_init__(self):
        if self.penal < 1:
            raise ValueError(f"penal must be >= 1, got {self.penal}")
        if not (0 < self.move <= 1):
            raise ValueError(f"move must be in (0,1], got {self.move}")


class BisectionFailure(RuntimeError):
    pass


@dataclass
class SimpResult:
    rho: np.ndarray
    u: np.ndarray
    record: ConvergenceRecord
    compliance: float
    converged: bool


def _oc_update(rho, dc, target, lower, upper, move, vol_tol):
    """Optimality-criteria step; bisect the multiplier until the designable
    volume hits the target within vol_tol."""
    l1, l2 = 0.0, 1e12
    base = np.sqrt(np.maximum(-dc, 0.0))
    for _ in range(300):
        lmid = 0.5 * (l1 + l2)
        if lmid == 0:
            break
        cand = rho * base / np.sqrt(lmid)
        cand = np.clip(cand, rho - move, rho + move)
        cand = np.clip(cand, lower, upper)
        vol = cand.sum()
        if abs(vol - target) <= vol_tol:
            return cand
        if vol > target:
            l1 = lmid
        else:
            l2 = lmid
    # the move/bound clamps can make volume flat in the multiplier; accept
    # the closest iterate only if it is feasible-side, else fail loudly
    if vol <= target + vol_tol:
        return cand
    raise BisectionFailure(f"volume {vol:.8f} vs target {target:.8f}")


def simp_run(problem: ProblemDef, config: SimpConfig | None = None,
             on_step=None) -> SimpResult:
    """Run the unfiltered SIMP optimality-criteria iteration."""
    config = config or SimpConfig()
    mesh = problem.mesh
    vc = problem.vc
    passive = problem.passive_mask
    designable = passive == DESIGNABLE
    n = mesh.n_elements
    ve = mesh.element_volume

    H = fem.constitutive_matrix(1.0, problem.nu)
    Ke = fem.element_stiffness(H, mesh.h)
    f = problem.load_vector()

    n_solid = int(np.count_nonzero(passive == FORCED_SOLID))
    target = vc * n - n_solid  # designable element count budget (v_e = h^3 uniform)
    if target <= 0:
        raise ValueError("forced-solid volume exhausts the budget")

    rho = np.where(passive == FORCED_VOID, config.rho_min,
                   np.where(passive == FORCED_SOLID, 1.0, min(vc, 1.0)))
    record = ConvergenceRecord()
    rep = float("nan")
    u = np.zeros(mesh.n_dofs)
    converged = False

    for it in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        system = fem.assemble(mesh, rho, Ke, problem.E, problem.E_min,
                              fixed_dofs=problem.fixed_dofs, f=f,
                              penal=config.penal)
        try:
            u = fem.solve_displacements(system, tol=config.solver_tol,
                                        method=config.solver_method)
        except SolverFailureError as exc:
            raise RuntimeError(f"FEM solve failed at SIMP iteration {it}: {exc}") from exc
        w = fem.element_energies(mesh, u, Ke, 1.0)  # 1/2 u_e^T Ke u_e
        _, rep = fem.compliance(rho, u, system)
        # sensitivity of the reported c = 2C w.r.t. rho_e
        dc = -2.0 * config.penal * rho ** (config.penal - 1) * (problem.E - problem.E_min) * w

        rho_new = rho.copy()
        rho_new[designable] = _oc_update(
            rho[designable], dc[designable], target,
            config.rho_min, 1.0, config.move, config.volume_tol)
        change = float(np.max(np.abs(rho_new - rho)))
        rho = rho_new
        vol_frac = (rho[designable].sum() + n_solid) * ve / (n * ve)
        row = (it, vol_frac, rep, float("nan"), 1, change, time.perf_counter() - t0)
        record.append(*row[1:])
        if on_step is not None:
            on_step(row)
        log.info("simp %d: V=%.5f c=%.6g change=%.3g", it, vol_frac, rep, change)
        if change <= config.tol:
            converged = True
            break

    record.converged = converged
    if not converged:
        log.warning("SIMP did not converge in %d iterations (change=%.4g)",
                    config.max_iters, record.change[-1])
    return SimpResult(rho=rho, u=u, record=record, compliance=rep, converged=converged)
