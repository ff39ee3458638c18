"""Outer volume-evolution driver: alternate FEM solves with analytic knapsack
solves along a geometric volume schedule down to the target fraction."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import fem
from .dual import DualState, KnapsackInstance, knapsack_solve
from .errors import SolverFailureError
from .mesh import DESIGNABLE, FORCED_SOLID, FORCED_VOID, ProblemDef, VoxelMesh

log = logging.getLogger(__name__)


@dataclass
class CpdConfig:
    mu: float = 0.89            # volume reduction rate, in (0,1)
    beta: float = 4000.0
    vc: float | None = None     # None -> take the problem's target fraction
    omega1: float = 1e-6        # inner dual convergence tolerance
    omega2: float = 1e-4        # outer design-change tolerance (max-norm)
    varsigma0: float = 1.0
    max_outer: int = 200
    max_inner: int = 500
    solver_tol: float = 1e-8
    solver_method: str = "auto"
    binarity_tol: float = 1e-6

    def __post_init__(self):
        if not (0 < self.mu < 1):
            raise ValueError(f"mu must be in (0,1), got {self.mu}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("omega1 and omega2 must be positive")
        if self.varsigma0 <= 0:
            raise ValueError(f"varsigma0 must be positive, got {self.varsigma0}")


@dataclass
class ConvergenceRecord:
    volume: list = field(default_factory=list)        # budget fraction V_gamma
    compliance: list = field(default_factory=list)    # reported c = 2C
    dual: list = field(default_factory=list)          # perturbed dual value
    inner_iters: list = field(default_factory=list)
    change: list = field(default_factory=list)        # max-norm design change
    seconds: list = field(default_factory=list)
    n_reductions: int = 0
    converged: bool = False

    def append(self, volume, compliance, dual, inner_iters, change, seconds):
        self.volume.append(volume)
        self.compliance.append(compliance)
        self.dual.append(dual)
        self.inner_iters.append(inner_iters)
        self.change.append(change)
        self.seconds.append(seconds)

    def __len__(self):
        return len(self.volume)

    def rows(self):
        for g in range(len(self)):
            yield (g + 1, self.volume[g], self.compliance[g], self.dual[g],
                   self.inner_iters[g], self.change[g], self.seconds[g])


BOUNDARY_TIE_RTOL = 1e-9


def _settle_boundary_ties(keep: np.ndarray, c: np.ndarray, ve: float,
                          budget: float, rtol: float = BOUNDARY_TIE_RTOL) -> np.ndarray:
    """Make the selection consistent across energy ties at the cut.

    When the kept/dropped boundary falls inside a group of elements whose
    energies agree to rtol (mirror images of each other in a symmetric
    problem), keep or drop the whole group, whichever lands the volume closer
    to the budget. Splitting such a group on roundoff order would seed an
    asymmetry that the next selection amplifies.
    """
    if not keep.any() or keep.all():
        return keep
    c_star = c[keep].min()
    if c[~keep].max() < c_star - rtol * c_star:
        return keep
    group = np.abs(c - c_star) <= rtol * max(c_star, 1e-300)
    n_in = int(np.count_nonzero(group & keep))
    n_group = int(np.count_nonzero(group))
    if n_in == n_group:
        return keep
    vol = ve * np.count_nonzero(keep)
    dev_all = abs(vol + ve * (n_group - n_in) - budget)
    dev_none = abs(vol - ve * n_in - budget)
    out = keep.copy()
    out[group] = dev_all < dev_none
    return out


class CpdFailure(RuntimeError):
    """Structured failure carrying the partial convergence record."""

    def __init__(self, message, record: ConvergenceRecord):
        super().__init__(message)
        self.record = record


@dataclass
class CpdResult:
    rho: np.ndarray
    u: np.ndarray
    record: ConvergenceRecord
    dual_state: DualState
    compliance: float           # reported c = 2C at the final design


def volume_schedule(mu: float, v0: float, vc: float) -> list[float]:
    """Geometric budgets mu^g * v0 down to vc, last entry clamped to exactly vc."""
    if not (0 < mu < 1):
        raise ValueError(f"mu must be in (0,1), got {mu}")
    if vc <= 0 or v0 <= 0:
        raise ValueError("volumes must be positive")
    if vc >= v0:
        return []
    length = math.ceil(math.log(vc / v0) / math.log(mu))
    sched = [v0 * mu ** g for g in range(1, length + 1)]
    sched[-1] = vc
    return sched


def run(problem: ProblemDef, config: CpdConfig | None = None,
        on_step=None) -> CpdResult:
    """Run the CPD algorithm. `on_step` (if given) receives each record row
    as it is produced, for crash-safe streaming logs."""
    config = config or CpdConfig()
    mesh = problem.mesh
    vc = problem.vc if config.vc is None else config.vc
    passive = problem.passive_mask
    designable = passive == DESIGNABLE
    n = mesh.n_elements
    ve = mesh.element_volume
    total_volume = n * ve
    solid_volume = np.count_nonzero(passive == FORCED_SOLID) * ve

    H = fem.constitutive_matrix(1.0, problem.nu)
    Ke = fem.element_stiffness(H, mesh.h)
    f = problem.load_vector()

    # step 1: full-material start (forced voids stay pinned at 0)
    rho = np.where(passive == FORCED_VOID, 0.0, 1.0)
    record = ConvergenceRecord()

    def solve_state(rho_now):
        system = fem.assemble(mesh, rho_now, Ke, problem.E, problem.E_min,
                              fixed_dofs=problem.fixed_dofs, f=f)
        u = fem.solve_displacements(system, tol=config.solver_tol,
                                    method=config.solver_method)
        # energies carry the element's current modulus: removed elements keep
        # near-zero rank unless the displacement jump across them is extreme,
        # which lets a transiently broken load path re-knit itself
        w = fem.element_energies(mesh, u, Ke, 1.0)
        c = fem.density_scale(rho_now, problem.E, problem.E_min) * w
        _, rep = fem.compliance(rho_now, u, system)
        return u, c, rep

    try:
        u, c, rep = solve_state(rho)
    except SolverFailureError as exc:
        raise CpdFailure(f"initial FEM solve failed: {exc}", record) from exc

    schedule = volume_schedule(config.mu, 1.0, vc)
    record.n_reductions = len(schedule)
    varsigma = config.varsigma0
    dual_state = None

    for gamma in range(config.max_outer):
        t0 = time.perf_counter()
        v_frac = schedule[gamma] if gamma < len(schedule) else vc
        budget = v_frac * total_volume - solid_volume
        instance = KnapsackInstance(c=c[designable],
                                    v=np.full(designable.sum(), ve),
                                    budget=budget)
        res = knapsack_solve(instance, config.beta, varsigma,
                             config.omega1, config.max_inner)
        if not res.converged:
            log.warning("inner loop hit cap at step %d; retrying with 10x beta", gamma + 1)
            res = knapsack_solve(instance, 10.0 * config.beta, varsigma,
                                 config.omega1, config.max_inner)
            if not res.converged:
                raise CpdFailure(f"knapsack solve failed to converge at step {gamma + 1}",
                                 record)
        dual_state = res.state
        varsigma = max(res.state.varsigma, 1e-30)  # warm start next budget

        keep = res.rho >= 0.5
        keep = _settle_boundary_ties(keep, instance.c, ve, budget)
        rho_d = res.rho.copy()
        flipped = keep != (res.rho >= 0.5)
        rho_d[flipped] = keep[flipped].astype(float)
        rho_new = rho.copy()
        rho_new[designable] = rho_d
        try:
            u, c, rep = solve_state(rho_new)
        except SolverFailureError as exc:
            raise CpdFailure(f"FEM solve failed at step {gamma + 1}: {exc}", record) from exc

        change = float(np.max(np.abs(rho_new - rho)))
        rho = rho_new
        dual = res.dual_history[-1] if res.dual_history else float("nan")
        row = (gamma + 1, v_frac, rep, dual, res.n_inner, change,
               time.perf_counter() - t0)
        record.append(*row[1:])
        if on_step is not None:
            on_step(row)
        log.info("step %d: V=%.4f c=%.6g inner=%d change=%.3g",
                 gamma + 1, v_frac, rep, res.n_inner, change)

        if change <= config.omega2 and v_frac <= vc + 1e-12:
            record.converged = True
            break
    else:
        raise CpdFailure(f"outer iteration cap {config.max_outer} reached", record)

    gray = np.minimum(rho, 1.0 - rho).max() if n else 0.0
    if gray > config.binarity_tol:
        log.warning("final design not binary: max min(rho, 1-rho) = %.3g", gray)
    rho_final = np.where(rho >= 0.5, 1.0, 0.0)
    return CpdResult(rho=rho_final, u=u, record=record,
                     dual_state=dual_state, compliance=rep)


def connected_components(rho_binary: np.ndarray, mesh: VoxelMesh) -> tuple[np.ndarray, int]:
    """Label 6-face-adjacent components of solid elements.

    Returns (labels, n_components); labels has 0 on void elements.
    """
    solid = np.asarray(rho_binary).reshape(mesh.nelz, mesh.nely, mesh.nelx) >= 0.5
    structure = ndimage.generate_binary_structure(3, 1)  # faces only
    labels, count = ndimage.label(solid, structure=structure)
    return labels.ravel(), int(count)


def check_connectivity(problem: ProblemDef, rho_binary: np.ndarray) -> dict:
    """Report whether all solid elements touching supports and loads share one
    face-connected component."""
    mesh = problem.mesh
    labels, count = connected_components(rho_binary, mesh)

    node_of_dof = lambda dofs: np.unique(np.asarray(dofs) // 3)
    conn = mesh.connectivity
    n_nodes = mesh.n_nodes
    # node -> solid component labels via element incidence
    solid = np.asarray(rho_binary) >= 0.5

    def labels_at(nodes):
        node_set = np.zeros(n_nodes, dtype=bool)
        node_set[nodes] = True
        touch = solid & np.any(node_set[conn], axis=1)
        return set(np.unique(labels[touch]).tolist()) - {0}

    support_labels = labels_at(node_of_dof(problem.fixed_dofs))
    load_labels = labels_at(node_of_dof(problem.load_dofs))
    combined = support_labels | load_labels
    return {
        "n_components": count,
        "support_components": support_labels,
        "load_components": load_labels,
        "connected": len(combined) == 1 and bool(support_labels) and bool(load_labels),
    }
