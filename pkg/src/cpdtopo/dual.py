"""Canonical penalty-duality solver for the volume-constrained 0-1 knapsack.

The inner fixed point alternates an elementwise cubic root for sigma with a
scalar multiplier update for varsigma; both steps are exact coordinate
maximizations of the concave perturbed dual, so the dual value ascends
monotonically. Densities are recovered analytically from the converged dual
pair.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateThetaError

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 25


@dataclass(frozen=True)
class KnapsackInstance:
    c: np.ndarray       # nonnegative element energies
    v: np.ndarray       # positive element volumes
    budget: float       # current volume budget

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "v", v)
        if c.shape != v.shape or c.ndim != 1:
            raise ValueError("c and v must be 1-D arrays of equal length")
        if np.any(c < 0):
            raise ValueError("energies must be nonnegative")
        if np.any(v <= 0):
            raise ValueError("volumes must be positive")
        if not (0 < self.budget <= v.sum() + 1e-12):
            raise ValueError(f"budget {self.budget} outside (0, sum(v)={v.sum()}]")

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass
class DualState:
    sigma: np.ndarray   # strictly positive, one per element
    varsigma: float     # volume multiplier, >= 0
    beta: float         # perturbation parameter, > 0

    def theta(self, instance: KnapsackInstance) -> np.ndarray:
        return self.varsigma * instance.v - instance.c

    def tau(self, instance: KnapsackInstance) -> np.ndarray:
        return self.sigma + instance.c - self.varsigma * instance.v


def _cubic_positive_root(theta2: np.ndarray, beta: float) -> np.ndarray:
    """Unique positive root of 2/beta * s^3 + s^2 = theta2 (elementwise).

    Closed-form trigonometric/Cardano root of the depressed cubic, followed by
    a few Newton steps: the closed form alone loses digits for beta >> theta.
    """
    theta2 = np.asarray(theta2, dtype=float)
    b = beta / 2.0  # s^3 + b s^2 - b theta2 = 0
    eta = beta * beta / 27.0

    # trig branch (three real roots; the largest is the positive one)
    with np.errstate(invalid="ignore"):
        cos_phi = np.clip(-1.0 + theta2 / (2.0 * b * b / 27.0), -1.0, 1.0)
        phi = np.arccos(cos_phi)
        s_trig = (b / 3.0) * (2.0 * np.cos(phi / 3.0) - 1.0)

    if np.all(theta2 < eta):
        s = s_trig
    else:
        # Cardano branch (one real root) for theta2 >= eta
        q = 2.0 * b ** 3 / 27.0 - b * theta2
        disc = (q / 2.0) ** 2 - (b * b / 9.0) ** 3
        sq = np.sqrt(np.maximum(disc, 0.0))
        s_card = np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq) - b / 3.0
        s = np.where(theta2 < eta, s_trig, s_card)

    # |theta| bounds the root from above and is a safe Newton start; fall back
    # to it where the closed form cancelled catastrophically (theta << beta
    # drives cos_phi to -1 within roundoff and s_trig to ~0)
    root_cap = np.sqrt(theta2)
    s = np.clip(s, 0.0, root_cap)
    s = np.where(s * s > 0.01 * theta2, s, root_cap)

    # Newton polish on g(s) = (2/beta) s^3 + s^2 - theta2 (convex, increasing)
    a = 2.0 / beta
    for _ in range(60):
        g = a * s ** 3 + s ** 2 - theta2
        if np.all(np.abs(g) <= 1e-12 * theta2):
            break
        gp = 3.0 * a * s ** 2 + 2.0 * s
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(gp > 0, g / gp, 0.0)
        s = np.maximum(s - step, 0.0)
    return s


def solve_sigma(theta, beta: float):
    """Positive root sigma of 2/beta * sigma^3 + sigma^2 = theta^2.

    Accepts a scalar or an array of theta; theta enters squared so the result
    is even in theta. A scalar theta of exactly 0 is rejected (sigma = 0 would
    leave the admissible cone).
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    theta = np.asarray(theta, dtype=float)
    if scalar and theta == 0:
        raise DegenerateThetaError("theta = 0: cubic has no positive root")
    s = _cubic_positive_root(theta ** 2, beta)
    return float(s) if scalar else s


def update_multiplier(sigma: np.ndarray, instance: KnapsackInstance) -> float:
    """Fixed-point multiplier update, clamped at 0 (KKT sign constraint)."""
    v, c = instance.v, instance.c
    num = np.sum(v * (1.0 + c / sigma)) - 2.0 * instance.budget
    den = np.sum(v * v / sigma)
    return max(num / den, 0.0)


def recover_rho(state: DualState, instance: KnapsackInstance) -> np.ndarray:
    """Analytic density recovery rho_e = (1 - theta_e/sigma_e)/2, clipped to [0,1]."""
    theta = state.theta(instance)
    return np.clip(0.5 * (1.0 - theta / state.sigma), 0.0, 1.0)


def dual_value(state: DualState, instance: KnapsackInstance,
               perturbed: bool = True) -> float:
    """Dual function value; with perturbed=True includes the -|sigma|^2/(4 beta) term."""
    tau = state.tau(instance)
    val = -0.25 * np.sum(tau * tau / state.sigma) - state.varsigma * instance.budget
    if perturbed:
        val -= np.sum(state.sigma ** 2) / (4.0 * state.beta)
    return float(val)


@dataclass
class KnapsackResult:
    rho: np.ndarray
    state: DualState
    converged: bool
    n_inner: int
    dual_history: list = field(default_factory=list)


def knapsack_solve(instance: KnapsackInstance, beta: float, varsigma0: float = 1.0,
                   omega1: float = 1e-6, max_inner: int = 500) -> KnapsackResult:
    """Inner fixed-point loop: sigma-update, varsigma-update, until the dual
    value change drops below omega1 or the iteration cap is hit."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if varsigma0 <= 0:
        raise ValueError(f"varsigma0 must be positive, got {varsigma0}")

    c, v = instance.c, instance.v
    budget = instance.budget
    eps = 1e-12 * max(float(c.max(initial=0.0)), 1.0)
    # loop-invariant reductions for the multiplier update
    v_sum = float(v.sum())
    vc = v * c
    vv = v * v
    inv4b = 1.0 / (4.0 * beta)
    def reduced_dual(vs: float) -> float:
        # dual value at (sigma(vs), vs); sigma maximizes for fixed vs
        th = vs * v - c
        th = np.where(th == 0.0, -eps, th)
        sg = _cubic_positive_root(th * th, beta)
        tau = sg - th
        return float(-0.25 * (tau * tau) @ (1.0 / sg) - vs * budget
                     - inv4b * sg @ sg)

    varsigma = varsigma0
    history = []
    prev = None
    converged = False
    vs_hist = []
    k = 0
    for k in range(1, max_inner + 1):
        theta = varsigma * v - c
        if np.count_nonzero(theta == 0.0):
            log.debug("perturbing degenerate theta entries")
            theta = np.where(theta == 0.0, -eps, theta)
        sigma = _cubic_positive_root(theta * theta, beta)
        inv_sigma = 1.0 / sigma
        varsigma = max((v_sum + vc @ inv_sigma - 2.0 * budget) / (vv @ inv_sigma), 0.0)
        tau = sigma + c - varsigma * v
        val = (-0.25 * (tau * tau) @ inv_sigma - varsigma * budget
               - inv4b * sigma @ sigma)

        # Aitken extrapolation on the multiplier, kept only when it increases
        # the dual value, so the recorded ascent stays monotone
        vs_hist.append(varsigma)
        if len(vs_hist) >= 3 and k % 3 == 0:
            x0, x1, x2 = vs_hist[-3:]
            denom = x2 - 2.0 * x1 + x0
            if denom != 0.0:
                vs_acc = x2 - (x2 - x1) ** 2 / denom
                if vs_acc > 0 and vs_acc != varsigma:
                    val_acc = reduced_dual(vs_acc)
                    if val_acc > val:
                        varsigma = vs_acc
                        val = val_acc
                        vs_hist.clear()
                    elif k % 24 == 0:
                        # extrapolation overshot a kink of the piecewise-smooth
                        # reduced dual; maximize directly over the bracket
                        w = abs(vs_acc - varsigma)
                        lo = max(min(vs_acc, varsigma) - w, 0.0)
                        hi = max(vs_acc, varsigma) + w
                        opt = minimize_scalar(lambda x: -reduced_dual(x),
                                              bounds=(lo, hi), method="bounded",
                                              options={"xatol": 1e-14 * max(1.0, hi)})
                        val_opt = -opt.fun
                        if opt.x > 0 and val_opt > val:
                            varsigma = float(opt.x)
                            val = val_opt
                            vs_hist.clear()

        history.append(val)
        if prev is not None and abs(val - prev) <= omega1:
            converged = True
            break
        prev = val

    # refresh sigma at the final multiplier so the recovery formula uses a
    # consistent dual pair (the loop leaves sigma one half-step behind)
    theta = varsigma * v - c
    theta = np.where(theta == 0.0, -eps, theta)
    state = DualState(sigma=solve_sigma(theta, beta), varsigma=varsigma, beta=beta)
    rho = _repair_feasibility(recover_rho(state, instance), instance)
    return KnapsackResult(rho=rho, state=state, converged=converged,
                          n_inner=k, dual_history=history)


def _repair_feasibility(rho: np.ndarray, instance: KnapsackInstance) -> np.ndarray:
    """Resolve the dual-breakpoint tie deterministically.

    At the converged multiplier the keep/drop threshold sits on a breakpoint
    of the piecewise dual, so the rounded selection can land one element to
    either side of the budget. Trim (or fill) by energy-per-volume priority
    until the budget is met; elements far from the threshold are untouched.
    """
    c, v, budget = instance.c, instance.v, instance.budget
    kept = rho >= 0.5
    vol = float(v[kept].sum())
    ratio = c / v
    if vol > budget + 1e-12:
        order = np.flatnonzero(kept)[np.argsort(ratio[kept], kind="stable")]
        for e in order:
            if vol <= budget + 1e-12:
                break
            kept[e] = False
            vol -= v[e]
    else:
        order = np.flatnonzero(~kept)[np.argsort(-ratio[~kept], kind="stable")]
        for e in order:
            if vol + v[e] <= budget + 1e-12:
                kept[e] = True
                vol += v[e]
    out = rho.copy()
    out[kept & (out < 0.5)] = 1.0
    out[~kept & (out >= 0.5)] = 0.0
    return out


def knapsack_solve_escalating(instance: KnapsackInstance, betas, varsigma0: float = 1.0,
                              omega1: float = 1e-6, max_inner: int = 500) -> KnapsackResult:
    """Run knapsack_solve over an increasing beta schedule, warm-starting the
    multiplier between stages. Returns the final stage's result."""
    res = None
    vs = varsigma0
    total_inner = 0
    for beta in betas:
        res = knapsack_solve(instance, beta, vs, omega1, max_inner)
        total_inner += res.n_inner
        vs = max(res.state.varsigma, 1e-30)
    res.n_inner = total_inner
    return res


def brute_force_knapsack(instance: KnapsackInstance) -> tuple[np.ndarray, float]:
    """Exhaustive minimum of -c^T rho subject to rho^T v <= budget.

    Ties are broken toward the lexicographically smallest rho. Subset sums are
    built by doubling (subsets of the first e elements, then the same subsets
    with element e added), so bit e of the array index is rho_e.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"n={n} exceeds brute-force cap {BRUTE_FORCE_MAX_N}")
    c, v, budget = instance.c, instance.v, instance.budget
    obj = np.zeros(1)
    vol = np.zeros(1)
    key = np.zeros(1, dtype=np.int64)  # lex key: rho_0 most significant
    for e in range(n):
        w = np.int64(1) << (n - 1 - e)
        obj = np.concatenate([obj, obj + c[e]])
        vol = np.concatenate([vol, vol + v[e]])
        key = np.concatenate([key, key + w])
    neg = np.where(vol <= budget + 1e-12, -obj, np.inf)
    best_obj = neg.min()
    cand = np.flatnonzero(neg <= best_obj + 1e-15)
    best_mask = int(cand[np.argmin(key[cand])])
    rho = ((best_mask >> np.arange(n)) & 1).astype(float)
    return rho, float(best_obj)
