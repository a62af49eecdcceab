"""Ridge solvers: exact dual solve, one-shot column subsampling, and the
pilot-driven iterative refinement that trades a little per-iteration work for
a geometric error decay.

All solvers work in the n-dimensional dual space. With M = A A^T + lam I the
exact coefficients are recovered from the dual vector z = lam * M^{-1} y via
beta = A^T z / lam, which costs O(n^2 p + n^3) instead of anything p^3-ish.
The subsampled variants replace M with a column-sampled estimate.
"""

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import gram, sampled_gram, spd_inverse, spd_solve
from .sampling import (
    ProbabilityVector,
    column_norms,
    draw_plan,
    mix_uniform,
    probs_coefficient_weighted,
    probs_column,
    probs_uniform,
)
from .util import derive_seed


@dataclass(frozen=True)
class ProblemInstance:
    """Design matrix, response, and ridge shift.

    Intended for p > n; smaller p still runs but warns, since the dual-space
    route has no advantage there.
    """

    a: np.ndarray
    y: np.ndarray
    lam: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("design matrix must be a non-empty 2-d array")
        if y.ndim != 1 or y.shape[0] != a.shape[0]:
            raise ValueError(
                f"response must be a length-{a.shape[0]} vector, got shape {y.shape}"
            )
        if not self.lam > 0:
            raise ValueError(f"ridge shift must be positive, got {self.lam}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
            raise ValueError("instance contains non-finite entries")
        if a.shape[1] <= a.shape[0]:
            warnings.warn(
                f"p={a.shape[1]} <= n={a.shape[0]}: the dual route still works "
                "but is not the natural regime",
                stacklevel=2,
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def p(self) -> int:
        return self.a.shape[1]


@dataclass(frozen=True)
class RidgeSolution:
    """Dual vector z and coefficients beta = A^T z / lam."""

    z: np.ndarray
    beta: np.ndarray
    lam: float
    method: str
    plan_seed: int | None = None


@dataclass(frozen=True)
class IterativeConfig:
    """Knobs for the iterative solver.

    r: per-iteration sample size, r0: pilot sample size, m: iterations,
    theta: uniform mixing floor applied to the per-iteration probabilities
    (0 disables it). Intended regime r0 << r << p.
    """

    r: int
    r0: int
    m: int
    seed: int
    theta: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"r must be at least 1, got {self.r}")
        if self.r0 < 1:
            raise ValueError(f"r0 must be at least 1, got {self.r0}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if not 0 <= self.theta < 1:
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration diagnostics: residual norm going in, wall clock, and
    (when a reference solution was supplied) the relative coefficient error
    after the iteration."""

    residual_norms: np.ndarray
    wall_ms: np.ndarray
    errors: np.ndarray | None = None


def ridge_exact(inst: ProblemInstance) -> RidgeSolution:
    """Exact ridge via the dual: z = lam (A A^T + lam I)^{-1} y."""
    m = gram(inst.a, inst.lam)
    z = inst.lam * spd_solve(m, inst.y)
    beta = inst.a.T @ z / inst.lam
    return RidgeSolution(z=z, beta=beta, lam=inst.lam, method="EXACT")


def _subsampled_dual_solve(a, rhs, lam, plan):
    m = sampled_gram(a, plan, lam)
    return lam * spd_solve(m, rhs)


def subsampled_ridge(inst: ProblemInstance, plan) -> RidgeSolution:
    """One-shot estimator: exact solve with the Gram replaced by its
    column-subsampled estimate under the given plan."""
    z = _subsampled_dual_solve(inst.a, inst.y, inst.lam, plan)
    beta = inst.a.T @ z / inst.lam
    return RidgeSolution(
        z=z, beta=beta, lam=inst.lam, method=plan.probs.method, plan_seed=plan.seed
    )


def pilot_preconditioner(inst: ProblemInstance, r0, seed, probs=None):
    """Cheap approximate inverse C of the shifted Gram from r0 column draws.

    Draws from the squared-column-norm distribution, forms the subsampled
    Gram, and inverts it once explicitly; C is reused across iterations, so
    the O(n^3) inversion is paid a single time.

    probs may carry a precomputed squared-column-norm distribution for
    inst.a; the distribution depends only on the data, so callers running
    many seeds can build it (and its alias table) once. Per-call work is
    then just the draw, the r0-column Gram estimate, and the inversion.
    """
    if probs is None:
        probs = probs_column(inst.a)
    elif probs.p != inst.a.shape[1]:
        raise ValueError(
            f"pilot distribution covers {probs.p} features, design has {inst.a.shape[1]}"
        )
    plan = draw_plan(probs, r0, seed)
    c = spd_inverse(sampled_gram(inst.a, plan, inst.lam))
    return c, plan


def iterations_needed(step_factor, target) -> int:
    """Iterations m with step_factor^m <= target: ceil(log target / log step).

    Both arguments must lie in (0, 1). A 1e-9 slack absorbs floating log
    round-off so exact powers do not tip over to an extra iteration.
    """
    if not 0 < step_factor < 1:
        raise ValueError(f"step factor must lie in (0, 1), got {step_factor}")
    if not 0 < target < 1:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    return int(math.ceil(math.log(target) / math.log(step_factor) - 1e-9))


def _refinement_loop(a, y, lam, r, m, seed, next_probs, exact_beta, z0):
    """Shared residual-refinement recursion.

    Per iteration t: form the dual residual b_t = y - A beta_{t-1} - z_{t-1},
    solve the subsampled problem with right-hand side b_t under probabilities
    next_probs(t, b_t), and add the correction to z. next_probs returning a
    fresh vector each iteration gives the adaptive scheme; a constant closure
    gives the fixed-probability variant. A fresh plan is drawn each iteration
    from seed via derive_seed(seed, "iter", t).
    """
    n = a.shape[0]
    z = np.zeros(n) if z0 is None else np.asarray(z0, dtype=float).copy()
    residual_norms = np.empty(m)
    wall_ms = np.empty(m)
    errors = np.empty(m) if exact_beta is not None else None
    exact_norm = None
    if exact_beta is not None:
        exact_norm = float(np.linalg.norm(exact_beta))
        if exact_norm == 0.0:
            raise ValueError("reference coefficients are identically zero")
    for t in range(1, m + 1):
        t0 = time.perf_counter()
        beta_prev = a.T @ z / lam
        b = y - a @ beta_prev - z
        res = float(np.linalg.norm(b))
        residual_norms[t - 1] = res
        if res == 0.0:
            # already at the exact dual solution; nothing to correct
            w = None
        else:
            pv = next_probs(t, b)
            plan = draw_plan(pv, r, derive_seed(seed, "iter", t))
            w = _subsampled_dual_solve(a, b, lam, plan)
            z = z + w
        wall_ms[t - 1] = (time.perf_counter() - t0) * 1e3
        if errors is not None:
            beta_t = a.T @ z / lam
            errors[t - 1] = float(np.linalg.norm(beta_t - exact_beta)) / exact_norm
    beta = a.T @ z / lam
    trace = IterationTrace(residual_norms=residual_norms, wall_ms=wall_ms, errors=errors)
    return z, beta, trace


def two_step(
    inst: ProblemInstance,
    cfg: IterativeConfig,
    exact_beta=None,
    z0=None,
    precond=None,
    method="NOPL",
    pilot_probs=None,
):
    """Pilot-then-refine iterative solver.

    Step one builds a preconditioner C: by default the explicit inverse of an
    r0-column pilot Gram (squared-column-norm draws); pass precond to supply
    a better C, e.g. the exact inverse, in which case the pilot draw is
    skipped. Step two runs m refinement iterations; each iteration estimates
    the residual problem's coefficients through C, reweights features by
    |coefficient| * column norm, and applies the one-shot subsampled solver
    to the residual with a fresh plan.

    exact_beta turns on per-iteration error tracking in the returned trace.
    z0 overrides the zero start (diagnostic hook: starting at the exact dual
    solution must be a fixed point). pilot_probs optionally supplies the
    pilot's squared-column-norm distribution precomputed (see
    pilot_preconditioner). A pilot whose coefficient estimate vanishes on a
    nonzero residual raises, naming the iteration; a positive cfg.theta
    instead mixes in the uniform floor and proceeds.
    """
    a, y, lam = inst.a, inst.y, inst.lam
    if precond is None:
        c, _pilot_plan = pilot_preconditioner(
            inst, cfg.r0, derive_seed(cfg.seed, "pilot"), probs=pilot_probs
        )
    else:
        c = np.asarray(precond, dtype=float)
    norms = column_norms(a)

    def next_probs(t, b):
        ztil = lam * (c @ b)
        btil = a.T @ ztil / lam
        weights = np.abs(btil) * norms
        if not weights.sum() > 0:
            if cfg.theta > 0:
                pv = probs_uniform(a.shape[1])
                return ProbabilityVector(pv.probs, "NOPL")
            raise ValueError(
                f"pilot coefficient estimate vanished at iteration {t}; "
                "increase r0 or set a positive mixing floor theta"
            )
        pv = probs_coefficient_weighted(a, btil, "NOPL", col_norms=norms)
        return mix_uniform(pv, cfg.theta)

    z, beta, trace = _refinement_loop(
        a, y, lam, cfg.r, cfg.m, cfg.seed, next_probs, exact_beta, z0
    )
    return RidgeSolution(z=z, beta=beta, lam=lam, method=method, plan_seed=cfg.seed), trace


def refine_fixed(inst: ProblemInstance, pv: ProbabilityVector, r, m, seed, exact_beta=None, z0=None):
    """Residual refinement with a fixed probability vector.

    Same recursion as two_step but the per-iteration reweighting is dropped:
    every iteration draws a fresh plan from the same pv. This is the
    benchmark protocol for the static schemes (UNI/COL/LEV/RLEV and the
    exact-coefficient weighting).
    """
    z, beta, trace = _refinement_loop(
        inst.a, inst.y, inst.lam, r, m, seed, lambda t, b: pv, exact_beta, z0
    )
    return (
        RidgeSolution(z=z, beta=beta, lam=inst.lam, method=pv.method, plan_seed=int(seed)),
        trace,
    )
