"""Error metrics, the sampling-variance formulas, and Monte-Carlo checks.

The checks are statistical gates: each runs a seeded experiment, compares an
empirical quantity against a formula or bound, and returns a CheckReport
stating pass/fail plus what was observed. Thresholds are part of the contract
and are not loosened at call time.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .linalg import thin_svd
from .sampling import (
    ProbabilityVector,
    draw_plan,
    probs_coefficient_weighted,
    probs_for_method,
    recommended_sample_size,
)
from .solvers import (
    IterativeConfig,
    ProblemInstance,
    ridge_exact,
    subsampled_ridge,
    two_step,
)
from .util import derive_seed

MIN_VARIANCE_REPS = 500


def estimation_error(beta_hat, beta_exact) -> float:
    """Relative coefficient error ||beta_hat - beta_exact|| / ||beta_exact||."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_exact = np.asarray(beta_exact, dtype=float)
    denom = np.linalg.norm(beta_exact)
    if denom == 0.0:
        raise ValueError("exact coefficients are identically zero; relative error undefined")
    return float(np.linalg.norm(beta_hat - beta_exact) / denom)


def prediction_error(a, beta_hat, beta_exact) -> float:
    """Relative in-sample fit error ||A beta_hat - A beta_exact|| / ||A beta_exact||."""
    a = np.asarray(a, dtype=float)
    fit_exact = a @ np.asarray(beta_exact, dtype=float)
    denom = np.linalg.norm(fit_exact)
    if denom == 0.0:
        raise ValueError("exact fit is identically zero; relative error undefined")
    return float(np.linalg.norm(a @ np.asarray(beta_hat, dtype=float) - fit_exact) / denom)


def _weight_ratios(beta_exact, sq_col_norms, probs):
    """beta_i^2 * ||A_i||^2 / pi_i with the 0/0 -> 0 convention.

    A zero numerator contributes nothing regardless of pi_i; a positive
    numerator over pi_i = 0 is an error (that feature can never be drawn yet
    carries variance).
    """
    numer = beta_exact**2 * sq_col_norms
    pi = np.asarray(probs, dtype=float)
    bad = (numer > 0) & (pi == 0)
    if np.any(bad):
        raise ValueError(
            f"probability is zero at feature index {int(np.flatnonzero(bad)[0])} "
            "(1-based: add 1) where the variance numerator is positive"
        )
    out = np.zeros_like(numer)
    nz = numer > 0
    out[nz] = numer[nz] / pi[nz]
    return out


def variance_trace(a, beta_exact, pv: ProbabilityVector, lam) -> float:
    """trace of the per-draw variance core:
    (lam^2 / p^2) * sum_i beta_i^2 ||A_i||^2 / pi_i."""
    a = np.asarray(a, dtype=float)
    beta_exact = np.asarray(beta_exact, dtype=float)
    p = a.shape[1]
    sq = np.einsum("ij,ij->j", a, a)
    ratios = _weight_ratios(beta_exact, sq, pv.probs)
    return float(lam**2 / p**2 * ratios.sum())


def variance_trace_lower_bound(a, beta_exact, lam) -> float:
    """Closed-form minimum of variance_trace over all probability vectors:
    (lam^2 / p^2) * (sum_i |beta_i| ||A_i||)^2, attained by the
    |coefficient| * column-norm weighting."""
    a = np.asarray(a, dtype=float)
    beta_exact = np.asarray(beta_exact, dtype=float)
    p = a.shape[1]
    norms = np.sqrt(np.einsum("ij,ij->j", a, a))
    total = float(np.abs(beta_exact) @ norms)
    return float(lam**2 / p**2 * total**2)


@dataclass(frozen=True)
class AsymptoticVariance:
    """core: covariance of the per-draw dual residual contribution;
    covariance: sandwiched large-r covariance of the dual estimate;
    core_trace: trace of core (matches variance_trace)."""

    core: np.ndarray
    covariance: np.ndarray
    core_trace: float


def asymptotic_variance(a, z_star, pv: ProbabilityVector, lam, r) -> AsymptoticVariance:
    """Large-r covariance of the one-shot dual estimate around z_star.

    core = (lam^2 / p^2) sum_i beta_i^2 A_i A_i^T / pi_i with
    beta = A^T z_star / lam, and
    covariance = (M/p)^{-1} (core / r) (M/p)^{-1}, M = A A^T + lam I.
    """
    a = np.asarray(a, dtype=float)
    z_star = np.asarray(z_star, dtype=float)
    if r < 1:
        raise ValueError(f"sample size must be at least 1, got r={r}")
    n, p = a.shape
    beta = a.T @ z_star / lam
    sq = np.einsum("ij,ij->j", a, a)
    ratios = _weight_ratios(beta, sq, pv.probs)
    # sum_i w_i A_i A_i^T with w_i = beta_i^2 / pi_i (zero-numerator safe)
    w = np.zeros(p)
    nz = (beta**2 * sq) > 0
    w[nz] = beta[nz] ** 2 / pv.probs[nz]
    core = lam**2 / p**2 * ((a * w) @ a.T)
    core = (core + core.T) / 2.0
    m_scaled = (a @ a.T + lam * np.eye(n)) / p
    inv = np.linalg.inv(m_scaled)
    cov = inv @ (core / r) @ inv
    cov = (cov + cov.T) / 2.0
    core_trace = float(lam**2 / p**2 * ratios.sum())
    return AsymptoticVariance(core=core, covariance=cov, core_trace=core_trace)


def finite_sample_covariance(a, z_star, pv: ProbabilityVector, lam, r):
    """Exact covariance of the one-shot dual estimate around z_star.

    The large-r formula keeps only the second moment of the per-draw term; its
    mean A A^T z_star is not zero, so the exact per-draw variance is the second
    moment minus the rank-one outer product of that mean. On designs whose
    columns all point along one dominant direction the subtraction cancels
    almost everything, which makes this the quantity an empirical covariance
    actually converges to, while the uncentered formula can overstate it by
    orders of magnitude. Returns the sandwiched, r-scaled covariance.
    """
    a = np.asarray(a, dtype=float)
    z_star = np.asarray(z_star, dtype=float)
    n, p = a.shape
    uncentered = asymptotic_variance(a, z_star, pv, lam, r).core
    mean = a @ (a.T @ z_star)
    centered = uncentered - np.outer(mean, mean) / p**2
    m_scaled = (a @ a.T + lam * np.eye(n)) / p
    inv = np.linalg.inv(m_scaled)
    cov = inv @ (centered / r) @ inv
    return (cov + cov.T) / 2.0


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    observed: float
    threshold: float
    sizes: dict
    seed: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "observed": self.observed,
            "threshold": self.threshold,
            "sizes": self.sizes,
            "seed": self.seed,
            "details": self.details,
        }


def _inv_sqrt_psd(m, rel_cut=1e-12):
    vals, vecs = np.linalg.eigh(m)
    top = vals.max() if vals.size else 0.0
    keep = vals > rel_cut * max(top, 0.0)
    inv_sqrt = np.zeros_like(vals)
    inv_sqrt[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv_sqrt) @ vecs.T


def mc_variance_check(
    inst: ProblemInstance, pv: ProbabilityVector, r, reps, seed, threshold=0.15
) -> CheckReport:
    """Empirical covariance of (z_hat - z_star) vs the asymptotic formula.

    Runs the one-shot solver reps times with independent plans and compares
    the sample covariance to finite_sample_covariance in relative Frobenius
    distance (the uncentered large-r formula keeps the per-draw mean and is
    reported in details for reference; it is not what the sample covariance
    estimates). Also reports the worst standardized skewness/excess kurtosis.
    Requires reps >= 500 (and > n); fewer make the sample covariance too
    noisy or outright singular to say anything.
    """
    reps = int(reps)
    if reps < MIN_VARIANCE_REPS:
        raise ValueError(f"reps must be at least {MIN_VARIANCE_REPS}, got {reps}")
    if reps <= inst.n:
        raise ValueError(f"reps={reps} must exceed n={inst.n} for a full-rank covariance")
    exact = ridge_exact(inst)
    formula = finite_sample_covariance(inst.a, exact.z, pv, inst.lam, r)
    upper = asymptotic_variance(inst.a, exact.z, pv, inst.lam, r).covariance
    devs = np.empty((reps, inst.n))
    for k in range(reps):
        plan = draw_plan(pv, r, derive_seed(seed, "mc-variance", k))
        devs[k] = subsampled_ridge(inst, plan).z - exact.z
    emp = np.cov(devs, rowvar=False, ddof=1)
    emp = np.atleast_2d(emp)
    fnorm = float(np.linalg.norm(formula))
    unorm = float(np.linalg.norm(upper))
    # centering may cancel the second moment to round-off dust; at that point
    # the per-draw term is numerically constant and the estimator deterministic
    tiny = 1e-12 * unorm
    if fnorm <= tiny:
        dist = 0.0 if float(np.linalg.norm(emp)) <= tiny else np.inf
        dist_upper = skew_max = kurt_max = 0.0
    else:
        dist = float(np.linalg.norm(emp - formula) / fnorm)
        dist_upper = float(np.linalg.norm(emp - upper) / unorm)
        std = devs @ _inv_sqrt_psd(formula).T
        skew_max = float(np.max(np.abs(scipy.stats.skew(std, axis=0))))
        kurt_max = float(np.max(np.abs(scipy.stats.kurtosis(std, axis=0))))
    return CheckReport(
        name="mc-variance",
        passed=bool(dist <= threshold),
        observed=dist,
        threshold=threshold,
        sizes={"n": inst.n, "p": inst.p, "r": int(r), "reps": reps},
        seed=int(seed),
        details={
            "max_abs_skewness": skew_max,
            "max_abs_excess_kurtosis": kurt_max,
            "dist_to_uncentered_formula": dist_upper,
        },
    )


def trace_minimality_check(inst: ProblemInstance, trials, seed, slack=1e-12) -> CheckReport:
    """The |coefficient| * column-norm weighting must not lose to any of
    `trials` random fully-supported probability vectors on the variance trace."""
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    exact = ridge_exact(inst)
    opt = probs_coefficient_weighted(inst.a, exact.beta, "OPL")
    t_opt = variance_trace(inst.a, exact.beta, opt, inst.lam)
    rng = np.random.default_rng(seed)
    t_min = np.inf
    for _ in range(trials):
        pi = rng.dirichlet(np.ones(inst.p))
        pv = ProbabilityVector(pi / pi.sum(), "CUSTOM")
        t_min = min(t_min, variance_trace(inst.a, exact.beta, pv, inst.lam))
    tol = slack * max(1.0, abs(t_opt))
    return CheckReport(
        name="trace-minimality",
        passed=bool(t_opt <= t_min + tol),
        observed=float(t_opt),
        threshold=float(t_min),
        sizes={"n": inst.n, "p": inst.p, "trials": trials},
        seed=int(seed),
        details={"lower_bound": variance_trace_lower_bound(inst.a, exact.beta, inst.lam)},
    )


def error_bound_check(
    inst: ProblemInstance,
    eps,
    delta,
    reps,
    seed,
    scheme="OPL",
    kappa=1.0,
    r=None,
) -> CheckReport:
    """Violation frequency of the relative-error guarantee.

    Runs the one-shot solver reps times at sample size r (default: the
    recommended size for (rank, eps, delta, kappa), capped at p) and passes
    iff the fraction of runs with estimation error > eps stays within delta
    plus three binomial standard deviations.
    """
    reps = int(reps)
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    exact = ridge_exact(inst)
    svd = thin_svd(inst.a)
    pv = probs_for_method(scheme, inst.a, svd=svd, lam=inst.lam, coef=exact.beta)
    if r is None:
        r = min(recommended_sample_size(svd.rank, eps, delta, kappa), inst.p)
    r = int(r)
    violations = 0
    errs = np.empty(reps)
    for k in range(reps):
        plan = draw_plan(pv, r, derive_seed(seed, "error-bound", k))
        errs[k] = estimation_error(subsampled_ridge(inst, plan).beta, exact.beta)
        violations += errs[k] > eps
    frac = violations / reps
    slack = 3.0 * float(np.sqrt(delta * (1.0 - delta) / reps))
    return CheckReport(
        name="error-bound",
        passed=bool(frac <= delta + slack),
        observed=float(frac),
        threshold=float(delta + slack),
        sizes={"n": inst.n, "p": inst.p, "r": r, "reps": reps},
        seed=int(seed),
        details={
            "eps": float(eps),
            "delta": float(delta),
            "kappa": float(kappa),
            "max_error": float(errs.max()),
            "empirical_eps": float(np.quantile(errs, 1.0 - delta)),
        },
    )


@dataclass(frozen=True)
class RiskResult:
    """Monte-Carlo in-sample risk of an estimator against the exact solver.

    risk and risk_exact average ||A beta_hat - A beta_true||^2 / n over fresh
    standard-normal noise; bound(eps) assembles
    risk_exact + (3 eps / n) ||A||_2^2 (mu^2 + ||beta_true||^2) with
    mu^2 = sum_j sigma_j^2 / (sigma_j^2 + lam)^2.
    """

    risk: float
    risk_exact: float
    mu: float
    spectral_sq: float
    beta_true_sq: float
    n: int
    reps: int

    def bound(self, eps) -> float:
        return self.risk_exact + (3.0 * eps / self.n) * self.spectral_sq * (
            self.mu**2 + self.beta_true_sq
        )


def decay_check(
    inst: ProblemInstance,
    r,
    r0,
    m_max,
    n_seeds,
    seed,
    ratio_bound=0.9,
    ratio_iters=4,
    floor=1e-13,
) -> CheckReport:
    """Geometric decay of the iterative solver's error in the iteration count.

    Runs the pilot-driven solver n_seeds times with m_max iterations and per-
    iteration error tracking and takes the median error per iteration across
    seeds. Decay is asserted only while the medians sit above `floor`: the
    solver reaches the float64 round-off plateau (~1e-15 relative) within a
    few iterations at realistic sizes, and below the floor the medians jitter
    by round-off and carry no decay signal. Passes iff the medians are
    non-increasing down to the plateau and each of the first ratio_iters
    pre-plateau steps contracts by at least ratio_bound.
    """
    n_seeds = int(n_seeds)
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be at least 1, got {n_seeds}")
    exact = ridge_exact(inst)
    errors = np.empty((n_seeds, int(m_max)))
    for k in range(n_seeds):
        cfg = IterativeConfig(
            r=int(r), r0=int(r0), m=int(m_max), seed=derive_seed(seed, "decay", k)
        )
        _, trace = two_step(inst, cfg, exact_beta=exact.beta)
        errors[k] = trace.errors
    medians = np.median(errors, axis=0)
    above = medians > floor
    converged_at = int(np.argmax(~above)) if not above.all() else len(medians)
    # monotone up to and including the first at-plateau iteration
    upto = min(converged_at + 1, len(medians))
    monotone = bool(np.all(np.diff(medians[:upto]) <= 0))
    n_ratios = min(int(ratio_iters), upto - 1)
    ratios = medians[1 : n_ratios + 1] / medians[:n_ratios]
    worst_ratio = float(ratios.max()) if n_ratios > 0 else 0.0
    return CheckReport(
        name="decay",
        passed=bool(monotone and worst_ratio <= ratio_bound),
        observed=worst_ratio,
        threshold=float(ratio_bound),
        sizes={"n": inst.n, "p": inst.p, "r": int(r), "r0": int(r0), "m": int(m_max), "seeds": n_seeds},
        seed=int(seed),
        details={
            "medians": medians.tolist(),
            "monotone": monotone,
            "floor": float(floor),
            "iterations_above_floor": converged_at,
        },
    )


def risk_mc(a, beta_true, lam, estimator, reps, seed) -> RiskResult:
    """Estimate in-sample risk by Monte Carlo over the noise.

    Each rep draws y = A beta_true + noise with fresh standard-normal noise,
    runs `estimator(inst, rep_seed) -> RidgeSolution` and the exact solver on
    the same y, and accumulates squared fit errors against A beta_true.
    """
    reps = int(reps)
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    a = np.asarray(a, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    n = a.shape[0]
    signal = a @ beta_true
    sse = 0.0
    sse_exact = 0.0
    for k in range(reps):
        rng = np.random.default_rng(derive_seed(seed, "risk-noise", k))
        y = signal + rng.standard_normal(n)
        inst = ProblemInstance(a, y, lam)
        sol = estimator(inst, derive_seed(seed, "risk-est", k))
        exact = ridge_exact(inst)
        sse += float(np.sum((a @ sol.beta - signal) ** 2))
        sse_exact += float(np.sum((a @ exact.beta - signal) ** 2))
    svals = thin_svd(a).singular_values
    mu = float(np.sqrt(np.sum(svals**2 / (svals**2 + lam) ** 2)))
    spectral_sq = float(svals[0] ** 2)
    return RiskResult(
        risk=sse / (n * reps),
        risk_exact=sse_exact / (n * reps),
        mu=mu,
        spectral_sq=spectral_sq,
        beta_true_sq=float(beta_true @ beta_true),
        n=n,
        reps=reps,
    )


def risk_bound_check(a, beta_true, lam, reps, seed, scheme="OPL", delta=0.1, kappa=1.0) -> CheckReport:
    """One-sided risk gate: MC risk of the one-shot subsampled estimator must
    not exceed the exact risk plus the eps-inflation term, with eps measured
    empirically as the (1 - delta) quantile of the estimator's own relative
    errors across the same reps."""
    a = np.asarray(a, dtype=float)
    svd = thin_svd(a)
    p = a.shape[1]
    r = min(recommended_sample_size(svd.rank, 0.5, delta, kappa), p)
    errors = []

    def estimator(inst, rep_seed):
        exact = ridge_exact(inst)
        pv = probs_for_method(scheme, inst.a, svd=svd, lam=inst.lam, coef=exact.beta)
        sol = subsampled_ridge(inst, draw_plan(pv, r, rep_seed))
        errors.append(estimation_error(sol.beta, exact.beta))
        return sol

    result = risk_mc(a, beta_true, lam, estimator, reps, seed)
    eps_emp = float(np.quantile(np.asarray(errors), 1.0 - delta))
    bound = result.bound(eps_emp)
    return CheckReport(
        name="risk-bound",
        passed=bool(result.risk <= bound),
        observed=float(result.risk),
        threshold=float(bound),
        sizes={"n": result.n, "p": p, "r": r, "reps": int(reps)},
        seed=int(seed),
        details={
            "risk_exact": result.risk_exact,
            "eps_empirical": eps_emp,
            "mu": result.mu,
        },
    )
