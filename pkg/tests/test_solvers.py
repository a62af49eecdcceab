import numpy as np
import pytest

from subridge.linalg import gram, spd_inverse
from subridge.sampling import probs_column, probs_for_method
from subridge.solvers import (
    IterativeConfig,
    ProblemInstance,
    iterations_needed,
    pilot_preconditioner,
    refine_fixed,
    ridge_exact,
    subsampled_ridge,
    two_step,
)
from subridge.sampling import draw_plan
from subridge.util import derive_seed


def test_problem_instance_validation():
    with pytest.raises(ValueError, match="non-empty 2-d"):
        ProblemInstance(np.empty((0, 3)), np.empty(0), 1.0)
    with pytest.raises(ValueError, match="length-2 vector"):
        ProblemInstance(np.ones((2, 5)), np.ones(3), 1.0)
    with pytest.raises(ValueError, match="must be positive"):
        ProblemInstance(np.ones((2, 5)), np.ones(2), 0.0)
    with pytest.raises(ValueError, match="non-finite"):
        ProblemInstance(np.array([[1.0, np.inf, 0.0]]), np.ones(1), 1.0)


def test_problem_instance_warns_when_not_wide():
    with pytest.warns(UserWarning, match="not the natural regime"):
        ProblemInstance(np.eye(3), np.ones(3), 1.0)


def test_problem_instance_shapes(worked):
    assert worked.n == 2
    assert worked.p == 3
    assert worked.a.dtype == float


def test_ridge_exact_worked(worked):
    sol = ridge_exact(worked)
    assert sol.method == "EXACT"
    assert np.allclose(sol.z, [0.5, 0.5], atol=1e-12)
    assert np.allclose(sol.beta, [0.5, 0.5, 0.0], atol=1e-12)
    assert sol.lam == 1.0


def test_ridge_exact_matches_primal_form():
    rng = np.random.default_rng(20)
    for k in range(30):
        n = int(rng.integers(1, 9))
        p = int(rng.integers(n + 1, 40))
        a = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        lam = [0.1, 1.0, 10.0][k % 3]
        beta = ridge_exact(ProblemInstance(a, y, lam)).beta
        primal = np.linalg.solve(a.T @ a + lam * np.eye(p), a.T @ y)
        assert np.linalg.norm(beta - primal) <= 1e-8 * max(1.0, np.linalg.norm(primal))


def test_subsampled_ridge_exact_when_plan_covers_support(worked):
    # seed 1 draws both nonzero columns once; the sampled Gram then equals
    # the exact shifted Gram, so the estimate is exact
    pv = probs_column(worked.a)
    plan = draw_plan(pv, 2, 1)
    assert sorted(plan.draws.tolist()) == [0, 1]
    sol = subsampled_ridge(worked, plan)
    assert sol.method == "COL"
    assert sol.plan_seed == 1
    assert np.allclose(sol.beta, [0.5, 0.5, 0.0], atol=1e-12)


def test_subsampled_ridge_stays_near_exact_in_median():
    rng = np.random.default_rng(21)
    a = rng.standard_normal((6, 120))
    y = rng.standard_normal(6)
    inst = ProblemInstance(a, y, 1.0)
    exact = ridge_exact(inst)
    pv = probs_for_method("OPL", a, coef=exact.beta)
    errs = []
    for k in range(30):
        sol = subsampled_ridge(inst, draw_plan(pv, 120, derive_seed(22, k)))
        errs.append(np.linalg.norm(sol.beta - exact.beta) / np.linalg.norm(exact.beta))
    assert np.median(errs) < 0.5


def test_pilot_preconditioner_worked(worked):
    c, plan = pilot_preconditioner(worked, 2, 1)
    assert sorted(plan.draws.tolist()) == [0, 1]
    assert np.allclose(c, 0.5 * np.eye(2), atol=1e-12)


def test_pilot_preconditioner_accepts_precomputed_distribution(worked):
    # supplying the column-norm distribution must not change a single draw
    c_default, plan_default = pilot_preconditioner(worked, 2, 1)
    pv = probs_for_method("COL", worked.a)
    pv.table()
    c_shared, plan_shared = pilot_preconditioner(worked, 2, 1, probs=pv)
    assert np.array_equal(plan_shared.draws, plan_default.draws)
    assert np.array_equal(c_shared, c_default)
    with pytest.raises(ValueError, match="pilot distribution covers 2 features"):
        pilot_preconditioner(worked, 2, 1, probs=probs_for_method("UNI", np.ones((2, 2))))


def test_iterations_needed_oracles():
    assert iterations_needed(0.5, 1e-3) == 10
    assert iterations_needed(0.1, 0.01) == 2
    assert iterations_needed(0.3, 0.3) == 1


def test_iterations_needed_validation():
    with pytest.raises(ValueError, match=r"step factor must lie in \(0, 1\)"):
        iterations_needed(1.0, 0.5)
    with pytest.raises(ValueError, match=r"target must lie in \(0, 1\)"):
        iterations_needed(0.5, 1.0)


def test_iterative_config_validation():
    with pytest.raises(ValueError, match="r must be at least 1"):
        IterativeConfig(r=0, r0=1, m=1, seed=0)
    with pytest.raises(ValueError, match="r0 must be at least 1"):
        IterativeConfig(r=1, r0=0, m=1, seed=0)
    with pytest.raises(ValueError, match="m must be at least 1"):
        IterativeConfig(r=1, r0=1, m=0, seed=0)
    with pytest.raises(ValueError, match=r"theta must lie in \[0, 1\)"):
        IterativeConfig(r=1, r0=1, m=1, seed=0, theta=1.0)


def test_two_step_exact_after_one_iteration_with_exact_preconditioner(worked):
    # with C the exact inverse the reweighting recovers the exact
    # coefficient profile, and seed 2 draws both nonzero columns, so a
    # single iteration lands on the exact solution
    precond = spd_inverse(gram(worked.a, worked.lam))
    cfg = IterativeConfig(r=2, r0=1, m=1, seed=2)
    sol, trace = two_step(worked, cfg, precond=precond, method="OPL")
    assert sol.method == "OPL"
    assert np.isclose(trace.residual_norms[0], np.sqrt(2.0), atol=1e-15)
    assert np.allclose(sol.beta, [0.5, 0.5, 0.0], atol=1e-12)


def test_two_step_fixed_point_short_circuits(worked):
    # starting at the exact dual vector the residual is exactly zero, no
    # draw happens, and every iteration is a no-op
    cfg = IterativeConfig(r=2, r0=1, m=3, seed=0)
    sol, trace = two_step(worked, cfg, z0=np.array([0.5, 0.5]))
    assert np.array_equal(sol.z, [0.5, 0.5])
    assert np.array_equal(sol.beta, [0.5, 0.5, 0.0])
    assert np.all(trace.residual_norms == 0.0)


def test_two_step_zero_response_is_a_fixed_point(worked):
    inst = ProblemInstance(worked.a, np.zeros(2), 1.0)
    sol, trace = two_step(inst, IterativeConfig(r=2, r0=2, m=3, seed=5))
    assert np.array_equal(sol.beta, np.zeros(3))
    assert np.all(trace.residual_norms == 0.0)


def test_two_step_vanishing_pilot_raises_or_mixes():
    # second row and last two columns are zero; the pilot sees only the
    # first column, whose estimated coefficient is zero for this response
    a = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    y = np.array([0.0, 1.0])
    inst = ProblemInstance(a, y, 1.0)
    cfg = IterativeConfig(r=2, r0=2, m=1, seed=3)
    with pytest.raises(ValueError, match="vanished at iteration 1"):
        two_step(inst, cfg)
    mixed = IterativeConfig(r=2, r0=2, m=1, seed=3, theta=0.2)
    sol, _ = two_step(inst, mixed)
    assert sol.method == "NOPL"
    assert np.all(np.isfinite(sol.beta))


def test_two_step_rejects_zero_reference(worked):
    cfg = IterativeConfig(r=2, r0=1, m=1, seed=0)
    with pytest.raises(ValueError, match="identically zero"):
        two_step(worked, cfg, exact_beta=np.zeros(3))


def test_two_step_error_tracking_decays():
    rng = np.random.default_rng(23)
    a = rng.standard_normal((8, 200))
    y = rng.standard_normal(8)
    inst = ProblemInstance(a, y, 1.0)
    exact = ridge_exact(inst)
    finals = []
    firsts = []
    for k in range(10):
        cfg = IterativeConfig(r=120, r0=30, m=4, seed=derive_seed(24, k))
        _, trace = two_step(inst, cfg, exact_beta=exact.beta)
        assert trace.errors.shape == (4,)
        firsts.append(trace.errors[0])
        finals.append(trace.errors[-1])
    assert np.median(finals) < 0.1 * np.median(firsts)


def test_refine_fixed_reduces_error_with_iterations():
    rng = np.random.default_rng(25)
    a = rng.standard_normal((8, 80))
    y = rng.standard_normal(8)
    inst = ProblemInstance(a, y, 1.0)
    exact = ridge_exact(inst)
    pv = probs_column(a)
    firsts = []
    finals = []
    for k in range(10):
        sol, trace = refine_fixed(inst, pv, 60, 4, derive_seed(26, k), exact_beta=exact.beta)
        assert sol.method == "COL"
        firsts.append(trace.errors[0])
        finals.append(trace.errors[-1])
    assert np.median(finals) < np.median(firsts)


def test_refine_fixed_is_seed_deterministic(worked):
    pv = probs_column(worked.a)
    s1, _ = refine_fixed(worked, pv, 2, 2, 14)
    s2, _ = refine_fixed(worked, pv, 2, 2, 14)
    assert np.array_equal(s1.beta, s2.beta)
    assert s1.plan_seed == 14
