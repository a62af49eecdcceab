"""Synthetic dataset generators for the benchmark suite.

Both generators produce wide problems (n <= p required), return the true
coefficients alongside the instance, and are bit-reproducible for a fixed
seed: draws use numpy's default PCG64 generator in a fixed order, documented
per generator.
"""

from dataclasses import dataclass

import numpy as np

from .solvers import ProblemInstance


@dataclass(frozen=True)
class SyntheticDataset:
    instance: ProblemInstance
    beta_true: np.ndarray
    recipe: dict


def _check_shape(n, p):
    n, p = int(n), int(p)
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if n > p:
        raise ValueError(f"generators require n <= p, got n={n} > p={p}")
    return n, p


def prescribed_singular_values(n) -> np.ndarray:
    """Polynomial-decay spectrum sigma_j = 9 * j^{-8}, j = 1..n."""
    return 9.0 * np.arange(1, n + 1, dtype=float) ** -8.0


def gen_example1(n, p, lam, seed) -> SyntheticDataset:
    """Gaussian design with its singular values replaced by a fast polynomial
    decay, plus unit-variance response noise.

    Draw order: design base B (n x p standard normal), then beta_true
    (length p), then noise (length n). A = U_B diag(sigma) V_B^T with
    sigma_j = 9 j^{-8}; y = A beta_true + noise.
    """
    n, p = _check_shape(n, p)
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, p))
    u, _, vt = np.linalg.svd(b, full_matrices=False)
    svals = prescribed_singular_values(n)
    a = (u * svals) @ vt
    beta_true = rng.standard_normal(p)
    noise = rng.standard_normal(n)
    y = a @ beta_true + noise
    return SyntheticDataset(
        instance=ProblemInstance(a, y, lam),
        beta_true=beta_true,
        recipe={"kind": "example1", "n": n, "p": p, "lam": float(lam), "seed": int(seed)},
    )


def gen_example2(n, p, alpha, gamma, lam, seed) -> SyntheticDataset:
    """Structured low-rank-plus-noise design: A = P D Q^T + alpha * M.

    P is n x n standard normal, D is diagonal with D_ii = (1 - (i-1)/p)^i,
    Q is the p x n column-orthonormal factor from QR of a standard normal
    matrix, M is n x p standard normal. y = A beta_true + gamma * noise with
    length-n noise. Draw order: P, Q base, M, beta_true, noise.
    """
    n, p = _check_shape(n, p)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    rng = np.random.default_rng(seed)
    pmat = rng.standard_normal((n, n))
    i = np.arange(1, n + 1, dtype=float)
    d = (1.0 - (i - 1.0) / p) ** i
    q, _ = np.linalg.qr(rng.standard_normal((p, n)))
    m = rng.standard_normal((n, p))
    a = (pmat * d) @ q.T + alpha * m
    beta_true = rng.standard_normal(p)
    noise = rng.standard_normal(n)
    y = a @ beta_true + gamma * noise
    return SyntheticDataset(
        instance=ProblemInstance(a, y, lam),
        beta_true=beta_true,
        recipe={
            "kind": "example2",
            "n": n,
            "p": p,
            "alpha": float(alpha),
            "gamma": float(gamma),
            "lam": float(lam),
            "seed": int(seed),
        },
    )


def generate(spec: dict) -> SyntheticDataset:
    """Dispatch on a recipe dict, the JSON form used by configs and manifests."""
    spec = dict(spec)
    kind = spec.pop("kind", None) or spec.pop("generator", None)
    if kind == "example1":
        return gen_example1(spec["n"], spec["p"], spec["lam"], spec["seed"])
    if kind == "example2":
        return gen_example2(
            spec["n"], spec["p"], spec["alpha"], spec["gamma"], spec["lam"], spec["seed"]
        )
    raise ValueError(f"unknown generator kind {kind!r}")
