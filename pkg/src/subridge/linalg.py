"""Dense kernels: SPD solves, thin SVD, exact and column-subsampled Gram matrices.

Matrices are plain float64 numpy arrays. The design matrix convention is
n rows (observations) by p columns (features), typically with p much larger
than n, so every Gram matrix here is the small n-by-n variant A A^T.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD truncated at numerical rank.

    u: n-by-rank, orthonormal columns
    singular_values: length rank, strictly positive, non-increasing
    v: p-by-rank, orthonormal columns (right singular vectors)
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    rank: int


def _as_matrix(a, name="a"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    if a.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return a


def spd_solve(m, b):
    """Solve m @ x = b for symmetric positive definite m via Cholesky.

    No jitter is added: a non-SPD input is an error, not something to paper
    over, since it signals a bad ridge shift or a corrupted Gram matrix.
    """
    m = _as_matrix(m, "m")
    b = np.asarray(b, dtype=float)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"m must be square, got shape {m.shape}")
    if b.shape[0] != m.shape[0]:
        raise ValueError(
            f"dimension mismatch: m is {m.shape[0]}x{m.shape[1]}, b has leading dim {b.shape[0]}"
        )
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "matrix is not positive definite; check that the ridge shift is positive "
            "and the Gram matrix is intact"
        ) from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def spd_inverse(m):
    """Explicit inverse of a symmetric positive definite matrix."""
    inv = spd_solve(m, np.eye(m.shape[0] if hasattr(m, "shape") else len(m)))
    return (inv + inv.T) / 2.0


def thin_svd(a) -> SvdFactors:
    """Thin SVD of a, truncated at numerical rank.

    The rank cut keeps singular values above max(n, p) * eps * sigma_1.
    An all-zero matrix has no usable factorization and raises.
    """
    a = _as_matrix(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        raise ValueError("zero matrix: numerical rank 0, thin SVD undefined")
    cut = max(a.shape) * np.finfo(float).eps * s[0]
    rank = int(np.count_nonzero(s > cut))
    return SvdFactors(
        u=u[:, :rank].copy(),
        singular_values=s[:rank].copy(),
        v=vt[:rank].T.copy(),
        rank=rank,
    )


def gram(a, lam):
    """Ridge-shifted Gram matrix A A^T + lam * I. Requires lam > 0."""
    a = _as_matrix(a)
    if not lam > 0:
        raise ValueError(f"ridge shift must be positive, got {lam}")
    g = a @ a.T
    g = (g + g.T) / 2.0
    g[np.diag_indices_from(g)] += lam
    return g


def gathered_columns(a, plan):
    """n-by-r buffer of the drawn columns, each scaled by its plan weight.

    This is the only materialization the subsampled Gram needs; the implicit
    p-by-r selection operator is never formed.
    """
    a = _as_matrix(a)
    p = a.shape[1]
    draws = np.asarray(plan.draws)
    if draws.ndim != 1 or draws.size != plan.r:
        raise ValueError("malformed plan: draws must be a length-r index vector")
    if draws.size == 0:
        raise ValueError("malformed plan: empty draws")
    if draws.min() < 0 or draws.max() >= p:
        raise ValueError(
            f"plan index out of range: draws must lie in [0, {p}), got "
            f"[{draws.min()}, {draws.max()}]"
        )
    probs = plan.probs.probs
    if probs.shape[0] != p:
        raise ValueError(
            f"plan was built for p={probs.shape[0]} features, matrix has p={p}"
        )
    pi = probs[draws]
    if np.any(pi <= 0):
        raise ValueError("plan draws an index with zero probability")
    expected = 1.0 / np.sqrt(plan.r * pi)
    if not np.array_equal(plan.weights, expected):
        raise ValueError("plan weights inconsistent with its probabilities and r")
    return a[:, draws] * plan.weights[np.newaxis, :]


def sampled_gram(a, plan, lam):
    """Column-subsampled Gram estimate (1/r) sum_t A_it A_it^T / pi_it + lam I.

    Built by gathering the r drawn columns, scaled by 1 / sqrt(r * pi), into
    an n-by-r buffer and forming its outer product: O(n^2 r) work, O(n r)
    extra memory. lam = 0 is allowed here (unbiasedness checks against the
    plain Gram need it); negative shifts are not.
    """
    if lam < 0:
        raise ValueError(f"ridge shift must be nonnegative, got {lam}")
    b = gathered_columns(a, plan)
    g = b @ b.T
    g = (g + g.T) / 2.0
    if lam > 0:
        g[np.diag_indices_from(g)] += lam
    return g
