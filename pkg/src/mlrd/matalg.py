"""Small dense-matrix kernel used by the normalizations.

All functions take and return ``numpy.ndarray`` values and never mutate their
inputs. Matrices are tiny (d <= 6 in practice), so clarity wins over speed.
"""

import numpy as np
import scipy.linalg

from .errors import DomainError, FactorizationError

PD_EPS = 1e-12
SYMMETRY_TOL = 1e-8


def as_square(S, name="matrix"):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise DomainError(f"{name} must be a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise DomainError(f"{name} has non-finite entries")
    return S


def max_abs(M):
    return float(np.max(np.abs(M))) if np.size(M) else 0.0


def frobenius(M):
    return float(np.linalg.norm(M, "fro"))


def diag_power(G, a):
    """Return ``a**G = diag(a**g_1, ..., a**g_d)`` for a diagonal exponent.

    ``G`` may be given as the exponent vector or as a diagonal matrix.
    """
    if not a > 0:
        raise DomainError(f"diag_power needs a > 0, got {a}")
    g = np.asarray(G, dtype=float)
    if g.ndim == 2:
        g = np.diag(g)
    return np.diag(np.power(float(a), g))


def _check_symmetric(S):
    scale = max(max_abs(S), np.finfo(float).tiny)
    asym = max_abs(S - S.T) / scale
    if asym > SYMMETRY_TOL:
        raise FactorizationError(f"matrix is not symmetric (relative asymmetry {asym:.3e})")


def sym_inv_sqrt(S, eps=PD_EPS):
    """Symmetric inverse square root ``M`` with ``M @ S @ M = I``.

    Uses the eigendecomposition of the symmetrized input. Raises
    :class:`FactorizationError` when ``S`` is not symmetric or its smallest
    eigenvalue does not exceed ``eps`` times the largest one.
    """
    S = as_square(S)
    _check_symmetric(S)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    lam_max = float(np.max(np.abs(w)))
    if lam_max == 0.0 or w[0] <= eps * lam_max:
        raise FactorizationError(
            f"matrix is not positive definite: eigenvalue {w[0]:.6e} "
            f"(largest {lam_max:.6e}, relative threshold {eps:g})"
        )
    M = (V / np.sqrt(w)) @ V.T
    return 0.5 * (M + M.T)


def upper_factor(S, eps=PD_EPS):
    """Upper-triangular ``A`` with positive diagonal and ``A @ A.T = S``.

    Computed as a Cholesky factorization of the index-reversed matrix, reversed
    back; the positive diagonal makes the factor unique.
    """
    S = as_square(S)
    _check_symmetric(S)
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    lam_max = float(np.max(np.abs(w)))
    if lam_max == 0.0 or w[0] <= eps * lam_max:
        raise FactorizationError(
            f"matrix is not positive definite: eigenvalue {w[0]:.6e} (largest {lam_max:.6e})"
        )
    J = S[::-1, ::-1]
    try:
        L = np.linalg.cholesky(0.5 * (J + J.T))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"Cholesky factorization failed: {exc}") from None
    return np.triu(L[::-1, ::-1])


def upper_inverse(U):
    """Inverse of an invertible upper-triangular matrix (exactly upper triangular)."""
    U = as_square(U)
    if np.any(np.diag(U) == 0):
        raise FactorizationError("triangular matrix is singular")
    return np.triu(scipy.linalg.solve_triangular(U, np.eye(U.shape[0]), lower=False))


def sign_matrix(d):
    """``diag((-1)**1, ..., (-1)**d)`` with 1-based indices, so ``P M P`` carries ``(-1)**(l+m)``."""
    return np.diag([(-1.0) ** (i + 1) for i in range(d)])


def random_spd(d, rng, condition=100.0):
    """Seeded random SPD matrix with controlled condition number (for tests and probes)."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(rng.uniform(0.0, np.log(condition), size=d))
    return (Q * w) @ Q.T
