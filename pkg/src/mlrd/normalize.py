"""Matrix normalizations of partial sums and sample autocovariances.

``exact``
    ``Sigma_n^{-1}``, the symmetric inverse square root of ``Var(S_n)``.
``asymptotic``
    ``A(n)^{-1}`` with entries ``(-1)^(l+m) n^(tau d_max(l,m) - 1) a_lm``, where
    ``max(l, m)`` is the larger *index* (the smaller memory parameter under the
    ordering ``d_1 > ... > d_d``) and ``a`` is upper triangular.
``operator``
    ``B^{-1}(n)`` with entries ``n^(d_max(l,m) - 1/2)`` for autocovariances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import factorial

from .errors import ConfigurationError, DomainError
from .matalg import sign_matrix, sym_inv_sqrt, upper_factor, upper_inverse
from .model import MemoryParameters, RMatrix, coefficient_table, gamma_sequence


@dataclass(eq=False)
class ExactNormalization:
    """``Var(S_n)`` with its inverse square root.

    ``column_variances[p, q]`` is the variance that innovation channel ``q``
    contributes to coordinate ``p``; ``max_weight_share[p, q]`` is the largest
    single-innovation share of it, which must vanish for Gaussian limits.
    """

    n: int
    sigma_sq: np.ndarray
    inv_sqrt: np.ndarray
    column_variances: np.ndarray | None = None
    max_weight_share: np.ndarray | None = None


def _check_truncation(n, M):
    if M is None or int(M) < int(n):
        raise ConfigurationError(f"truncation M={M} must be at least n={n}")


def _window_sums(spec, n, M):
    """Coefficient of ``eps_j`` in ``S_n`` for ``j = 1-M .. n+M``: ``sum_{k=1}^n A_{j-k}``."""
    T = coefficient_table(spec, M)
    c = np.concatenate([np.zeros((1,) + T.shape[1:]), np.cumsum(T, axis=0)])
    # window j covers table rows j-n+M .. j-1+M (clipped); offset so rows start at j = 1-M
    N = T.shape[0]
    lo = np.clip(np.arange(N + n - 1) - n + 1, 0, N)
    hi = np.clip(np.arange(N + n - 1) + 1, 0, N)
    return c[hi] - c[lo]


def _sigma_from_gamma(g, n):
    w = (n - np.arange(1, n))[:, None, None]
    tail = np.sum(w * g[1:n], axis=0)
    return n * g[0] + tail + tail.T


def exact_sigma_sq(spec, n, M=None, route="gamma"):
    """``Var(S_n)`` for the truncated process.

    ``route="coefficients"`` sums squared window sums of the coefficients;
    ``route="gamma"`` assembles ``n gamma(0) + sum_k (n-k)(gamma(k) + gamma(k)^T)``.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be positive")
    if spec.kind == "white_noise":
        return n * np.eye(spec.d)
    if spec.kind == "gaussian_diagonal":
        return _sigma_from_gamma(gamma_sequence(spec, n - 1), n)
    _check_truncation(n, M)
    if route == "coefficients":
        W = _window_sums(spec, n, int(M))
        S = np.einsum("jlq,jmq->lm", W, W)
    elif route == "gamma":
        S = _sigma_from_gamma(gamma_sequence(spec, n - 1, int(M)), n)
    else:
        raise DomainError(f"unknown route {route!r}")
    return 0.5 * (S + S.T)


def exact_normalizer(sigma_sq):
    return sym_inv_sqrt(sigma_sq)


def exact_normalization(spec, n, M=None):
    """Full :class:`ExactNormalization`, including the per-channel diagnostics for linear specs."""
    S = exact_sigma_sq(spec, n, M)
    cv = share = None
    if spec.kind == "linear_lrd":
        W = _window_sums(spec, int(n), int(M))
        cv = np.sum(W ** 2, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(cv > 0, np.max(W ** 2, axis=0) / cv, 0.0)
    return ExactNormalization(int(n), S, exact_normalizer(S), cv, share)


def x_matrix(R, memory, tau):
    """``x_ij = tau! (R_ij^tau + R_ji^tau) / ((2 - tau(d_i+d_j)) (1 - tau(d_i+d_j)))``."""
    R = R.entries if isinstance(R, RMatrix) else np.asarray(R, dtype=float)
    dv = memory.array if isinstance(memory, MemoryParameters) else np.asarray(memory, dtype=float)
    tau = int(tau)
    if tau < 1:
        raise DomainError("tau must be a positive integer")
    s = tau * (dv[:, None] + dv[None, :])
    bad = np.argwhere(s >= 1)
    if bad.size:
        i, j = bad[0]
        raise DomainError(f"tau (d_{i + 1} + d_{j + 1}) = {s[i, j]:.6g} >= 1 at (i, j) = ({i + 1}, {j + 1})")
    Rt = R ** tau
    X = factorial(tau, exact=True) * (Rt + Rt.T) / ((2 - s) * (1 - s))
    return 0.5 * (X + X.T)


@dataclass(eq=False)
class AsymptoticNormalization:
    """Power-law normalization ``A(n)^{-1}`` built from the limit matrix ``X``.

    ``a_factor`` is upper triangular with positive diagonal and satisfies
    ``a^T a = P X^{-1} P`` with ``P = diag((-1)^i)``; equivalently the signed factor
    ``K = P a P`` gives ``K X K^T = I``, which is what makes
    ``Var(A(n)^{-1} S_n) -> I``.
    """

    tau: int
    x_matrix: np.ndarray
    a_factor: np.ndarray
    memory: MemoryParameters

    @classmethod
    def from_x(cls, X, memory, tau):
        P = sign_matrix(X.shape[0])
        a = upper_inverse(upper_factor(P @ X @ P))
        return cls(int(tau), X, a, memory)

    @classmethod
    def from_R(cls, R, memory, tau=1):
        return cls.from_x(x_matrix(R, memory, tau), memory, tau)

    @property
    def signed_factor(self):
        P = sign_matrix(self.a_factor.shape[0])
        return P @ self.a_factor @ P


def _index_max_exponent(dv):
    idx = np.arange(dv.size)
    return dv[np.maximum(idx[:, None], idx[None, :])]


def asymptotic_normalizer(norm, n):
    if n < 1:
        raise DomainError("n must be positive")
    E = norm.tau * _index_max_exponent(norm.memory.array) - 1.0
    return norm.signed_factor * np.power(float(n), E)


def operator_normalizer(memory, n):
    if n < 1:
        raise DomainError("n must be positive")
    dv = memory.array if isinstance(memory, MemoryParameters) else np.asarray(memory, dtype=float)
    return np.power(float(n), _index_max_exponent(dv) - 0.5)
