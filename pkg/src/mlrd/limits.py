"""Limit-law descriptors: operator fractional Brownian motion covariance and Hermite-limit constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, FactorizationError, SingularityError
from .matalg import diag_power
from .model import MemoryParameters, limiting_R
from .normalize import AsymptoticNormalization


@dataclass(eq=False)
class OfbmCovariance:
    """Covariance descriptor of ``A B_H(t)`` with ``H = I - D``.

    ``r_tilde[i, j] = R_ij / ((1 - d_i - d_j)(2 - d_i - d_j))`` is used for
    positive time differences, its transpose for negative ones.
    """

    memory: MemoryParameters
    r_tilde: np.ndarray
    a_factor: np.ndarray

    @property
    def r_tilde_pos(self):
        return self.r_tilde

    @property
    def r_tilde_neg(self):
        return self.r_tilde.T

    @property
    def H(self):
        return 1.0 - self.memory.array

    @classmethod
    def from_R(cls, R, memory, a_factor=None):
        dv = memory.array
        s = dv[:, None] + dv[None, :]
        Rt = np.asarray(R, dtype=float) / ((1 - s) * (2 - s))
        if a_factor is None:
            a_factor = AsymptoticNormalization.from_R(R, memory, 1).signed_factor
        return cls(memory, Rt, np.asarray(a_factor, dtype=float))

    @classmethod
    def from_spec(cls, spec):
        """Target covariance for the limit of ``A(n)^{-1} S_[nt]`` for a linear spec."""
        return cls.from_R(limiting_R(spec).entries, spec.memory)


def _tpow(H, t):
    return np.diag(np.where(t > 0, abs(t) ** H, 0.0))


def ofbm_cross_cov(cov, t, u):
    """``Cov(A B_H(t), A B_H(u))`` for ``t, u`` in ``[0, 1]``."""
    for v in (t, u):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"time {v} outside [0, 1]")
    H, Rt = cov.H, cov.r_tilde
    C = _tpow(H, t) @ Rt @ _tpow(H, t) + _tpow(H, u) @ Rt.T @ _tpow(H, u)
    if t != u:
        branch = Rt if t > u else Rt.T
        D = _tpow(H, abs(t - u))
        C = C - D @ branch @ D
    A = cov.a_factor
    return A @ C @ A.T


def self_similarity_residual(cov, a, t, u):
    """``max|C(at, au) - M C(t, u) M^T|`` with ``M = A a^H A^{-1}``."""
    if not a > 0:
        raise DomainError("scale a must be positive")
    if a * t > 1 or a * u > 1:
        raise DomainError("scaled times must stay in [0, 1]")
    try:
        Ainv = np.linalg.inv(cov.a_factor)
    except np.linalg.LinAlgError:
        raise FactorizationError("a_factor is singular") from None
    M = cov.a_factor @ diag_power(cov.H, a) @ Ainv
    return float(np.max(np.abs(ofbm_cross_cov(cov, a * t, a * u) - M @ ofbm_cross_cov(cov, t, u) @ M.T)))


def increment_residual(cov, t, u):
    """Residual of ``Var(B(t) - B(u)) = A |t-u|^H (R~ + R~^T) |t-u|^H A^T``."""
    lhs = ofbm_cross_cov(cov, t, t) + ofbm_cross_cov(cov, u, u) - ofbm_cross_cov(cov, t, u) - ofbm_cross_cov(cov, u, t)
    D = _tpow(cov.H, abs(t - u))
    A = cov.a_factor
    rhs = A @ D @ (cov.r_tilde + cov.r_tilde.T) @ D @ A.T
    return float(np.max(np.abs(lhs - rhs)))


def limit_kernel_f(tau, d_m, t, x):
    """``(e^{i t s} - 1)/(i s) * prod |x_r|^(d_m - 1/2)`` with ``s = sum x``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != int(tau):
        raise DomainError(f"kernel needs {tau} arguments, got {x.size}")
    if not tau * d_m < 0.5:
        raise DomainError(f"tau*d_m = {tau * d_m} must be below 1/2")
    if np.any(x == 0):
        raise SingularityError("kernel is singular where an argument vanishes")
    s = float(np.sum(x))
    first = complex(t) if s == 0 else (np.exp(1j * t * s) - 1.0) / (1j * s)
    return complex(first * np.prod(np.abs(x) ** (d_m - 0.5)))


def beta_constant(tau, d):
    """``sqrt((1 - tau d)(1 - 2 tau d) / (tau! (2 Gamma(2d) sin(pi (1/2 - d)))^tau))``."""
    tau = int(tau)
    if not 0 < d < 0.5:
        raise DomainError("d must lie in (0, 1/2)")
    if not tau * d < 0.5:
        raise DomainError(f"tau*d = {tau * d} must be below 1/2")
    base = 2.0 * gamma_fn(2.0 * d) * math.sin(math.pi * (0.5 - d))
    return math.sqrt((1 - tau * d) * (1 - 2 * tau * d) / (math.factorial(tau) * base ** tau))


@dataclass(eq=False)
class LimitLaw:
    """Constants of the rank-``tau`` subordinated limit: ``beta``, ``h_tau`` and ``R_mm``."""

    tau: int
    memory: MemoryParameters
    beta: np.ndarray
    hermite_lead: np.ndarray
    r_diag: np.ndarray

    @classmethod
    def build(cls, tau, memory, hermite_lead, r_diag):
        beta = np.array([beta_constant(tau, v) for v in memory.values])
        return cls(int(tau), memory, beta, np.asarray(hermite_lead, float), np.asarray(r_diag, float))

    def a_factor(self, signed_factor):
        """``A[l, i] = K[l, i] h_{tau,i} R_ii^{tau/2} beta_{tau,d_i}`` for the signed factor ``K``."""
        scale = self.hermite_lead * self.r_diag ** (self.tau / 2.0) * self.beta
        return np.asarray(signed_factor) * scale[None, :]

    def identity_marginal_variance(self):
        """Variance each ``I_tau`` marginal at ``t = 1`` must have for ``A Var(I) A^T = I``.

        With ``K X K^T = I`` and ``X`` diagonal this is
        ``tau! 2 / ((1 - 2 tau d)(2 - 2 tau d) beta^2)``.
        """
        dv = self.memory.array
        s = 2 * self.tau * dv
        return math.factorial(self.tau) * 2.0 / ((1 - s) * (2 - s) * self.beta ** 2)

    def limit_covariance(self, signed_factor):
        A = self.a_factor(signed_factor)
        return A @ np.diag(self.identity_marginal_variance()) @ A.T
