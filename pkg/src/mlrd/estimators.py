"""Sample autocovariances, Gaussian fourth moments and the two autocovariance regimes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .matalg import as_square
from .model import gamma_sequence, limiting_R, theoretical_gamma
from .normalize import operator_normalizer

REGIMES = ("sqrt_n", "operator")


@dataclass(eq=False)
class AutocovarianceEstimate:
    h: int
    n: int
    matrix: np.ndarray
    centered: bool = False


def _values(path):
    return path.values if hasattr(path, "values") else np.asarray(path, dtype=float)


def sample_autocov(path, h, n=None, spec=None, M=None):
    """``(1/n) sum_{k=1}^n X_k X_{k+h}^T``; subtracts ``gamma(h)`` when ``spec`` is given."""
    X = _values(path)
    h = int(h)
    if h < 0:
        raise DomainError("lag must be non-negative")
    n = X.shape[0] - h if n is None else int(n)
    if n < 1 or X.shape[0] < n + h:
        raise DomainError(f"path of length {X.shape[0]} is too short for n={n}, h={h}")
    G = X[:n].T @ X[h:h + n] / n
    if spec is not None:
        return AutocovarianceEstimate(h, n, G - theoretical_gamma(spec, h, M), True)
    return AutocovarianceEstimate(h, n, G, False)


def batch_autocov(Y, h, n):
    """Uncentered estimates for a stack of paths ``Y[rep, k, i]``; shape ``(reps, d, d)``."""
    return np.einsum("rki,rkj->rij", Y[:, :n], Y[:, h:h + n]) / n


def isserlis_fourth(Sigma, i1, i2, i3, i4):
    """``E[X_i1 X_i2 X_i3 X_i4]`` for zero-mean Gaussian ``X`` with covariance ``Sigma`` (0-based indices)."""
    S = as_square(Sigma, "Sigma")
    return float(S[i1, i2] * S[i3, i4] + S[i1, i3] * S[i2, i4] + S[i1, i4] * S[i2, i3])


def check_regime(spec, regime):
    if regime not in REGIMES:
        raise DomainError(f"regime must be one of {REGIMES}")
    if spec.memory is None:
        if regime == "sqrt_n":
            return
        raise DomainError("operator regime needs memory parameters")
    lo, hi = (0.25, 0.5) if regime == "sqrt_n" else (0.0, 0.25)
    for i, v in enumerate(spec.memory.values):
        if not lo < v < hi:
            raise DomainError(f"d_{i + 1} = {v} is outside ({lo}, {hi}) required by the {regime} regime")


def regime_of(spec):
    """The regime containing every memory parameter, or a domain error for mixed memory."""
    for r in REGIMES:
        try:
            check_regime(spec, r)
            return r
        except DomainError:
            continue
    raise DomainError(f"memory {list(spec.memory.values)} straddles 1/4; no single regime applies")


def normalize_deviation(dev, spec, n, regime):
    """Scale ``Gamma_hat - Gamma`` (``(..., d, d)``) for the regime."""
    if regime == "sqrt_n":
        return np.sqrt(n) * dev
    B = operator_normalizer(spec.memory, n)
    return B @ (n * dev) @ B


def normalized_autocov_deviation(path, spec, h, regime, n=None, M=None):
    """``sqrt(n)(Gamma_hat - Gamma)`` or ``B^{-1}(n) n(Gamma_hat - Gamma) B^{-1}(n)``."""
    check_regime(spec, regime)
    est = sample_autocov(path, h, n, spec, M)
    return normalize_deviation(est.matrix, spec, est.n, regime)


# ---------------------------------------------------------------------------
# exact covariance of normalized deviations for diagonal Gaussian processes
# ---------------------------------------------------------------------------

def _lagged(r, m):
    return r[np.abs(m)]


def deviation_covariance(spec, n, p, q):
    """``Cov(D^p_ab, D^q_ce)`` with ``D^p = sum_k X_k X_{k+p}^T - n Gamma_p``; shape ``(d,)*4``.

    For independent components only the ``(a=c, b=e)`` and ``(a=e, b=c)`` pairings survive.
    """
    d = spec.d
    span = n + max(p, q) + 1
    g = gamma_sequence(spec, span)
    r = np.stack([g[:, i, i] for i in range(d)])
    m = np.arange(-(n - 1), n)
    w = n - np.abs(m)
    C = np.zeros((d, d, d, d))
    for a in range(d):
        for b in range(d):
            C[a, b, a, b] += np.dot(w, _lagged(r[a], m) * _lagged(r[b], m + q - p))
            C[a, b, b, a] += np.dot(w, _lagged(r[a], m + q) * _lagged(r[b], m - p))
    return C


@dataclass(eq=False)
class BoundCheckReport:
    n_list: list
    p: int
    q: int
    covariance: list
    bound_base: np.ndarray
    constant: float
    flags: list
    ratios: list = field(default_factory=list)

    @property
    def ok(self):
        return all(self.flags)

    def to_dict(self):
        return {
            "n_list": list(self.n_list),
            "p": self.p,
            "q": self.q,
            "covariance": [np.asarray(c).tolist() for c in self.covariance],
            "bound_base": self.bound_base.tolist(),
            "constant": self.constant,
            "flags": list(self.flags),
            "ratios": list(self.ratios),
            "ok": self.ok,
        }


def autocov_cov_bound_check(spec, p, q, T, n_list=(2 ** 8, 2 ** 9, 2 ** 10), C=None):
    """Compare ``Cov(Y^p_ab, <T, Y^q>)`` with ``C (B R*^T B^T |T| B^T R* B^T + transpose)``.

    ``Y^h = B^{-1}(n) D^h B^{-1}(n)`` is the operator-normalized deviation, ``R* = |R|``
    and ``B`` is the upper-triangular all-ones matrix. When ``C`` is omitted it is
    calibrated as twice the largest covariance-to-bound ratio at the first ``n``.
    """
    if spec.kind != "gaussian_diagonal":
        raise DomainError("bound check needs a gaussian_diagonal spec")
    check_regime(spec, "operator")
    d = spec.d
    T = np.asarray(T, dtype=float).reshape(d, d)
    Rs = np.abs(limiting_R(spec).entries)
    B = np.triu(np.ones((d, d)))
    base = B @ Rs.T @ B.T @ np.abs(T) @ B.T @ Rs @ B.T
    base = base + base.T
    covs = []
    for n in n_list:
        Binv = operator_normalizer(spec.memory, n)
        C4 = deviation_covariance(spec, int(n), int(p), int(q))
        # Y^p_ab = sum Binv[a,a'] D[a',b'] Binv[b',b]
        Y4 = np.einsum("ia,jb,abce,kc,el->ijkl", Binv, Binv, C4, Binv, Binv)
        covs.append(np.einsum("ijkl,kl->ij", Y4, T))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = [float(np.max(np.where(base > 0, np.abs(c) / base, 0.0))) for c in covs]
    if C is None:
        C = 2.0 * ratios[0] if ratios[0] > 0 else 1.0
    flags = [bool(np.all(np.abs(c) <= C * base + 1e-300)) for c in covs]
    return BoundCheckReport(list(n_list), int(p), int(q), covs, base, float(C), flags, ratios)
