"""Hermite polynomials (probabilists' convention), expansions and subordination.

``H_0 = 1``, ``H_1 = x``, ``H_{l+1} = x H_l - l H_{l-1}``, so ``H_2(x) = x^2 - 1`` and
``E[H_l(Z) H_m(Z)] = l! delta_lm`` for standard normal ``Z``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .errors import (
    ContractError,
    DomainError,
    EvaluationError,
    RankUndeterminedError,
    UnsupportedOrderError,
)
from .matalg import as_square, sym_inv_sqrt

RANK_TOL = 1e-10
DEFAULT_QUAD_ORDER = 128
MAX_MULTI_ORDER = 4
MAX_ADDITION_ORDER = 8


def hermite_poly(l, x):
    if l < 0:
        raise DomainError("Hermite degree must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), x.copy()
    if l == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, l):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def gauss_hermite(quad_order):
    """Nodes and probability weights for ``E f(Z)``."""
    x, w = hermite_e.hermegauss(int(quad_order))
    return x, w / np.sqrt(2.0 * np.pi)


def hermite_coefficients(G, L_max, quad_order=DEFAULT_QUAD_ORDER):
    """``h_l = E[G(Z) H_l(Z)] / l!`` for ``l = 0..L_max`` by Gauss-Hermite quadrature."""
    L_max = int(L_max)
    if L_max < 0:
        raise DomainError("L_max must be non-negative")
    if quad_order < 2 * L_max:
        raise DomainError(f"quad_order={quad_order} must be at least 2*L_max={2 * L_max}")
    x, w = gauss_hermite(quad_order)
    g = np.asarray(G(x), dtype=float)
    if g.shape != x.shape or not np.all(np.isfinite(g)):
        raise EvaluationError("G is not finite at every quadrature node")
    out = np.empty(L_max + 1)
    h_prev, h = np.ones_like(x), x
    for l in range(L_max + 1):
        cur = h_prev if l == 0 else h
        out[l] = np.dot(w, g * cur) / math.factorial(l)
        if l >= 1:
            h_prev, h = h, x * h - l * h_prev
    return out


def hermite_rank(coeffs, tol=RANK_TOL):
    c = np.asarray(coeffs, dtype=float)
    for l in range(1, c.size):
        if abs(c[l]) > tol:
            return l
    raise RankUndeterminedError(
        f"no Hermite coefficient of degree 1..{c.size - 1} exceeds {tol:g}; increase L_max"
    )


def second_moment(G, quad_order=DEFAULT_QUAD_ORDER):
    x, w = gauss_hermite(quad_order)
    return float(np.dot(w, np.asarray(G(x), dtype=float) ** 2))


# ---------------------------------------------------------------------------
# subordination functions
# ---------------------------------------------------------------------------

def hermite_series(coeffs):
    """``G(x) = sum_l h_l H_l(x)`` from a coefficient sequence or ``{degree: h}`` mapping."""
    if isinstance(coeffs, dict):
        top = max(int(k) for k in coeffs)
        c = np.zeros(top + 1)
        for k, v in coeffs.items():
            c[int(k)] = float(v)
    else:
        c = np.asarray(coeffs, dtype=float)
    return lambda x: hermite_e.hermeval(np.asarray(x, dtype=float), c)


NAMED_FUNCTIONS = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "hermite2": lambda x: np.asarray(x, dtype=float) ** 2 - 1.0,
    "square": lambda x: np.asarray(x, dtype=float) ** 2,
    "abs": lambda x: np.abs(np.asarray(x, dtype=float)),
    "cube": lambda x: np.asarray(x, dtype=float) ** 3,
    "hermite3": lambda x: np.asarray(x, dtype=float) ** 3 - 3.0 * np.asarray(x, dtype=float),
}


def resolve_function(G):
    if callable(G):
        return G
    if isinstance(G, str):
        try:
            return NAMED_FUNCTIONS[G]
        except KeyError:
            raise DomainError(f"unknown function {G!r}; choose from {sorted(NAMED_FUNCTIONS)}") from None
    if isinstance(G, (dict, list, tuple)):
        return hermite_series(G)
    raise DomainError(f"cannot interpret {G!r} as a subordination function")


@dataclass(eq=False)
class HermiteCoefficients:
    """Per-coordinate expansions ``coeffs[i, l] = h_{l,i}`` sharing one rank."""

    coeffs: np.ndarray
    rank: int
    quad_order: int
    tol: float

    @classmethod
    def from_functions(cls, Gs, L_max=8, quad_order=DEFAULT_QUAD_ORDER, tol=RANK_TOL):
        rows = [hermite_coefficients(resolve_function(G), L_max, quad_order) for G in Gs]
        ranks = [hermite_rank(r, tol) for r in rows]
        if len(set(ranks)) != 1:
            raise DomainError(f"coordinates have different Hermite ranks {ranks}")
        return cls(np.array(rows), ranks[0], int(quad_order), float(tol))

    @property
    def leading(self):
        return self.coeffs[:, self.rank]

    @property
    def centering(self):
        return self.coeffs[:, 0]


def apply_subordination(path, Gs, quad_order=DEFAULT_QUAD_ORDER):
    """Centered ``G_i(X_k^{(i)}) - E G_i(Z)`` applied coordinatewise.

    ``path`` must come from a Gaussian spec with unit marginal variances.
    """
    from .simulate import SamplePath

    if not path.gaussian:
        raise ContractError(f"subordination needs a Gaussian path, got generator {path.generator!r}")
    if callable(Gs) or isinstance(Gs, str):
        Gs = [Gs] * path.d
    if len(Gs) != path.d:
        raise DomainError(f"need {path.d} functions, got {len(Gs)}")
    out = np.empty_like(path.values)
    for i, G in enumerate(Gs):
        f = resolve_function(G)
        h0 = hermite_coefficients(f, 0, quad_order)[0]
        out[:, i] = np.asarray(f(path.values[:, i]), dtype=float) - h0
    meta = dict(path.metadata, gaussian=False, subordinated=True)
    return SamplePath(out, path.seed, path.truncation, path.spec_digest, path.generator,
                      path.replication, meta)


# ---------------------------------------------------------------------------
# multivariate polynomials and the addition identity
# ---------------------------------------------------------------------------

def _matchings(items):
    """All partial perfect matchings of a list, as (pairs, unmatched)."""
    if not items:
        yield [], []
        return
    first, rest = items[0], items[1:]
    for pairs, free in _matchings(rest):
        yield pairs, [first] + free
    for k in range(len(rest)):
        others = rest[:k] + rest[k + 1:]
        for pairs, free in _matchings(others):
            yield [(first, rest[k])] + pairs, free


def multivariate_hermite(q, x, Sigma):
    """``H_q(x, Sigma) = (-1)^|q| d^q phi_Sigma(x) / phi_Sigma(x)``.

    Exact differentiation of the Gaussian density: with ``P = Sigma^{-1}`` and
    ``y = P x`` every derivative produces either a factor ``y_c`` or a
    contraction ``-P_ab``, so the result is a sum over partial matchings.
    """
    q = [int(v) for v in q]
    if any(v < 0 for v in q):
        raise DomainError("multi-index entries must be non-negative")
    order = sum(q)
    if order > MAX_MULTI_ORDER:
        raise UnsupportedOrderError(f"|q| = {order} exceeds the implemented maximum {MAX_MULTI_ORDER}")
    S = as_square(Sigma, "Sigma")
    if len(q) != S.shape[0]:
        raise DomainError("multi-index length must match Sigma")
    M = sym_inv_sqrt(S)
    P = M @ M
    y = P @ np.asarray(x, dtype=float)
    idx = [i for i, v in enumerate(q) for _ in range(v)]
    total = 0.0
    for pairs, free in _matchings(idx):
        term = 1.0
        for a, b in pairs:
            term *= -P[a, b]
        for c in free:
            term *= y[c]
        total += term
    return float(total)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def hermite_addition_check(tau, a, x):
    """``|H_tau(sum a_j x_j) - sum_p multinomial(tau; p) prod a_j^p_j H_p_j(x_j)|`` for unit ``a``."""
    tau = int(tau)
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if tau < 0 or tau > MAX_ADDITION_ORDER:
        raise DomainError(f"tau must lie in 0..{MAX_ADDITION_ORDER}")
    if a.shape != x.shape:
        raise DomainError("weights and points must have the same length")
    if abs(np.sum(a ** 2) - 1.0) >= 1e-12:
        raise DomainError(f"weights must satisfy sum a_j^2 = 1, got {np.sum(a ** 2)!r}")
    lhs = hermite_poly(tau, float(np.dot(a, x)))
    rhs = 0.0
    for p in _compositions(tau, a.size):
        coef = math.factorial(tau)
        term = 1.0
        for aj, pj, xj in zip(a, p, x):
            coef //= math.factorial(pj)
            term *= aj ** pj * hermite_poly(pj, xj)
        rhs += coef * term
    return abs(lhs - rhs)


def multi_indices(d, order):
    """All multi-indices of length ``d`` with ``|q| = order``."""
    return [q for q in itertools.product(range(order + 1), repeat=d) if sum(q) == order]
