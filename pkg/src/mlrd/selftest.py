"""Fast closed-form checks of the library, run by ``mlrd selftest``."""

from __future__ import annotations

import numpy as np

from .estimators import isserlis_fourth, sample_autocov
from .hermite import hermite_addition_check, hermite_coefficients, hermite_poly, hermite_rank, multivariate_hermite
from .limits import OfbmCovariance, beta_constant, limit_kernel_f, ofbm_cross_cov, self_similarity_residual
from .matalg import diag_power, sym_inv_sqrt, upper_factor
from .model import MemoryParameters, ProcessSpec, SlowlyVaryingSpec, check_conditions, lrd_coefficient, theoretical_gamma
from .normalize import exact_normalizer, exact_sigma_sq, operator_normalizer, x_matrix
from .simulate import gen_innovations, partial_sum_path


def _close(a, b, tol=1e-12):
    return bool(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))) <= tol)


def _checks():
    eye2 = np.eye(2)
    lin = ProcessSpec("linear_lrd", 2, MemoryParameters((0.4, 0.2)), SlowlyVaryingSpec(eye2, eye2))
    wn = ProcessSpec("white_noise", 2)
    gd = ProcessSpec("gaussian_diagonal", 2, MemoryParameters((0.2, 0.1)))
    bad = ProcessSpec("linear_lrd", 2, MemoryParameters((0.2, 0.2)), SlowlyVaryingSpec(eye2, eye2))
    sing = ProcessSpec("linear_lrd", 2, MemoryParameters((0.4, 0.2)), SlowlyVaryingSpec([[1, 1], [1, 1]], eye2))
    yield "diag_power zero exponents", lambda: _close(diag_power([0, 0], 2), eye2)
    yield "diag_power integer powers", lambda: _close(diag_power([1, 2], 2), np.diag([2, 4]))
    yield "diag_power square root", lambda: _close(diag_power([0.5], 4), [[2]])
    yield "sym_inv_sqrt identity", lambda: _close(sym_inv_sqrt(eye2), eye2)
    yield "sym_inv_sqrt diagonal", lambda: _close(sym_inv_sqrt(np.diag([4, 9])), np.diag([0.5, 1 / 3]))
    yield "upper_factor diagonal", lambda: _close(upper_factor(np.diag([4, 9])), np.diag([2, 3]))
    yield "lrd_coefficient j=1", lambda: _close(lrd_coefficient(lin, 1), eye2)
    yield "lrd_coefficient j=-1", lambda: _close(
        lrd_coefficient(ProcessSpec("linear_lrd", 1, MemoryParameters((0.3,)), SlowlyVaryingSpec([[1]], [[2]])), -1), [[2]])
    yield "check_conditions admissible", lambda: check_conditions(lin).ok
    yield "check_conditions C1 singular", lambda: check_conditions(sing).c1 is False
    yield "check_conditions ordering", lambda: check_conditions(bad).ordering is False
    yield "white noise gamma", lambda: _close(theoretical_gamma(wn, 0), eye2) and _close(theoretical_gamma(wn, 3), 0 * eye2)
    yield "gaussian gamma at lag 0", lambda: _close(theoretical_gamma(gd, 0), eye2)
    yield "innovations deterministic", lambda: bool(np.array_equal(
        gen_innovations("rademacher", 100, 2, 5), gen_innovations("rademacher", 100, 2, 5)))
    yield "rademacher support", lambda: bool(np.all(np.isin(gen_innovations("rademacher", 100, 2, 5), (-1.0, 1.0))))
    X = np.tile([1.0, -2.0], (10, 1))
    yield "partial sums", lambda: _close(partial_sum_path(X, [0.0, 0.5, 1.0]).sums, [[0, 0], [5, -10], [10, -20]])
    yield "white noise sigma", lambda: _close(exact_sigma_sq(wn, 7), 7 * eye2)
    yield "exact_normalizer n I", lambda: _close(exact_normalizer(16 * eye2), eye2 / 4)
    yield "operator_normalizer d=1", lambda: _close(operator_normalizer(MemoryParameters((0.2,)), 100), [[100 ** -0.3]])
    yield "x_matrix symmetric", lambda: _close(x_matrix(np.array([[1, 0.3], [0.1, 1]]), lin.memory, 1),
                                       x_matrix(np.array([[1, 0.3], [0.1, 1]]), lin.memory, 1).T)
    yield "hermite H0", lambda: hermite_poly(0, 3.7) == 1.0
    yield "hermite H2(2)", lambda: hermite_poly(2, 2.0) == 3.0
    yield "hermite H3(2)", lambda: hermite_poly(3, 2.0) == 2.0
    yield "hermite rank of x", lambda: hermite_rank(hermite_coefficients(lambda x: x, 4)) == 1
    yield "hermite rank of H2", lambda: hermite_rank(hermite_coefficients(lambda x: x * x - 1, 4)) == 2
    yield "multivariate q=0", lambda: multivariate_hermite((0, 0), [0.3, 1.0], eye2) == 1.0
    yield "multivariate q=(2,0)", lambda: _close(multivariate_hermite((2, 0), [1.5, 0.2], eye2), 1.5 ** 2 - 1)
    yield "addition identity tau=1", lambda: hermite_addition_check(1, [0.6, 0.8], [1.0, 2.0]) < 1e-15
    yield "ofbm at origin", lambda: _close(ofbm_cross_cov(OfbmCovariance.from_spec(lin), 0.0, 0.0), 0 * eye2)
    yield "self-similarity a=1", lambda: self_similarity_residual(OfbmCovariance.from_spec(lin), 1.0, 0.3, 0.7) == 0.0
    yield "kernel at t=0", lambda: limit_kernel_f(2, 0.2, 0.0, [0.5, -0.3]) == 0
    yield "beta positive", lambda: all(beta_constant(t, d) > 0 for t in (1, 2, 3) for d in (0.05, 0.1, 0.15))
    yield "isserlis E Z^4", lambda: isserlis_fourth([[1.0]], 0, 0, 0, 0) == 3.0
    yield "autocov of zero path", lambda: _close(sample_autocov(np.zeros((5, 2)), 1).matrix, 0 * eye2)
    yield "autocov n=1 h=0", lambda: _close(sample_autocov(np.array([[1.0, 2.0]]), 0).matrix, [[1, 2], [2, 4]])


def run_selftest():
    """Return ``[(name, passed)]`` for every check."""
    out = []
    for name, check in _checks():
        try:
            ok = bool(check())
        except Exception:  # a crashing check is a failed check
            ok = False
        out.append((name, ok))
    return out
