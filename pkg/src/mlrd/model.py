"""Process specifications for multivariate long-range dependent (LRD) processes.

Three process kinds are supported:

``linear_lrd``
    ``X_k = sum_j A_{j-k} eps_j`` with coefficients
    ``A_j[l, m] = L_lm(j) |j|^(-d_l - 1/2)`` where ``L(j) = A_plus`` for
    ``j > 0`` and ``A_minus`` for ``j < 0``. The centre coefficient ``A_0`` is a
    free parameter (see :data:`J0_MODES`).
``gaussian_diagonal``
    Independent unit-variance Gaussian components with autocovariance
    ``r_i(k) = R_ii k^(-2 d_i)`` for ``k >= 1``.
``white_noise``
    i.i.d. innovations with identity covariance.

Autocovariances follow ``gamma(k) = E[X_0 X_k^T]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft
import yaml
from scipy.special import gamma as gamma_fn
from scipy.special import zeta

from .errors import ConfigurationError, DomainError

KINDS = ("linear_lrd", "gaussian_diagonal", "white_noise")
INNOVATIONS = ("standard_normal", "rademacher", "uniform_scaled")
#: ``a_plus`` uses A_0 = A_plus; ``zeta`` uses the cell-compensated centre
#: coefficient A_0[l, m] = -zeta(d_l + 1/2) (A_plus + A_minus)[l, m], which
#: removes the leading lattice error of the coefficient sums so that
#: autocovariances and partial-sum variances reach their power-law limits at
#: moderate lags.
J0_MODES = ("a_plus", "zeta")
POLE_TOL = 1e-9


def _matrix_tuple(M, d, name):
    A = np.asarray(M, dtype=float)
    if A.shape != (d, d):
        raise ConfigurationError(f"{name} must have shape ({d}, {d}), got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigurationError(f"{name} has non-finite entries")
    return tuple(tuple(float(v) for v in row) for row in A)


@dataclass(frozen=True)
class MemoryParameters:
    """Memory parameters ``d_1, ..., d_d``, each in ``(0, 1/2)``.

    Strict ordering ``d_1 > ... > d_d`` is not enforced here so that
    inadmissible specs can still be inspected; :func:`validate_spec` enforces it.
    """

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if not vals:
            raise ConfigurationError("memory parameters must be non-empty")
        for i, v in enumerate(vals):
            if not (0.0 < v < 0.5):
                raise ConfigurationError(f"memory parameter d_{i + 1} = {v} is outside (0, 1/2)")
        object.__setattr__(self, "values", vals)

    @property
    def d(self):
        return len(self.values)

    @property
    def array(self):
        return np.array(self.values)

    def is_strictly_decreasing(self):
        return all(a > b for a, b in zip(self.values, self.values[1:]))

    def ordering_violations(self):
        return [
            (i + 1, i + 2)
            for i, (a, b) in enumerate(zip(self.values, self.values[1:]))
            if not a > b
        ]


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """Constant-mode slowly varying prefactor: ``L(j) = A_plus`` (j > 0), ``A_minus`` (j < 0).

    ``j0`` is either one of :data:`J0_MODES` or an explicit matrix.
    """

    a_plus: tuple
    a_minus: tuple
    j0: object = "zeta"
    mode: str = "constant"

    def __post_init__(self):
        if self.mode != "constant":
            raise ConfigurationError(f"unsupported slowly varying mode {self.mode!r}")
        d = len(self.a_plus)
        object.__setattr__(self, "a_plus", _matrix_tuple(self.a_plus, d, "a_plus"))
        object.__setattr__(self, "a_minus", _matrix_tuple(self.a_minus, d, "a_minus"))
        if isinstance(self.j0, str):
            if self.j0 not in J0_MODES:
                raise ConfigurationError(f"j0 must be a matrix or one of {J0_MODES}, got {self.j0!r}")
        else:
            object.__setattr__(self, "j0", _matrix_tuple(self.j0, d, "j0"))

    @property
    def A_plus(self):
        return np.array(self.a_plus)

    @property
    def A_minus(self):
        return np.array(self.a_minus)


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    dimension: int
    memory: Optional[MemoryParameters] = None
    slowly_varying: Optional[SlowlyVaryingSpec] = None
    innovation: str = "standard_normal"
    r_diag: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.innovation not in INNOVATIONS:
            raise ConfigurationError(f"innovation must be one of {INNOVATIONS}, got {self.innovation!r}")
        d = int(self.dimension)
        if d < 1:
            raise ConfigurationError("dimension must be a positive integer")
        object.__setattr__(self, "dimension", d)
        if self.memory is not None and not isinstance(self.memory, MemoryParameters):
            object.__setattr__(self, "memory", MemoryParameters(self.memory))
        if self.kind in ("linear_lrd", "gaussian_diagonal"):
            if self.memory is None:
                raise ConfigurationError(f"kind {self.kind} requires memory parameters")
            if self.memory.d != d:
                raise ConfigurationError(
                    f"dimension {d} does not match {self.memory.d} memory parameters"
                )
        if self.kind == "linear_lrd":
            if self.slowly_varying is None:
                raise ConfigurationError("kind linear_lrd requires a_plus and a_minus")
            if len(self.slowly_varying.a_plus) != d:
                raise ConfigurationError("a_plus/a_minus dimension mismatch")
        if self.kind == "gaussian_diagonal":
            r = self.r_diag
            if r is None:
                # fractional-Gaussian-noise constant for Hurst index 1 - d_i
                r = tuple((1 - v) * (1 - 2 * v) for v in self.memory.values)
            r = tuple(float(v) for v in r)
            if len(r) != d:
                raise ConfigurationError(f"r_diag must have {d} entries")
            for i, v in enumerate(r):
                if not (0.0 < v < 1.0):
                    raise ConfigurationError(f"r_diag[{i}] = {v} must lie in (0, 1)")
            object.__setattr__(self, "r_diag", r)
        elif self.r_diag is not None:
            raise ConfigurationError("r_diag only applies to gaussian_diagonal specs")

    @property
    def d(self):
        return self.dimension

    @property
    def is_gaussian(self):
        return self.kind == "gaussian_diagonal" or self.innovation == "standard_normal"

    def j0_matrix(self):
        sv = self.slowly_varying
        if isinstance(sv.j0, str):
            if sv.j0 == "a_plus":
                return sv.A_plus
            z = zeta(self.memory.array + 0.5)
            return -z[:, None] * (sv.A_plus + sv.A_minus)
        return np.array(sv.j0)

    def to_dict(self):
        out = {"dimension": self.dimension, "kind": self.kind, "innovation": self.innovation}
        if self.memory is not None:
            out["memory"] = {"values": list(self.memory.values)}
        if self.slowly_varying is not None:
            sv = self.slowly_varying
            out["a_plus"] = [list(r) for r in sv.a_plus]
            out["a_minus"] = [list(r) for r in sv.a_minus]
            out["j0"] = sv.j0 if isinstance(sv.j0, str) else [list(r) for r in sv.j0]
        if self.r_diag is not None:
            out["r_diag"] = list(self.r_diag)
        return out

    @classmethod
    def from_dict(cls, cfg):
        if not isinstance(cfg, dict):
            raise ConfigurationError("process configuration must be a mapping")
        try:
            kind = cfg["kind"]
            dim = cfg["dimension"]
        except KeyError as exc:
            raise ConfigurationError(f"missing configuration key {exc.args[0]!r}") from None
        memory = cfg.get("memory")
        if isinstance(memory, dict):
            memory = memory.get("values")
        mem = MemoryParameters(tuple(memory)) if memory is not None else None
        sv = None
        if "a_plus" in cfg or "a_minus" in cfg:
            if "a_plus" not in cfg or "a_minus" not in cfg:
                raise ConfigurationError("a_plus and a_minus must be given together")
            sv = SlowlyVaryingSpec(cfg["a_plus"], cfg["a_minus"], cfg.get("j0", "zeta"))
        r_diag = cfg.get("r_diag")
        return cls(
            kind=kind,
            dimension=dim,
            memory=mem,
            slowly_varying=sv,
            innovation=cfg.get("innovation", "standard_normal"),
            r_diag=tuple(r_diag) if r_diag is not None else None,
        )

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def dump_spec(spec, seed=None):
    cfg = spec.to_dict()
    if seed is not None:
        cfg["seed"] = int(seed)
    return yaml.safe_dump(cfg, sort_keys=False)


def load_spec(text):
    """Parse a YAML (or JSON) process description; returns ``(spec, seed)``."""
    cfg = yaml.safe_load(text)
    return ProcessSpec.from_dict(cfg), cfg.get("seed")


def validate_spec(spec):
    """Raise :class:`ConfigurationError` unless the spec is usable for experiments."""
    if spec.memory is not None and not spec.memory.is_strictly_decreasing():
        bad = ", ".join(f"d_{i} <= d_{j}" for i, j in spec.memory.ordering_violations())
        raise ConfigurationError(
            f"memory parameters must be strictly decreasing d_1 > ... > d_d; violated: {bad} "
            f"(values {list(spec.memory.values)}); permute coordinates first"
        )
    return spec


# ---------------------------------------------------------------------------
# coefficients and autocovariances
# ---------------------------------------------------------------------------

def _require_linear(spec):
    if spec.kind != "linear_lrd":
        raise DomainError(f"operation requires a linear_lrd spec, got {spec.kind}")


def lrd_coefficient(spec, j):
    _require_linear(spec)
    j = int(j)
    if j == 0:
        return spec.j0_matrix()
    sv = spec.slowly_varying
    L = sv.A_plus if j > 0 else sv.A_minus
    return L * (abs(j) ** (-spec.memory.array - 0.5))[:, None]


def coefficient_table(spec, M):
    """Coefficients ``A_j`` for ``j = -M..M`` as an array of shape ``(2M+1, d, d)``."""
    _require_linear(spec)
    M = int(M)
    j = np.arange(-M, M + 1, dtype=float)
    absj = np.abs(j)
    absj[M] = 1.0
    w = absj[:, None] ** (-spec.memory.array[None, :] - 0.5)
    sv = spec.slowly_varying
    T = np.empty((2 * M + 1, spec.d, spec.d))
    T[:M] = w[:M, :, None] * sv.A_minus[None]
    T[M + 1:] = w[M + 1:, :, None] * sv.A_plus[None]
    T[M] = spec.j0_matrix()
    return T


def truncation_tail(spec, M):
    """Per-row variance mass ``sum_{|j|>M} ||row_l(A_j)||^2`` dropped by truncation at ``M``."""
    _require_linear(spec)
    sv = spec.slowly_varying
    row_mass = np.sum(sv.A_plus ** 2, axis=1) + np.sum(sv.A_minus ** 2, axis=1)
    return row_mass * zeta(2 * spec.memory.array + 1.0, M + 1)


def theoretical_gamma(spec, k, M=None):
    """Autocovariance ``gamma(k) = E[X_0 X_k^T]``.

    For linear specs this is the truncated sum ``sum_{|j|<=M} A_j A_{j-k}^T`` (identity
    innovation covariance) and ``M`` is required.
    """
    k = int(k)
    if k < 0:
        raise DomainError("lag must be non-negative")
    d = spec.d
    if spec.kind == "white_noise":
        return np.eye(d) if k == 0 else np.zeros((d, d))
    if spec.kind == "gaussian_diagonal":
        if k == 0:
            return np.eye(d)
        return np.diag(np.array(spec.r_diag) * float(k) ** (-2 * spec.memory.array))
    if M is None or M < k + 1:
        raise DomainError(f"truncation M must satisfy M >= k + 1 (k={k}, M={M})")
    T = coefficient_table(spec, M)
    N = T.shape[0]
    return np.tensordot(T[k:], T[: N - k], axes=([0, 2], [0, 2]))


def gamma_sequence(spec, kmax, M=None):
    """``gamma(0..kmax)`` as an array of shape ``(kmax+1, d, d)``."""
    kmax = int(kmax)
    d = spec.d
    if spec.kind != "linear_lrd":
        return np.stack([theoretical_gamma(spec, k) for k in range(kmax + 1)])
    if M is None or M < kmax + 1:
        raise DomainError(f"truncation M must satisfy M >= kmax + 1 (kmax={kmax}, M={M})")
    T = coefficient_table(spec, M)
    N = T.shape[0]
    L = scipy.fft.next_fast_len(N + kmax + 1, real=True)
    F = scipy.fft.rfft(T, n=L, axis=0)  # (L//2+1, d, d)
    # sum_q F[l, q] conj(F[m, q]) is the spectrum of sum_i T_lq(i) T_mq(i - k)
    S = np.einsum("flq,fmq->flm", F, np.conj(F))
    g = scipy.fft.irfft(S, n=L, axis=0)
    return np.ascontiguousarray(g[: kmax + 1])


# ---------------------------------------------------------------------------
# limiting R matrix and admissibility
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RMatrix:
    """Limit matrix ``R`` of the power-law autocovariance plus its constants.

    A usable ``R`` has a non-zero diagonal (see :attr:`diagonal_nonzero`); degenerate
    inputs are returned as computed so they can be inspected. For linear specs ``R[i, j] = lim_k k^(d_i + d_j) gamma_ji(k)`` (the orientation in
    which ``c2 = A_minus A_plus^T`` multiplies the middle term).
    """

    entries: np.ndarray
    c1: Optional[np.ndarray] = None
    c2: Optional[np.ndarray] = None
    c3: Optional[np.ndarray] = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)

    @property
    def diagonal_nonzero(self):
        return bool(np.all(np.diag(self.entries) != 0))


def _r_entries(memory, c1, c2, c3):
    dv = memory.array
    d = dv.size
    R = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            s = dv[i] + dv[j]
            if s < POLE_TOL or s > 1 - POLE_TOL:
                raise DomainError(f"d_{i + 1} + d_{j + 1} = {s} is at a pole of the R formula")
            # coefficient exponent -(d + 1/2) corresponds to shape parameter 1/2 - d
            a, b = 0.5 - dv[i], 0.5 - dv[j]
            beta = gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)
            sab = np.sin(np.pi * (a + b))
            R[i, j] = beta * (
                c1[i, j] * np.sin(np.pi * a) / sab + c2[i, j] + c3[i, j] * np.sin(np.pi * b) / sab
            )
    return R


def limiting_R(spec):
    """Limit matrix of a constant-mode linear LRD spec, or ``diag(r_diag)`` for Gaussian specs."""
    if spec.kind == "gaussian_diagonal":
        return RMatrix(np.diag(spec.r_diag))
    _require_linear(spec)
    sv = spec.slowly_varying
    Ap, Am = sv.A_plus, sv.A_minus
    c1, c2, c3 = Am @ Am.T, Am @ Ap.T, Ap @ Ap.T
    return RMatrix(_r_entries(spec.memory, c1, c2, c3), c1, c2, c3)


@dataclass
class AdmissibilityReport:
    c1: Optional[bool]
    c2: Optional[bool]
    ordering: bool
    r_invertible: Optional[bool]
    r_diag_nonzero: Optional[bool]
    c2_values: list = field(default_factory=list)
    messages: list = field(default_factory=list)

    @property
    def ok(self):
        flags = (self.c1, self.c2, self.ordering, self.r_invertible, self.r_diag_nonzero)
        return all(f is None or f for f in flags)

    def to_dict(self):
        return {
            "C1": self.c1,
            "C2": self.c2,
            "ordering": self.ordering,
            "R_invertible": self.r_invertible,
            "R_diag_nonzero": self.r_diag_nonzero,
            "C2_values": self.c2_values,
            "messages": self.messages,
            "ok": self.ok,
        }


def _invertible(M, tol=1e-10):
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[0] > 0 and s[-1] > tol * s[0])


def check_conditions(spec):
    """Admissibility report: C1, C2, strict ordering and invertibility of ``R``."""
    msgs = []
    ordering = True
    if spec.memory is not None:
        ordering = spec.memory.is_strictly_decreasing()
        if not ordering:
            msgs.append(
                "memory parameters not strictly decreasing at "
                + ", ".join(f"(d_{i}, d_{j})" for i, j in spec.memory.ordering_violations())
            )
    if spec.kind == "white_noise":
        return AdmissibilityReport(None, None, True, None, None, messages=msgs)
    if spec.kind == "gaussian_diagonal":
        R = np.diag(spec.r_diag)
        return AdmissibilityReport(None, None, ordering, _invertible(R), True, messages=msgs)

    sv = spec.slowly_varying
    Ap, Am = sv.A_plus, sv.A_minus
    d = spec.d
    c1_ok = True
    for name, A in (("A_plus", Ap), ("A_minus", Am)):
        scale = max(np.max(np.abs(A)), np.finfo(float).tiny) ** d
        if not abs(np.linalg.det(A)) > 1e-10 * scale:
            c1_ok = False
            msgs.append(f"C1 fails: {name} is singular")
    dv = spec.memory.array
    cii = np.sin(np.pi * dv) / np.sin(2 * np.pi * dv)
    c2_vals = cii * np.diag(Am @ Am.T + Ap @ Ap.T) + np.diag(Am @ Ap.T)
    c2_ok = bool(np.all(np.abs(c2_vals) > 1e-10))
    if not c2_ok:
        msgs.append("C2 fails at i = " + ", ".join(str(i + 1) for i in np.flatnonzero(np.abs(c2_vals) <= 1e-10)))
    R = _r_entries(spec.memory, Am @ Am.T, Am @ Ap.T, Ap @ Ap.T)
    r_diag_ok = bool(np.all(np.abs(np.diag(R)) > 1e-12 * max(np.max(np.abs(R)), 1e-300)))
    r_inv = _invertible(R)
    if not r_inv:
        msgs.append("limit matrix R is singular")
    if not r_diag_ok:
        msgs.append("limit matrix R has a zero diagonal entry")
    return AdmissibilityReport(c1_ok, c2_ok, ordering, r_inv, r_diag_ok, [float(v) for v in c2_vals], msgs)
