"""Path synthesis: innovations, truncated linear filters, exact Gaussian sampling.

Every generator is a pure function of ``(spec, n, truncation, seed, replication)``.
Replication streams come from a counter-based Philox generator keyed by
``SeedSequence(seed, spawn_key=(replication,))``, so a replication's path does
not depend on which worker produced it or in which order.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import ConfigurationError, DomainError, FactorizationError
from .model import INNOVATIONS, coefficient_table, truncation_tail

PATH_MAGIC = b"MLRDPATH"
DEFAULT_EXACT_CAP = 2 ** 13


def make_rng(seed, replication=None):
    """Philox generator for ``seed`` (and optionally one replication stream)."""
    key = () if replication is None else (int(replication),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


@dataclass(frozen=True)
class InnovationLaw:
    """Zero-mean, identity-covariance innovation family."""

    family: str = "standard_normal"

    def __post_init__(self):
        if self.family not in INNOVATIONS:
            raise ConfigurationError(f"innovation family must be one of {INNOVATIONS}")

    def sample(self, rng, shape):
        if self.family == "standard_normal":
            return rng.standard_normal(shape)
        if self.family == "rademacher":
            return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)


def gen_innovations(law, count, d, seed, replication=None):
    if count < 1 or d < 1:
        raise DomainError("count and d must be positive")
    if isinstance(law, str):
        law = InnovationLaw(law)
    return law.sample(make_rng(seed, replication), (int(count), int(d)))


@dataclass(eq=False)
class SamplePath:
    values: np.ndarray
    seed: int
    truncation: int | None
    spec_digest: str
    generator: str
    replication: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise DomainError("path values must be an n x d array with n >= 1")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("path has non-finite values")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def gaussian(self):
        return bool(self.metadata.get("gaussian", False))


@dataclass(eq=False)
class PartialSumPath:
    grid: np.ndarray
    sums: np.ndarray


# ---------------------------------------------------------------------------
# linear processes
# ---------------------------------------------------------------------------

class LinearFilter:
    """Precomputed FFT filter ``X_k = sum_{i=-M}^{M} A_i eps_{k+i}`` for fixed ``(spec, n, M)``.

    The innovation panel has ``n + 2M`` rows; a circular convolution of length
    ``>= n + 2M`` reproduces the valid part of the linear correlation exactly.
    """

    def __init__(self, spec, n, M=None):
        if spec.kind != "linear_lrd":
            raise DomainError(f"linear filter needs a linear_lrd spec, got {spec.kind}")
        n = int(n)
        M = 10 * n if M is None else int(M)
        if n < 1:
            raise DomainError("n must be positive")
        if M < n:
            raise ConfigurationError(f"truncation M={M} must be at least n={n}")
        self.spec, self.n, self.M, self.d = spec, n, M, spec.d
        self.panel = n + 2 * M
        self.L = scipy.fft.next_fast_len(self.panel, real=True)
        T = coefficient_table(spec, M)
        # reversed table turns the correlation into a convolution
        self._F = scipy.fft.rfft(T[::-1], n=self.L, axis=0)  # (f, l, q)
        self.tail = truncation_tail(spec, M)

    def apply(self, eps):
        """Filter an innovation panel of shape ``(panel, d)`` or ``(batch, panel, d)``."""
        eps = np.asarray(eps, dtype=float)
        E = scipy.fft.rfft(eps, n=self.L, axis=-2)
        Y = np.einsum("flq,...fq->...fl", self._F, E)
        y = scipy.fft.irfft(Y, n=self.L, axis=-2)
        lo = 2 * self.M
        return y[..., lo: lo + self.n, :]

    def simulate(self, seed, replication=None):
        law = InnovationLaw(self.spec.innovation)
        eps = law.sample(make_rng(seed, replication), (self.panel, self.d))
        return SamplePath(
            self.apply(eps),
            seed=int(seed),
            truncation=self.M,
            spec_digest=self.spec.digest(),
            generator="linear_fft",
            replication=replication,
            metadata={
                "gaussian": self.spec.innovation == "standard_normal",
                "tail_variance": [float(v) for v in self.tail],
                "fft_length": self.L,
            },
        )


def simulate_linear(spec, n, M=None, seed=0, replication=None):
    """Truncated linear process path; ``M`` defaults to ``10 n``."""
    return LinearFilter(spec, n, M).simulate(seed, replication)


def simulate_white_noise(spec, n, seed=0, replication=None):
    law = InnovationLaw(spec.innovation)
    vals = law.sample(make_rng(seed, replication), (int(n), spec.d))
    return SamplePath(vals, int(seed), None, spec.digest(), "white_noise", replication,
                      {"gaussian": spec.innovation == "standard_normal"})


# ---------------------------------------------------------------------------
# exact Gaussian sampling
# ---------------------------------------------------------------------------

def component_autocovariance(r_diag, d_i, n):
    """``r(0) = 1``, ``r(k) = R_ii k^(-2 d_i)`` for ``k = 0..n-1``."""
    k = np.arange(n, dtype=float)
    r = np.empty(n)
    r[0] = 1.0
    r[1:] = r_diag * k[1:] ** (-2.0 * d_i)
    return r


class GaussianExactSampler:
    """Dense Toeplitz-Cholesky sampler for ``gaussian_diagonal`` specs, factors cached per instance."""

    def __init__(self, spec, n, cap=DEFAULT_EXACT_CAP):
        if spec.kind != "gaussian_diagonal":
            raise DomainError(f"exact Gaussian sampling needs a gaussian_diagonal spec, got {spec.kind}")
        n = int(n)
        if n < 1:
            raise DomainError("n must be positive")
        if n * spec.d > cap:
            raise ConfigurationError(
                f"n*d = {n * spec.d} exceeds the dense factorization cap {cap}; raise exact_cap explicitly"
            )
        self.spec, self.n, self.d = spec, n, spec.d
        self._factors = [None] * spec.d

    def factor(self, i):
        if self._factors[i] is None:
            Rii, di = self.spec.r_diag[i], self.spec.memory.values[i]
            C = scipy.linalg.toeplitz(component_autocovariance(Rii, di, self.n))
            try:
                self._factors[i] = scipy.linalg.cholesky(C, lower=True, overwrite_a=True)
            except np.linalg.LinAlgError:
                raise FactorizationError(
                    f"Toeplitz covariance of component {i + 1} (R_ii={Rii}, d_i={di}, n={self.n}) "
                    "is not positive definite; choose a smaller R_ii"
                ) from None
        return self._factors[i]

    def draw_normals(self, seed, replication=None):
        return make_rng(seed, replication).standard_normal((self.n, self.d))

    def transform(self, Z):
        """Map standard normals of shape ``(n, d)`` or ``(n, d, batch)`` to a path batch."""
        out = np.empty_like(Z)
        for i in range(self.d):
            out[:, i] = self.factor(i) @ Z[:, i]
        return out

    def simulate(self, seed, replication=None):
        vals = self.transform(self.draw_normals(seed, replication))
        return SamplePath(vals, int(seed), None, self.spec.digest(), "gaussian_toeplitz_cholesky",
                          replication, {"gaussian": True})


def simulate_gaussian_exact(spec, n, seed=0, replication=None, cap=DEFAULT_EXACT_CAP):
    return GaussianExactSampler(spec, n, cap).simulate(seed, replication)


def simulate_path(spec, n, seed=0, replication=None, M=None, cap=DEFAULT_EXACT_CAP):
    """Dispatch on ``spec.kind``."""
    if spec.kind == "linear_lrd":
        return simulate_linear(spec, n, M, seed, replication)
    if spec.kind == "gaussian_diagonal":
        return simulate_gaussian_exact(spec, n, seed, replication, cap)
    return simulate_white_noise(spec, n, seed, replication)


# ---------------------------------------------------------------------------
# partial sums and export
# ---------------------------------------------------------------------------

def grid_indices(n, grid):
    g = np.asarray(grid, dtype=float).ravel()
    if np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
        raise DomainError("grid points must lie in [0, 1]")
    # guard against n*t landing just below an integer
    return np.floor(n * g + 1e-9).astype(int)


def partial_sum_path(path, grid):
    """``S_{floor(n t)}`` for each ``t`` in ``grid``."""
    vals = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    idx = grid_indices(vals.shape[0], grid)
    csum = np.vstack([np.zeros((1, vals.shape[1])), np.cumsum(vals, axis=0)])
    return PartialSumPath(np.asarray(grid, dtype=float).ravel(), csum[idx])


def path_to_csv(path):
    buf = io.StringIO()
    header = ",".join(f"x{i + 1}" for i in range(path.d))
    np.savetxt(buf, path.values, delimiter=",", header=header, comments="", fmt="%.17g")
    return buf.getvalue()


def path_to_bytes(path):
    """``MLRDPATH`` magic, little-endian uint64 ``n`` and ``d``, then ``d`` float64 columns."""
    head = PATH_MAGIC + struct.pack("<QQ", path.n, path.d)
    cols = np.ascontiguousarray(path.values.T).astype("<f8")
    return head + cols.tobytes()


def path_from_bytes(blob):
    if blob[:8] != PATH_MAGIC:
        raise DomainError("not an MLRDPATH dump (bad magic)")
    n, d = struct.unpack("<QQ", blob[8:24])
    data = np.frombuffer(blob[24:], dtype="<f8")
    if data.size != n * d:
        raise DomainError(f"MLRDPATH payload has {data.size} values, expected {n * d}")
    return data.reshape(d, n).T.astype(float)
