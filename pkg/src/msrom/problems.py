"""Variational problem instances, trial hierarchies, and synthetic generators.

A problem is the discretized weak formulation ``a(z, v) = b(v)`` with
``a(v, z) = v^T M A z``.  The synthetic generators construct instances whose
Gram spectrum, nested approximation distances, and slice widths are known
exactly, so error bounds can be compared against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import AmbientSpace, OrthonormalFrame, orthonormalize, project

__all__ = [
    "InvalidSpectrum",
    "InvalidDistances",
    "DimensionTooSmall",
    "HadamardUnavailable",
    "ProblemInstance",
    "SubspaceHierarchy",
    "TestSpace",
    "RieszFamily",
    "riesz_representers",
    "evaluate_b",
    "rhs_vector",
    "flat_orthogonal",
    "synth_prescribed",
    "example1",
    "example2",
]


class InvalidSpectrum(ValueError):
    """Prescribed singular values are out of range or not sorted."""


class InvalidDistances(ValueError):
    """Prescribed distances/widths are negative, increasing, or inconsistent."""


class DimensionTooSmall(ValueError):
    """The ambient dimension leaves no room for the requested construction."""


class HadamardUnavailable(ValueError):
    """No orthogonal matrix with flat entry magnitudes is known for this order."""


@dataclass(eq=False)
class ProblemInstance:
    """Weak problem ``a(z, v) = b(v)`` on a discretized space.

    ``operator`` is the matrix ``A`` in ``a(v, z) = v^T M A z``.  Exactly one
    right-hand side is set: ``z_true`` (synthetic mode, ``b(v) = a(z_true, v)``
    so the exact solution is known) or ``functional`` (``b(v) = <functional, v>``).
    """

    space: AmbientSpace
    operator: np.ndarray
    z_true: np.ndarray | None = None
    functional: np.ndarray | None = None

    def __post_init__(self) -> None:
        A = np.asarray(self.operator, dtype=float)
        N = self.space.dim
        if A.shape != (N, N):
            raise ValueError(f"operator must be {N}x{N}, got {A.shape}")
        self.operator = A
        if (self.z_true is None) == (self.functional is None):
            raise ValueError("exactly one of z_true and functional must be given")
        if self.z_true is not None:
            self.z_true = np.asarray(self.z_true, dtype=float)
            if self.z_true.shape != (N,):
                raise ValueError("z_true has the wrong shape")
        if self.functional is not None:
            self.functional = np.asarray(self.functional, dtype=float)
            if self.functional.shape != (N,):
                raise ValueError("functional has the wrong shape")

    @property
    def synthetic(self) -> bool:
        return self.z_true is not None

    def bilinear(self, v: np.ndarray, z: np.ndarray) -> float:
        """Evaluate ``a(v, z) = v^T M A z``."""
        return float(v @ self.space.apply_metric(self.operator @ z))


@dataclass(eq=False)
class SubspaceHierarchy:
    """Nested trial spaces ``V_0 = {0} <= V_1 <= ... <= V_n``.

    Column ``j`` of ``basis`` extends ``V_j`` to ``V_{j+1}``.  ``widths`` are
    the slice radii ``eps_0..eps_n`` used as constraints; ``distances`` are the
    true values ``tau_k = dist(z_true, V_k)`` when known.
    """

    basis: OrthonormalFrame
    widths: np.ndarray
    distances: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.basis.n_columns
        w = np.asarray(self.widths, dtype=float)
        if w.shape != (n + 1,):
            raise InvalidDistances(f"widths must have length n+1 = {n + 1}, got {w.shape}")
        if np.any(np.isnan(w)) or np.any(w < 0.0):
            raise InvalidDistances("widths must be nonnegative")
        self.widths = w
        if self.distances is not None:
            t = np.asarray(self.distances, dtype=float)
            if t.shape != (n + 1,):
                raise InvalidDistances(f"distances must have length n+1 = {n + 1}")
            if np.any(t < 0.0):
                raise InvalidDistances("distances must be nonnegative")
            if np.any(np.diff(t) > 0.0):
                raise InvalidDistances("distances must be nonincreasing")
            if np.any(t > w):
                raise InvalidDistances("each distance must not exceed its slice width")
            self.distances = t

    @property
    def n(self) -> int:
        return self.basis.n_columns


@dataclass(eq=False)
class TestSpace:
    """Span of the test vectors z_1..z_m (stored as an orthonormal frame)."""

    __test__ = False  # not a test case despite the name

    basis: OrthonormalFrame

    @property
    def m(self) -> int:
        return self.basis.n_columns


@dataclass(eq=False)
class RieszFamily:
    """Columns are the representers r_j of the functionals v -> a(v, z_j)."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be an (N, m) matrix")

    @property
    def m(self) -> int:
        return self.vectors.shape[1]


def riesz_representers(problem: ProblemInstance, tests: TestSpace) -> RieszFamily:
    """Representers of ``v -> a(v, z_j)``; with the stored convention r_j = A z_j."""
    return RieszFamily(problem.operator @ tests.basis.columns)


def evaluate_b(problem: ProblemInstance, v: np.ndarray) -> float:
    """Right-hand side ``b(v)``: ``a(z_true, v)`` in synthetic mode, ``<f, v>`` otherwise."""
    v = np.asarray(v, dtype=float)
    if problem.synthetic:
        return problem.bilinear(problem.z_true, v)
    return problem.space.inner(problem.functional, v)


def rhs_vector(problem: ProblemInstance, tests: TestSpace) -> np.ndarray:
    """The vector ``d`` with ``d_j = b(z_j)``."""
    Z = tests.basis.columns
    return np.array([evaluate_b(problem, Z[:, j]) for j in range(Z.shape[1])])


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    i = 2
    while i * i <= q:
        if q % i == 0:
            return False
        i += 1
    return True


def _paley(q: int) -> np.ndarray:
    """Order q+1 Hadamard matrix from quadratic residues, q prime, q % 4 == 3."""
    chi = np.zeros(q)
    for a in range(1, q):
        chi[a] = 1.0 if pow(a, (q - 1) // 2, q) == 1 else -1.0
    Q = np.empty((q, q))
    for i in range(q):
        for j in range(q):
            Q[i, j] = chi[(j - i) % q]
    S = np.zeros((q + 1, q + 1))
    S[0, 1:] = 1.0
    S[1:, 0] = -1.0
    S[1:, 1:] = Q
    return np.eye(q + 1) + S


def _hadamard(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0]])
    if n == 2:
        return np.array([[1.0, 1.0], [1.0, -1.0]])
    if n % 2 == 0:
        try:
            H = _hadamard(n // 2)
            return np.block([[H, H], [H, -H]])
        except HadamardUnavailable:
            pass
    if n % 4 == 0 and _is_prime(n - 1) and (n - 1) % 4 == 3:
        return _paley(n - 1)
    raise HadamardUnavailable(
        f"no flat orthogonal matrix construction available for order {n}"
    )


def flat_orthogonal(n: int) -> np.ndarray:
    """Orthogonal n x n matrix whose entries all have magnitude n**-0.5.

    Built from doubling and quadratic-residue constructions; raises
    :class:`HadamardUnavailable` for orders where neither applies.
    """
    if n < 1:
        raise ValueError("order must be positive")
    return _hadamard(n) / np.sqrt(n)


def synth_prescribed(
    n: int,
    m: int,
    N: int,
    sigma,
    X,
    tau,
    widths,
    seed: int,
    *,
    metric: np.ndarray | None = None,
) -> tuple[ProblemInstance, SubspaceHierarchy, TestSpace]:
    """Synthesize an instance with prescribed Gram spectrum and distances.

    Draws a random orthonormal trial basis w_1..w_n together with m
    orthonormal complement directions q_1..q_m, then sets

        r_j = sigma_j (W X)_j + sqrt(1 - sigma_j^2) q_j   (j <= n)
        r_j = q_j                                          (j > n)

    so the Gram matrix of ``{r_j}`` against ``{w_i}`` has singular values
    ``sigma`` and right factor ``X``, while ``{r_j}`` stays orthonormal.  The
    operator is ``A = R (M Z)^T`` for a random orthonormal test basis Z, which
    makes ``A z_j = r_j``.  The truth is ``z_true = sum_k c_k w_k + tau_n u``
    with ``c_k = sqrt(tau_{k-1}^2 - tau_k^2)`` and a random unit ``u``
    orthogonal to the trial span, so ``dist(z_true, V_k) = tau_k`` for all k.
    """
    n, m, N = int(n), int(m), int(N)
    if n < 1:
        raise DimensionTooSmall("n must be at least 1")
    if m < n:
        raise DimensionTooSmall(f"need m >= n test directions, got m={m}, n={n}")
    if N < n + m:
        raise DimensionTooSmall(f"need N >= n + m = {n + m}, got N={N}")
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (n,):
        raise InvalidSpectrum(f"sigma must have length n = {n}")
    if np.any(sigma < 0.0) or sigma[0] > 1.0:
        raise InvalidSpectrum("singular values must lie in [0, 1]")
    if np.any(np.diff(sigma) > 0.0):
        raise InvalidSpectrum("singular values must be nonincreasing")
    X = np.asarray(X, dtype=float)
    if X.shape != (n, n):
        raise InvalidSpectrum(f"X must be {n}x{n}")
    if np.max(np.abs(X.T @ X - np.eye(n))) > 1e-10:
        raise InvalidSpectrum("X must be orthogonal")
    tau = np.asarray(tau, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if tau.shape != (n + 1,) or widths.shape != (n + 1,):
        raise InvalidDistances(f"tau and widths must have length n+1 = {n + 1}")
    # remaining distance/width conditions are enforced by SubspaceHierarchy

    rng = np.random.default_rng(seed)
    space = AmbientSpace(N, metric)
    base = orthonormalize(rng.standard_normal((N, n + m)), space)
    W = base.columns[:, :n]
    Q = base.columns[:, n:]

    R = np.empty((N, m))
    R[:, :n] = (W @ X) * sigma + Q[:, :n] * np.sqrt(1.0 - sigma**2)
    R[:, n:] = Q[:, n:]

    Z = orthonormalize(rng.standard_normal((N, m)), space)
    A = R @ space.apply_metric(Z.columns).T

    coeff = np.sqrt(np.maximum(tau[:-1] ** 2 - tau[1:] ** 2, 0.0))
    trial = OrthonormalFrame(space, W)
    u = rng.standard_normal(N)
    for _ in range(2):
        u -= project(u, trial)[0]
    u /= space.norm(u)
    z_true = W @ coeff + tau[-1] * u

    problem = ProblemInstance(space, A, z_true=z_true)
    hierarchy = SubspaceHierarchy(trial, widths=widths, distances=tau)
    return problem, hierarchy, TestSpace(Z)


def example1(
    tau: float, n: int, N: int, seed: int, m: int | None = None
) -> tuple[ProblemInstance, SubspaceHierarchy, TestSpace]:
    """Instance whose classical bound is 1 while the slice bound is O(sqrt(tau)).

    Spectrum and distances share the profile ``(1, ..., 1, sqrt(tau),
    sqrt(tau), tau)`` and X is the identity; the slice widths equal the
    distances.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidSpectrum("tau must lie in (0, 1)")
    if n < 4:
        raise DimensionTooSmall("n must be at least 4")
    m = n if m is None else int(m)
    root = float(np.sqrt(tau))
    sigma = np.array([1.0] * (n - 3) + [root, root, tau])
    profile = np.array([1.0] * (n - 2) + [root, root, tau])
    return synth_prescribed(n, m, N, sigma, np.eye(n), profile, profile.copy(), seed)


def example2(
    tau: float, n: int, N: int, seed: int, m: int | None = None
) -> tuple[ProblemInstance, SubspaceHierarchy, TestSpace]:
    """Instance whose classical bound is 1/tau while the slice bound is O(n**-0.5).

    Uses a flat orthogonal X, distances ``(1/2, 1/(2(n-1)), ..., 1/(2(n-1)),
    tau)`` with widths equal to distances, smallest singular value ``tau**2``,
    and the bulk value chosen so the budget threshold sits exactly at the
    second-to-last index.  The leading singular value is pinned to 1, which is
    the norm of the representer family here, so the classical quotient bound
    evaluates to ``tau**-2 * tau``.
    """
    if n < 2:
        raise DimensionTooSmall("n must be at least 2")
    limit = 1.0 / (2.0 * (n - 1))
    if not 0.0 < tau <= limit:
        raise InvalidDistances(f"tau must lie in (0, {limit}] for n = {n}")
    m = n if m is None else int(m)
    X = flat_orthogonal(n)
    bulk = tau * np.sqrt(n - tau**2)
    sigma = np.full(n, bulk)
    sigma[-1] = tau**2
    if n >= 3:
        sigma[0] = 1.0
    profile = np.array([0.5] + [limit] * (n - 1) + [tau])
    return synth_prescribed(n, m, N, sigma, X, profile, profile.copy(), seed)
