"""Projectors onto the trial space: classical and slice-constrained.

``solve_pg`` solves the square test/trial system (least squares when there
are more tests than trial directions).  ``solve_ms`` minimizes the same
residual subject to the nested tail-norm constraints ``dist(h, V_k) <= eps_k``.
That program is a convex quadratic over an intersection of centered
cylinders; it is solved by a primal-dual active-set method (Newton on the
working-set multipliers) with a safeguarded accelerated projected-gradient
fallback whose projection step runs Dykstra's alternating scheme
(:func:`project_slices`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemInstance, SubspaceHierarchy, TestSpace, riesz_representers, rhs_vector
from .spaces import OrthonormalFrame
from .spectral import gram_matrix

__all__ = [
    "SingularSystem",
    "InfeasibleWidths",
    "TruthUnavailable",
    "SolverOptions",
    "MultiSliceSolution",
    "solve_pg",
    "project_slices",
    "solve_ms",
    "error_norm",
]

# Relative threshold below which the smallest singular value is treated as zero.
SINGULAR_REL_TOL = 1e-12


class SingularSystem(ValueError):
    """The square test/trial system is numerically singular."""


class InfeasibleWidths(ValueError):
    """Slice widths contain negative or NaN entries."""


class TruthUnavailable(ValueError):
    """The problem carries no exact solution to compare against."""


@dataclass(frozen=True)
class SolverOptions:
    """Iteration budgets and tolerances for :func:`solve_ms`.

    ``gradient_tolerance`` acts on the relative cost decrease of the
    fallback iteration; ``dykstra_*`` control the inner projection loop.
    """

    max_iterations: int = 50_000
    gradient_tolerance: float = 1e-10
    dykstra_iterations: int = 200
    dykstra_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.max_iterations < 1 or self.dykstra_iterations < 1:
            raise ValueError("iteration budgets must be positive")
        if self.gradient_tolerance <= 0.0 or self.dykstra_tolerance <= 0.0:
            raise ValueError("tolerances must be positive")


@dataclass(eq=False)
class MultiSliceSolution:
    """Result of :func:`solve_ms`.

    ``cost`` is the squared residual at ``point``; ``kkt_residual`` is the
    projected-gradient mapping norm at the returned coefficients.
    ``non_unique_hint`` flags a numerically rank-deficient Gram matrix, in
    which case the minimizer need not be unique.
    """

    point: np.ndarray
    coeffs: np.ndarray
    cost: float
    iterations: int
    converged: bool
    kkt_residual: float
    non_unique_hint: bool = False


def _assemble(
    problem: ProblemInstance, trial: OrthonormalFrame, tests: TestSpace
) -> tuple[np.ndarray, np.ndarray]:
    if tests.m < trial.n_columns:
        raise ValueError(
            f"need at least as many tests as trial directions (m={tests.m}, n={trial.n_columns})"
        )
    riesz = riesz_representers(problem, tests)
    return gram_matrix(riesz, trial), rhs_vector(problem, tests)


def solve_pg(
    problem: ProblemInstance, trial: OrthonormalFrame, tests: TestSpace
) -> tuple[np.ndarray, np.ndarray]:
    """Classical projection: solve ``G c = d`` (least squares when m > n).

    Returns ``(point, coeffs)``.  Raises :class:`SingularSystem` for a square
    system whose smallest singular value is below ``SINGULAR_REL_TOL`` times
    the largest.
    """
    G, d = _assemble(problem, trial, tests)
    m, n = G.shape
    if n > 0:
        s = np.linalg.svd(G, compute_uv=False)
        if m == n and s[-1] <= SINGULAR_REL_TOL * s[0]:
            raise SingularSystem(
                f"smallest singular value {s[-1]:.3e} below {SINGULAR_REL_TOL} * {s[0]:.3e}"
            )
    coeffs = np.linalg.lstsq(G, d, rcond=None)[0]
    return trial.columns @ coeffs, coeffs


def project_slices(
    c, widths, *, max_rounds: int = 200, tol: float = 1e-12
) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x[k:]|| <= widths[k], k = 0..n-1}``.

    Dykstra's alternating projections over the tail-norm cylinders; the final
    width entry constrains an empty tail and is ignored, and infinite widths
    are skipped.  Terminates when a full sweep moves the iterate by less than
    ``tol`` relative to the input scale.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    widths = np.asarray(widths, dtype=float)
    if widths.shape != (n + 1,):
        raise ValueError(f"widths must have length n+1 = {n + 1}, got {widths.shape}")
    if np.any(np.isnan(widths)) or np.any(widths < 0.0):
        raise InfeasibleWidths("widths must be nonnegative")
    ks = [k for k in range(n) if np.isfinite(widths[k])]
    if not ks:
        return c.copy()
    x = c.copy()
    corrections = np.zeros((len(ks), n))
    scale = max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    for _ in range(max_rounds):
        x_prev = x
        for i, k in enumerate(ks):
            y = x + corrections[i]
            t = float(np.linalg.norm(y[k:]))
            if t > widths[k]:
                z = y.copy()
                z[k:] *= widths[k] / t
            else:
                z = y
            corrections[i] = y - z
            x = z
        if float(np.max(np.abs(x - x_prev))) <= tol * scale:
            break
    # The sweep-increment stop can leave the iterate marginally outside a
    # slowly resolving face.  One head-first clip pass restores exact
    # feasibility: shrinking the tail block at k never grows an earlier tail
    # norm, so a single downward sweep lands inside every cylinder.
    for k in ks:
        t = float(np.linalg.norm(x[k:]))
        if t > widths[k]:
            x[k:] *= 0.0 if widths[k] == 0.0 else widths[k] / t
    return x


def _newton_working_set(H, h, eps, active, c_ls):
    """Clipped Newton for the multipliers of the working set ``active``.

    Seeks ``lam >= 0`` such that the minimizer of the penalized quadratic,
    ``(H + diag(cumulated lam)) c = h``, has squared tail norms equal to
    ``eps_k**2`` wherever ``lam_k > 0`` and within bounds wherever
    ``lam_k = 0``.  Returns ``(c, lam, ok, evals)``.
    """
    n = H.shape[0]
    p = len(active)
    if p == 0:
        return c_ls, np.zeros(0), True, 0

    def evaluate(lam_vec):
        cum = np.zeros(n)
        for k, lam_k in zip(active, lam_vec):
            cum[k:] += lam_k
        K = H + np.diag(cum)
        try:
            c = np.linalg.solve(K, h)
        except np.linalg.LinAlgError:
            ridge = 1e-14 * (np.trace(K) / n + 1.0)
            try:
                c = np.linalg.solve(K + ridge * np.eye(n), h)
            except np.linalg.LinAlgError:
                return None
        F = np.array([c[k:] @ c[k:] - eps[k] ** 2 for k in active])
        return c, F, K

    def merit(lam_vec, F):
        resid = np.where(lam_vec > 0.0, np.abs(F), np.maximum(F, 0.0))
        return float(np.max(resid))

    lam = np.zeros(p)
    state = evaluate(lam)
    if state is None:
        return None, lam, False, 1
    c, F, K = state
    evals = 1
    for _ in range(80):
        cc = float(c @ c)
        tol_f = np.array([1e-11 * max(eps[k] ** 2, 1e-30) + 1e-14 * cc for k in active])
        resid = np.where(lam > 0.0, np.abs(F), np.maximum(F, 0.0))
        if np.all(resid <= tol_f):
            return c, lam, True, evals
        free = (lam > 0.0) | (F > tol_f)
        if not np.any(free):
            return c, lam, True, evals
        free_idx = np.nonzero(free)[0]
        B = np.zeros((n, free_idx.size))
        for col, idx in enumerate(free_idx):
            k = active[idx]
            B[k:, col] = c[k:]
        try:
            V = np.linalg.solve(K, B)
        except np.linalg.LinAlgError:
            return c, lam, False, evals
        J = -2.0 * (B.T @ V)
        try:
            step_free = np.linalg.solve(J, -F[free_idx])
        except np.linalg.LinAlgError:
            step_free = np.linalg.lstsq(J, -F[free_idx], rcond=None)[0]
        step = np.zeros(p)
        step[free_idx] = step_free
        base = merit(lam, F)
        t = 1.0
        accepted = False
        while t >= 1e-6:
            lam_try = np.maximum(lam + t * step, 0.0)
            state = evaluate(lam_try)
            evals += 1
            if state is not None:
                c_try, F_try, K_try = state
                m_try = merit(lam_try, F_try)
                if m_try < base * (1.0 - 1e-4) or m_try <= float(np.max(tol_f)):
                    lam, c, F, K = lam_try, c_try, F_try, K_try
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return c, lam, False, evals
    return c, lam, False, evals


def _active_set_solve(H, h, eps, finite_ks, seed_set, c_ls):
    """Primal-dual active-set outer loop; the working set only grows.

    Returns ``(c, newton_evals)`` on success or ``None`` when the inner
    Newton iteration stalls.
    """
    active = sorted(set(seed_set))
    evals = 0
    for _ in range(len(finite_ks) + 3):
        if active:
            c, lam, ok, ev = _newton_working_set(H, h, eps, active, c_ls)
            evals += ev
            if not ok or c is None:
                return None
        else:
            c = c_ls
        worst_k, worst_excess = None, 0.0
        cc = float(c @ c)
        for k in finite_ks:
            if k in active:
                continue
            excess = float(c[k:] @ c[k:]) - eps[k] ** 2
            tol = 1e-11 * max(eps[k] ** 2, 1e-30) + 1e-14 * cc
            if excess > tol and excess > worst_excess:
                worst_k, worst_excess = k, excess
        if worst_k is None:
            return c, evals
        active = sorted(set(active) | {worst_k})
    return None


def _solve_core(G, d, eps, opts: SolverOptions, x_init):
    """Minimize ``||G c - d||^2`` over the slice cylinders.

    ``eps`` has length n+1 with all entries for k < n strictly positive
    (zero widths are eliminated by the caller).  Returns
    ``(c, iterations, converged, kkt_residual)``.
    """
    m, n = G.shape
    if n == 0:
        return np.zeros(0), 0, True, 0.0
    H = G.T @ G
    h = G.T @ d
    svals = np.linalg.svd(G, compute_uv=False)
    s1 = float(svals[0])
    finite_ks = [k for k in range(n) if np.isfinite(eps[k])]
    if s1 == 0.0:
        # flat cost surface; the origin is feasible and optimal
        return np.zeros(n), 0, True, 0.0
    eta = 1.0 / (2.0 * s1 * s1)
    c_ls = np.linalg.lstsq(G, d, rcond=None)[0]

    def cost(c):
        r = G @ c - d
        return float(r @ r)

    def proj(c):
        return project_slices(
            c, eps, max_rounds=opts.dykstra_iterations, tol=opts.dykstra_tolerance
        )

    def prox_residual(c):
        g = 2.0 * (H @ c - h)
        return float(np.linalg.norm(c - proj(c - eta * g)) / eta)

    def feasible_loose(c):
        return all(
            float(np.linalg.norm(c[k:])) <= eps[k] * (1.0 + 1e-8) + 1e-12
            for k in finite_ks
        )

    gnorm0 = float(np.linalg.norm(2.0 * h))
    cert = max(1e-8, 1e-6 * gnorm0)
    tight = max(1e-9, 1e-7 * gnorm0)

    if x_init is None and all(
        float(np.linalg.norm(c_ls[k:])) <= eps[k] * (1.0 - 1e-9) for k in finite_ks
    ):
        return c_ls, 0, True, prox_residual(c_ls)

    x0 = proj(c_ls if x_init is None else np.asarray(x_init, dtype=float))

    def near_active(c):
        return [
            k
            for k in finite_ks
            if float(np.linalg.norm(c[k:])) >= eps[k] * (1.0 - 1e-6) - 1e-14
        ]

    total_evals = 0
    attempt = _active_set_solve(H, h, eps, finite_ks, near_active(x0), c_ls)
    if attempt is not None:
        c_cand, evals = attempt
        total_evals += evals
        r_cand = prox_residual(c_cand)
        if r_cand <= tight and feasible_loose(c_cand):
            return c_cand, total_evals, True, r_cand

    # Accelerated projected gradient with restart; periodically retry the
    # active-set polish seeded from the current iterate.
    x = x0.copy()
    y = x0.copy()
    t = 1.0
    fx = cost(x)
    best_x, best_f = x.copy(), fx
    stall = 0
    polish_failures = 0
    it = 0
    finished = False
    while it < opts.max_iterations:
        it += 1
        grad_y = 2.0 * (H @ y - h)
        x_new = proj(y - eta * grad_y)
        f_new = cost(x_new)
        if f_new > fx:
            y = x_new.copy()
            t = 1.0
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_next) * (x_new - x)
            t = t_next
        drop = abs(fx - f_new)
        x, fx = x_new, f_new
        if fx < best_f:
            best_x, best_f = x.copy(), fx
        stall = stall + 1 if drop <= opts.gradient_tolerance * max(fx, 1e-30) else 0
        if prox_residual(x) <= tight:
            finished = True
            break
        retry = stall >= 25 or (it % 100 == 0 and polish_failures < 12)
        if retry:
            attempt = _active_set_solve(H, h, eps, finite_ks, near_active(x), c_ls)
            polished = False
            if attempt is not None:
                c_cand, evals = attempt
                total_evals += evals
                r_cand = prox_residual(c_cand)
                if r_cand <= tight and feasible_loose(c_cand):
                    x, fx = c_cand, cost(c_cand)
                    polished = True
            if polished:
                finished = True
                break
            polish_failures += 1
            if stall >= 25:
                break
    if not finished and best_f < fx:
        x, fx = best_x, best_f
    r_final = prox_residual(x)
    return x, it + total_evals, r_final <= cert, r_final


def solve_ms(
    problem: ProblemInstance,
    hierarchy: SubspaceHierarchy,
    tests: TestSpace,
    options: SolverOptions | None = None,
    *,
    initial=None,
) -> MultiSliceSolution:
    """Residual minimizer over the trial space subject to the slice widths.

    ``initial`` optionally supplies starting coefficients (projected onto the
    feasible set before use); by default the solver warm-starts from the
    projected least-squares coefficients.
    """
    opts = options if options is not None else SolverOptions()
    trial = hierarchy.basis
    n = trial.n_columns
    eps = np.asarray(hierarchy.widths, dtype=float)
    if np.any(np.isnan(eps)) or np.any(eps < 0.0):
        raise InfeasibleWidths("widths must be nonnegative")
    G, d = _assemble(problem, trial, tests)
    svals = np.linalg.svd(G, compute_uv=False) if n > 0 else np.zeros(1)
    hint = bool(svals[-1] <= SINGULAR_REL_TOL * svals[0]) if n > 0 else False

    # a zero width pins every coordinate from that index on
    zero_idx = np.nonzero(eps[:n] == 0.0)[0]
    n_free = int(zero_idx[0]) if zero_idx.size else n
    reduced_eps = np.concatenate([eps[:n_free], [0.0]])
    reduced_init = None if initial is None else np.asarray(initial, dtype=float)[:n_free]
    c_red, iterations, converged, kkt = _solve_core(
        G[:, :n_free], d, reduced_eps, opts, reduced_init
    )
    coeffs = np.zeros(n)
    coeffs[:n_free] = c_red
    residual = G @ coeffs - d
    return MultiSliceSolution(
        point=trial.columns @ coeffs,
        coeffs=coeffs,
        cost=float(residual @ residual),
        iterations=int(iterations),
        converged=bool(converged),
        kkt_residual=float(kkt),
        non_unique_hint=hint,
    )


def error_norm(solution_point, problem: ProblemInstance) -> float:
    """Metric-norm distance between a computed point and the exact solution."""
    if not problem.synthetic:
        raise TruthUnavailable("problem has no exact solution attached")
    diff = np.asarray(solution_point, dtype=float) - problem.z_true
    return problem.space.norm(diff)
