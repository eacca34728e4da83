"""Shared generators and independent oracles for the test suite.

Everything here deliberately avoids the library's own code paths: feasible
points come from direct tail clipping, reference minimizers from scipy's
SLSQP, reference projections from sampling plus polish.  Agreement between
these routines and the package is then evidence, not a tautology.
"""

import itertools

import numpy as np
from scipy.optimize import minimize

from msrom import gram_matrix, rhs_vector, riesz_representers, synth_prescribed


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, dim, spread=4.0):
    """SPD matrix with eigenvalues log-uniform in [1/spread, spread]."""
    q = random_orthogonal(rng, dim)
    eigs = np.exp(rng.uniform(-np.log(spread), np.log(spread), size=dim))
    return (q * eigs) @ q.T


def descending(rng, size, low, high):
    return np.sort(rng.uniform(low, high, size=size))[::-1]


def assemble(problem, hierarchy, tests):
    """The (G, d) pair of the discrete system, via the public plumbing."""
    riesz = riesz_representers(problem, tests)
    return gram_matrix(riesz, hierarchy.basis), rhs_vector(problem, tests)


def sweep_instance(rng, n_low=3, n_high=12):
    """Random synthetic instance with a free spectrum in (0, 1]."""
    n = int(rng.integers(n_low, n_high + 1))
    m = int(rng.integers(n, 2 * n + 1))
    N = n + m + int(rng.integers(2, 6))
    sigma = descending(rng, n, 0.01, 1.0)
    tau = descending(rng, n + 1, 1e-3, 1.2)
    X = random_orthogonal(rng, n)
    seed = int(rng.integers(0, 2**31))
    return synth_prescribed(n, m, N, sigma, X, tau, tau.copy(), seed)


def square_instance(rng, n_low=3, n_high=10):
    """m = n instance with sigma_1 pinned to the representer-family norm 1.

    With m = n the complement coupling is gamma = sqrt(1 - sigma_n^2), so
    sigma_1 = 1 guarantees sigma_n^2 + gamma^2 <= sigma_1^2 and the quotient
    bound is provable for the construction.  sigma_n stays >= 0.05.
    """
    n = int(rng.integers(n_low, n_high + 1))
    N = 2 * n + int(rng.integers(2, 6))
    sigma = descending(rng, n, 0.05, 1.0)
    sigma[0] = 1.0
    tau = descending(rng, n + 1, 1e-3, 1.2)
    X = random_orthogonal(rng, n)
    seed = int(rng.integers(0, 2**31))
    return synth_prescribed(n, n, N, sigma, X, tau, tau.copy(), seed)


def clip_to_feasible(c, widths):
    """Feasible point from an arbitrary one by clipping tails head-first.

    Shrinking the tail block at k never grows any earlier tail norm, so a
    single downward sweep lands inside every cylinder.
    """
    x = np.array(c, dtype=float)
    n = x.shape[0]
    for k in range(n):
        w = widths[k]
        if not np.isfinite(w):
            continue
        t = float(np.linalg.norm(x[k:]))
        if t > w:
            x[k:] *= 0.0 if w == 0.0 else w / t
    return x


def random_feasible(rng, widths, n, scale=1.0):
    return clip_to_feasible(rng.standard_normal(n) * scale, widths)


def _polish(fun, jac, x0, widths, n):
    cons = []
    for k in range(n):
        if not np.isfinite(widths[k]):
            continue

        def c_fun(x, k=k):
            return widths[k] ** 2 - float(x[k:] @ x[k:])

        def c_jac(x, k=k):
            g = np.zeros(n)
            g[k:] = -2.0 * x[k:]
            return g

        cons.append({"type": "ineq", "fun": c_fun, "jac": c_jac})
    res = minimize(
        fun,
        x0,
        jac=jac,
        method="SLSQP",
        constraints=cons,
        options={"maxiter": 400, "ftol": 1e-14},
    )
    return np.asarray(res.x, dtype=float)


def brute_force_ms(G, d, widths, rng, n_grid=7, n_starts=6):
    """Reference minimum of ||G c - d||^2 over the nested tail cylinders.

    Coarse sampling (a grid clipped into the feasible set plus random
    feasible points) followed by SLSQP polish from the best candidates and
    from the clipped least-squares point.  Returns (cost, argmin).
    """
    n = G.shape[1]

    def fun(x):
        r = G @ x - d
        return float(r @ r)

    def jac(x):
        return 2.0 * (G.T @ (G @ x - d))

    c_ls = np.linalg.lstsq(G, d, rcond=None)[0]
    cap = widths[0] if np.isfinite(widths[0]) else max(1.0, float(np.linalg.norm(c_ls)))
    axes = [np.linspace(-cap, cap, n_grid)] * n
    candidates = [clip_to_feasible(np.array(p), widths) for p in itertools.product(*axes)]
    candidates.extend(random_feasible(rng, widths, n, scale=cap) for _ in range(200))
    candidates.append(clip_to_feasible(c_ls, widths))
    candidates.sort(key=fun)
    best_x = candidates[0]
    best = fun(best_x)
    for x0 in candidates[:n_starts]:
        x = clip_to_feasible(_polish(fun, jac, x0, widths, n), widths)
        value = fun(x)
        if value < best:
            best, best_x = value, x
    return best, best_x


def brute_force_projection(c, widths, rng, n_starts=40):
    """Reference Euclidean projection onto the cylinder intersection (small n)."""
    n = c.shape[0]

    def fun(x):
        diff = x - c
        return float(diff @ diff)

    def jac(x):
        return 2.0 * (x - c)

    best_x = clip_to_feasible(c, widths)
    best = fun(best_x)
    scale = max(1.0, float(np.max(np.abs(c)))) if n else 1.0
    for _ in range(n_starts):
        x0 = random_feasible(rng, widths, n, scale=scale)
        x = clip_to_feasible(_polish(fun, jac, x0, widths, n), widths)
        if fun(x) < best:
            best, best_x = fun(x), x
    x = clip_to_feasible(_polish(fun, jac, best_x, widths, n), widths)
    if fun(x) < best:
        best_x = x
    return best_x
