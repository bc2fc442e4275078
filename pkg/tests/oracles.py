"""Independent oracles used by the test suite.

These are deliberately written against the mathematical definitions, not the
library's solution paths: exhaustive grids, vertex enumeration, and direct
summation.  They stay brute-force so they can arbitrate the fast paths.
"""

from itertools import combinations

import numpy as np

from bayesrp.dataset import DecisionProblem
from bayesrp.revealed import posterior


def random_pair(rng, n_actions=3, dirichlet=1.0, common_prior=False):
    mu = rng.dirichlet([2.0, 2.0])
    problems = []
    for k in range(2):
        prior = mu if common_prior else rng.dirichlet([2.0, 2.0])
        pol = rng.dirichlet([dirichlet] * n_actions, size=2)
        problems.append(
            DecisionProblem(mu=prior, policy=pol, actions=tuple(range(1, n_actions + 1)),
                            label=("seg", k))
        )
    return problems


def grid_axis(step=0.25):
    return np.arange(0.0, 1.0 + 1e-12, step)


def _all_utilities(n_states, n_actions, axis):
    """Every utility table on the grid, shape (n_grid, n_states, n_actions)."""
    grids = np.meshgrid(*([axis] * (n_states * n_actions)), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    return flat.reshape(-1, n_states, n_actions)


def _nias_mask(problem, post, U, margin):
    ok = np.ones(U.shape[0], dtype=bool)
    for j in np.flatnonzero(post.supported):
        vals = np.einsum("x,nxa->na", post.column(j), U)
        for b in range(problem.n_actions):
            if b == j:
                continue
            ok &= vals[:, j] - vals[:, b] >= margin - 1e-12
    return ok


def _diag_values(problem, U):
    return np.einsum("xa,nxa->n", problem.joint(), U)


def _cross_values(src_problem, src_post, U):
    """value of src's information under each candidate target utility."""
    total = np.zeros(U.shape[0])
    for j in np.flatnonzero(src_post.supported):
        pieces = np.einsum("x,nxa->na", src_post.column(j), U)
        total += src_post.p_a[j] * pieces.max(axis=1)
    return total


def grid_verdict(problems, margin=0.0, step=0.25) -> bool:
    """Exhaustive two-problem feasibility over the utility grid.

    The single cycle inequality separates into one term per problem
    (each cross term pairs problem k's utility with the other problem's
    information), so per-problem maxima decide feasibility exactly.
    """
    assert len(problems) == 2
    axis = grid_axis(step)
    posts = [posterior(p) for p in problems]
    best = []
    for k in (0, 1):
        U = _all_utilities(problems[k].n_states, problems[k].n_actions, axis)
        ok = _nias_mask(problems[k], posts[k], U, margin)
        if not ok.any():
            return False
        U = U[ok]
        d = _diag_values(problems[k], U) - _cross_values(problems[1 - k], posts[1 - k], U)
        best.append(d.max())
    return best[0] + best[1] >= margin - 1e-12


def lp_vertex_optimum(lp, sense="min"):
    """Enumerate basic feasible points of a small LP (rows + bounds as planes)."""
    n = lp.n_vars
    planes = []
    for con in lp.constraints:
        planes.append((con.coeffs, con.rhs, con.sense))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.lower[j]):
            planes.append((e, lp.lower[j], "bound"))
        if np.isfinite(lp.upper[j]):
            planes.append((e, lp.upper[j], "bound"))
    best = None
    for subset in combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in subset])
        b = np.array([planes[i][1] for i in subset])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        ok = True
        for coeffs, rhs, s in planes:
            v = coeffs @ x
            if s == "<=" and v > rhs + 1e-9:
                ok = False
            elif s == ">=" and v < rhs - 1e-9:
                ok = False
            elif s == "=" and abs(v - rhs) > 1e-9:
                ok = False
        if not np.all(x >= lp.lower - 1e-9) or not np.all(x <= lp.upper + 1e-9):
            ok = False
        if not ok:
            continue
        val = float(lp.objective @ x)
        if best is None or (sense == "min" and val < best) or (sense == "max" and val > best):
            best = val
    return best
