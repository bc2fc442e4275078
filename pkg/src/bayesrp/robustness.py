"""Robustness margins for the pairwise rationality verdicts.

Three measures quantify how decisively a pair of decision problems passes or
fails the switch/cycle test:

  R1  minimum uniform relaxation of all inequalities that admits a utility
      (0 exactly on passing pairs);
  R2  maximum uniform tightening that still admits one (margin before the
      verdict flips; defined on passing pairs only);
  R3  minimum normalized perturbation of the information gradient needed to
      satisfy the structured (order-beta / Shannon) multiplier condition.

Utilities are ordinal, so R1/R2 fix the scale with a per-problem linear
anchor (mean utility 1/2) and report the slack divided by the RMS of the
optimizing utility profile.  R3's multiplier product is bilinear; it is
solved as a convex QP per point of a log-spaced multiplier grid with
coordinate refinement, and the reported value is the best point found (an
upper bound on the true optimum, monotone under refinement).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import DecisionProblem
from .infocost import DEFAULT_SMOOTHING, mi_gradient, reduce_problem
from .niasniac import build_feasibility_lp, extract_utilities, test_nias_niac
from .revealed import posterior
from .solvers import (
    DEFAULT_CONFIG,
    EQ,
    GE,
    QuadraticProgram,
    SolverConfig,
    lp_feasible,
    lp_optimize,
    qp_minimize,
)

PAIR_CYCLE = [(0, 1)]


@dataclass
class RobustnessResult:
    metric: str
    pair: tuple
    raw: float
    normalized: float
    utilities: list[np.ndarray] | None = None
    lambda1: np.ndarray | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "pair": list(self.pair),
            "raw": self.raw,
            "normalized": self.normalized,
            "lambda1": None if self.lambda1 is None else self.lambda1.tolist(),
            "details": {k: v for k, v in self.details.items() if not isinstance(v, np.ndarray)},
        }


def _pair(problems) -> list[DecisionProblem]:
    problems = list(problems)
    if len(problems) != 2:
        raise ValueError("robustness metrics are defined on pairs of problems")
    return problems


def _rms(utilities) -> float:
    return float(np.sqrt(sum(np.sum(np.asarray(u) ** 2) for u in utilities) / len(utilities)))


def _anchored_lp(problems, epsilon_coeff: float, forced_rows=None):
    lp, layout = build_feasibility_lp(
        problems, PAIR_CYCLE, n_extra_vars=1, epsilon_extra=0, epsilon_coeff=epsilon_coeff
    )
    eps = layout.extra_var(0)
    for k, p in enumerate(problems):
        coeffs = {int(v): 1.0 for v in layout.u_index[k].ravel()}
        lp.add_sparse(coeffs, EQ, p.n_states * p.n_actions / 2.0)
    if forced_rows:
        posts = [posterior(p) for p in problems]
        for (k, chosen, alt, m) in forced_rows:
            j = problems[k].actions.index(chosen)
            b = problems[k].actions.index(alt)
            col = posts[k].column(j)
            coeffs = {}
            for x in range(problems[k].n_states):
                coeffs[int(layout.u_index[k][x, b])] = coeffs.get(int(layout.u_index[k][x, b]), 0.0) + col[x]
                coeffs[int(layout.u_index[k][x, j])] = coeffs.get(int(layout.u_index[k][x, j]), 0.0) - col[x]
            lp.add_sparse(coeffs, GE, float(m))
    obj = np.zeros(lp.n_vars)
    obj[eps] = 1.0
    lp.objective = obj
    return lp, layout, eps


def r1(
    problems,
    config: SolverConfig = DEFAULT_CONFIG,
    force_switch_violation=None,
) -> RobustnessResult:
    """Minimum uniform relaxation for the pair to satisfy switch + cycle.

    ``force_switch_violation`` is a what-if hook: a list of
    (problem index, chosen action, alternative action, margin) rows that pin
    a violation of the stated size into the system before minimizing.
    """
    problems = _pair(problems)
    lp, layout, eps = _anchored_lp(problems, epsilon_coeff=1.0, forced_rows=force_switch_violation)
    res = lp_optimize(lp, "min", config)
    if res.status != "optimal":
        raise RuntimeError(f"relaxation LP ended with status {res.status}")
    utilities = extract_utilities(layout, res.x)
    raw = max(float(res.value), 0.0)
    rms = _rms(utilities)
    return RobustnessResult(
        metric="R1",
        pair=tuple(p.label for p in problems),
        raw=raw,
        normalized=raw / rms if rms > 0 else 0.0,
        utilities=utilities,
        details={"epsilon": float(res.value), "rms": rms},
    )


def r2(problems, config: SolverConfig = DEFAULT_CONFIG) -> RobustnessResult:
    """Maximum uniform tightening that keeps the pair feasible.

    Defined only on passing pairs; the diagonal cross terms stay pinned to
    the chosen action because the tightened switch inequalities are at least
    as strict as the originals.
    """
    problems = _pair(problems)
    base = test_nias_niac(problems, config=config)
    if not base.is_feasible:
        raise ValueError("R2 is defined only on pairs that pass the rationality test")
    lp, layout, eps = _anchored_lp(problems, epsilon_coeff=-1.0)
    res = lp_optimize(lp, "max", config)
    if res.status != "optimal":
        raise RuntimeError(f"tightening LP ended with status {res.status}")
    utilities = extract_utilities(layout, res.x)
    raw = max(float(res.value), 0.0)
    rms = _rms(utilities)
    return RobustnessResult(
        metric="R2",
        pair=tuple(p.label for p in problems),
        raw=raw,
        normalized=raw / rms if rms > 0 else 0.0,
        utilities=utilities,
        details={"epsilon": float(res.value), "rms": rms},
    )


# ---------------------------------------------------------------------------
# R3: gradient perturbation against the structured-cost condition
# ---------------------------------------------------------------------------


class _R3System:
    """Constraint stack (fixed across the multiplier grid) plus Q/c assembly."""

    def __init__(self, problems, posts, grads, grad_norms, config: SolverConfig):
        self.problems = problems
        self.grads = grads
        self.grad_norms = grad_norms
        self.config = config
        K = len(problems)
        lp, layout = build_feasibility_lp(problems, PAIR_CYCLE, n_extra_vars=K, posts=posts)
        self.layout = layout
        self.lam2 = [layout.extra_var(i) for i in range(K)]
        self.n = lp.n_vars
        A_in = np.array([-con.coeffs for con in lp.constraints])  # GE -> <=
        b_in = np.array([-con.rhs for con in lp.constraints])
        # duplicated posterior columns (smoothed never-chosen actions) yield
        # exactly repeated rows; deduplicate to keep the active set small
        stacked = np.unique(np.round(np.column_stack([A_in, b_in]), 12), axis=0)
        self.A_in, self.b_in = stacked[:, :-1], stacked[:, -1]
        self.lower, self.upper = lp.lower, lp.upper
        # one simplex run provides a start shared by every grid point
        start = lp_feasible(lp, config)
        if not start.is_feasible:
            raise RuntimeError("structured-cost constraint stack is infeasible")
        self.x0 = start.x.astype(float)
        self.warm = None

    def value_at(self, lam1) -> float | None:
        K = len(self.problems)
        Q = np.zeros((self.n, self.n))
        c = np.zeros(self.n)
        const = 0.0
        for k, p in enumerate(self.problems):
            w = 1.0 / (K * lam1[k] ** 2 * self.grad_norms[k] ** 2)
            for x in range(p.n_states):
                for a in range(p.n_actions):
                    uv = int(self.layout.u_index[k][x, a])
                    c0 = lam1[k] * self.grads[k][x, a]
                    # contribution w * (u + lambda2 - c0)^2
                    for v1 in (uv, self.lam2[k]):
                        for v2 in (uv, self.lam2[k]):
                            Q[v1, v2] += 2.0 * w
                        c[v1] += -2.0 * w * c0
                    const += w * c0 * c0
        qp = QuadraticProgram(
            Q=Q, c=c, A_in=self.A_in, b_in=self.b_in, lower=self.lower, upper=self.upper
        )
        res = None
        for x0 in ([self.warm] if self.warm is not None else []) + [self.x0]:
            res = qp_minimize(qp, self.config, x0=x0)
            if res.status == "optimal":
                break
        if res is None or res.status != "optimal":
            return None
        self.warm = res.x
        return float(res.value) + const


def r3(
    problems,
    beta: float = 1.0,
    smoothing: float = DEFAULT_SMOOTHING,
    config: SolverConfig = DEFAULT_CONFIG,
    grid_points: int = 9,
    refine_depth: int = 4,
) -> RobustnessResult:
    """Minimum normalized gradient perturbation admitting positive multipliers.

    Outer log-spaced grid over (lambda1_i, lambda1_j) in [1e-4, 1e4]^2 with
    coordinate bisection refinement around the best point; each grid point is
    a convex QP.  The reported value is an upper bound on the bilinear
    optimum and never increases under refinement.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("order beta must lie in (0, 1] for the structured test")
    problems = _pair(problems)
    base = test_nias_niac(problems, config=config)
    if not base.is_feasible:
        raise ValueError("R3 is defined on pairs passing the free-form cost test")
    reduced = [reduce_problem(p, smoothing)[0] for p in problems]
    posts = [posterior(p) for p in reduced]
    grads = [mi_gradient(p.joint(), beta, mu=p.mu) for p in reduced]
    grad_norms = [float(np.linalg.norm(g)) for g in grads]
    system = _R3System(reduced, posts, grads, grad_norms, config)

    log_lo, log_hi = -4.0, 4.0
    axis = np.linspace(log_lo, log_hi, grid_points)
    evaluated: dict[tuple[float, float], float] = {}

    def value_at(li, lj):
        key = (round(li, 12), round(lj, 12))
        if key not in evaluated:
            val = system.value_at((10.0 ** li, 10.0 ** lj))
            evaluated[key] = np.inf if val is None else max(val, 0.0)
        return evaluated[key]

    best_val, best_pt = np.inf, (axis[0], axis[0])
    trace = []
    for li in axis:
        for lj in axis:
            v = value_at(li, lj)
            if v < best_val:
                best_val, best_pt = v, (li, lj)
    trace.append(best_val)
    spacing = float(axis[1] - axis[0]) if grid_points > 1 else 1.0
    for _ in range(refine_depth):
        spacing /= 2.0
        li0, lj0 = best_pt
        for dli in (-spacing, 0.0, spacing):
            for dlj in (-spacing, 0.0, spacing):
                v = value_at(li0 + dli, lj0 + dlj)
                if v < best_val:
                    best_val, best_pt = v, (li0 + dli, lj0 + dlj)
        trace.append(best_val)
    lam1 = np.array([10.0 ** best_pt[0], 10.0 ** best_pt[1]])
    return RobustnessResult(
        metric="R3",
        pair=tuple(p.label for p in problems),
        raw=float(best_val),
        normalized=float(best_val),
        lambda1=lam1,
        details={
            "beta": beta,
            "refinement_trace": trace,
            "qp_evaluations": len(evaluated),
        },
    )
