"""Forward model of a budget-constrained information-acquiring agent.

Solves, per decision problem, the concave program

    max_{p(x,a)}  sum p(x,a) u(x,a)
    s.t.          sum_a p(x,a) = mu(x),   I_beta(p) <= kappa,   p >= 0

by multiplicative-weights ascent on the conditional rows p(a|x) with an
outer bisection on the information multiplier (the Shannon case reduces to
the classic alternating fixed point p(a|x) ∝ p(a) exp(u(x,a)/lambda)).
Signals map one-to-one to actions throughout, so the attention function IS
the action-selection policy.

Also constructs guaranteed-rational synthetic agents for a free-form cost:
given candidate utilities and attention functions, the attention functions
are (re)assigned to maximize total cross value and costs are recovered as
shadow prices, so the attention choices are optimal by construction.  These
agents are the correctness oracle for every inverse test in this package.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .dataset import ChoiceRecord, DecisionProblem
from .infocost import mi_gradient, renyi_mi_value
from .niasniac import recover_costs
from .revealed import g_matrix
from .solvers import DEFAULT_CONFIG, SolverConfig

COST_FAMILIES = ("general", "shannon", "renyi")


@dataclass
class ForwardConfig:
    max_iters: int = 100_000
    residual_tol: float = 1e-7
    bisect_tol: float = 1e-10
    mi_tol: float = 1e-9


DEFAULT_FORWARD = ForwardConfig()


@dataclass
class AgentSpec:
    """States, priors, utilities and an information-cost family per agent."""

    mu: np.ndarray
    utilities: list[np.ndarray]  # one (|X|, |A_k|) array per problem
    cost_family: str = "general"
    beta: float | None = None  # renyi order, in (0, 1)
    budgets: np.ndarray | None = None  # kappa per problem (shannon/renyi)
    policies: list[np.ndarray] | None = None  # attention functions (general)
    cost_table: np.ndarray | None = None  # C_k per problem (general)
    actions: list[tuple[int, ...]] | None = None
    states: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.utilities = [np.asarray(u, dtype=float) for u in self.utilities]
        if self.cost_family not in COST_FAMILIES:
            raise ValueError(f"unknown cost family {self.cost_family!r}")
        if self.cost_family == "renyi" and not (self.beta and 0 < self.beta < 1):
            raise ValueError("renyi agents need an order beta in (0, 1)")
        if self.cost_family in ("shannon", "renyi"):
            if self.budgets is None:
                raise ValueError("budgeted agents need kappa per problem")
            self.budgets = np.asarray(self.budgets, dtype=float)
            if np.any(self.budgets < 0):
                raise ValueError("budgets must be non-negative")
        if self.actions is None:
            self.actions = [tuple(range(1, u.shape[1] + 1)) for u in self.utilities]

    @property
    def n_problems(self) -> int:
        return len(self.utilities)

    def to_dict(self) -> dict:
        return {
            "schema": "bayesrp-agent-v1",
            "states": list(self.states),
            "mu": self.mu.tolist(),
            "utilities": [u.tolist() for u in self.utilities],
            "cost_family": self.cost_family,
            "beta": self.beta,
            "budgets": None if self.budgets is None else self.budgets.tolist(),
            "policies": None if self.policies is None else [p.tolist() for p in self.policies],
            "cost_table": None if self.cost_table is None else self.cost_table.tolist(),
            "actions": [list(a) for a in self.actions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentSpec":
        if d.get("schema") != "bayesrp-agent-v1":
            raise ValueError("not an agent spec payload")
        return cls(
            mu=np.array(d["mu"], dtype=float),
            utilities=[np.array(u, dtype=float) for u in d["utilities"]],
            cost_family=d["cost_family"],
            beta=d.get("beta"),
            budgets=None if d.get("budgets") is None else np.array(d["budgets"], dtype=float),
            policies=None if d.get("policies") is None else [np.array(p) for p in d["policies"]],
            cost_table=None if d.get("cost_table") is None else np.array(d["cost_table"]),
            actions=[tuple(a) for a in d["actions"]],
            states=tuple(d.get("states", (1, 2))),
        )


class ConvergenceError(RuntimeError):
    """Solver exhausted its iteration cap; carries the residual reached."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"forward solve did not converge (residual {residual:.3e})")


@dataclass
class OptimalBehavior:
    problems: list[DecisionProblem]  # optimal policy per problem
    achieved_mi: np.ndarray
    objective: float
    kkt_residuals: np.ndarray
    multipliers: np.ndarray  # information price per problem (0 when slack)
    spec: AgentSpec | None = None


def _greedy_policy(mu, u) -> np.ndarray:
    """Unconstrained optimum: per-state argmax (lowest index on ties)."""
    pol = np.zeros_like(u, dtype=float)
    pol[np.arange(u.shape[0]), np.argmax(u, axis=1)] = 1.0
    return pol


def _uninformative_policy(mu, u) -> np.ndarray:
    """Zero-information optimum: one action maximizing prior expected utility."""
    best = int(np.argmax(mu @ u))
    pol = np.zeros_like(u, dtype=float)
    pol[:, best] = 1.0
    return pol


def _exp_weights(u, lam) -> np.ndarray:
    """exp(u/lam) stabilized per row; row-constant factors cancel on normalization."""
    z = (u - u.max(axis=1, keepdims=True)) / lam
    return np.exp(np.maximum(z, -700.0))


def _normalize_rows(pol, u) -> np.ndarray:
    sums = pol.sum(axis=1, keepdims=True)
    dead = sums[:, 0] <= 0
    if np.any(dead):
        pol = pol.copy()
        for x in np.flatnonzero(dead):
            pol[x] = 0.0
            pol[x, int(np.argmax(u[x]))] = 1.0
        sums = pol.sum(axis=1, keepdims=True)
    return pol / sums


def _shannon_kt_gap(mu, w, q) -> float:
    """Kuhn-Tucker gap of the action marginal q for the fixed-point map.

    With r(a) = sum_x mu(x) w(x,a) / Z(x), optimality of q is r <= 1 with
    equality on the support; the gap certifies convergence even when mass is
    still draining slowly out of a dominated action.
    """
    Z = (w * q[None, :]).sum(axis=1)
    r = (mu / Z) @ w
    return float(max(np.max(r) - 1.0, np.max(np.abs(q * (r - 1.0)))))


def _shannon_fixed_point(mu, u, lam, config: ForwardConfig):
    """Optimal channel at information price lam: p(a|x) ∝ p(a) exp(u/lam).

    The optimal action marginal q maximizes the concave dual
    G(q) = sum_x mu(x) ln(sum_a q(a) w(x,a)); with two states G depends on q
    only through two increasing linear forms, so the optimum is supported on
    at most two actions and is found exactly by support enumeration plus a
    monotone 1-D bisection.  More states fall back to the alternating
    fixed-point iteration.
    """
    w = _exp_weights(u, lam)
    if len(mu) == 2:
        q = _two_state_marginal(np.asarray(mu, dtype=float), w)
        return _normalize_rows(w * q[None, :], u)
    n_a = u.shape[1]
    q = np.full(n_a, 1.0 / n_a)
    for it in range(config.max_iters):
        Z = (w * q[None, :]).sum(axis=1)
        q = q * ((mu / Z) @ w)  # self-normalizing multiplicative update
        if it % 32 == 31 and _shannon_kt_gap(mu, w, q) < config.residual_tol / 10:
            break
    return _normalize_rows(w * q[None, :], u)


def _two_state_marginal(mu, w) -> np.ndarray:
    """argmax_q mu1 ln(q.w1) + mu2 ln(q.w2) over the simplex, |X| = 2.

    Enumerates singleton and pair supports; on a pair the directional
    derivative is strictly decreasing, so bisection pins the optimum.
    """
    n_a = w.shape[1]

    def value(q):
        Z = q @ w.T
        if np.any(Z <= 0):
            return -np.inf
        return float(mu @ np.log(Z))

    best_q, best_v = None, -np.inf
    for a in range(n_a):
        q = np.zeros(n_a)
        q[a] = 1.0
        v = value(q)
        if v > best_v + 1e-15:
            best_q, best_v = q, v
    for a in range(n_a):
        for b in range(a + 1, n_a):
            wa, wb = w[:, a], w[:, b]

            def deriv(t):  # d/dt of value at q = t*e_a + (1-t)*e_b
                Z = t * wa + (1.0 - t) * wb
                return float(np.sum(mu * (wa - wb) / Z))

            if deriv(0.0) <= 0 or deriv(1.0) >= 0:
                continue  # optimum sits on a singleton, already covered
            lo, hi = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if deriv(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            t = 0.5 * (lo + hi)
            q = np.zeros(n_a)
            q[a], q[b] = t, 1.0 - t
            v = value(q)
            if v > best_v + 1e-15:
                best_q, best_v = q, v
    return best_q


def _fixed_point_residual(mu, u, lam, pol) -> float:
    """Fixed-point verification: KT gap of q plus the policy reconstruction gap."""
    q = mu @ pol
    w = _exp_weights(u, lam)
    target = _normalize_rows(w * q[None, :], u)
    return float(max(np.max(np.abs(pol - target)), _shannon_kt_gap(mu, w, q)))


def _renyi_ascent(mu, u, lam, beta, config: ForwardConfig):
    """Exponentiated-gradient ascent on rows of the Lagrangian objective."""
    n_x, n_a = u.shape
    pol = np.full((n_x, n_a), 1.0 / n_a)
    step = 0.5 / max(1.0, lam)
    residual = np.inf
    for it in range(config.max_iters):
        joint = mu[:, None] * pol
        joint = np.maximum(joint, 1e-300)
        grad_i = mi_gradient(joint / joint.sum(), beta, mu=mu)
        d = u - lam * grad_i
        pol_new = pol * np.exp(step * (d - d.max(axis=1, keepdims=True)))
        pol_new /= pol_new.sum(axis=1, keepdims=True)
        pol_new = np.maximum(pol_new, 1e-15)
        pol_new /= pol_new.sum(axis=1, keepdims=True)
        move = np.max(np.abs(pol_new - pol))
        pol = pol_new
        if it % 50 == 49 or move < 1e-15:
            residual = _simplex_residual(pol, d)
            if residual < config.residual_tol / 10:
                break
    return pol


def _simplex_residual(pol, d) -> float:
    """Row-wise optimality gap: max_a d - policy-average of d."""
    avg = np.sum(pol * d, axis=1)
    return float(np.max(d.max(axis=1) - avg))


def _solve_budgeted(mu, u, kappa, beta, config: ForwardConfig):
    """Bisection on the information price so achieved information meets kappa."""
    mu = np.asarray(mu, dtype=float)
    u = np.asarray(u, dtype=float)

    def mi_of(pol):
        joint = mu[:, None] * pol
        return renyi_mi_value(joint, mu, beta)

    greedy = _greedy_policy(mu, u)
    mi_greedy = mi_of(greedy)
    if mi_greedy <= kappa + config.mi_tol:
        return greedy, mi_of(greedy), 0.0
    if kappa <= config.mi_tol:
        pol = _uninformative_policy(mu, u)
        return pol, 0.0, np.inf

    solver = (
        (lambda lam: _shannon_fixed_point(mu, u, lam, config))
        if beta == 1.0
        else (lambda lam: _renyi_ascent(mu, u, lam, beta, config))
    )
    lam_lo, lam_hi = 1e-6, 1.0
    while mi_of(solver(lam_hi)) > kappa and lam_hi < 1e8:
        lam_hi *= 4.0
    while mi_of(solver(lam_lo)) < kappa and lam_lo > 1e-12:
        lam_lo /= 4.0
    for _ in range(200):
        lam = np.sqrt(lam_lo * lam_hi)
        pol = solver(lam)
        mi = mi_of(pol)
        if abs(mi - kappa) <= config.mi_tol:
            return pol, mi, lam
        if mi > kappa:
            lam_lo = lam
        else:
            lam_hi = lam
        if lam_hi / lam_lo < 1 + config.bisect_tol:
            break
    pol = solver(lam_hi)  # feasible side of the budget
    return pol, mi_of(pol), lam_hi


def solve_agent(spec: AgentSpec, config: ForwardConfig = DEFAULT_FORWARD) -> OptimalBehavior:
    """Optimal joint behavior per decision problem for the given cost family.

    For budgeted families the returned behavior satisfies the marginal
    constraint by construction and the budget within tolerance; the
    fixed-point/stationarity residual is reported per problem and a
    ConvergenceError is raised when it cannot be met.
    """
    if spec.cost_family == "general":
        if spec.policies is None:
            raise ValueError("general-cost agents carry explicit attention functions")
        problems = [
            DecisionProblem(mu=spec.mu, policy=pol, actions=spec.actions[k], states=spec.states)
            for k, pol in enumerate(spec.policies)
        ]
        mis = np.array([renyi_mi_value(p.joint(), spec.mu, 1.0) for p in problems])
        obj = float(sum(np.sum(p.joint() * u) for p, u in zip(problems, spec.utilities)))
        return OptimalBehavior(
            problems=problems, achieved_mi=mis, objective=obj,
            kkt_residuals=np.zeros(len(problems)), multipliers=np.zeros(len(problems)),
            spec=spec,
        )

    beta = 1.0 if spec.cost_family == "shannon" else float(spec.beta)
    problems, mis, lams, residuals = [], [], [], []
    for k, u in enumerate(spec.utilities):
        pol, mi, lam = _solve_budgeted(spec.mu, u, float(spec.budgets[k]), beta, config)
        if np.isfinite(lam) and lam > 0 and beta == 1.0:
            resid = _fixed_point_residual(spec.mu, u, lam, pol)
        elif np.isfinite(lam) and lam > 0:
            joint = spec.mu[:, None] * pol
            d = u - lam * mi_gradient(joint / joint.sum(), beta, mu=spec.mu)
            resid = _simplex_residual(pol, d)
        else:
            resid = 0.0  # corner solutions are exact
        if resid > config.residual_tol:
            raise ConvergenceError(resid)
        problems.append(
            DecisionProblem(mu=spec.mu, policy=pol, actions=spec.actions[k], states=spec.states)
        )
        mis.append(mi)
        lams.append(lam)
        residuals.append(resid)
    obj = float(sum(np.sum(p.joint() * u) for p, u in zip(problems, spec.utilities)))
    return OptimalBehavior(
        problems=problems, achieved_mi=np.array(mis), objective=obj,
        kkt_residuals=np.array(residuals), multipliers=np.array(lams), spec=spec,
    )


def make_general_cost_agent(
    mu,
    utilities: list[np.ndarray],
    attentions: list[np.ndarray],
    actions: list[tuple[int, ...]] | None = None,
    states: tuple[int, ...] = (1, 2),
    solver_config: SolverConfig = DEFAULT_CONFIG,
) -> AgentSpec:
    """Build a synthetic agent whose attention choices are optimal by construction.

    The candidate attention functions are assigned to decision problems so
    total cross value is maximized (re-pairing them when the given pairing
    admits an improving reassignment), then costs are recovered as shadow
    prices of that assignment.  The resulting data is attention-rational for
    some cost, whatever the inputs.
    """
    mu = np.asarray(mu, dtype=float)
    utilities = [np.asarray(u, dtype=float) for u in utilities]
    K = len(utilities)
    if len(attentions) != K:
        raise ValueError("need one attention function per problem")
    if actions is None:
        actions = [tuple(range(1, u.shape[1] + 1)) for u in utilities]
    base = [
        DecisionProblem(mu=mu, policy=np.asarray(a, dtype=float), actions=actions[k], states=states)
        for k, a in enumerate(attentions)
    ]
    G = g_matrix(base, utilities)  # G[k, w]: attention k under utility w
    best_perm, best_val = None, -np.inf
    for perm in permutations(range(K)):
        val = sum(G[perm[k], k] for k in range(K))
        if val > best_val + 1e-12:
            best_val, best_perm = val, perm
    policies = [np.asarray(attentions[best_perm[k]], dtype=float) for k in range(K)]
    problems = [
        DecisionProblem(mu=mu, policy=pol, actions=actions[k], states=states)
        for k, pol in enumerate(policies)
    ]
    costs = recover_costs(problems, utilities, solver_config)
    return AgentSpec(
        mu=mu, utilities=utilities, cost_family="general",
        policies=policies, cost_table=costs.costs, actions=actions, states=states,
    )


def sample_dataset(
    behavior: OptimalBehavior, n_samples: int, seed: int, frame: int = 0
) -> list[ChoiceRecord]:
    """Draw ``n_samples`` i.i.d. (state, action) pairs per decision problem.

    Identical seeds give identical datasets.  Problem k is emitted as
    segment (frame, k+1).
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    records = []
    for k, problem in enumerate(behavior.problems):
        xs = rng.choice(problem.n_states, size=n_samples, p=problem.mu)
        acts = np.empty(n_samples, dtype=int)
        for xi in range(problem.n_states):
            idx = np.flatnonzero(xs == xi)
            if idx.size:
                acts[idx] = rng.choice(problem.n_actions, size=idx.size, p=problem.policy[xi])
        states = problem.states
        actions = problem.actions
        records.extend(
            ChoiceRecord(
                x=states[xs[t]],
                a=actions[acts[t]],
                frame=frame,
                problem=k + 1,
                item_id=f"sim-{k + 1}-{t}",
            )
            for t in range(n_samples)
        )
    return records
