"""Behavior prediction from recovered utilities and policy recommendation.

Prediction compares, per segment and state, the action ranked best by the
utility recovered from training data against the maximum-a-posteriori action
of the held-out data; the error is the absolute difference of action indices
(bounded by one less than the number of actions).

Utility recovery for prediction must pick one element of the set-valued
feasible region.  The default selection ties the utility to the log of the
training posteriors with the widest admissible positive multiplier: it is
deterministic, posterior-monotone (its per-state argmax equals the training
MAP rule), and reduces to an ordinary feasible vertex when the structured
selection is unavailable (zero-support cells with smoothing disabled).

Recommendation maximizes total expected utility minus a per-problem sampling
penalty (a multiplier times the standard error of the importance-weighted
utility), by projected gradient ascent over policy rows starting from the
estimated policy; steps that break the switch/cycle inequalities of the
recovered utility are rejected, so the result is never less feasible or
lower-valued than the empirical baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import DecisionProblem
from .infocost import SupportError, test_shannon_kkt
from .niasniac import enumerate_cycles, nias_slack_table, niac_slack_table, test_nias_niac
from .revealed import posterior
from .solvers import DEFAULT_CONFIG, SolverConfig

FEAS_SLACK_TOL = 1e-9


def max_utility_estimate(u: np.ndarray, state_index: int) -> int:
    """Column index of the highest-utility action; lowest index wins ties."""
    return int(np.argmax(np.asarray(u)[state_index]))


def map_estimate(problem: DecisionProblem, state_index: int) -> int:
    """Column index of the action with the largest posterior on the state."""
    post = posterior(problem)
    vals = np.where(post.supported, post.p_x_given_a[state_index], -np.inf)
    return int(np.argmax(vals))


def hamming_error(a_idx: int, b_idx: int) -> int:
    return abs(int(a_idx) - int(b_idx))


def recover_prediction_utility(
    problem: DecisionProblem,
    smoothing: float,
    config: SolverConfig,
) -> np.ndarray:
    """Deterministic single-problem utility pick used for prediction.

    Actions never chosen in training have no posterior; they re-enter the
    full-shape utility at the recovered minimum, so they can never become
    the predicted action.
    """
    try:
        res = test_shannon_kkt([problem], smoothing=smoothing, config=config)
    except SupportError:
        res = None
    if res is not None and res.passed:
        reduced = res.utilities[0]
        kept_a = [j for j, a in enumerate(problem.actions) if a not in res.dropped_actions[0]]
        kept_x = [i for i in range(problem.n_states) if problem.mu[i] > 0]
        full = np.full((problem.n_states, problem.n_actions), float(reduced.min()) - 1e-3)
        for ri, xi in enumerate(kept_x):
            for rj, aj in enumerate(kept_a):
                full[xi, aj] = reduced[ri, rj]
        return full
    sol = test_nias_niac([problem], config=config)
    if not sol.is_feasible:
        raise RuntimeError("single-problem utility recovery failed")
    return sol.utilities[0]


@dataclass
class PredictionRow:
    segment: object
    state: int
    map_action: int
    max_utility_action: int
    error: int
    comment_level_match: bool

    def to_dict(self) -> dict:
        return {
            "segment": list(self.segment) if isinstance(self.segment, tuple) else self.segment,
            "state": self.state,
            "map_estimate": self.map_action,
            "max_utility_estimate": self.max_utility_action,
            "error": self.error,
            "comment_level_match": self.comment_level_match,
        }


@dataclass
class PredictionReport:
    rows: list[PredictionRow]
    skipped: list = field(default_factory=list)

    @property
    def mse(self) -> float:
        if not self.rows:
            return float("nan")
        return float(np.mean([r.error**2 for r in self.rows]))

    def fraction_within(self, units: int) -> float:
        if not self.rows:
            return float("nan")
        return float(np.mean([r.error <= units for r in self.rows]))

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "skipped": [list(s) if isinstance(s, tuple) else s for s in self.skipped],
            "mse": self.mse,
            "fraction_exact": self.fraction_within(0),
            "fraction_within_1": self.fraction_within(1),
            "fraction_within_2": self.fraction_within(2),
        }


def _comment_level(action_label: int) -> int:
    """Low-engagement actions are 1-3, high-engagement 4-6."""
    return 0 if action_label <= 3 else 1


def prediction_report(
    train_problems: dict,
    test_problems: dict,
    smoothing: float = 0.5,
    config: SolverConfig = DEFAULT_CONFIG,
) -> PredictionReport:
    """Compare per-(segment, state) predictions of train utilities vs test MAP.

    Both arguments map segment -> DecisionProblem.  Segments missing from the
    test split or failing utility recovery are reported in ``skipped``, never
    silently dropped.
    """
    rows: list[PredictionRow] = []
    skipped = []
    for segment, train_p in sorted(train_problems.items(), key=lambda kv: str(kv[0])):
        if segment not in test_problems:
            skipped.append(segment)
            continue
        test_p = test_problems[segment]
        try:
            u = recover_prediction_utility(train_p, smoothing, config)
        except RuntimeError:
            skipped.append(segment)
            continue
        for xi, state in enumerate(train_p.states):
            if state not in test_p.states or test_p.mu[test_p.states.index(state)] == 0:
                continue
            pred_idx = max_utility_estimate(u, xi)
            map_idx = map_estimate(test_p, test_p.states.index(state))
            pred_label = train_p.actions[pred_idx]
            map_label = test_p.actions[map_idx]
            rows.append(
                PredictionRow(
                    segment=segment,
                    state=state,
                    map_action=map_label,
                    max_utility_action=pred_label,
                    error=hamming_error(pred_label, map_label),
                    comment_level_match=_comment_level(pred_label) == _comment_level(map_label),
                )
            )
    return PredictionReport(rows=rows, skipped=skipped)


# ---------------------------------------------------------------------------
# variance-penalized policy recommendation
# ---------------------------------------------------------------------------


@dataclass
class RecommendationResult:
    policies: list[np.ndarray]
    objective: float
    baseline_objective: float
    penalty_weights: np.ndarray
    steps_accepted: int

    def to_dict(self) -> dict:
        return {
            "policies": [p.tolist() for p in self.policies],
            "objective": self.objective,
            "baseline_objective": self.baseline_objective,
            "penalty_weights": self.penalty_weights.tolist(),
            "steps_accepted": self.steps_accepted,
        }


def _project_row_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _objective(problems, utilities, policies, base_policies, weights, sizes):
    total = 0.0
    for k, p in enumerate(problems):
        u = utilities[k]
        pol = policies[k]
        base = base_policies[k]
        V = float(np.sum(p.mu[:, None] * pol * u))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio2 = np.where(base > 0, pol**2 / np.where(base > 0, base, 1.0), 0.0)
        second = float(np.sum(p.mu[:, None] * u**2 * ratio2))
        var = max(second - V * V, 0.0)
        penalty = 0.0 if var == 0.0 else weights[k] * np.sqrt(var / sizes[k])
        total += V - penalty
    return total


def _feasible(problems, utilities, policies, config) -> bool:
    """Do the recovered utilities still satisfy switch/cycle at these policies?"""
    try:
        cand = [
            DecisionProblem(
                mu=p.mu, policy=pol, actions=p.actions, states=p.states, label=p.label
            )
            for p, pol in zip(problems, policies)
        ]
    except ValueError:
        return False
    slacks = [r["slack"] for r in nias_slack_table(cand, utilities)]
    if len(cand) >= 2:
        cycles = enumerate_cycles(len(cand))
        slacks += [r["slack"] for r in niac_slack_table(cand, utilities, cycles)]
    return min(slacks, default=0.0) >= -FEAS_SLACK_TOL


def recommend_policy(
    problems: list[DecisionProblem],
    utilities: list[np.ndarray],
    penalty: float | np.ndarray = 0.0,
    seed: int = 0,
    sample_sizes=None,
    steps: int = 200,
    step_size: float = 0.1,
    config: SolverConfig = DEFAULT_CONFIG,
) -> RecommendationResult:
    """Improve on the empirical policy under a sampling-variance penalty.

    The empirical policy is always a valid fallback: candidate steps are
    accepted only when they raise the penalized objective and keep the
    recovered utilities feasible, so the returned objective is never below
    the baseline.  An infinite penalty returns the baseline immediately.
    """
    K = len(problems)
    utilities = [np.asarray(u, dtype=float) for u in utilities]
    weights = np.full(K, float(penalty)) if np.isscalar(penalty) else np.asarray(penalty, dtype=float)
    if np.any(weights < 0):
        raise ValueError("penalty weights must be non-negative")
    if sample_sizes is None:
        sizes = np.array(
            [p.counts.sum() if p.counts is not None else 1.0 for p in problems]
        )
    else:
        sizes = np.asarray(sample_sizes, dtype=float)
    base_policies = [p.policy.copy() for p in problems]
    baseline = _objective(problems, utilities, base_policies, base_policies, weights, sizes)
    if np.any(np.isinf(weights)):
        return RecommendationResult(
            policies=base_policies, objective=baseline, baseline_objective=baseline,
            penalty_weights=weights, steps_accepted=0,
        )

    policies = [p.copy() for p in base_policies]
    current = baseline
    accepted = 0
    step = step_size
    for _ in range(steps):
        candidate = []
        for k, p in enumerate(problems):
            pol = policies[k]
            base = base_policies[k]
            u = utilities[k]
            V = float(np.sum(p.mu[:, None] * pol * u))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(base > 0, pol / np.where(base > 0, base, 1.0), 0.0)
            second = float(np.sum(p.mu[:, None] * u**2 * ratio * pol))
            var = max(second - V * V, 0.0)
            gV = p.mu[:, None] * u
            gvar = 2.0 * p.mu[:, None] * u**2 * ratio - 2.0 * V * gV
            gS = gvar / (2.0 * np.sqrt(max(var, 1e-12)) * np.sqrt(sizes[k]))
            grad = gV - weights[k] * gS
            new = pol + step * grad
            new = np.vstack([_project_row_simplex(row) for row in new])
            new = np.where(base > 0, new, 0.0)
            row_sums = new.sum(axis=1, keepdims=True)
            if np.any(row_sums <= 0):
                new = pol
                row_sums = new.sum(axis=1, keepdims=True)
            candidate.append(new / row_sums)
        cand_val = _objective(problems, utilities, candidate, base_policies, weights, sizes)
        if cand_val > current + 1e-12 and _feasible(problems, utilities, candidate, config):
            policies = candidate
            current = cand_val
            accepted += 1
        else:
            step /= 2.0
            if step < 1e-6:
                break
    return RecommendationResult(
        policies=policies, objective=current, baseline_objective=baseline,
        penalty_weights=weights, steps_accepted=accepted,
    )
