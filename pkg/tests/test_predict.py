"""Prediction and recommendation tests."""

import numpy as np
import pytest

from bayesrp.dataset import DecisionProblem, estimate_problem
from bayesrp.forward import AgentSpec, sample_dataset, solve_agent
from bayesrp.niasniac import test_nias_niac, nias_slack_table, niac_slack_table
from bayesrp.predict import (
    hamming_error,
    map_estimate,
    max_utility_estimate,
    prediction_report,
    recommend_policy,
)


def problem(mu, policy, label=None):
    policy = np.asarray(policy, dtype=float)
    return DecisionProblem(mu=mu, policy=policy,
                           actions=tuple(range(1, policy.shape[1] + 1)), label=label)


class TestEstimators:
    def test_argmax_column(self):
        u = np.array([[0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 0]], dtype=float)
        assert max_utility_estimate(u, 0) == 4  # action label 5

    def test_tie_breaks_low(self):
        u = np.full((1, 6), 0.3)
        assert max_utility_estimate(u, 0) == 0

    def test_map_single_action(self):
        p = problem([0.5, 0.5], [[1.0], [1.0]])
        assert map_estimate(p, 0) == 0

    def test_map_ignores_unsupported(self):
        p = problem([0.5, 0.5], [[1.0, 0.0], [1.0, 0.0]])
        assert map_estimate(p, 0) == 0

    def test_map_from_deterministic_agent(self):
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)],
                                    cost_family="shannon", budgets=[5.0]))
        p = beh.problems[0]
        assert map_estimate(p, 0) == 0
        assert map_estimate(p, 1) == 1

    def test_hamming_symmetric_bounded(self):
        for a in range(1, 7):
            for b in range(1, 7):
                assert hamming_error(a, b) == hamming_error(b, a) <= 5


class TestPredictionReport:
    def test_self_consistency_zero_errors(self):
        rng = np.random.default_rng(2)
        uts = [rng.uniform(size=(2, 6)) for _ in range(2)]
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=uts,
                                    cost_family="shannon", budgets=[0.1, 0.2]))
        probs = {("seg", k): p for k, p in enumerate(beh.problems)}
        rep = prediction_report(probs, probs, smoothing=0.0)
        assert rep.rows and all(r.error == 0 for r in rep.rows)
        assert rep.mse == 0.0
        assert rep.fraction_within(2) == 1.0

    def test_sampled_split_report(self):
        rng = np.random.default_rng(4)
        uts = [rng.uniform(size=(2, 6)) for _ in range(2)]
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=uts,
                                    cost_family="shannon", budgets=[0.15, 0.1]))
        recs = sample_dataset(beh, 20_000, seed=9)
        from bayesrp.dataset import split_dataset

        train, test = split_dataset(recs, 0.8, seed=1)
        train_p = {s: estimate_problem(train, s) for s in [(0, 1), (0, 2)]}
        test_p = {s: estimate_problem(test, s) for s in [(0, 1), (0, 2)]}
        rep = prediction_report(train_p, test_p)
        assert len(rep.rows) == 4
        assert rep.mse <= 2.0  # same generating process on both sides

    def test_missing_segment_listed(self):
        p = problem([0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]], label=("seg", 1))
        rep = prediction_report({("seg", 1): p, ("seg", 2): p}, {("seg", 1): p})
        assert ("seg", 2) in rep.skipped
        assert rep.rows

    def test_comment_level_agreement_flag(self):
        from bayesrp.predict import _comment_level

        assert _comment_level(3) == 0 and _comment_level(4) == 1


class TestRecommendation:
    def _fixture(self):
        rng = np.random.default_rng(7)
        uts = [rng.uniform(size=(2, 4)) for _ in range(2)]
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=uts,
                                    cost_family="shannon", budgets=[0.1, 0.2]))
        sol = test_nias_niac(beh.problems)
        return beh.problems, sol.utilities

    def test_objective_never_below_baseline(self):
        problems, utilities = self._fixture()
        for penalty in (0.0, 0.5, 5.0):
            res = recommend_policy(problems, utilities, penalty=penalty,
                                   sample_sizes=[500, 500], steps=60)
            assert res.objective >= res.baseline_objective - 1e-12

    def test_infinite_penalty_returns_empirical(self):
        problems, utilities = self._fixture()
        res = recommend_policy(problems, utilities, penalty=float("inf"),
                               sample_sizes=[500, 500])
        for got, p in zip(res.policies, problems):
            assert np.array_equal(got, p.policy)
        assert np.isfinite(res.objective)

    def test_returned_policy_keeps_utilities_feasible(self):
        problems, utilities = self._fixture()
        res = recommend_policy(problems, utilities, penalty=0.1,
                               sample_sizes=[200, 200], steps=80)
        cand = [
            DecisionProblem(mu=p.mu, policy=pol, actions=p.actions, states=p.states)
            for p, pol in zip(problems, res.policies)
        ]
        slacks = [r["slack"] for r in nias_slack_table(cand, utilities)]
        slacks += [r["slack"] for r in niac_slack_table(cand, utilities, [(0, 1)])]
        assert min(slacks) >= -1e-8
        for pol in res.policies:
            assert np.allclose(pol.sum(axis=1), 1.0, atol=1e-9)

    def test_unpenalized_single_problem_moves_to_informative(self):
        p = problem([0.5, 0.5], [[0.6, 0.4], [0.4, 0.6]], label="x")
        res = recommend_policy([p], [np.eye(2)], penalty=0.0,
                               sample_sizes=[100], steps=300)
        assert res.objective > res.baseline_objective + 0.1
        assert res.policies[0][0, 0] > 0.9

    def test_negative_penalty_rejected(self):
        problems, utilities = self._fixture()
        with pytest.raises(ValueError):
            recommend_policy(problems, utilities, penalty=-1.0)

    def test_improvement_on_random_instances(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            pol = rng.dirichlet(np.ones(3), size=2)
            p = problem(rng.dirichlet([2, 2]), pol, label="r")
            sol = test_nias_niac([p])
            res = recommend_policy([p], sol.utilities, penalty=0.05,
                                   sample_sizes=[300], steps=40)
            assert res.objective >= res.baseline_objective - 1e-12
