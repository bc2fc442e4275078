"""Forward agent solver, shadow-price construction and sampling tests."""

import numpy as np
import pytest

from bayesrp.dataset import estimate_problem
from bayesrp.forward import (
    AgentSpec,
    make_general_cost_agent,
    sample_dataset,
    solve_agent,
)
from bayesrp.infocost import mutual_information
from bayesrp.niasniac import test_nias_niac
from bayesrp.revealed import cross_value


class TestBudgetedSolve:
    def test_slack_budget_returns_argmax(self):
        beh = solve_agent(
            AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="shannon",
                      budgets=[10.0])
        )
        assert np.allclose(beh.problems[0].policy, np.eye(2))
        assert beh.multipliers[0] == 0.0

    def test_zero_budget_is_uninformative(self):
        u = np.array([[1.0, 0.2], [0.0, 0.5]])
        beh = solve_agent(
            AgentSpec(mu=[0.4, 0.6], utilities=[u], cost_family="shannon", budgets=[0.0])
        )
        pol = beh.problems[0].policy
        assert np.allclose(pol[0], pol[1])
        # prior expected utilities: action 1 -> 0.4, action 2 -> 0.38
        assert pol[0, 0] == 1.0

    def test_active_budget_matches_channel_grid(self):
        beh = solve_agent(
            AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="shannon",
                      budgets=[0.2])
        )
        assert beh.achieved_mi[0] == pytest.approx(0.2, abs=1e-6)
        # 1-D oracle over symmetric channels [[1-q, q], [q, 1-q]]
        qs = np.linspace(0.0, 0.5, 400_001)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -(qs * np.log(qs) + (1 - qs) * np.log(1 - qs))
        ent[0] = 0.0
        mi = np.log(2) - ent
        feasible = mi <= 0.2
        oracle = float((1 - qs)[feasible].max())
        assert beh.objective == pytest.approx(oracle, abs=1e-4)

    def test_marginal_conservation_and_budget(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            mu = rng.dirichlet([2, 2])
            spec = AgentSpec(mu=mu, utilities=[rng.uniform(size=(2, 5))],
                             cost_family="shannon", budgets=[rng.uniform(0.01, 0.4)])
            beh = solve_agent(spec)
            joint = beh.problems[0].joint()
            assert np.max(np.abs(joint.sum(axis=1) - mu)) <= 1e-9
            assert beh.achieved_mi[0] <= spec.budgets[0] + 1e-8
            assert beh.kkt_residuals[0] <= 1e-7

    def test_renyi_budget(self):
        beh = solve_agent(
            AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="renyi",
                      beta=0.5, budgets=[0.1])
        )
        assert beh.achieved_mi[0] == pytest.approx(0.1, abs=1e-6)
        joint = beh.problems[0].joint()
        assert mutual_information(joint, 0.5).value == pytest.approx(0.1, abs=1e-6)

    def test_objective_dominates_feasible_grid(self):
        # solver value must upper-bound every feasible joint from a crude grid
        rng = np.random.default_rng(9)
        u = rng.uniform(size=(2, 3))
        kappa = 0.15
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=[u],
                                    cost_family="shannon", budgets=[kappa]))
        best = -np.inf
        for _ in range(3000):
            pol = rng.dirichlet(np.ones(3), size=2)
            joint = 0.5 * pol
            if mutual_information(joint, 1.0).value <= kappa:
                best = max(best, float(np.sum(joint * u)))
        assert beh.objective >= best - 1e-4


class TestGeneralCostConstruction:
    def test_identical_attentions_equal_costs(self):
        rng = np.random.default_rng(0)
        att = rng.dirichlet(np.ones(4), size=2)
        agent = make_general_cost_agent(
            [0.5, 0.5], [rng.uniform(size=(2, 4)) for _ in range(2)], [att, att.copy()]
        )
        assert agent.cost_table[0] == pytest.approx(agent.cost_table[1], abs=1e-9)

    def test_attention_choice_optimal_after_pricing(self):
        # for every problem, its assigned information net of cost beats the
        # alternatives (the defining inequality of the construction)
        rng = np.random.default_rng(2)
        for _ in range(10):
            uts = [rng.uniform(size=(2, 4)) for _ in range(2)]
            atts = [rng.dirichlet(np.ones(4), size=2) for _ in range(2)]
            agent = make_general_cost_agent([0.5, 0.5], uts, atts)
            beh = solve_agent(agent)
            C = agent.cost_table
            for k, pk in enumerate(beh.problems):
                own = cross_value(pk, uts[k]) - C[k]
                for w, pw in enumerate(beh.problems):
                    other = cross_value(pw, uts[k]) - C[w]
                    assert own >= other - 1e-8

    def test_datasets_always_rationalizable(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            uts = [rng.uniform(size=(2, 6)) for _ in range(2)]
            atts = [rng.dirichlet(np.ones(6), size=2) for _ in range(2)]
            agent = make_general_cost_agent([0.5, 0.5], uts, atts)
            beh = solve_agent(agent)
            assert test_nias_niac(beh.problems).is_feasible


class TestSampling:
    def test_needs_positive_count(self):
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)],
                                    cost_family="shannon", budgets=[1.0]))
        with pytest.raises(ValueError):
            sample_dataset(beh, 0, seed=0)

    def test_deterministic_policy_estimates_exactly(self):
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)],
                                    cost_family="shannon", budgets=[5.0]))
        recs = sample_dataset(beh, 500, seed=3)
        est = estimate_problem(recs, (0, 1), actions=(1, 2))
        assert np.array_equal(est.policy, beh.problems[0].policy)

    def test_seed_reproducibility(self):
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)],
                                    cost_family="shannon", budgets=[0.1]))
        a = sample_dataset(beh, 200, seed=11)
        b = sample_dataset(beh, 200, seed=11)
        c = sample_dataset(beh, 200, seed=12)
        assert [(r.x, r.a) for r in a] == [(r.x, r.a) for r in b]
        assert [(r.x, r.a) for r in a] != [(r.x, r.a) for r in c]

    def test_mle_concentrates_at_50k(self):
        rng = np.random.default_rng(8)
        uts = [rng.uniform(size=(2, 4))]
        beh = solve_agent(AgentSpec(mu=[0.5, 0.5], utilities=uts,
                                    cost_family="shannon", budgets=[0.15]))
        recs = sample_dataset(beh, 50_000, seed=21)
        est = estimate_problem(recs, (0, 1), actions=beh.problems[0].actions)
        assert np.max(np.abs(est.policy - beh.problems[0].policy)) < 0.02


class TestSpecValidation:
    def test_renyi_needs_order(self):
        with pytest.raises(ValueError):
            AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="renyi",
                      budgets=[0.1])

    def test_budget_required(self):
        with pytest.raises(ValueError):
            AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="shannon")

    def test_json_round_trip(self):
        spec = AgentSpec(mu=[0.5, 0.5], utilities=[np.eye(2)], cost_family="shannon",
                         budgets=[0.1])
        clone = AgentSpec.from_dict(spec.to_dict())
        assert clone.cost_family == "shannon"
        assert np.array_equal(clone.utilities[0], spec.utilities[0])
