"""Mutual information, gradient field, and structured-cost test suites."""

import numpy as np
import pytest

from bayesrp.dataset import DecisionProblem
from bayesrp.infocost import (
    SupportError,
    beta_sweep,
    mi_gradient,
    mutual_information,
    reduce_problem,
    renyi_entropy,
    renyi_mi_value,
    test_renyi_kkt,
    test_shannon_kkt,
)


def symmetric_problem():
    return DecisionProblem(mu=[0.5, 0.5], policy=[[0.8, 0.2], [0.2, 0.8]], actions=(1, 2))


class TestMutualInformation:
    def test_perfect_binary_channel(self):
        j = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert mutual_information(j, 1.0).value == pytest.approx(np.log(2), abs=1e-12)

    def test_reference_joint_values(self):
        j = np.array([[0.4, 0.1], [0.1, 0.4]])
        assert mutual_information(j, 1.0).value == pytest.approx(0.1927, abs=5e-5)
        assert mutual_information(j, 0.5).value == pytest.approx(0.1054, abs=5e-5)
        # alternative evaluation: ln 2 minus the average conditional entropy
        h = renyi_entropy([0.8, 0.2], 1.0)
        assert mutual_information(j, 1.0).value == pytest.approx(np.log(2) - h, abs=1e-12)

    def test_independence_is_zero_for_all_orders(self):
        j = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
        for beta in (0.0, 0.25, 0.5, 1.0, 2.0):
            assert abs(mutual_information(j, beta).value) <= 1e-10

    def test_monotone_in_order(self):
        rng = np.random.default_rng(4)
        grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.5, 2.0]
        for _ in range(25):
            j = rng.uniform(0.01, 1.0, size=(2, 4))
            j /= j.sum()
            vals = [mutual_information(j, b).value for b in grid]
            assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))

    def test_continuity_at_shannon(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            j = rng.uniform(0.01, 1.0, size=(2, 3))
            j /= j.sum()
            i1 = mutual_information(j, 1.0).value
            for beta in (1.0 - 1e-5, 1.0 + 1e-5):
                assert abs(mutual_information(j, beta).value - i1) <= 1e-4

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            mutual_information(np.full((2, 2), 0.25), -0.5)


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        for beta in (0.3, 0.5, 0.7, 0.9):
            for _ in range(5):
                j = rng.uniform(0.05, 1.0, size=(2, 4))
                j /= j.sum()
                mu = j.sum(axis=1)
                g = mi_gradient(j, beta, mu=mu)
                h = 1e-6
                for x in range(2):
                    for a in range(4):
                        jp, jm = j.copy(), j.copy()
                        jp[x, a] += h
                        jm[x, a] -= h
                        fd = (renyi_mi_value(jp, mu, beta) - renyi_mi_value(jm, mu, beta)) / (2 * h)
                        assert abs(g[x, a] - fd) <= 1e-5 * max(abs(fd), 1.0)

    def test_shannon_branch_is_log_posterior(self):
        j = np.array([[0.4, 0.1], [0.1, 0.4]])
        g = mi_gradient(j, 1.0)
        post = j / j.sum(axis=0, keepdims=True)
        assert np.allclose(g, np.log(post))

    def test_zero_cell_named(self):
        j = np.array([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(SupportError, match="action=1"):
            mi_gradient(j, 0.5)


class TestShannonKkt:
    def test_symmetric_instance_multipliers(self):
        res = test_shannon_kkt([symmetric_problem()], smoothing=0)
        assert res.passed
        lam_expect = 1.0 / (np.log(0.8) - np.log(0.2))
        assert res.lambda1[0] == pytest.approx(lam_expect, abs=1e-6)
        assert res.lambda2[0] == pytest.approx(lam_expect * np.log(0.2), abs=1e-6)
        u = res.utilities[0]
        assert np.allclose(u, np.eye(2), atol=1e-8)
        assert res.kappa[0] == pytest.approx(
            mutual_information(symmetric_problem().joint(), 1.0).value
        )

    def test_uninformative_posteriors_pass(self):
        p = DecisionProblem(mu=[0.5, 0.5], policy=[[0.5, 0.5], [0.5, 0.5]], actions=(1, 2))
        res = test_shannon_kkt([p], smoothing=0)
        assert res.passed and res.lambda1[0] > 0

    def test_forward_agent_passes(self):
        from bayesrp.forward import AgentSpec, solve_agent

        rng = np.random.default_rng(17)
        uts = [rng.uniform(size=(2, 6)) for _ in range(2)]
        beh = solve_agent(
            AgentSpec(mu=[0.5, 0.5], utilities=uts, cost_family="shannon", budgets=[0.1, 0.07])
        )
        res = test_shannon_kkt(beh.problems, smoothing=0)
        assert res.passed
        # induced utilities re-certify the switch/cycle system
        assert min((r["slack"] for r in res.nias_slacks), default=0.0) >= -1e-8
        assert min((r["slack"] for r in res.niac_slacks), default=0.0) >= -1e-8

    def test_zero_policy_cell_requires_smoothing(self):
        p = DecisionProblem(mu=[0.5, 0.5], policy=[[1.0, 0.0], [0.5, 0.5]], actions=(1, 2))
        with pytest.raises(SupportError, match="smooth"):
            test_shannon_kkt([p], smoothing=0)
        assert test_shannon_kkt([p], smoothing=0.5).status in ("pass", "fail")


class TestRenyiKkt:
    def test_order_domain(self):
        with pytest.raises(ValueError):
            test_renyi_kkt([symmetric_problem()], 1.0)
        with pytest.raises(ValueError):
            test_renyi_kkt([symmetric_problem()], 0.0)

    def test_verdict_and_scale_converge_to_shannon(self):
        p = symmetric_problem()
        sh = test_shannon_kkt([p], smoothing=0)
        for beta in (0.9, 0.99, 0.999):
            re = test_renyi_kkt([p], beta, smoothing=0)
            assert re.passed
            assert abs(re.lambda1[0] - sh.lambda1[0]) <= 12 * abs(1 - beta)
        re = test_renyi_kkt([p], 0.999, smoothing=0)
        assert abs(re.lambda1[0] - sh.lambda1[0]) <= 1e-3
        # induced utilities converge even though lambda2 absorbs the
        # divergent constant of the order-beta gradient
        assert np.max(np.abs(re.utilities[0] - sh.utilities[0])) <= 2e-3

    def test_uninformative_pass_every_order(self):
        p = DecisionProblem(mu=[0.5, 0.5], policy=[[0.5, 0.5], [0.5, 0.5]], actions=(1, 2))
        for beta in (0.2, 0.5, 0.8):
            assert test_renyi_kkt([p], beta, smoothing=0).passed

    def test_budget_identity(self):
        p = symmetric_problem()
        res = test_renyi_kkt([p], 0.5, smoothing=0)
        assert res.kappa[0] == pytest.approx(mutual_information(p.joint(), 0.5).value)


class TestBetaSweep:
    def test_rows_and_families(self):
        p = symmetric_problem()
        rows = beta_sweep([p, p], [0.5, 0.75, 0.9, 1.0], smoothing=0)
        assert [r["beta"] for r in rows] == [0.5, 0.75, 0.9, 1.0]
        assert rows[-1]["cost_family"] == "shannon"
        assert all(r["status"] == "pass" for r in rows)

    def test_empty_grid(self):
        assert beta_sweep([symmetric_problem()], []) == []

    def test_out_of_range_grid(self):
        with pytest.raises(ValueError):
            beta_sweep([symmetric_problem()], [1.2])


class TestReduceProblem:
    def test_drops_unsupported_actions(self):
        p = DecisionProblem(mu=[0.5, 0.5], policy=[[1.0, 0.0], [1.0, 0.0]], actions=(1, 2))
        reduced, dropped = reduce_problem(p, smoothing=0.5)
        assert dropped == [2]
        assert reduced.n_actions == 1
