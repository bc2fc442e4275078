"""Revealed-preference quantities derived from a prior and an observed policy.

Everything here is computed from (mu, pi) alone: Bayes posteriors per action,
cross expected-utility matrices between decision problems, total expected
utility, and the revealed attention/choice decomposition of the policy.
Actions chosen with probability zero have no posterior; they are flagged and
excluded from any quantity that conditions on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DecisionProblem

POSTERIOR_DEDUP_TOL = 1e-9


@dataclass
class RevealedPosterior:
    """Columns of ``p_x_given_a`` are Bayes posteriors; unsupported actions
    (zero marginal) carry a zero column and ``supported`` False."""

    p_x_given_a: np.ndarray  # (|X|, |A|)
    p_a: np.ndarray  # (|A|,)
    supported: np.ndarray  # bool (|A|,)

    def column(self, j: int) -> np.ndarray:
        return self.p_x_given_a[:, j]


def posterior(problem: DecisionProblem) -> RevealedPosterior:
    """Bayes posteriors p(x|a) = mu(x) pi(a|x) / p(a) for supported actions."""
    joint = problem.joint()
    p_a = joint.sum(axis=0)
    supported = p_a > 0
    post = np.zeros_like(joint)
    post[:, supported] = joint[:, supported] / p_a[supported]
    return RevealedPosterior(p_x_given_a=post, p_a=p_a, supported=supported)


def cross_value(
    source: DecisionProblem, u_target: np.ndarray, post: RevealedPosterior | None = None
) -> float:
    """G entry: expected max utility of ``u_target`` under ``source``'s information.

    sum_a p_src(a) max_b sum_x p_src(x|a) u_target(x, b)
    """
    if post is None:
        post = posterior(source)
    u = np.asarray(u_target, dtype=float)
    total = 0.0
    for j in np.flatnonzero(post.supported):
        vals = post.column(j) @ u  # value per candidate action b
        total += post.p_a[j] * float(vals.max())
    return total


def diagonal_value(problem: DecisionProblem, u_own: np.ndarray) -> float:
    """sum_{x,a} p(x,a) u(x,a): the no-reassignment expected utility."""
    return float(np.sum(problem.joint() * np.asarray(u_own, dtype=float)))


def g_matrix(problems, utilities) -> np.ndarray:
    """Cross expected-utility matrix G[k][w] over a shared state space.

    Row k fixes the information (posteriors) of problem k; column w fixes the
    utility being maximized.
    """
    K = len(problems)
    if len(utilities) != K:
        raise ValueError("need one utility array per problem")
    n_states = problems[0].n_states
    for p in problems:
        if p.n_states != n_states:
            raise ValueError("problems must share a state space")
    posts = [posterior(p) for p in problems]
    G = np.zeros((K, K))
    for k in range(K):
        for w in range(K):
            u_w = np.asarray(utilities[w], dtype=float)
            if u_w.shape != (n_states, problems[w].n_actions):
                raise ValueError("utility shape mismatch")
            G[k, w] = cross_value(problems[k], u_w, posts[k])
    return G


def total_expected_utility(problems, utilities) -> float:
    """Aggregate expected utility sum_k sum_{x,a} pi_k(a|x) mu(x) u_k(x,a)."""
    return float(sum(diagonal_value(p, u) for p, u in zip(problems, utilities)))


@dataclass
class RevealedAttention:
    """Signal set (distinct posteriors), attention matrix and choice matrix."""

    signals: np.ndarray  # (|S|, |X|) distinct posteriors
    attention: np.ndarray  # (|X|, |S|) alpha(s|x), rows stochastic
    choice: np.ndarray  # (|S|, |A|) eta(a|s), rows stochastic
    signal_of_action: np.ndarray  # (|A|,) index into signals, -1 if unsupported

    def reconstructed_policy(self) -> np.ndarray:
        """sum_s eta(a|s) alpha(s|x); must reproduce pi(a|x)."""
        return self.attention @ self.choice


def revealed_attention(
    problem: DecisionProblem, dedup_tol: float = POSTERIOR_DEDUP_TOL
) -> RevealedAttention:
    """Group actions by (approximately) equal posteriors into signals.

    alpha(s|x) collects the policy mass of the signal's actions; eta(a|s)
    splits it in proportion to the actions' marginals.
    """
    post = posterior(problem)
    n_x, n_a = problem.n_states, problem.n_actions
    signal_cols: list[np.ndarray] = []
    signal_of_action = np.full(n_a, -1, dtype=int)
    for j in range(n_a):
        if not post.supported[j]:
            continue
        col = post.column(j)
        for s_idx, rep in enumerate(signal_cols):
            if np.max(np.abs(col - rep)) <= dedup_tol:
                signal_of_action[j] = s_idx
                break
        else:
            signal_of_action[j] = len(signal_cols)
            signal_cols.append(col)
    n_s = len(signal_cols)
    attention = np.zeros((n_x, n_s))
    choice = np.zeros((n_s, n_a))
    for j in range(n_a):
        s_idx = signal_of_action[j]
        if s_idx < 0:
            continue
        attention[:, s_idx] += problem.policy[:, j]
        choice[s_idx, j] = post.p_a[j]
    p_s = choice.sum(axis=1, keepdims=True)
    choice = np.divide(choice, p_s, out=np.zeros_like(choice), where=p_s > 0)
    return RevealedAttention(
        signals=np.array(signal_cols),
        attention=attention,
        choice=choice,
        signal_of_action=signal_of_action,
    )


def bayes_consistency_gap(problem: DecisionProblem) -> float:
    """max_x |sum_a p(a) p(x|a) - mu(x)|; zero for any valid posterior set."""
    post = posterior(problem)
    mix = post.p_x_given_a @ post.p_a
    return float(np.max(np.abs(mix - problem.mu)))
