"""Feasibility test for attention-rational choice and utility/cost recovery.

The test asks: does a utility per decision problem exist, with values in
[0, 1], such that (i) every chosen action maximizes posterior expected
utility (no improving switches) and (ii) no reassignment cycle of
information structures across problems raises total expected utility (no
improving cycles)?

Primary path: an exact LP.  Cross-term maxima appear with negative sign in
the cycle inequalities, so an epigraph variable per (source problem, target
utility, action) represents each max exactly; the diagonal maxima are forced
to the chosen action by the switch inequalities themselves, so they enter as
plain linear terms.  No integer variables are needed.

Cross-check path: the literal big-M mixed-integer formulation, solved by
enumerating the one-hot selector assignments for the diagonal maxima.  Kept
at toy scale (two problems, at most three actions) purely to confirm the LP
reformulation.  The published selector indexing, one selector per (b, k),
cannot represent a per-action maximum; the enumeration uses one selector per
(k, a) slot instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, combinations, product

import numpy as np

from .dataset import DecisionProblem
from .revealed import posterior, cross_value, diagonal_value, g_matrix, RevealedPosterior
from .solvers import (
    DEFAULT_CONFIG,
    GE,
    LE,
    LinearProgram,
    SolverConfig,
    lp_feasible,
    lp_optimize,
)

MAX_PROBLEMS = 8
RECERTIFY_TOL = 1e-8


class CycleLimitError(ValueError):
    pass


def enumerate_cycles(n_problems: int, max_len: int | None = None) -> list[tuple[int, ...]]:
    """All simple cycles (as index tuples, deduplicated up to rotation).

    Cycles are canonicalized to start at their smallest index; reversed
    traversals are distinct cycles and both are listed.
    """
    if n_problems < 2:
        return []
    if n_problems > MAX_PROBLEMS:
        raise CycleLimitError(
            f"{n_problems} problems exceed the supported bound {MAX_PROBLEMS}; "
            "test pairs of problems instead"
        )
    max_len = n_problems if max_len is None else min(max_len, n_problems)
    cycles = []
    for L in range(2, max_len + 1):
        for subset in combinations(range(n_problems), L):
            head, rest = subset[0], subset[1:]
            for tail in permutations(rest):
                cyc = (head,) + tail
                if L == 2 and cyc[0] > cyc[1]:
                    continue
                cycles.append(cyc)
    # a 2-cycle has one rotation class; permutations() already emits each once
    return cycles


@dataclass
class FeasibilityLayout:
    """Variable index bookkeeping for the feasibility LP."""

    n_vars: int
    u_index: list[np.ndarray]  # per problem, (|X|, |A|) -> column
    t_index: dict  # (src, tgt) -> {action_col: var}
    n_extra: int = 0

    def extra_var(self, i: int) -> int:
        return self.n_vars - self.n_extra + i


def build_feasibility_lp(
    problems: list[DecisionProblem],
    cycles: list[tuple[int, ...]],
    margin: float = 0.0,
    n_extra_vars: int = 0,
    posts: list[RevealedPosterior] | None = None,
    epsilon_extra: int | None = None,
    epsilon_coeff: float = 1.0,
) -> tuple[LinearProgram, FeasibilityLayout]:
    """Assemble the switch/cycle feasibility LP over utilities in [0, 1].

    ``n_extra_vars`` reserves trailing free columns so callers can couple the
    utilities to additional unknowns (multiplier tests, relaxation scalars).
    With ``epsilon_extra`` set to one of those extra slots, every switch and
    cycle inequality gains ``epsilon_coeff * eps`` on its slack side:
    +1 relaxes the system by eps, -1 tightens it.
    """
    K = len(problems)
    posts = posts or [posterior(p) for p in problems]

    u_index: list[np.ndarray] = []
    n = 0
    for p in problems:
        idx = np.arange(n, n + p.n_states * p.n_actions).reshape(p.n_states, p.n_actions)
        u_index.append(idx)
        n += idx.size
    cross_pairs = sorted({(c[(i + 1) % len(c)], c[i]) for c in cycles for i in range(len(c))})
    cross_pairs = [(s, t) for (s, t) in cross_pairs if s != t]
    t_index: dict = {}
    for (src, tgt) in cross_pairs:
        cols = {}
        for j in np.flatnonzero(posts[src].supported):
            cols[int(j)] = n
            n += 1
        t_index[(src, tgt)] = cols
    n_u_t = n
    n += n_extra_vars

    lower = np.zeros(n)
    upper = np.ones(n)
    if n_extra_vars:
        lower[n_u_t:] = -np.inf
        upper[n_u_t:] = np.inf
    lp = LinearProgram(n_vars=n, lower=lower, upper=upper)
    eps_var = None
    if epsilon_extra is not None:
        eps_var = n_u_t + epsilon_extra

    # switch inequalities: chosen action at least as good as any alternative
    for k, p in enumerate(problems):
        for j in np.flatnonzero(posts[k].supported):
            col = posts[k].column(j)
            for b in range(p.n_actions):
                if b == j:
                    continue
                coeffs: dict[int, float] = {}
                for x in range(p.n_states):
                    coeffs[int(u_index[k][x, j])] = coeffs.get(int(u_index[k][x, j]), 0.0) + col[x]
                    coeffs[int(u_index[k][x, b])] = coeffs.get(int(u_index[k][x, b]), 0.0) - col[x]
                if eps_var is not None:
                    coeffs[eps_var] = epsilon_coeff
                lp.add_sparse(coeffs, GE, margin)

    # epigraph rows: t >= every linear piece of the cross maximum
    for (src, tgt), cols in t_index.items():
        p_src, p_tgt = problems[src], problems[tgt]
        post_src = posts[src]
        for j, tvar in cols.items():
            col = post_src.column(j)
            for b in range(p_tgt.n_actions):
                coeffs = {tvar: 1.0}
                for x in range(p_src.n_states):
                    key = int(u_index[tgt][x, b])
                    coeffs[key] = coeffs.get(key, 0.0) - col[x]
                lp.add_sparse(coeffs, GE, 0.0)

    # cycle inequalities: diagonal linear terms minus epigraphed cross terms
    for cyc in cycles:
        coeffs = {}
        for i, k in enumerate(cyc):
            joint = problems[k].joint()
            for x in range(problems[k].n_states):
                for a in range(problems[k].n_actions):
                    if joint[x, a] == 0.0:
                        continue
                    key = int(u_index[k][x, a])
                    coeffs[key] = coeffs.get(key, 0.0) + joint[x, a]
            src = cyc[(i + 1) % len(cyc)]
            for j, tvar in t_index[(src, k)].items():
                coeffs[tvar] = coeffs.get(tvar, 0.0) - posts[src].p_a[j]
        if eps_var is not None:
            coeffs[eps_var] = coeffs.get(eps_var, 0.0) + epsilon_coeff
        lp.add_sparse(coeffs, GE, margin)

    return lp, FeasibilityLayout(n_vars=n, u_index=u_index, t_index=t_index, n_extra=n_extra_vars)


def extract_utilities(layout: FeasibilityLayout, x: np.ndarray) -> list[np.ndarray]:
    return [x[idx] for idx in layout.u_index]


def nias_slack_table(problems, utilities, posts=None) -> list[dict]:
    """Per (problem, chosen, alternative) posterior expected-utility slack."""
    posts = posts or [posterior(p) for p in problems]
    rows = []
    for k, p in enumerate(problems):
        u = np.asarray(utilities[k], dtype=float)
        for j in np.flatnonzero(posts[k].supported):
            vals = posts[k].column(j) @ u
            for b in range(p.n_actions):
                if b == j:
                    continue
                rows.append(
                    {
                        "problem": k,
                        "chosen": p.actions[j],
                        "alternative": p.actions[b],
                        "slack": float(vals[j] - vals[b]),
                    }
                )
    return rows


def niac_slack_table(problems, utilities, cycles) -> list[dict]:
    """Per-cycle slack computed with true (re-maximized) cross terms."""
    posts = [posterior(p) for p in problems]
    rows = []
    for cyc in cycles:
        total = 0.0
        for i, k in enumerate(cyc):
            src = cyc[(i + 1) % len(cyc)]
            total += diagonal_value(problems[k], utilities[k])
            total -= cross_value(problems[src], utilities[k], posts[src])
        rows.append({"cycle": list(cyc), "slack": float(total)})
    return rows


@dataclass
class UtilitySolution:
    status: str  # feasible | infeasible | inconclusive
    utilities: list[np.ndarray] | None = None
    nias_slacks: list[dict] = field(default_factory=list)
    niac_slacks: list[dict] = field(default_factory=list)
    cycles: list[tuple[int, ...]] = field(default_factory=list)
    certificate: dict | None = None
    solver_stats: dict = field(default_factory=dict)

    @property
    def is_feasible(self) -> bool:
        return self.status == "feasible"

    def min_slack(self) -> float:
        slacks = [r["slack"] for r in self.nias_slacks] + [r["slack"] for r in self.niac_slacks]
        return min(slacks) if slacks else 0.0

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "u": [u.tolist() for u in self.utilities] if self.utilities is not None else None,
            "nias_slacks": self.nias_slacks,
            "niac_slacks": self.niac_slacks,
            "cycles": [list(c) for c in self.cycles],
            "solver_stats": self.solver_stats,
        }


def test_nias_niac(
    problems: list[DecisionProblem],
    margin: float = 0.0,
    max_cycle_len: int | None = None,
    config: SolverConfig = DEFAULT_CONFIG,
) -> UtilitySolution:
    """Decide attention-rationality of the estimated problems.

    Returns a certified utility profile on success (re-substituted slacks are
    part of the result) or the solver's infeasibility certificate.  A single
    problem is tested against the switch inequalities only.
    """
    if not problems:
        raise ValueError("need at least one decision problem")
    cycles = enumerate_cycles(len(problems), max_cycle_len)
    lp, layout = build_feasibility_lp(problems, cycles, margin=margin)
    res = lp_feasible(lp, config)
    stats = {"pivots": res.pivots, "n_vars": lp.n_vars, "n_rows": len(lp.constraints)}
    if res.status == "infeasible":
        return UtilitySolution(
            status="infeasible", cycles=cycles, certificate=res.certificate,
            solver_stats=stats,
        )
    if not res.is_feasible:
        return UtilitySolution(status="inconclusive", cycles=cycles, solver_stats=stats)
    utilities = extract_utilities(layout, res.x)
    nias = nias_slack_table(problems, utilities)
    niac = niac_slack_table(problems, utilities, cycles)
    worst = min(
        [r["slack"] for r in nias] + [r["slack"] for r in niac], default=0.0
    )
    if worst < margin - RECERTIFY_TOL:
        return UtilitySolution(status="inconclusive", cycles=cycles, solver_stats=stats)
    return UtilitySolution(
        status="feasible", utilities=utilities, nias_slacks=nias, niac_slacks=niac,
        cycles=cycles, solver_stats=stats,
    )


test_nias_niac.__test__ = False  # not a pytest case despite the name


# ---------------------------------------------------------------------------
# literal big-M cross-check (toy scale)
# ---------------------------------------------------------------------------


def big_m_feasible(
    problems: list[DecisionProblem],
    margin: float = 0.0,
    big_m: float = 2.0,
    config: SolverConfig = DEFAULT_CONFIG,
) -> str:
    """Enumerated mixed-integer formulation; returns a status string.

    Restricted to two problems with at most three actions each: the one-hot
    selectors for the diagonal maxima are enumerated exhaustively and each
    assignment is solved as an LP.  Selectors for cross-term maxima are
    redundant for feasibility (those maxima enter with negative sign, so the
    lower-bounding rows alone pin them) and are left implicit.
    """
    if len(problems) != 2:
        raise ValueError("big-M cross-check supports exactly two problems")
    if any(p.n_actions > 3 for p in problems):
        raise ValueError("big-M cross-check supports at most three actions")
    if big_m < 1.0:
        raise ValueError("big-M constant must exceed the utility range")
    posts = [posterior(p) for p in problems]
    supported = [list(np.flatnonzero(posts[k].supported)) for k in range(2)]

    # selector slots: one chosen maximizer b per (problem, supported action)
    slots = [(k, int(j)) for k in range(2) for j in supported[k]]
    choices = [list(range(problems[k].n_actions)) for (k, _) in slots]

    def solve_assignment(assign) -> str:
        n_u = sum(p.n_states * p.n_actions for p in problems)
        u_index = []
        n = 0
        for p in problems:
            u_index.append(np.arange(n, n + p.n_states * p.n_actions).reshape(p.n_states, p.n_actions))
            n += p.n_states * p.n_actions
        m_index = {}
        for (k, j) in slots:
            m_index[(k, j)] = n
            n += 1
        n_index = {}
        for src, tgt in ((1, 0), (0, 1)):
            for j in supported[src]:
                n_index[(src, tgt, int(j))] = n
                n += 1
        lower = np.concatenate([np.zeros(n_u), np.full(n - n_u, -np.inf)])
        upper = np.concatenate([np.ones(n_u), np.full(n - n_u, np.inf)])
        lp = LinearProgram(n_vars=n, lower=lower, upper=upper)

        def piece(post_col, tgt, b):
            return {int(u_index[tgt][x, b]): float(post_col[x]) for x in range(len(post_col))}

        # switch inequalities
        for k, p in enumerate(problems):
            for j in supported[k]:
                col = posts[k].column(j)
                for b in range(p.n_actions):
                    if b == j:
                        continue
                    coeffs = {}
                    for x in range(p.n_states):
                        coeffs[int(u_index[k][x, j])] = coeffs.get(int(u_index[k][x, j]), 0.0) + col[x]
                        coeffs[int(u_index[k][x, b])] = coeffs.get(int(u_index[k][x, b]), 0.0) - col[x]
                    lp.add_sparse(coeffs, GE, margin)
        # diagonal maxima via big-M with the enumerated selector
        for slot_idx, (k, j) in enumerate(slots):
            col = posts[k].column(j)
            mvar = m_index[(k, j)]
            for b in range(problems[k].n_actions):
                coeffs = {mvar: 1.0}
                for key, v in piece(col, k, b).items():
                    coeffs[key] = coeffs.get(key, 0.0) - v
                lp.add_sparse(coeffs, GE, 0.0)
            # chosen selector row: m <= piece + M(1-1); rows for unchosen
            # selectors have slack M >= 2 > any attainable gap, so they are
            # omitted as vacuous
            b_star = assign[slot_idx]
            coeffs = {mvar: 1.0}
            for key, v in piece(col, k, b_star).items():
                coeffs[key] = coeffs.get(key, 0.0) - v
            lp.add_sparse(coeffs, LE, 0.0)
        # cross maxima: lower-bounding rows only
        for (src, tgt, j), nvar in n_index.items():
            col = posts[src].column(j)
            for b in range(problems[tgt].n_actions):
                coeffs = {nvar: 1.0}
                for key, v in piece(col, tgt, b).items():
                    coeffs[key] = coeffs.get(key, 0.0) - v
                lp.add_sparse(coeffs, GE, 0.0)
        # the single 2-cycle inequality
        coeffs = {}
        for k in range(2):
            for j in supported[k]:
                coeffs[m_index[(k, j)]] = float(posts[k].p_a[j])
        for (src, tgt, j), nvar in n_index.items():
            coeffs[nvar] = coeffs.get(nvar, 0.0) - float(posts[src].p_a[j])
        lp.add_sparse(coeffs, GE, margin)
        return lp_feasible(lp, config).status

    # try the natural assignment (chosen action attains its own maximum) first
    natural = tuple(j for (_, j) in slots)
    order = [natural] + [a for a in product(*choices) if a != natural]
    saw_inconclusive = False
    for assign in order:
        status = solve_assignment(assign)
        if status == "feasible":
            return "feasible"
        if status == "inconclusive":
            saw_inconclusive = True
    return "inconclusive" if saw_inconclusive else "infeasible"


# ---------------------------------------------------------------------------
# ordinal information-acquisition cost recovery
# ---------------------------------------------------------------------------


class CostRecoveryError(RuntimeError):
    """The cost system is infeasible; impossible for cycle-feasible utilities."""


@dataclass
class OrdinalCosts:
    costs: np.ndarray
    anchor: int
    bounds: list[tuple[float, float]]
    g: np.ndarray

    def to_dict(self) -> dict:
        return {
            "costs": self.costs.tolist(),
            "anchor": self.anchor,
            "bounds": [list(b) for b in self.bounds],
            "g_matrix": self.g.tolist(),
        }


def cost_bounds(G: np.ndarray, anchor: int) -> list[tuple[float, float]]:
    """Admissible cost interval per problem when the anchor's cost is zero.

    [max(0, G[k, anchor] - G[anchor, anchor]),  G[k, k] - G[anchor, k]]
    """
    G = np.asarray(G, dtype=float)
    out = []
    for k in range(G.shape[0]):
        lo = max(0.0, float(G[k, anchor] - G[anchor, anchor]))
        hi = float(G[k, k] - G[anchor, k])
        out.append((lo, hi))
    return out


def recover_costs(
    problems: list[DecisionProblem],
    utilities: list[np.ndarray],
    config: SolverConfig = DEFAULT_CONFIG,
) -> OrdinalCosts:
    """Recover nonnegative ordinal costs consistent with the cycle conditions.

    Solves the difference system C_k - C_w <= G_kk - G_wk with C >= 0 at
    minimum total cost, which anchors min_k C_k at zero.  Also reports the
    admissible interval per cost relative to the anchor problem.
    """
    K = len(problems)
    G = g_matrix(problems, utilities)
    lp = LinearProgram(n_vars=K, objective=np.ones(K))
    for k in range(K):
        for w in range(K):
            if k == w:
                continue
            coeffs = np.zeros(K)
            coeffs[k] = 1.0
            coeffs[w] = -1.0
            lp.add(coeffs, LE, G[k, k] - G[w, k])
    res = lp_optimize(lp, "min", config)
    if res.status != "optimal":
        raise CostRecoveryError(
            "cost recovery failed; utilities do not satisfy the cycle conditions"
        )
    costs = np.maximum(res.x, 0.0)
    anchor = int(np.argmin(costs))
    return OrdinalCosts(costs=costs, anchor=anchor, bounds=cost_bounds(G, anchor), g=G)
