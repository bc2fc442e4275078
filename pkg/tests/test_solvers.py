"""Solver engine tests: simplex verdicts, certificates, exact agreement, QP."""

import numpy as np
import pytest

from bayesrp.solvers import (
    EQ,
    GE,
    LE,
    LinearProgram,
    QuadraticProgram,
    SolverError,
    lp_feasible,
    lp_optimize,
    qp_minimize,
)

from oracles import lp_vertex_optimum

INF = float("inf")


class TestFeasibility:
    def test_contradictory_bounds(self):
        lp = LinearProgram(n_vars=1, lower=np.array([-INF]), upper=np.array([INF]))
        lp.add([1.0], GE, 1.0)
        lp.add([1.0], LE, 0.0)
        res = lp_feasible(lp)
        assert res.status == "infeasible"
        assert res.certificate["valid"]

    def test_simplex_face(self):
        lp = LinearProgram(n_vars=2)
        lp.add([1.0, 1.0], EQ, 1.0)
        res = lp_feasible(lp)
        assert res.status == "feasible"
        assert abs(res.x.sum() - 1.0) < 1e-9
        assert np.all(res.x >= -1e-12)

    def test_feasible_point_satisfies_all_rows(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            lp = LinearProgram(n_vars=5, upper=np.full(5, 10.0))
            for _ in range(6):
                lp.add(rng.integers(-3, 4, 5).astype(float), rng.choice([LE, GE]),
                       float(rng.integers(-5, 15)))
            res = lp_feasible(lp)
            if res.is_feasible:
                from bayesrp.solvers import constraint_violation

                assert constraint_violation(lp, res.x) <= 1e-8

    def test_verdicts_match_exact_rational_phase1(self):
        # 50 random integer-data instances with 30 variables
        rng = np.random.default_rng(11)
        agree = 0
        for _ in range(50):
            n = 30
            lp = LinearProgram(n_vars=n, upper=np.full(n, 8.0))
            for _ in range(12):
                lp.add(rng.integers(-4, 5, n).astype(float), rng.choice([LE, GE, EQ]),
                       float(rng.integers(-12, 13)))
            res_float = lp_feasible(lp, exact_fallback=False)
            res_exact = lp_feasible(lp, exact=True)
            assert res_exact.status in ("feasible", "infeasible")
            if res_float.status == "inconclusive":
                continue  # the exact fallback path covers these in production
            assert res_float.status == res_exact.status
            agree += 1
        assert agree >= 48

    def test_infeasibility_certificates_recombine(self):
        rng = np.random.default_rng(4)
        seen = 0
        for _ in range(40):
            n = 6
            lp = LinearProgram(n_vars=n, upper=np.full(n, 3.0))
            for _ in range(8):
                lp.add(rng.integers(-3, 4, n).astype(float), rng.choice([LE, GE]),
                       float(rng.integers(-9, 4)))
            res = lp_feasible(lp)
            if res.status == "infeasible":
                seen += 1
                assert res.certificate["valid"]
        assert seen >= 3  # the draw produces plenty of infeasible systems


class TestOptimize:
    def test_scalar_max(self):
        lp = LinearProgram(n_vars=1, objective=np.array([1.0]))
        lp.add([1.0], LE, 3.0)
        res = lp_optimize(lp, "max")
        assert res.status == "optimal"
        assert res.value == pytest.approx(3.0, abs=1e-9)

    def test_min_of_two_lower_bounds(self):
        lp = LinearProgram(n_vars=1, objective=np.array([1.0]), lower=np.array([-INF]))
        lp.add([1.0], GE, 0.2)
        lp.add([1.0], GE, 0.1)
        res = lp_optimize(lp, "min")
        assert res.value == pytest.approx(0.2, abs=1e-9)

    def test_unbounded_detected(self):
        lp = LinearProgram(n_vars=1, objective=np.array([1.0]))
        res = lp_optimize(lp, "max")
        assert res.status == "unbounded"

    def test_requires_objective(self):
        with pytest.raises(SolverError):
            lp_optimize(LinearProgram(n_vars=1))

    def test_matches_vertex_enumeration(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(25):
            n = int(rng.integers(2, 5))
            lp = LinearProgram(
                n_vars=n,
                objective=rng.integers(-4, 5, n).astype(float),
                upper=np.full(n, float(rng.integers(2, 6))),
            )
            for _ in range(4):
                lp.add(rng.integers(-3, 4, n).astype(float), rng.choice([LE, GE]),
                       float(rng.integers(-4, 9)))
            res = lp_optimize(lp, "min")
            oracle = lp_vertex_optimum(lp, "min")
            if res.status == "optimal":
                assert oracle is not None
                assert res.value == pytest.approx(oracle, abs=1e-7)
                checked += 1
            elif res.status == "infeasible":
                assert oracle is None
        assert checked >= 10

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(9)
        lp = LinearProgram(n_vars=6, objective=rng.normal(size=6), upper=np.full(6, 4.0))
        for _ in range(5):
            lp.add(rng.normal(size=6), LE, 2.0)
        a = lp_optimize(lp, "min")
        b = lp_optimize(lp, "min")
        assert a.value == b.value
        assert np.array_equal(a.x, b.x)
        assert a.pivots == b.pivots


class TestQp:
    def test_equality_pin(self):
        v = np.array([1.0, -2.0, 0.5])
        qp = QuadraticProgram(Q=2 * np.eye(3), c=np.zeros(3), A_eq=np.eye(3), b_eq=v)
        res = qp_minimize(qp)
        assert res.status == "optimal"
        assert res.value == pytest.approx(float(v @ v), abs=1e-7)

    def test_halfline(self):
        # min (x-1)^2 subject to x <= 0; constant term handled by caller
        qp = QuadraticProgram(
            Q=np.array([[2.0]]), c=np.array([-2.0]),
            A_in=np.array([[1.0]]), b_in=np.array([0.0]),
        )
        res = qp_minimize(qp)
        assert res.status == "optimal"
        assert res.value + 1.0 == pytest.approx(1.0, abs=1e-6)
        assert abs(res.x[0]) < 1e-6

    def test_matches_box_grid(self):
        # box-only instances: every active face is grid-exact, so the dense
        # grid pins the optimum to second order
        rng = np.random.default_rng(1)
        xs = np.linspace(-1, 1, 201)
        X, Y = np.meshgrid(xs, xs)
        box_pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        for _ in range(12):
            L = rng.normal(size=(2, 2))
            Q = L @ L.T + 0.1 * np.eye(2)
            c = rng.normal(size=2)
            qp = QuadraticProgram(Q=Q, c=c, lower=-np.ones(2), upper=np.ones(2))
            res = qp_minimize(qp)
            grid_best = float(
                (0.5 * np.einsum("ni,ij,nj->n", box_pts, Q, box_pts) + box_pts @ c).min()
            )
            assert res.status == "optimal"
            assert res.value <= grid_best + 1e-9
            assert abs(res.value - grid_best) < 1e-3

    def test_lower_bounds_grid_with_plane(self):
        # with a non-grid-aligned plane the grid is only an upper bound
        rng = np.random.default_rng(2)
        xs = np.linspace(-1, 1, 201)
        X, Y = np.meshgrid(xs, xs)
        pts_all = np.stack([X.ravel(), Y.ravel()], axis=1)
        pts = pts_all[pts_all.sum(axis=1) <= 0.5]
        for _ in range(8):
            L = rng.normal(size=(2, 2))
            Q = L @ L.T + 0.1 * np.eye(2)
            c = rng.normal(size=2)
            qp = QuadraticProgram(
                Q=Q, c=c, lower=-np.ones(2), upper=np.ones(2),
                A_in=np.array([[1.0, 1.0]]), b_in=np.array([0.5]),
            )
            res = qp_minimize(qp)
            grid_best = float((0.5 * np.einsum("ni,ij,nj->n", pts, Q, pts) + pts @ c).min())
            assert res.status == "optimal"
            assert res.value <= grid_best + 1e-9
            assert res.value >= grid_best - 0.05  # grid resolution bound

    def test_infeasible_region(self):
        qp = QuadraticProgram(
            Q=np.eye(1), c=np.zeros(1),
            A_in=np.array([[1.0], [-1.0]]), b_in=np.array([0.0, -1.0]),  # x<=0, x>=1
        )
        assert qp_minimize(qp).status == "infeasible"

    def test_rejects_indefinite(self):
        with pytest.raises(SolverError):
            QuadraticProgram(Q=-np.eye(2), c=np.zeros(2))
