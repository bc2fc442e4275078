"""Dense linear/quadratic programming engine used by every decision test.

Self-contained: a two-phase tableau simplex with Bland's anti-cycling rule
(deterministic pivoting) plus a primal active-set method for small convex
QPs.  Instances here are dense with tens of variables, so certificates and
reproducibility matter more than speed.

Entry points:
    lp_feasible(lp)  -> SimplexResult with a verified point or a Farkas-style
                        infeasibility certificate
    lp_optimize(lp)  -> optimum with KKT residual checks
    qp_minimize(qp)  -> minimizer of a PSD quadratic over linear constraints

Every solve is single-threaded and allocation-local; distinct instances can
be solved concurrently without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

INF = float("inf")

LE, GE, EQ = "<=", ">=", "="


@dataclass
class SolverConfig:
    """Central numeric tolerances (echoed into reports)."""

    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    qp_stationarity_tol: float = 1e-6
    pivot_tol: float = 1e-10
    max_pivots: int = 50_000
    max_qp_iters: int = 500


DEFAULT_CONFIG = SolverConfig()


class SolverError(Exception):
    """Raised on malformed instances (shape/finiteness violations)."""


@dataclass
class Constraint:
    coeffs: np.ndarray
    sense: str
    rhs: float

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.sense not in (LE, GE, EQ):
            raise SolverError(f"unknown constraint sense {self.sense!r}")
        if not np.all(np.isfinite(self.coeffs)) or not np.isfinite(self.rhs):
            raise SolverError("non-finite constraint data")


@dataclass
class LinearProgram:
    """min/max c'x subject to row constraints and per-variable bounds.

    Bounds default to x >= 0; use -inf/+inf for free variables.
    """

    n_vars: int
    objective: np.ndarray | None = None
    constraints: list[Constraint] = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.lower is None:
            self.lower = np.zeros(self.n_vars)
        if self.upper is None:
            self.upper = np.full(self.n_vars, INF)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (self.n_vars,) or self.upper.shape != (self.n_vars,):
            raise SolverError("bound vectors must match n_vars")
        if np.any(self.lower > self.upper):
            raise SolverError("lower bound exceeds upper bound")

    def add(self, coeffs, sense, rhs):
        c = np.zeros(self.n_vars)
        coeffs = np.asarray(coeffs, dtype=float)
        c[: coeffs.size] = coeffs
        self.constraints.append(Constraint(c, sense, float(rhs)))

    def add_sparse(self, idx_coeffs: dict[int, float], sense: str, rhs: float):
        c = np.zeros(self.n_vars)
        for j, v in idx_coeffs.items():
            c[j] += v
        self.constraints.append(Constraint(c, sense, float(rhs)))

    def to_text(self) -> str:
        """Plain-text dump of the instance (debugging aid)."""
        lines = [f"vars {self.n_vars}"]
        if self.objective is not None:
            lines.append("obj " + " ".join(f"{v:.12g}" for v in self.objective))
        for con in self.constraints:
            lines.append(
                " ".join(f"{v:.12g}" for v in con.coeffs)
                + f" {con.sense} {con.rhs:.12g}"
            )
        lines.append("lb " + " ".join(f"{v:.12g}" for v in self.lower))
        lines.append("ub " + " ".join(f"{v:.12g}" for v in self.upper))
        return "\n".join(lines)


@dataclass
class SimplexResult:
    status: str  # feasible | optimal | infeasible | unbounded | inconclusive
    x: np.ndarray | None = None
    value: float | None = None
    certificate: dict | None = None
    pivots: int = 0
    kkt_residual: float | None = None

    @property
    def is_feasible(self) -> bool:
        return self.status in ("feasible", "optimal")


# ---------------------------------------------------------------------------
# standard-form conversion
#
# Each variable is shifted/split so the standardized unknowns are >= 0; every
# row becomes an equality after slack insertion.  ``row_origin`` remembers
# where each standardized row came from so infeasibility certificates can be
# reported against the caller's constraints.
# ---------------------------------------------------------------------------


class _Standardized:
    def __init__(self, lp: LinearProgram, exact: bool):
        self.exact = exact
        conv = Fraction if exact else float
        n = lp.n_vars
        cols: list[tuple[int, object, object]] = []  # (orig var, scale, shift)
        self.var_cols: list[list[int]] = [[] for _ in range(n)]
        extra_rows: list[tuple[np.ndarray, str, object, tuple]] = []

        for j in range(n):
            lo, hi = lp.lower[j], lp.upper[j]
            if lo == -INF and hi == INF:
                self.var_cols[j] = [len(cols), len(cols) + 1]
                cols.append((j, conv(1), conv(0)))
                cols.append((j, conv(-1), conv(0)))
            elif lo != -INF:
                # x = lo + y
                self.var_cols[j] = [len(cols)]
                cols.append((j, conv(1), _c(lo, conv)))
                if hi != INF:
                    extra_rows.append((j, LE, _c(hi, conv) - _c(lo, conv), ("ub", j)))
            else:
                # x = hi - y
                self.var_cols[j] = [len(cols)]
                cols.append((j, conv(-1), _c(hi, conv)))
        self.cols = cols
        ny = len(cols)

        rows = []
        rhs = []
        senses = []
        self.row_origin: list[tuple] = []
        for i, con in enumerate(lp.constraints):
            coeffs = _zeros(ny, exact)
            for j in range(n):
                a = _c(con.coeffs[j], conv)
                if a == 0:
                    continue
                for cidx in self.var_cols[j]:
                    _, scale, _ = cols[cidx]
                    coeffs[cidx] += a * scale
            # shift contribution: sum_j a_j * shift_j (shift belongs to the
            # variable, not the column; splits have zero shift)
            shift_total = conv(0)
            for j in range(n):
                a = _c(con.coeffs[j], conv)
                if a == 0:
                    continue
                shift_total += a * cols[self.var_cols[j][0]][2]
            b = _c(con.rhs, conv) - shift_total
            sense = con.sense
            if sense == GE:
                coeffs = [-v for v in coeffs]
                b = -b
                sense = LE
            rows.append(coeffs)
            rhs.append(b)
            senses.append(sense)
            self.row_origin.append(("row", i))
        for j, sense, bnd, origin in extra_rows:
            coeffs = _zeros(ny, exact)
            coeffs[self.var_cols[j][0]] = conv(1)
            rows.append(coeffs)
            rhs.append(bnd)
            senses.append(sense)
            self.row_origin.append(origin)

        # slack columns for <= rows
        m = len(rows)
        self.n_y = ny
        self.slack_of_row = [-1] * m
        for i in range(m):
            if senses[i] == LE:
                self.slack_of_row[i] = ny
                ny += 1
        A = [_zeros(ny, exact) for _ in range(m)]
        for i in range(m):
            for jj in range(self.n_y):
                A[i][jj] = rows[i][jj]
            if self.slack_of_row[i] >= 0:
                A[i][self.slack_of_row[i]] = conv(1)
        self.A = A
        self.b = list(rhs)
        self.m = m
        self.n_total = ny
        self.conv = conv

    def objective_vector(self, c_orig):
        conv = self.conv
        c = _zeros(self.n_total, self.exact)
        const = conv(0)
        for j, cj in enumerate(c_orig):
            a = _c(cj, conv)
            if a == 0:
                continue
            for cidx in self.var_cols[j]:
                _, scale, _ = self.cols[cidx]
                c[cidx] += a * scale
            const += a * self.cols[self.var_cols[j][0]][2]
        return c, const

    def recover_x(self, y, n_vars):
        x = np.zeros(n_vars)
        for j in range(n_vars):
            val = 0.0
            ci0 = self.var_cols[j][0]
            _, _, shift = self.cols[ci0]
            val = float(shift)
            for cidx in self.var_cols[j]:
                _, scale, _ = self.cols[cidx]
                val += float(scale) * float(y[cidx])
            x[j] = val
        return x


def _c(v, conv):
    if conv is Fraction:
        return v if isinstance(v, Fraction) else Fraction(v)
    return float(v)


def _zeros(n, exact):
    if exact:
        return [Fraction(0)] * n
    return [0.0] * n


# ---------------------------------------------------------------------------
# tableau simplex core (works on float or Fraction entries)
# ---------------------------------------------------------------------------


class _Tableau:
    """Dense tableau; row 0 is the (negated) objective row."""

    def __init__(self, A, b, c, exact, config: SolverConfig, n_cols: int | None = None):
        self.exact = exact
        self.cfg = config
        self.tol = 0 if exact else config.pivot_tol
        m = len(A)
        n = len(c) if n_cols is None else n_cols
        self.m, self.n = m, n
        if exact:
            self.T = [[Fraction(0)] * (n + 1) for _ in range(m + 1)]
            for i in range(m):
                for j in range(n):
                    self.T[i + 1][j] = A[i][j]
                self.T[i + 1][n] = b[i]
            for j in range(n):
                self.T[0][j] = c[j]
        else:
            self.T = np.zeros((m + 1, n + 1))
            if m:
                self.T[1:, :n] = np.asarray(A, dtype=float)
                self.T[1:, n] = np.asarray(b, dtype=float)
            self.T[0, :n] = np.asarray(c, dtype=float)
        self.basis = [-1] * m
        self.pivots = 0

    def price_out(self, basis):
        """Make reduced costs of basic columns zero."""
        for i, j in enumerate(basis):
            coef = self.T[0][j] if self.exact else self.T[0, j]
            if coef != 0:
                self._row_axpy(0, i + 1, -coef)
        self.basis = list(basis)

    def _row_axpy(self, dst, src, factor):
        if self.exact:
            row_d, row_s = self.T[dst], self.T[src]
            for j in range(self.n + 1):
                row_d[j] += factor * row_s[j]
        else:
            self.T[dst] += factor * self.T[src]

    def _pivot(self, row, col):
        piv = self.T[row][col] if self.exact else self.T[row, col]
        if self.exact:
            inv = Fraction(1) / piv
            self.T[row] = [v * inv for v in self.T[row]]
            for i in range(self.m + 1):
                if i == row:
                    continue
                f = self.T[i][col]
                if f != 0:
                    self._row_axpy(i, row, -f)
        else:
            self.T[row] /= piv
            col_vals = self.T[:, col].copy()
            col_vals[row] = 0.0
            self.T -= np.outer(col_vals, self.T[row])
            self.T[:, col] = 0.0
            self.T[row, col] = 1.0
        self.basis[row - 1] = col
        self.pivots += 1

    def run(self, allowed_cols=None) -> str:
        """Bland-rule simplex to optimality.  Returns a status string."""
        tol = self.tol
        while True:
            if self.pivots > self.cfg.max_pivots:
                return "inconclusive"
            enter = -1
            for j in range(self.n):
                if allowed_cols is not None and not allowed_cols[j]:
                    continue
                rc = self.T[0][j] if self.exact else self.T[0, j]
                if rc < -tol:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            # ratio test with Bland tie-break (lowest basic variable index)
            leave = -1
            best = None
            for i in range(1, self.m + 1):
                aij = self.T[i][enter] if self.exact else self.T[i, enter]
                if aij > tol:
                    ratio = (self.T[i][self.n] if self.exact else self.T[i, self.n]) / aij
                    if best is None or ratio < best - (0 if self.exact else 1e-15):
                        best, leave = ratio, i
                    elif ratio == best or (not self.exact and abs(ratio - best) <= 1e-15):
                        if self.basis[i - 1] < self.basis[leave - 1]:
                            leave = i
            if leave < 0:
                return "unbounded"
            self._pivot(leave, enter)

    def objective_value(self):
        v = self.T[0][self.n] if self.exact else self.T[0, self.n]
        return -v

    def solution(self):
        y = _zeros(self.n, self.exact)
        for i, j in enumerate(self.basis):
            y[j] = self.T[i + 1][self.n] if self.exact else self.T[i + 1, self.n]
        return y

    def row0(self):
        if self.exact:
            return list(self.T[0][: self.n])
        return self.T[0, : self.n].copy()


def _phase1(std: _Standardized, config: SolverConfig, exact: bool):
    """Solve the artificial-variable phase-1 problem.

    Returns (status, tableau, artificial_cols, farkas multipliers or None,
    flipped flags, pristine work data for refinement).
    """
    m, n = std.m, std.n_total
    conv = std.conv
    A = [list(row) for row in std.A]
    b = list(std.b)
    # flip rows to make rhs nonnegative
    flipped = [False] * m
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
            flipped[i] = True
    # initial basis: slack columns where usable (unflipped <= rows), an
    # artificial column otherwise; bound rows with huge rhs then never enter
    # the phase-1 objective
    basis0 = [-1] * m
    art_of_row = [-1] * m
    n_art = 0
    for i in range(m):
        s = std.slack_of_row[i]
        if s >= 0 and not flipped[i]:
            basis0[i] = s
        else:
            art_of_row[i] = n + n_art
            basis0[i] = n + n_art
            n_art += 1
    for i in range(m):
        ext = _zeros(n_art, exact)
        if art_of_row[i] >= 0:
            ext[art_of_row[i] - n] = conv(1)
        A[i] = list(A[i]) + ext
    art_cols = [n + j for j in range(n_art)]
    c = _zeros(n + n_art, exact)
    for j in art_cols:
        c[j] = conv(1)
    work = None
    if not exact and m:
        work = (
            np.array([[float(v) for v in row] for row in A]),
            np.array([float(v) for v in b]),
        )
    tab = _Tableau(A, b, c, exact, config, n_cols=n + n_art)
    tab.price_out(basis0)
    status = tab.run()
    if status == "inconclusive":
        return "inconclusive", tab, art_cols, None, flipped, work
    obj = tab.objective_value()
    tol = 0 if exact else config.feas_tol
    if obj > tol:
        # Farkas multipliers are the phase-1 duals, with sign flips undone so
        # they apply to the caller-facing rows.
        if not exact and work is not None:
            # recompute duals from pristine data for numerical hygiene
            c1 = np.zeros(work[0].shape[1])
            c1[n:] = 1.0
            refined = _refine_basis(work[0], work[1], c1, tab.basis)
            if refined is not None:
                _, y, _ = refined
                p = [(-y[i] if flipped[i] else y[i]) for i in range(m)]
                return "infeasible", tab, art_cols, p, flipped, work
        row0 = tab.row0()
        p = []
        for i in range(m):
            if art_of_row[i] >= 0:
                pi = conv(1) - row0[art_of_row[i]]
            else:
                pi = -row0[std.slack_of_row[i]]
            p.append(-pi if flipped[i] else pi)
        return "infeasible", tab, art_cols, p, flipped, work
    return "feasible", tab, art_cols, None, flipped, work


def _refine_basis(A0: np.ndarray, b0: np.ndarray, c0: np.ndarray, basis):
    """Recompute the basic solution and duals from pristine data.

    One factorization replaces the error accumulated over many tableau
    pivots.  Returns (x_full, y, reduced_costs) or None if the basis matrix
    is numerically singular.
    """
    B = A0[:, basis]
    try:
        xB = np.linalg.solve(B, b0)
        y = np.linalg.solve(B.T, c0[basis])
    except np.linalg.LinAlgError:
        return None
    x_full = np.zeros(A0.shape[1])
    x_full[list(basis)] = xB
    cbar = c0 - A0.T @ y
    return x_full, y, cbar


def _drive_out_artificials(tab: _Tableau, n_real: int, config: SolverConfig):
    """Pivot artificial variables out of the basis (or mark redundant rows)."""
    tol = 0 if tab.exact else config.pivot_tol
    for i in range(tab.m):
        if tab.basis[i] >= n_real:
            done = False
            for j in range(n_real):
                aij = tab.T[i + 1][j] if tab.exact else tab.T[i + 1, j]
                if abs(aij) > tol:
                    tab._pivot(i + 1, j)
                    done = True
                    break
            # a fully zero row is redundant; its artificial stays basic at 0
            if not done:
                pass


def _solve_std(
    lp: LinearProgram,
    c_orig,
    minimize: bool,
    config: SolverConfig,
    exact: bool,
):
    std = _Standardized(lp, exact)
    status, tab, art_cols, farkas, _, work = _phase1(std, config, exact)
    if status == "inconclusive":
        return SimplexResult(status="inconclusive", pivots=tab.pivots), std
    if status == "infeasible":
        cert = _build_infeasibility_certificate(std, farkas, lp, config, exact)
        return (
            SimplexResult(status="infeasible", certificate=cert, pivots=tab.pivots),
            std,
        )
    _drive_out_artificials(tab, std.n_total, config)
    if c_orig is None:
        y = _clean_solution(tab, std, work, config)
        x = std.recover_x(y, lp.n_vars)
        return SimplexResult(status="feasible", x=x, pivots=tab.pivots), std

    cvec, const = std.objective_vector(c_orig if minimize else [-v for v in c_orig])
    # rebuild the objective row over the full (real + artificial) column space
    n_real, n_all = std.n_total, std.n_total + len(art_cols)
    full_c = _zeros(n_all, exact)
    for j in range(n_real):
        full_c[j] = cvec[j]
    if exact:
        for j in range(n_real):
            tab.T[0][j] = full_c[j]
        for j in range(n_real, n_all):
            tab.T[0][j] = Fraction(0)
        tab.T[0][tab.n] = Fraction(0)
    else:
        tab.T[0, :n_real] = np.array([float(v) for v in full_c[:n_real]])
        tab.T[0, n_real:n_all] = 0.0
        tab.T[0, tab.n] = 0.0
    tab.price_out(tab.basis)
    allowed = [True] * tab.n
    for j in range(n_real, n_all):
        allowed[j] = False  # artificials may not re-enter
    status = tab.run(allowed_cols=allowed)
    if status == "inconclusive":
        return SimplexResult(status="inconclusive", pivots=tab.pivots), std
    if status == "unbounded":
        return SimplexResult(status="unbounded", pivots=tab.pivots), std
    dual_res = 0.0
    if not exact and work is not None:
        c_work = np.zeros(n_all)
        c_work[:n_real] = [float(v) for v in full_c[:n_real]]
        refined = _refine_basis(work[0], work[1], c_work, tab.basis)
    else:
        refined = None
    if refined is not None:
        x_full, _, cbar = refined
        if x_full.min() < -config.feas_tol * 10:
            return SimplexResult(status="inconclusive", pivots=tab.pivots), std
        y = np.maximum(x_full[:n_real], 0.0)
        val = float(c_work[:n_real] @ x_full[:n_real]) + float(const)
        dual_res = max(0.0, float(-cbar[:n_real].min(initial=0.0)))
    else:
        y = tab.solution()
        val = float(tab.objective_value()) + float(const)
        row0 = tab.row0()
        for j in range(n_real):
            rc = row0[j]
            if rc < 0:
                dual_res = max(dual_res, float(-rc))
    x = std.recover_x(y, lp.n_vars)
    if not minimize:
        val = -val
    return (
        SimplexResult(
            status="optimal",
            x=x,
            value=val,
            pivots=tab.pivots,
            kkt_residual=dual_res,
        ),
        std,
    )


def _clean_solution(tab: _Tableau, std: _Standardized, work, config: SolverConfig):
    """Basic solution recomputed from pristine data when available."""
    if not tab.exact and work is not None:
        c0 = np.zeros(work[0].shape[1])
        refined = _refine_basis(work[0], work[1], c0, tab.basis)
        if refined is not None and refined[0].min() >= -config.feas_tol * 10:
            return np.maximum(refined[0][: std.n_total], 0.0)
    return tab.solution()


def _build_infeasibility_certificate(std, p, lp, config, exact):
    """Package Farkas multipliers and re-verify them by recombination.

    The multipliers are normalized to unit max magnitude before the float
    validity check so the thresholds are scale-invariant; in exact mode the
    sign conditions are checked exactly.
    """
    scale = max((abs(v) for v in p), default=0)
    if scale != 0:
        p = [v / scale for v in p]
    combo = _zeros(std.n_total, exact)
    rhs_combo = Fraction(0) if exact else 0.0
    for i in range(std.m):
        if p[i] == 0:
            continue
        for j in range(std.n_total):
            combo[j] += p[i] * std.A[i][j]
        rhs_combo += p[i] * std.b[i]
    if exact:
        valid = all(v <= 0 for v in combo) and rhs_combo > 0
        max_coeff = max((float(v) for v in combo), default=0.0)
    else:
        max_coeff = max((float(v) for v in combo), default=0.0)
        valid = max_coeff <= config.feas_tol * 10 and float(rhs_combo) > config.feas_tol / 10
    return {
        "kind": "farkas",
        "exact": exact,
        "row_multipliers": [
            (std.row_origin[i], float(p[i])) for i in range(std.m) if p[i] != 0
        ],
        "combined_max_coeff": max_coeff,
        "combined_rhs": float(rhs_combo),
        "valid": bool(valid),
    }


def lp_feasible(
    lp: LinearProgram,
    config: SolverConfig = DEFAULT_CONFIG,
    exact: bool = False,
    exact_fallback: bool = True,
) -> SimplexResult:
    """Decide feasibility; feasible points are re-verified against all rows.

    If the float path cannot certify its verdict (degenerate drift), the
    instance is re-solved in exact rational arithmetic rather than returning
    a silent wrong answer.
    """
    res, _ = _solve_std(lp, None, True, config, exact)
    if res.status == "feasible":
        viol = constraint_violation(lp, res.x)
        if viol > config.feas_tol:
            res = SimplexResult(status="inconclusive", x=res.x, pivots=res.pivots)
    if res.status == "inconclusive" and exact_fallback and not exact:
        return lp_feasible(lp, config, exact=True, exact_fallback=False)
    return res


def lp_optimize(
    lp: LinearProgram,
    sense: str = "min",
    config: SolverConfig = DEFAULT_CONFIG,
    exact: bool = False,
    exact_fallback: bool = True,
) -> SimplexResult:
    """Optimize lp.objective; raises if no objective is set."""
    if lp.objective is None:
        raise SolverError("lp_optimize requires an objective")
    res, _ = _solve_std(lp, list(lp.objective), sense == "min", config, exact)
    if res.status == "optimal":
        viol = constraint_violation(lp, res.x)
        if viol > config.feas_tol or (res.kkt_residual or 0) > config.opt_tol * 100:
            res = SimplexResult(
                status="inconclusive", x=res.x, value=res.value, pivots=res.pivots
            )
    if res.status == "inconclusive" and exact_fallback and not exact:
        return lp_optimize(lp, sense, config, exact=True, exact_fallback=False)
    return res


def constraint_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Max violation of rows and bounds at x."""
    worst = 0.0
    for con in lp.constraints:
        lhs = float(con.coeffs @ x)
        if con.sense == LE:
            worst = max(worst, lhs - con.rhs)
        elif con.sense == GE:
            worst = max(worst, con.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - con.rhs))
    worst = max(worst, float(np.max(np.maximum(lp.lower - x, 0.0), initial=0.0)))
    worst = max(worst, float(np.max(np.maximum(x - lp.upper, 0.0), initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# convex QP: primal active-set on top of equality-constrained least squares
# ---------------------------------------------------------------------------


@dataclass
class QuadraticProgram:
    """min 0.5 x'Qx + c'x  s.t.  A_eq x = b_eq,  A_in x <= b_in, bounds."""

    Q: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        if self.Q.shape != (n, n):
            raise SolverError("Q shape mismatch")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12):
            raise SolverError("Q must be symmetric")
        eigs = np.linalg.eigvalsh(self.Q)
        if eigs.min() < -1e-8 * max(1.0, abs(eigs.max())):
            raise SolverError("Q must be positive semidefinite")
        if self.lower is None:
            self.lower = np.full(n, -INF)
        if self.upper is None:
            self.upper = np.full(n, INF)


@dataclass
class QpResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    stationarity: float | None = None
    iterations: int = 0


def _qp_constraint_stack(qp: QuadraticProgram):
    n = qp.c.size
    rows, rhs = [], []
    if qp.A_in is not None:
        for row, b in zip(np.atleast_2d(qp.A_in), np.atleast_1d(qp.b_in)):
            rows.append(np.asarray(row, dtype=float))
            rhs.append(float(b))
    for j in range(n):
        if qp.upper[j] != INF:
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rhs.append(float(qp.upper[j]))
        if qp.lower[j] != -INF:
            e = np.zeros(n)
            e[j] = -1.0
            rows.append(e)
            rhs.append(float(-qp.lower[j]))
    A = np.array(rows) if rows else np.zeros((0, n))
    return A, np.array(rhs)


def _silence_fp(fn):
    """Run fn under an errstate that ignores overflow/invalid warnings.

    Extreme barrier iterates can transiently overflow; directions are checked
    for finiteness explicitly, so the warnings carry no information.
    """

    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return fn(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_silence_fp
def qp_minimize(
    qp: QuadraticProgram, config: SolverConfig = DEFAULT_CONFIG, x0=None
) -> QpResult:
    """Primal-dual interior-point minimization of a PSD quadratic.

    A Mehrotra-style predictor-corrector path following; each iteration
    solves one small dense reduced KKT system, so heavily degenerate
    constraint stacks (exactly duplicated rows, weakly active vertices) cost
    nothing beyond the usual ~20 iterations.  Infeasibility is certified
    up-front by the simplex engine.  ``x0``, when given and feasible, centres
    the initial point.
    """
    n = qp.c.size
    A_in, b_in = _qp_constraint_stack(qp)
    A_eq = np.atleast_2d(qp.A_eq) if qp.A_eq is not None else np.zeros((0, n))
    b_eq = np.atleast_1d(qp.b_eq).astype(float) if qp.b_eq is not None else np.zeros(0)
    m, p = A_in.shape[0], A_eq.shape[0]

    z = np.zeros(n)
    have_interior = False
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        ok = not (A_eq.size and np.max(np.abs(A_eq @ x0 - b_eq)) > config.feas_tol)
        if ok and (not A_in.size or np.max(A_in @ x0 - b_in) <= config.feas_tol):
            z = x0.copy()
            have_interior = True
    if not have_interior and (m or p):
        lp = LinearProgram(n_vars=n, lower=np.full(n, -INF), upper=np.full(n, INF))
        for row, b in zip(A_eq, b_eq):
            lp.constraints.append(Constraint(row, EQ, b))
        for row, b in zip(A_in, b_in):
            lp.constraints.append(Constraint(row, LE, b))
        start = lp_feasible(lp, config)
        if not start.is_feasible:
            return QpResult(status=start.status)
        z = start.x.astype(float)

    if m == 0 and p == 0:
        sol = np.linalg.lstsq(qp.Q, -qp.c, rcond=None)[0]
        val = 0.5 * sol @ qp.Q @ sol + qp.c @ sol
        return QpResult(status="optimal", x=sol, value=float(val),
                        stationarity=float(np.max(np.abs(qp.Q @ sol + qp.c), initial=0.0)))

    s = np.maximum(b_in - A_in @ z, 1.0) if m else np.zeros(0)
    lam = np.ones(m)
    y = np.zeros(p)
    reg = 1e-12 * (1.0 + float(np.trace(qp.Q)) / max(n, 1))

    def residuals(z, y, lam, s):
        r_d = qp.Q @ z + qp.c
        if p:
            r_d = r_d + A_eq.T @ y
        if m:
            r_d = r_d + A_in.T @ lam
        r_p1 = (A_eq @ z - b_eq) if p else np.zeros(0)
        r_p2 = (A_in @ z + s - b_in) if m else np.zeros(0)
        return r_d, r_p1, r_p2

    scale = 1.0 + max(
        float(np.max(np.abs(qp.c), initial=0.0)), float(np.max(np.abs(b_in), initial=0.0))
    )
    status = "inconclusive"
    for it in range(120):
        r_d, r_p1, r_p2 = residuals(z, y, lam, s)
        mu = float(s @ lam / m) if m else 0.0
        if (
            max(np.max(np.abs(r_d)), np.max(np.abs(r_p1), initial=0.0),
                np.max(np.abs(r_p2), initial=0.0)) <= 1e-9 * scale
            and mu <= 1e-11 * scale
        ):
            status = "optimal"
            break

        d = lam / s if m else np.zeros(0)
        H = qp.Q + reg * np.eye(n)
        if m:
            H = H + A_in.T @ (d[:, None] * A_in)
        K = np.zeros((n + p, n + p))
        K[:n, :n] = H
        if p:
            K[:n, n:] = A_eq.T
            K[n:, :n] = A_eq
            K[n:, n:] = -reg * np.eye(p)

        def newton(sigma_mu, ds_da=None, dl_da=None):
            # complementarity target: s.lam -> sigma_mu
            r_c = s * lam - sigma_mu
            if ds_da is not None:
                r_c = r_c + ds_da * dl_da
            rhs = np.zeros(n + p)
            tmp = (r_c / s - d * r_p2) if m else np.zeros(0)
            rhs[:n] = -r_d + (A_in.T @ tmp if m else 0.0)
            if p:
                rhs[n:] = -r_p1
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            dz = sol[:n]
            dy = sol[n:]
            if not np.all(np.isfinite(dz)):
                bad = np.full(m, np.nan)
                return dz, dy, bad, bad
            if m:
                dsv = -r_p2 - A_in @ dz
                dlam = (-r_c - lam * dsv) / s
            else:
                dsv = np.zeros(0)
                dlam = np.zeros(0)
            return dz, dy, dsv, dlam

        def step_len(v, dv):
            neg = dv < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])) * 0.995)

        dz_a, dy_a, ds_a, dl_a = newton(0.0)
        if m:
            a_p = step_len(s, ds_a)
            a_d = step_len(lam, dl_a)
            mu_aff = float((s + a_p * ds_a) @ (lam + a_d * dl_a) / m)
            sigma = min(max(mu_aff / mu, 0.0), 1.0) ** 3 if mu > 0 else 0.0
            dz, dy, dsv, dlam = newton(sigma * mu, ds_a, dl_a)
            a_p = step_len(s, dsv)
            a_d = step_len(lam, dlam)
            alpha = min(a_p, a_d)
        else:
            dz, dy, dsv, dlam = dz_a, dy_a, ds_a, dl_a
            alpha = 1.0
        if not (np.all(np.isfinite(dz)) and np.all(np.isfinite(dsv)) and np.all(np.isfinite(dlam))):
            break
        z = z + alpha * dz
        y = y + alpha * dy
        if m:
            s = s + alpha * dsv
            lam = lam + alpha * dlam

    val = 0.5 * z @ qp.Q @ z + qp.c @ z
    r_d, r_p1, r_p2 = residuals(z, y, lam, s)
    stat = float(np.max(np.abs(r_d), initial=0.0))
    primal = max(
        float(np.max(r_p2, initial=0.0)), float(np.max(np.abs(r_p1), initial=0.0))
    )
    if status == "optimal" or (stat <= config.qp_stationarity_tol and primal <= config.feas_tol * 10):
        return QpResult(status="optimal", x=z, value=float(val), stationarity=stat, iterations=it)
    return QpResult(status="inconclusive", x=z, value=float(val), stationarity=stat, iterations=it)
