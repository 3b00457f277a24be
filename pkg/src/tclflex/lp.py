"""Dense linear programming.

``solve`` minimizes ``c @ x`` subject to ``a_ub @ x <= b_ub``,
``a_eq @ x == b_eq`` and per-variable bounds.  Two backends are available:

* ``"simplex"`` -- a self-contained two-phase revised simplex on dense
  matrices, with Dantzig pricing that falls back to Bland's rule once too
  many degenerate pivots have been taken.
* ``"highs"`` -- :func:`scipy.optimize.linprog` with the HiGHS solver, used
  for the large Farkas-certificate programs where a dense tableau is slow.

``"auto"`` picks the simplex for small problems and HiGHS otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

# Tolerances (all in one place).
FEAS_TOL = 1e-9          # primal feasibility / phase-1 residual
PIVOT_TOL = 1e-11        # smallest acceptable pivot element
COST_TOL = 1e-10         # reduced-cost optimality threshold
DEGENERATE_LIMIT = 500   # degenerate pivots before switching to Bland's rule
ITER_FACTOR = 50         # iteration cap = ITER_FACTOR * (rows + cols)
AUTO_DENSE_LIMIT = 60_000  # rows * cols below which "auto" uses the simplex

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
NUMERICAL = "numerical"


@dataclass
class LpProblem:
    c: np.ndarray
    a_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    a_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence[tuple]] = None  # None -> all x >= 0

    @property
    def n(self) -> int:
        return int(np.asarray(self.c).shape[0])

    def bound_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        if self.bounds is None:
            return np.zeros(n), np.full(n, np.inf)
        if not isinstance(self.bounds[0], (tuple, list, np.ndarray)):
            lo, hi = self.bounds
            return (np.full(n, -np.inf if lo is None else lo, dtype=float),
                    np.full(n, np.inf if hi is None else hi, dtype=float))
        if len(self.bounds) != n:
            raise ValueError(f"bounds has {len(self.bounds)} entries, expected {n}")
        lo = np.array([-np.inf if b[0] is None else b[0] for b in self.bounds], dtype=float)
        hi = np.array([np.inf if b[1] is None else b[1] for b in self.bounds], dtype=float)
        return lo, hi


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = np.nan
    # Multipliers in the convention c + a_ub.T @ dual_ub + a_eq.T @ dual_eq
    # = reduced cost on the bounds; dual_ub >= 0 at optimum.
    dual_ub: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    iterations: int = 0
    method: str = ""
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class LpError(RuntimeError):
    """Raised by :func:`solve_or_raise` when no optimum is found."""

    def __init__(self, solution: LpSolution, what: str = "LP"):
        super().__init__(f"{what}: {solution.status} ({solution.message})")
        self.solution = solution


def _as_2d(a, n, name):
    if a is None:
        return sp.csr_matrix((0, n))
    if sp.issparse(a):
        a = a.tocsr()
    else:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.size == 0:
            a = a.reshape(0, n)
    if a.shape[1] != n:
        raise ValueError(f"{name} has {a.shape[1]} columns, expected {n}")
    return a


def _check(p: LpProblem):
    n = p.n
    a_ub = _as_2d(p.a_ub, n, "a_ub")
    a_eq = _as_2d(p.a_eq, n, "a_eq")
    b_ub = np.zeros(0) if p.b_ub is None else np.asarray(p.b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if p.b_eq is None else np.asarray(p.b_eq, dtype=float).ravel()
    if a_ub.shape[0] != b_ub.shape[0]:
        raise ValueError(f"a_ub has {a_ub.shape[0]} rows but b_ub has {b_ub.shape[0]}")
    if a_eq.shape[0] != b_eq.shape[0]:
        raise ValueError(f"a_eq has {a_eq.shape[0]} rows but b_eq has {b_eq.shape[0]}")
    lo, hi = p.bound_arrays()
    if np.any(lo > hi):
        return a_ub, b_ub, a_eq, b_eq, lo, hi, False
    return a_ub, b_ub, a_eq, b_eq, lo, hi, True


def solve(p: LpProblem, method: str = "auto") -> LpSolution:
    """Solve ``p`` and return an :class:`LpSolution`.

    Never returns an ``optimal`` status with a point that violates the
    constraints by more than ``1e-8 * (1 + |b|)``; such a result is downgraded
    to ``numerical``.
    """
    a_ub, b_ub, a_eq, b_eq, lo, hi, bounds_ok = _check(p)
    c = np.asarray(p.c, dtype=float).ravel()
    if not bounds_ok:
        return LpSolution(INFEASIBLE, method=method, message="crossed bounds")
    if method == "auto":
        rows = a_ub.shape[0] + a_eq.shape[0]
        method = "simplex" if rows * (c.size + rows) <= AUTO_DENSE_LIMIT else "highs"
    if method == "simplex":
        sol = _solve_simplex(c, a_ub, b_ub, a_eq, b_eq, lo, hi)
    elif method == "highs":
        sol = _solve_highs(c, a_ub, b_ub, a_eq, b_eq, lo, hi)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.ok:
        viol = max_violation(sol.x, a_ub, b_ub, a_eq, b_eq, lo, hi)
        if viol > 1e-8:
            sol.status = NUMERICAL
            sol.message = f"optimal point violates constraints by {viol:.2e}"
    return sol


def solve_or_raise(p: LpProblem, method: str = "auto", what: str = "LP") -> LpSolution:
    sol = solve(p, method)
    if not sol.ok:
        raise LpError(sol, what)
    return sol


def max_violation(x, a_ub, b_ub, a_eq, b_eq, lo, hi) -> float:
    """Largest constraint violation of ``x``, scaled by ``1 + |rhs|``."""
    worst = 0.0
    if a_ub.shape[0]:
        r = (a_ub @ x - b_ub) / (1.0 + np.abs(b_ub))
        worst = max(worst, float(np.max(r, initial=0.0)))
    if a_eq.shape[0]:
        r = np.abs(a_eq @ x - b_eq) / (1.0 + np.abs(b_eq))
        worst = max(worst, float(np.max(r, initial=0.0)))
    with np.errstate(invalid="ignore"):
        worst = max(worst, float(np.max(np.where(np.isfinite(lo), (lo - x) / (1 + np.abs(lo)), 0.0), initial=0.0)))
        worst = max(worst, float(np.max(np.where(np.isfinite(hi), (x - hi) / (1 + np.abs(hi)), 0.0), initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# HiGHS backend


def _solve_highs(c, a_ub, b_ub, a_eq, b_eq, lo, hi) -> LpSolution:
    from scipy.optimize import linprog

    bounds = np.column_stack([np.where(np.isfinite(lo), lo, -np.inf),
                              np.where(np.isfinite(hi), hi, np.inf)])
    res = linprog(
        c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=a_eq if a_eq.shape[0] else None,
        b_eq=b_eq if a_eq.shape[0] else None,
        bounds=bounds,
        method="highs",
        options={"presolve": True, "primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, NUMERICAL)
    if status != OPTIMAL:
        return LpSolution(status, method="highs", message=res.message)
    dual_ub = -np.asarray(res.ineqlin.marginals) if a_ub.shape[0] else np.zeros(0)
    dual_eq = -np.asarray(res.eqlin.marginals) if a_eq.shape[0] else np.zeros(0)
    return LpSolution(OPTIMAL, np.asarray(res.x), float(res.fun), dual_ub, dual_eq,
                      int(getattr(res, "nit", 0)), "highs", res.message)


# ---------------------------------------------------------------------------
# Revised simplex backend


def _dense(a):
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


def _solve_simplex(c, a_ub, b_ub, a_eq, b_eq, lo, hi) -> LpSolution:
    """Reduce to ``min c's x's, A x = b, x >= 0`` and run the two phases."""
    n = c.size
    a_ub = _dense(a_ub)
    a_eq = _dense(a_eq)

    # Column map: x = offset + sum_k coef_k * x'_k.
    cols = []          # (original index, sign)
    offset = np.zeros(n)
    upper_rows = []    # (new column, hi - lo) for doubly bounded vars
    for j in range(n):
        l, h = lo[j], hi[j]
        if np.isfinite(l):
            offset[j] = l
            cols.append((j, 1.0))
            if np.isfinite(h):
                upper_rows.append((len(cols) - 1, h - l))
        elif np.isfinite(h):
            offset[j] = h
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nx = len(cols)
    T = np.zeros((n, nx))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s

    m_ub, m_eq, m_bd = a_ub.shape[0], a_eq.shape[0], len(upper_rows)
    n_slack = m_ub + m_bd
    rows = m_ub + m_eq + m_bd
    A = np.zeros((rows, nx + n_slack))
    b = np.zeros(rows)
    if m_ub:
        A[:m_ub, :nx] = a_ub @ T
        A[:m_ub, nx:nx + m_ub] = np.eye(m_ub)
        b[:m_ub] = b_ub - a_ub @ offset
    if m_eq:
        A[m_ub:m_ub + m_eq, :nx] = a_eq @ T
        b[m_ub:m_ub + m_eq] = b_eq - a_eq @ offset
    for r, (k, width) in enumerate(upper_rows):
        A[m_ub + m_eq + r, k] = 1.0
        A[m_ub + m_eq + r, nx + m_ub + r] = 1.0
        b[m_ub + m_eq + r] = width
    cost = np.concatenate([T.T @ c, np.zeros(n_slack)])

    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign

    res = _two_phase(A, b, cost)
    status, xs, y, iters = res
    if status != OPTIMAL:
        return LpSolution(status, iterations=iters, method="simplex")
    x = offset + T @ xs[:nx]
    y = y * sign
    dual_ub = -y[:m_ub]
    dual_eq = -y[m_ub:m_ub + m_eq]
    return LpSolution(OPTIMAL, x, float(c @ x), dual_ub, dual_eq, iters, "simplex")


class _Basis:
    """LU-factored basis matrix, refactored on every change."""

    def __init__(self, A, basis):
        self.A = A
        self.basis = list(basis)
        self.refactor()

    def refactor(self):
        self.lu = scipy.linalg.lu_factor(self.A[:, self.basis], check_finite=False)

    def solve(self, v):
        return scipy.linalg.lu_solve(self.lu, v, check_finite=False)

    def solve_t(self, v):
        return scipy.linalg.lu_solve(self.lu, v, trans=1, check_finite=False)

    def replace(self, r, q):
        self.basis[r] = q
        self.refactor()


def _two_phase(A, b, cost):
    rows, ncols = A.shape
    max_iter = ITER_FACTOR * (rows + ncols)

    # Initial basis: reuse unit slack columns where possible, else artificials.
    basis = [-1] * rows
    for j in range(ncols):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] < 0:
            basis[nz[0]] = j
    art_rows = [i for i in range(rows) if basis[i] < 0]
    n_art = len(art_rows)
    if n_art:
        Aa = np.zeros((rows, n_art))
        for k, i in enumerate(art_rows):
            Aa[i, k] = 1.0
            basis[i] = ncols + k
        A1 = np.hstack([A, Aa])
    else:
        A1 = A
    total = A1.shape[1]

    iters = 0
    keep = np.ones(rows, dtype=bool)
    if n_art:
        c1 = np.concatenate([np.zeros(ncols), np.ones(n_art)])
        status, B, xb, it = _simplex_loop(A1, b, c1, basis, max_iter, allowed=total)
        iters += it
        if status == ITERATION_LIMIT:
            return status, None, None, iters
        if status != OPTIMAL:
            return NUMERICAL, None, None, iters
        if c1[B.basis] @ xb > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return INFEASIBLE, None, None, iters
        # Drive zero-level artificials out of the basis; drop redundant rows.
        for r in range(rows):
            if B.basis[r] < ncols:
                continue
            e = np.zeros(rows)
            e[r] = 1.0
            row = B.solve_t(e) @ A  # row r of B^-1 A over real columns
            nonbasic = [j for j in np.flatnonzero(np.abs(row) > 1e-8) if j not in B.basis]
            if nonbasic:
                j = max(nonbasic, key=lambda k: abs(row[k]))
                B.replace(r, int(j))
            else:
                keep[r] = False
        if not keep.all():
            kept_basis = [B.basis[r] for r in range(rows) if keep[r]]
            A = A[keep]
            b = b[keep]
            rows = A.shape[0]
            basis = kept_basis
        else:
            basis = B.basis
        if any(j >= ncols for j in basis):
            return NUMERICAL, None, None, iters
    status, B, xb, it = _simplex_loop(A, b, cost, basis, max_iter - iters, allowed=ncols)
    iters += it
    if status != OPTIMAL:
        return status, None, None, iters
    x = np.zeros(ncols)
    x[B.basis] = xb
    x = np.maximum(x, 0.0)
    y = B.solve_t(cost[B.basis])
    if not keep.all():
        full = np.zeros(keep.size)
        full[keep] = y
        y = full
    return OPTIMAL, x, y, iters


def _simplex_loop(A, b, cost, basis, max_iter, allowed):
    rows = A.shape[0]
    B = _Basis(A, basis)
    xb = B.solve(b)
    degenerate = 0
    bland = False
    for it in range(max(max_iter, 0) + 1):
        if it == max_iter:
            return ITERATION_LIMIT, B, xb, it
        y = B.solve_t(cost[B.basis])
        red = cost[:allowed] - y @ A[:, :allowed]
        red[B.basis] = 0.0
        scale = 1.0 + np.abs(cost[:allowed])
        candidates = np.flatnonzero(red < -COST_TOL * scale)
        if candidates.size == 0:
            return OPTIMAL, B, xb, it
        q = int(candidates[0]) if bland else int(candidates[np.argmin(red[candidates] / scale[candidates])])
        d = B.solve(A[:, q])
        pos = np.flatnonzero(d > PIVOT_TOL)
        if pos.size == 0:
            return UNBOUNDED, B, xb, it
        ratios = np.maximum(xb[pos], 0.0) / d[pos]
        tmin = ratios.min()
        ties = pos[ratios <= tmin + 1e-12 * (1.0 + tmin)]
        if bland:
            r = int(min(ties, key=lambda i: B.basis[i]))
        else:
            r = int(ties[np.argmax(d[ties])])
        if tmin <= FEAS_TOL:
            degenerate += 1
            if degenerate >= DEGENERATE_LIMIT:
                bland = True
        B.replace(r, q)
        xb = B.solve(b)
        # Clean tiny negatives produced by round-off.
        xb[(xb < 0) & (xb > -FEAS_TOL)] = 0.0
    return ITERATION_LIMIT, B, xb, max_iter
