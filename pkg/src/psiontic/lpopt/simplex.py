"""Dense two-phase simplex with Bland's rule and checkable certificates.

Every answer carries a certificate that :func:`verify_solution` checks
against the original program data alone:

* optimal: primal values plus dual multipliers ``y_eq``, ``y_ub`` and
  reduced costs ``r`` with ``c = A_eq^T y_eq + A_ub^T y_ub + r``;
* infeasible: a Farkas pair ``(y_eq, y_ub)`` whose aggregated constraint
  cannot be met anywhere in the variable box;
* unbounded: a feasible point and an improving recession direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..config import TOL
from . import _backend

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

MAX_VARIABLES = 5000
COST_TOL = 1e-10
PIVOT_TOL = 1e-11
REINVERSIONS = 4


class LpError(RuntimeError):
    """Numerical breakdown or an unusable program."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """max/min c.x subject to A_eq x = b_eq, A_ub x <= b_ub, lo <= x <= hi."""

    c: np.ndarray
    sense: Literal["max", "min"] = "max"
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        if n == 0:
            raise ValueError("program has no variables")
        if n > MAX_VARIABLES:
            raise ValueError(f"program has {n} variables; limit is {MAX_VARIABLES}")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")

        def block(A, b, name):
            if A is None and b is None:
                return np.zeros((0, n)), np.zeros(0)
            if A is None or b is None:
                raise ValueError(f"{name}: matrix and right-hand side must be given together")
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if A.size == 0:
                A = A.reshape(0, n)
            if A.shape != (b.size, n):
                raise ValueError(f"{name}: matrix shape {A.shape} inconsistent with {b.size} rows x {n} variables")
            return A, b

        A_eq, b_eq = block(self.A_eq, self.b_eq, "equality constraints")
        A_ub, b_ub = block(self.A_ub, self.b_ub, "inequality constraints")
        lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float).ravel()
        hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).ravel()
        if lo.size != n or hi.size != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("variable bounds must satisfy lo <= hi")
        for arr in (c, A_eq, b_eq, A_ub, b_ub):
            if not np.all(np.isfinite(arr)):
                raise ValueError("program data must be finite")
        for name, val in (("c", c), ("A_eq", A_eq), ("b_eq", b_eq), ("A_ub", A_ub), ("b_ub", b_ub), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    values: np.ndarray
    objective_value: float
    certificate: dict = field(default_factory=dict)
    iterations: int = 0


@dataclass
class _StandardForm:
    A: np.ndarray          # rows x columns, rhs made nonnegative
    b: np.ndarray
    sign: np.ndarray       # row sign flips applied
    g: np.ndarray          # min-convention cost per column
    offset: np.ndarray     # x = offset + X y
    X: np.ndarray
    n_eq: int
    n_ub: int
    slack_of_row: np.ndarray  # column index of the +1 slack, or -1


def _standardize(lp: LinearProgram) -> _StandardForm:
    n = lp.n
    g_x = -lp.c if lp.sense == "max" else lp.c.copy()
    cols = []       # (orig var, coefficient)
    offset = np.zeros(n)
    hi_rows = []    # (column, capacity)
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if math.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                hi_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    X = np.zeros((n, ny))
    for k, (j, s) in enumerate(cols):
        X[j, k] = s
    n_eq, n_ub, n_hi = lp.A_eq.shape[0], lp.A_ub.shape[0], len(hi_rows)
    n_slack = n_ub + n_hi
    m = n_eq + n_ub + n_hi
    A = np.zeros((m, ny + n_slack))
    b = np.zeros(m)
    A[:n_eq, :ny] = lp.A_eq @ X
    b[:n_eq] = lp.b_eq - lp.A_eq @ offset
    A[n_eq:n_eq + n_ub, :ny] = lp.A_ub @ X
    b[n_eq:n_eq + n_ub] = lp.b_ub - lp.A_ub @ offset
    slack_of_row = np.full(m, -1)
    for i in range(n_ub):
        A[n_eq + i, ny + i] = 1.0
        slack_of_row[n_eq + i] = ny + i
    for k, (col, cap) in enumerate(hi_rows):
        r = n_eq + n_ub + k
        A[r, col] = 1.0
        A[r, ny + n_ub + k] = 1.0
        b[r] = cap
        slack_of_row[r] = ny + n_ub + k
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign
    slack_of_row[sign < 0] = -1
    g = np.concatenate([X.T @ g_x, np.zeros(n_slack)])
    return _StandardForm(A, b, sign, g, offset, X, n_eq, n_ub, slack_of_row)


def _duals(T, cost, init_cols):
    m = T.shape[0] - 1
    return np.array([cost[init_cols[i]] - T[m, init_cols[i]] for i in range(m)])


def _reinvert(T, basis, A_full, b, cost) -> None:
    """Rebuild the tableau from the original data at the current basis.

    Long degenerate pivot sequences accumulate rounding in ``T``; solving
    with the basis matrix directly restores the rows and the cost row.
    """
    m = A_full.shape[0]
    B = A_full[:, basis]
    try:
        T[:m, :-1] = np.linalg.solve(B, A_full)
        T[:m, -1] = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return
    T[:m, basis] = np.eye(m)
    T[m, :] = 0.0
    T[m, :-1] = cost
    T[m, :] -= cost[basis] @ T[:m, :]


def _run_phase(kern, T, basis, allowed, max_iter, A_full, b, cost):
    """Pivot to optimality, re-inverting until the clean tableau agrees."""
    total = 0
    for _ in range(REINVERSIONS):
        status, it, q = kern.simplex_loop(T, basis, allowed, max_iter - total, COST_TOL, PIVOT_TOL)
        total += it
        if status != _backend._kernel_py.OPTIMAL:
            return status, total, q
        _reinvert(T, basis, A_full, b, cost)
        if not np.any((T[-1, :-1] < -COST_TOL) & allowed):
            break
    return status, total, q


def solve_lp(lp: LinearProgram, max_iter: int = 200_000, backend: str | None = None, verify: bool = True) -> LpSolution:
    """Solve ``lp`` deterministically (Bland's rule, lowest-index tie breaks)."""
    kern = _backend.get_kernel(backend)
    sf = _standardize(lp)
    m, ncol = sf.A.shape
    art_rows = np.flatnonzero(sf.slack_of_row < 0)
    n_art = art_rows.size
    ntot = ncol + n_art
    T = np.zeros((m + 1, ntot + 1))
    T[:m, :ncol] = sf.A
    T[:m, ntot] = sf.b
    basis = np.zeros(m, dtype=np.int_)
    init_cols = np.zeros(m, dtype=np.int_)
    for i in range(m):
        if sf.slack_of_row[i] >= 0:
            basis[i] = sf.slack_of_row[i]
    for k, i in enumerate(art_rows):
        T[i, ncol + k] = 1.0
        basis[i] = ncol + k
    init_cols[:] = basis
    is_art = np.zeros(ntot, dtype=bool)
    is_art[ncol:] = True
    A_full = T[:m, :ntot].copy()

    total_iters = 0
    # phase 1: minimise the sum of artificials
    cost1 = np.zeros(ntot)
    cost1[ncol:] = 1.0
    if n_art:
        T[m, :] = 0.0
        T[m, :ntot] = cost1
        T[m, :] -= T[art_rows, :].sum(axis=0)
        status, it, _ = _run_phase(kern, T, basis, np.ones(ntot, dtype=bool), max_iter, A_full, sf.b, cost1)
        total_iters += it
        if status != _backend._kernel_py.OPTIMAL:
            raise LpError("phase 1 did not terminate within the iteration limit")
        infeas = -T[m, ntot]
        scale = 1.0 + float(np.abs(sf.b).max(initial=0.0))
        if infeas > TOL.lp_feasibility * scale:
            ytil = _duals(T, cost1, init_cols)
            u = sf.sign * ytil
            cert = {
                "y_eq": u[:sf.n_eq].copy(),
                "y_ub": u[sf.n_eq:sf.n_eq + sf.n_ub].copy(),
                "phase1_infeasibility": float(infeas),
            }
            sol = LpSolution(INFEASIBLE, np.full(lp.n, np.nan), float("nan"), cert, total_iters)
            if verify:
                _require(verify_solution(lp, sol), "infeasibility certificate")
            return sol
        # drive remaining artificials out of the basis
        for i in range(m):
            if is_art[basis[i]]:
                row = T[i, :ncol]
                cand = np.flatnonzero(np.abs(row) > 1e-9)
                if cand.size:
                    kern.pivot(T, basis, i, int(cand[0]))

    # phase 2
    cost2 = np.zeros(ntot)
    cost2[:ncol] = sf.g
    T[m, :] = 0.0
    T[m, :ntot] = cost2
    cb = cost2[basis]
    T[m, :] -= cb @ T[:m, :]
    allowed = ~is_art
    status, it, q = _run_phase(kern, T, basis, allowed, max_iter, A_full, sf.b, cost2)
    total_iters += it
    if status == _backend._kernel_py.ITERATION_LIMIT:
        raise LpError("phase 2 did not terminate within the iteration limit")
    y_std = np.zeros(ntot)
    y_std[basis] = T[:m, ntot]
    x = sf.offset + sf.X @ y_std[:sf.X.shape[1]]
    obj = float(lp.c @ x)
    if status == _backend._kernel_py.UNBOUNDED:
        dy = np.zeros(ntot)
        dy[q] = 1.0
        dy[basis] = -T[:m, q]
        d = sf.X @ dy[:sf.X.shape[1]]
        sol = LpSolution(UNBOUNDED, x, math.inf if lp.sense == "max" else -math.inf, {"ray": d}, total_iters)
        if verify:
            _require(verify_solution(lp, sol), "unboundedness certificate")
        return sol
    ytil = _duals(T, cost2, init_cols)
    u = sf.sign * ytil
    s = -1.0 if lp.sense == "max" else 1.0
    y_eq = s * u[:sf.n_eq]
    y_ub = s * u[sf.n_eq:sf.n_eq + sf.n_ub]
    r = lp.c - lp.A_eq.T @ y_eq - lp.A_ub.T @ y_ub
    cert = {"y_eq": y_eq, "y_ub": y_ub, "reduced_costs": r}
    sol = LpSolution(OPTIMAL, x, obj, cert, total_iters)
    if verify:
        _require(verify_solution(lp, sol), "optimality certificate")
    return sol


def _require(check: dict, what: str) -> None:
    if not check["ok"]:
        raise LpError(f"{what} failed verification: {check}")


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    res = 0.0
    if lp.A_eq.size:
        res = max(res, float(np.max(np.abs(lp.A_eq @ x - lp.b_eq))))
    if lp.A_ub.size:
        res = max(res, float(np.max(lp.A_ub @ x - lp.b_ub, initial=0.0)))
    res = max(res, float(np.max(lp.lo - x, initial=0.0)), float(np.max(x - lp.hi, initial=0.0)))
    return res


def verify_solution(lp: LinearProgram, sol: LpSolution,
                    feas_tol: float = TOL.lp_feasibility,
                    cs_tol: float = TOL.lp_complementarity) -> dict:
    """Check a solution's certificate using only the program data."""
    cert = sol.certificate
    out: dict = {"status": sol.status}
    if sol.status == OPTIMAL:
        x = sol.values
        pr = primal_residual(lp, x)
        s = -1.0 if lp.sense == "max" else 1.0
        u_ub = s * cert["y_ub"]
        z = s * (lp.c - lp.A_eq.T @ cert["y_eq"] - lp.A_ub.T @ cert["y_ub"])
        dual_res = 0.0
        cs = 0.0
        if u_ub.size:
            dual_res = max(dual_res, float(np.max(u_ub, initial=0.0)))
            slack = lp.b_ub - lp.A_ub @ x
            cs = max(cs, float(np.max(np.abs(u_ub) * np.abs(slack))))
        lo_f, hi_f = np.isfinite(lp.lo), np.isfinite(lp.hi)
        dual_res = max(dual_res, float(np.max(np.abs(z[~lo_f & ~hi_f]), initial=0.0)))
        dual_res = max(dual_res, float(np.max(-z[lo_f & ~hi_f], initial=0.0)))
        dual_res = max(dual_res, float(np.max(z[~lo_f & hi_f], initial=0.0)))
        pos, neg = np.clip(z, 0, None), np.clip(-z, 0, None)
        if lo_f.any():
            cs = max(cs, float(np.max(pos[lo_f] * np.abs(x[lo_f] - lp.lo[lo_f]))))
        if hi_f.any():
            cs = max(cs, float(np.max(neg[hi_f] * np.abs(lp.hi[hi_f] - x[hi_f]))))
        out.update(primal_residual=pr, dual_residual=dual_res, complementarity=cs)
        out["ok"] = pr <= feas_tol and dual_res <= cs_tol and cs <= cs_tol
    elif sol.status == INFEASIBLE:
        u_eq = np.asarray(cert["y_eq"], dtype=float)
        u_ub = np.asarray(cert["y_ub"], dtype=float)
        v = lp.A_eq.T @ u_eq + lp.A_ub.T @ u_ub
        sign_ok = float(np.max(u_ub, initial=0.0))
        box_max = 0.0
        bad = False
        for j, vj in enumerate(v):
            if vj > feas_tol:
                bad |= not math.isfinite(lp.hi[j])
                box_max += vj * lp.hi[j] if math.isfinite(lp.hi[j]) else 0.0
            elif vj < -feas_tol:
                bad |= not math.isfinite(lp.lo[j])
                box_max += vj * lp.lo[j] if math.isfinite(lp.lo[j]) else 0.0
            else:
                box_max += vj * (lp.lo[j] if math.isfinite(lp.lo[j]) else lp.hi[j] if math.isfinite(lp.hi[j]) else 0.0)
        margin = float(lp.b_eq @ u_eq + lp.b_ub @ u_ub - box_max)
        out.update(margin=margin, sign_violation=sign_ok, unbounded_box=bad)
        out["ok"] = (not bad) and sign_ok <= feas_tol and margin > feas_tol
    elif sol.status == UNBOUNDED:
        d = np.asarray(cert["ray"], dtype=float)
        pr = primal_residual(lp, sol.values)
        ray_res = 0.0
        if lp.A_eq.size:
            ray_res = max(ray_res, float(np.max(np.abs(lp.A_eq @ d))))
        if lp.A_ub.size:
            ray_res = max(ray_res, float(np.max(lp.A_ub @ d, initial=0.0)))
        lo_f, hi_f = np.isfinite(lp.lo), np.isfinite(lp.hi)
        ray_res = max(ray_res, float(np.max(-d[lo_f], initial=0.0)), float(np.max(d[hi_f], initial=0.0)))
        gain = float(lp.c @ d) * (1.0 if lp.sense == "max" else -1.0)
        out.update(primal_residual=pr, ray_residual=ray_res, gain=gain)
        out["ok"] = pr <= feas_tol and ray_res <= feas_tol and gain > feas_tol
    else:
        out["ok"] = False
    return out


def dump_lp(lp: LinearProgram) -> str:
    """Free-form MPS-like listing for cross-checking with external solvers."""
    lines = ["NAME psiontic-lp", f"SENSE {lp.sense.upper()}", "ROWS", " N obj"]
    lines += [f" E e{i}" for i in range(lp.A_eq.shape[0])]
    lines += [f" L u{i}" for i in range(lp.A_ub.shape[0])]
    lines.append("COLUMNS")
    for j in range(lp.n):
        if lp.c[j] != 0:
            lines.append(f" x{j} obj {float(lp.c[j])!r}")
        for i in np.flatnonzero(lp.A_eq[:, j]):
            lines.append(f" x{j} e{i} {float(lp.A_eq[i, j])!r}")
        for i in np.flatnonzero(lp.A_ub[:, j]):
            lines.append(f" x{j} u{i} {float(lp.A_ub[i, j])!r}")
    lines.append("RHS")
    lines += [f" rhs e{i} {float(v)!r}" for i, v in enumerate(lp.b_eq) if v != 0]
    lines += [f" rhs u{i} {float(v)!r}" for i, v in enumerate(lp.b_ub) if v != 0]
    lines.append("BOUNDS")
    for j in range(lp.n):
        lo, hi = lp.lo[j], lp.hi[j]
        if lo == -np.inf and hi == np.inf:
            lines.append(f" FR bnd x{j}")
            continue
        if lo != 0:
            lines.append(f" {'MI' if lo == -np.inf else 'LO'} bnd x{j}" + ("" if lo == -np.inf else f" {float(lo)!r}"))
        if hi != np.inf:
            lines.append(f" UP bnd x{j} {float(hi)!r}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
