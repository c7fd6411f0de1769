"""Fit preparation distributions to a fragment under fixed response functions.

The responses are inputs, never variables: with them fixed, reproducing the
Born statistics is a linear feasibility problem in the distributions, and
the overlap of two distributions (sum of pointwise minima on a finite space)
is a linear objective.

Each preparation is presolved before it enters an LP. Ontic states where some
outcome with zero Born probability has positive response must carry zero
weight, and redundant statistic rows are dropped after a range check. A
failed range check is itself an infeasibility certificate: the least-squares
residual ``y`` satisfies ``A^T y = 0`` and ``b.y > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from ..config import TOL
from ..omodel import OntModel, reproduces_fragment
from ..qcore import Fragment, born_probability
from .simplex import INFEASIBLE, OPTIMAL, LinearProgram, LpError, solve_lp

ZERO_TARGET = 1e-14
ZERO_RESPONSE = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ResponseTable:
    """Response functions over a fixed finite ontic space, keyed by experiment."""

    lambda_size: int
    experiments: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        template = OntModel(self.lambda_size, {}, self.experiments)
        object.__setattr__(self, "lambda_size", template.lambda_size)
        object.__setattr__(self, "experiments", template.experiments)

    @classmethod
    def from_model(cls, m: OntModel) -> "ResponseTable":
        return cls(m.lambda_size, m.experiments)

    def model(self, preparations: Mapping[str, np.ndarray]) -> OntModel:
        return OntModel(self.lambda_size, preparations, self.experiments)


@dataclass
class _PrepSystem:
    name: str
    free: np.ndarray      # indices of ontic states that may carry weight
    A: np.ndarray         # independent statistic rows restricted to ``free`` (incl. normalisation)
    b: np.ndarray
    infeasible: bool = False
    residual: float = 0.0


class FitInfeasible(Exception):
    def __init__(self, prep: str, reason: str):
        super().__init__(f"preparation {prep!r}: {reason}")
        self.prep = prep
        self.reason = reason


def _statistic_rows(f: Fragment, responses: ResponseTable, prep: str):
    state = f.preparations[prep]
    rows, targets = [], []
    for ename, ex in f.experiments.items():
        if ename not in responses.experiments:
            raise KeyError(f"responses lack experiment {ename!r}")
        outcomes = dict(responses.experiments[ename])
        if sorted(outcomes) != sorted(ex.labels):
            raise KeyError(f"outcome labels of {ename!r} differ between responses and fragment")
        for lab in ex.labels:
            rows.append(outcomes[lab])
            targets.append(born_probability(state, ex, lab))
    L = responses.lambda_size
    return (np.array(rows).reshape(-1, L), np.array(targets))


def _presolve(f: Fragment, responses: ResponseTable, prep: str) -> _PrepSystem:
    R, t = _statistic_rows(f, responses, prep)
    L = responses.lambda_size
    blocked = np.zeros(L, dtype=bool)
    zero_rows = t <= ZERO_TARGET
    if zero_rows.any():
        blocked = np.any(R[zero_rows] > ZERO_RESPONSE, axis=0)
    free = np.flatnonzero(~blocked)
    if free.size == 0:
        return _PrepSystem(prep, free, np.zeros((0, 0)), np.zeros(0), True, 1.0)
    A = np.vstack([np.ones((1, free.size)), R[~zero_rows][:, free]])
    b = np.concatenate([[1.0], t[~zero_rows]])
    # keep a maximal independent set of rows, then check b lies in range(A)
    _, r_, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_)) if r_.size else np.zeros(0)
    rank = int(np.sum(diag > RANK_TOL * max(1.0, diag.max(initial=0.0))))
    keep = np.sort(piv[:rank])
    x_ls, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ x_ls - b)))
    sys_ = _PrepSystem(prep, free, A[keep], b[keep])
    if resid > TOL.lp_feasibility:
        sys_.infeasible = True
        sys_.residual = resid
    return sys_


def _solve_block(systems: Sequence[_PrepSystem], pairs: Sequence[tuple[str, str]], L: int):
    """One LP over the distributions in ``systems`` maximising summed pair overlaps."""
    offsets, n = {}, 0
    for s in systems:
        offsets[s.name] = n
        n += s.free.size
    pair_vars = []
    for a, b in pairs:
        sa = next(s for s in systems if s.name == a)
        sb = next(s for s in systems if s.name == b)
        shared = np.intersect1d(sa.free, sb.free)
        pair_vars.append((a, b, shared, n))
        n += shared.size
    if n == 0:
        raise FitInfeasible(systems[0].name, "no ontic state can carry weight")
    c = np.zeros(n)
    eq_rows = sum(s.A.shape[0] for s in systems)
    A_eq = np.zeros((eq_rows, n))
    b_eq = np.zeros(eq_rows)
    r = 0
    for s in systems:
        k = s.A.shape[0]
        A_eq[r:r + k, offsets[s.name]:offsets[s.name] + s.free.size] = s.A
        b_eq[r:r + k] = s.b
        r += k
    ub = []
    for a, b, shared, off in pair_vars:
        c[off:off + shared.size] = 1.0
        for name in (a, b):
            s = next(x for x in systems if x.name == name)
            pos = np.searchsorted(s.free, shared)
            for k in range(shared.size):
                row = np.zeros(n)
                row[off + k] = 1.0
                row[offsets[name] + pos[k]] = -1.0
                ub.append(row)
    A_ub = np.array(ub) if ub else None
    b_ub = np.zeros(len(ub)) if ub else None
    lp = LinearProgram(c, "max", A_eq, b_eq, A_ub, b_ub)
    sol = solve_lp(lp)
    if sol.status == INFEASIBLE:
        raise FitInfeasible(",".join(s.name for s in systems), "linear program infeasible")
    if sol.status != OPTIMAL:
        raise LpError(f"unexpected LP status {sol.status}")
    dists = {}
    for s in systems:
        p = np.zeros(L)
        vals = sol.values[offsets[s.name]:offsets[s.name] + s.free.size]
        p[s.free] = np.clip(vals, 0.0, None)
        dists[s.name] = p
    return dists, sol


def _fit(f: Fragment, responses: ResponseTable, pairs: Sequence[tuple[str, str]]):
    systems = {p: _presolve(f, responses, p) for p in f.preparations}
    for s in systems.values():
        if s.infeasible:
            raise FitInfeasible(s.name, f"statistics not in the span of the responses (residual {s.residual:.3g})")
    coupled = sorted({x for pair in pairs for x in pair}, key=list(f.preparations).index)
    dists = {}
    for name in f.preparations:
        if name not in coupled:
            d, _ = _solve_block([systems[name]], [], responses.lambda_size)
            dists.update(d)
    sol = None
    if coupled:
        d, sol = _solve_block([systems[n] for n in coupled], pairs, responses.lambda_size)
        dists.update(d)
    model = responses.model({name: dists[name] for name in f.preparations})
    rep = reproduces_fragment(model, f, 1e-8)
    if not rep.ok:
        raise LpError(f"fitted model misses the fragment by {rep.max_deviation:.3g}")
    return model, sol


def fit_preparations(f: Fragment, responses: ResponseTable) -> OntModel | None:
    """Distributions reproducing every statistic of ``f``, or ``None`` if none exist."""
    try:
        model, _ = _fit(f, responses, [])
    except FitInfeasible:
        return None
    return model


def max_overlap_fit(f: Fragment, responses: ResponseTable, prep_a: str, prep_b: str):
    """Model maximising the classical overlap of two preparations; returns ``(model, omega)``.

    Raises :class:`FitInfeasible` when no reproducing model exists.
    """
    if prep_a == prep_b:
        model, _ = _fit(f, responses, [])
        return model, 1.0
    model, sol = _fit(f, responses, [(prep_a, prep_b)])
    return model, float(sol.objective_value)


def max_total_overlap_fit(f: Fragment, responses: ResponseTable, pairs: Iterable[tuple[str, str]]):
    """Model maximising the summed overlaps over ``pairs``; returns ``(model, total)``."""
    pairs = [p for p in pairs if p[0] != p[1]]
    model, sol = _fit(f, responses, pairs)
    return model, (float(sol.objective_value) if sol is not None else 0.0)
