"""Arrays of N subsystems, each prepared in one of two states.

Every pair of subsystems has a joint experiment that antidistinguishes its
four choice combinations. If each pair also keeps preparations
uninformative, an ontic state can leave at most one subsystem's choice
undetermined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..antidist import pbr_measurement
from ..omodel import OntModel
from ..qcore import born_distribution
from .scenarios import CHOICES, ArrayScenario, JointScenario, PreconditionError, check_puc

DETERMINED = 1 - 1e-9


def pbr_pair_probabilities() -> np.ndarray:
    cert = pbr_measurement()
    return np.array([born_distribution(s, cert.experiment) for s in cert.states])


def _pair_index(bits: str, i: int, j: int) -> int:
    return 2 * int(bits[i]) + int(bits[j])


def _pair_name(i: int, j: int) -> str:
    return f"pbr_{i}_{j}"


def _build(n: int, columns: list[dict], preps: dict) -> ArrayScenario:
    """``columns[l][(i, j)]`` is the response vector of ontic state l on pair (i, j)."""
    pairs = list(itertools.combinations(range(n), 2))
    exps = {
        _pair_name(i, j): tuple(
            (f"o{k}", np.array([col[(i, j)][k] for col in columns])) for k in range(4)
        )
        for i, j in pairs
    }
    model = OntModel(len(columns), preps, exps)
    return ArrayScenario(n, model, {(i, j): _pair_name(i, j) for i, j in pairs}, pbr_pair_probabilities())


def canonical_array(n: int) -> ArrayScenario:
    """One ontic state per bitstring, answering every pair experiment by the Born rule."""
    born = pbr_pair_probabilities()
    bitstrings = ["".join(b) for b in itertools.product("01", repeat=n)]
    columns = [
        {(i, j): born[_pair_index(b, i, j)] for i, j in itertools.combinations(range(n), 2)} for b in bitstrings
    ]
    preps = {b: np.eye(len(bitstrings))[k] for k, b in enumerate(bitstrings)}
    return _build(n, columns, preps)


def shared_state_array(n: int, shared: list[str], weight: float = 0.2) -> ArrayScenario:
    """Canonical array plus one ontic state carrying ``weight`` of every bitstring in ``shared``.

    On each pair the shared state's response is uniform over the outcomes
    not precluding any value combination the shared bitstrings take there,
    so no precluded outcome ever fires. Each shared bitstring keeps the
    rest of its weight on an adjusted state that restores the Born
    statistics; ``weight`` is halved until those responses are valid.
    """
    born = pbr_pair_probabilities()
    pairs = list(itertools.combinations(range(n), 2))
    bitstrings = ["".join(b) for b in itertools.product("01", repeat=n)]
    star = {}
    for i, j in pairs:
        blocked = {_pair_index(b, i, j) for b in shared}
        f = np.array([0.0 if k in blocked else 1.0 for k in range(4)])
        if f.sum() == 0:
            raise ValueError(f"shared bitstrings take every value combination on pair {(i, j)}")
        star[(i, j)] = f / f.sum()
    w = weight
    while True:
        adjusted = {
            b: {(i, j): (born[_pair_index(b, i, j)] - w * star[(i, j)]) / (1 - w) for i, j in pairs} for b in shared
        }
        if all(np.all(v >= 0) for a in adjusted.values() for v in a.values()):
            break
        w /= 2
        if w < 1e-6:
            raise ValueError("no valid adjusted responses")
    columns = [star] + [adjusted[b] for b in shared]
    others = [b for b in bitstrings if b not in shared]
    columns += [{(i, j): born[_pair_index(b, i, j)] for i, j in pairs} for b in others]
    L = len(columns)
    preps = {}
    for k, b in enumerate(shared):
        p = np.zeros(L)
        p[0] = w
        p[1 + k] = 1 - w
        preps[b] = p
    for k, b in enumerate(others):
        preps[b] = np.eye(L)[1 + len(shared) + k]
    return _build(n, columns, preps)


def one_undetermined_array(n: int, weight: float = 0.2) -> ArrayScenario:
    """All-psi and its first-bit flip share an ontic state, which leaves subsystem 0 open."""
    return shared_state_array(n, ["0" * n, "1" + "0" * (n - 1)], weight)


def pair_marginal_scenario(s: ArrayScenario, i: int, j: int) -> JointScenario:
    """Two-subsystem scenario for pair (i, j), averaging over the other subsystems' choices."""
    preps = {}
    for a, b in itertools.product("01", repeat=2):
        members = [bs for bs in s.bitstrings() if bs[i] == a and bs[j] == b]
        preps[(CHOICES[int(a)], CHOICES[int(b)])] = np.mean([s.model.distribution(bs) for bs in members], axis=0)
    name = s.pair_experiments[(i, j)]
    return JointScenario(s.lambda_size, preps, {name: s.model.experiments[name]})


def array_reproduction_error(s: ArrayScenario) -> float:
    worst = 0.0
    for (i, j), name in s.pair_experiments.items():
        R = s.model.response_matrix(name)
        for bs in s.bitstrings():
            dev = np.abs(R @ s.model.distribution(bs) - s.pair_probabilities[_pair_index(bs, i, j)])
            worst = max(worst, float(dev.max()))
    return worst


@dataclass
class DeterminationReport:
    n: int
    rows: list = field(default_factory=list)  # (ontic index, undetermined subsystems, determined fraction)
    max_undetermined: int = 0
    min_fraction: float = 1.0

    @property
    def lower_bound(self) -> float:
        return (self.n - 1) / self.n

    @property
    def passed(self) -> bool:
        return self.max_undetermined <= 1


def n_array_determination(s: ArrayScenario, tol: float = 1e-9) -> DeterminationReport:
    """Which subsystems each ontic state leaves undetermined.

    Premises: every pair experiment is reproduced within ``tol`` and every
    pair-marginal scenario is uninformative. A failed premise raises
    :class:`PreconditionError`. Posteriors use a uniform prior over all
    bitstrings; a subsystem is determined when its marginal posterior puts
    at least ``1 - 1e-9`` on one choice.
    """
    err = array_reproduction_error(s)
    if err > tol:
        raise PreconditionError("reproduction", f"pair statistics off by {err:.3g}")
    for i, j in s.pair_experiments:
        puc = check_puc(pair_marginal_scenario(s, i, j), tol)
        if not puc.ok:
            raise PreconditionError("pairwise_puc", f"pair {(i, j)} violation {puc.worst:.3g}")
    bits = s.bitstrings()
    W = np.vstack([s.model.distribution(b) for b in bits])
    B = np.array([[int(c) for c in b] for b in bits])  # 2^n x n
    total = W.sum(axis=0)
    report = DeterminationReport(s.n_subsystems)
    for lam in np.flatnonzero(total > 0):
        post = W[:, lam] / total[lam]
        p_phi = B.T @ post
        determined = np.maximum(p_phi, 1 - p_phi) >= DETERMINED
        undetermined = tuple(int(k) for k in np.flatnonzero(~determined))
        frac = 1 - len(undetermined) / s.n_subsystems
        report.rows.append((int(lam), undetermined, frac))
        report.max_undetermined = max(report.max_undetermined, len(undetermined))
        report.min_fraction = min(report.min_fraction, frac)
    return report


@dataclass
class ExtendibilityReport:
    mismatch: dict = field(default_factory=dict)  # (N, N + 1) -> largest pair-statistic deviation
    fractions: dict = field(default_factory=dict)  # N -> smallest determined fraction, or None
    lower_bounds: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    tol: float = 1e-9

    @property
    def consistent(self) -> bool:
        return not self.errors and all(v <= self.tol for v in self.mismatch.values())


def _pair_statistics(s: ArrayScenario, subset, bits_on_subset: str, a: int, b: int) -> np.ndarray:
    """Pair (subset[a], subset[b]) statistics, averaged over the choices outside ``subset``."""
    n = s.n_subsystems
    rest = [k for k in range(n) if k not in subset]
    name = s.pair_experiments[(subset[a], subset[b])]
    R = s.model.response_matrix(name)
    out = []
    for fill in itertools.product("01", repeat=len(rest)):
        full = ["0"] * n
        for pos, c in zip(subset, bits_on_subset):
            full[pos] = c
        for pos, c in zip(rest, fill):
            full[pos] = c
        out.append(R @ s.model.distribution("".join(full)))
    return np.mean(out, axis=0)


def extendibility_probe(generator: Callable[[int], ArrayScenario], n_max: int, n_min: int = 2, tol: float = 1e-9):
    """Compare each N-scenario with every N-subsystem restriction of the (N+1)-scenario.

    Comparison is on the operational content, the pair-experiment
    statistics, since the two scenarios need not share an ontic space.
    """
    if not 2 <= n_min <= n_max <= 6:
        raise ValueError("need 2 <= n_min <= n_max <= 6")
    report = ExtendibilityReport(tol=tol)
    scen = {}
    for n in range(n_min, n_max + 1):
        try:
            scen[n] = generator(n)
        except Exception as exc:  # a broken generator is a finding, not a crash
            report.errors[n] = f"generator failed: {exc}"
            continue
        if scen[n].n_subsystems != n:
            report.errors[n] = f"generator returned {scen[n].n_subsystems} subsystems"
            del scen[n]
            continue
        report.lower_bounds[n] = (n - 1) / n
        try:
            report.fractions[n] = n_array_determination(scen[n], tol).min_fraction
        except PreconditionError as exc:
            report.fractions[n] = None
            report.errors[n] = str(exc)
    for n in range(n_min, n_max):
        if n not in scen or n + 1 not in scen:
            continue
        small, big = scen[n], scen[n + 1]
        worst = 0.0
        for subset in itertools.combinations(range(n + 1), n):
            for a, b in itertools.combinations(range(n), 2):
                R = small.model.response_matrix(small.pair_experiments[(a, b)])
                for bits in small.bitstrings():
                    ref = R @ small.model.distribution(bits)
                    got = _pair_statistics(big, subset, bits, a, b)
                    worst = max(worst, float(np.max(np.abs(ref - got))))
        report.mismatch[(n, n + 1)] = worst
    return report
