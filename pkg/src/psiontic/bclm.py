"""Overlap bound for a state surrounded by d^2 states built from mutually unbiased bases.

A reference state ``phi`` is taken from one of five mutually unbiased bases
in dimension 4 and the family is the 16 vectors of the other four bases.
Same-basis family members are orthogonal; cross-basis members form
antidistinguishable triples with ``phi``. In any model reproducing those
statistics the 16 overlaps with ``phi`` come from disjoint regions of the
ontic space, so they sum to at most one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .antidist import AntidistCertificate, search_antidist, squared_overlaps, triple_criterion
from .omodel import OntModel, classical_overlap, reproduces_fragment
from .qcore import Experiment, Fragment, PureState, born_distribution, inner_product, quantum_overlap

_I = np.eye(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0, -1.0]).astype(complex)

# each pair generates a maximal commuting set; together they partition the 15 non-identity Paulis
_PAULI_PAIRS = [
    (np.kron(_Z, _I), np.kron(_I, _Z)),
    (np.kron(_X, _I), np.kron(_I, _X)),
    (np.kron(_Y, _I), np.kron(_I, _Y)),
    (np.kron(_X, _Y), np.kron(_Y, _Z)),
    (np.kron(_Y, _X), np.kron(_Z, _Y)),
]


@dataclass(frozen=True, eq=False)
class MubSet:
    dim: int
    bases: tuple

    def __post_init__(self):
        for basis in self.bases:
            G = np.array([[inner_product(u, v) for v in basis] for u in basis])
            if np.max(np.abs(G - np.eye(self.dim))) > 1e-10:
                raise ValueError("basis is not orthonormal")
        target = 1 / math.sqrt(self.dim)
        for b1, b2 in itertools.combinations(self.bases, 2):
            for u in b1:
                for v in b2:
                    if abs(abs(inner_product(u, v)) - target) > 1e-10:
                        raise ValueError("bases are not mutually unbiased")

    def vectors(self) -> list[PureState]:
        return [v for b in self.bases for v in b]


def mubs_d4() -> MubSet:
    """Five mutually unbiased bases of C^4 as joint eigenbases of commuting Pauli pairs."""
    bases = []
    for A, B in _PAULI_PAIRS:
        # A + 2B has four distinct eigenvalues, so its eigenvectors are the joint ones
        _, vecs = np.linalg.eigh(A + 2 * B)
        basis = []
        for col in vecs.T:
            j = int(np.argmax(np.abs(col) > 1e-9))
            basis.append(PureState(col * abs(col[j]) / col[j]))
        bases.append(tuple(basis))
    return MubSet(4, tuple(bases))


@dataclass(frozen=True, eq=False)
class PairEvidence:
    """Why two family members, together with phi, cannot share ontic support."""

    kind: str  # "orthogonal" or "triple"
    squared_overlaps: tuple = ()
    criterion: bool | None = None
    certificate: AntidistCertificate | None = None

    @property
    def warning(self) -> bool:
        return self.kind == "triple" and self.certificate is None


@dataclass(frozen=True, eq=False)
class BclmFamily:
    phi: PureState
    psis: tuple
    names: tuple
    pair_evidence: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.phi.dim

    def certified_fraction(self) -> float:
        triples = [e for e in self.pair_evidence.values() if e.kind == "triple"]
        if not triples:
            return 1.0
        return sum(e.certificate is not None for e in triples) / len(triples)


def construct_family(
    phi_basis_index: int = 0,
    phi_vector_index: int = 0,
    search: bool = True,
    seed: int = 0,
    mubs: MubSet | None = None,
) -> BclmFamily:
    mubs = mubs or mubs_d4()
    d = mubs.dim
    if not (0 <= phi_basis_index < len(mubs.bases) and 0 <= phi_vector_index < d):
        raise IndexError("phi index out of range")
    phi = mubs.bases[phi_basis_index][phi_vector_index]
    others = [b for k, b in enumerate(mubs.bases) if k != phi_basis_index]
    psis, names, group = [], [], []
    for bi, basis in enumerate(others):
        for vi, v in enumerate(basis):
            psis.append(v)
            names.append(f"psi{bi}{vi}")
            group.append(bi)
    for i, psi in enumerate(psis):
        if abs(abs(inner_product(phi, psi)) - 1 / math.sqrt(d)) > 1e-10:
            raise ValueError(f"family member {names[i]} has the wrong overlap with phi")
    evidence = {}
    for i, j in itertools.combinations(range(len(psis)), 2):
        if group[i] == group[j]:
            if abs(inner_product(psis[i], psis[j])) > 1e-10:
                raise ValueError(f"pair {(i, j)} from one basis is not orthogonal")
            evidence[(i, j)] = PairEvidence("orthogonal")
            continue
        triple = (phi, psis[i], psis[j])
        sq = squared_overlaps(*triple)
        if not triple_criterion(*sq):
            raise ValueError(f"pair {(i, j)} fails the triple criterion with overlaps {sq}")
        cert = search_antidist(triple, max_iters=2000, tol=1e-10, seed=seed + i * 16 + j, restarts=3) if search else None
        evidence[(i, j)] = PairEvidence("triple", sq, True, cert)
    return BclmFamily(phi, tuple(psis), tuple(names), evidence)


def family_fragment(fam: BclmFamily) -> Fragment:
    """The statistics the overlap bound relies on.

    One three-outcome experiment per certified cross-basis pair (outcome
    ``x0`` never fires on phi, ``x1`` on the first member, ``x2`` on the
    second) and the shared basis measurement for each same-basis group.
    """
    preps = {"phi": fam.phi}
    preps.update(zip(fam.names, fam.psis))
    exps = {}
    for (i, j), ev in fam.pair_evidence.items():
        if ev.certificate is not None:
            exps[f"tri_{fam.names[i]}_{fam.names[j]}"] = ev.certificate.experiment
    groups: dict[str, list[int]] = {}
    for k, name in enumerate(fam.names):
        groups.setdefault(name[:-1], []).append(k)
    for g, members in groups.items():
        if len(members) == fam.dim:
            exps[f"basis_{g}"] = Experiment.from_basis([fam.psis[k] for k in members])
    return Fragment(fam.dim, preps, exps)


@dataclass(frozen=True)
class BoundArithmetic:
    d: int
    omega_q: float
    mean_bound: float
    ratio_coefficient: float

    @property
    def identity_residual(self) -> float:
        return abs(self.mean_bound - self.ratio_coefficient * self.omega_q)


def bound_arithmetic(d: int) -> BoundArithmetic:
    """Mean-overlap ceiling 1/d^2 restated as a multiple of the quantum overlap 1 - sqrt(1 - 1/d)."""
    if d < 4:
        raise ValueError("the bound needs dimension at least 4")
    root = math.sqrt(1 - 1 / d)
    return BoundArithmetic(d, 1 - root, 1 / d**2, (1 + root) / d)


@dataclass
class AuditResult:
    omega_bar: float
    overlaps: np.ndarray
    min_index: int
    min_omega: float
    min_ratio: float
    mean_bound: float
    ratio_coefficient: float
    mean_ok: bool
    min_ok: bool
    rows: list

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.min_ok


CSV_HEADER = ("pair_index", "name", "omega", "omega_q", "ratio", "evidence")


def audit_model(m: OntModel, fam: BclmFamily, tol: float = 1e-8) -> AuditResult:
    """Overlaps of phi with each family member in a model reproducing the family fragment."""
    rep = reproduces_fragment(m, family_fragment(fam), tol)
    if not rep.ok:
        raise ValueError(f"model does not reproduce the family fragment (max deviation {rep.max_deviation:.3g})")
    d = fam.dim
    arith = bound_arithmetic(d)
    p_phi = m.distribution("phi")
    overlaps = np.array([classical_overlap(p_phi, m.distribution(n)) for n in fam.names])
    omega_q = np.array([quantum_overlap(fam.phi, s) for s in fam.psis])
    ratio = overlaps / omega_q
    k = int(np.argmin(overlaps))
    omega_bar = float(np.mean(overlaps))
    rows = []
    for i, name in enumerate(fam.names):
        evs = [ev for pair, ev in fam.pair_evidence.items() if i in pair and ev.kind == "triple"]
        kind = "certificate" if all(ev.certificate is not None for ev in evs) else "criterion"
        rows.append((i, name, float(overlaps[i]), float(omega_q[i]), float(ratio[i]), kind))
    return AuditResult(
        omega_bar=omega_bar,
        overlaps=overlaps,
        min_index=k,
        min_omega=float(overlaps[k]),
        min_ratio=float(ratio[k]),
        mean_bound=arith.mean_bound,
        ratio_coefficient=arith.ratio_coefficient,
        mean_ok=omega_bar <= arith.mean_bound + tol,
        min_ok=bool(overlaps[k] < arith.ratio_coefficient * omega_q[k]),
        rows=rows,
    )


def random_response_family(fam: BclmFamily, seed: int, n_noise: int = 4):
    """Response functions admitting a model where phi overlaps every family member.

    Returns ``(ResponseTable, planted_model)``. The planted model puts weight
    ``w_i`` of both phi and member i on a shared ontic state; the remainder of
    each preparation sits on an adjusted state whose responses make the
    statistics come out right. Weights are halved until every response is
    valid. A few random noise states are appended for the fit to use or
    ignore.
    """
    from .lpopt import ResponseTable

    frag = family_fragment(fam)
    rng = np.random.default_rng(seed)
    exps = list(frag.experiments.items())
    born = {p: {e: born_distribution(s, ex) for e, ex in exps} for p, s in frag.preparations.items()}
    n = len(fam.psis)

    shared = []
    for name in fam.names:
        f = {}
        for e, _ in exps:
            lo = np.minimum(born["phi"][e], born[name][e])
            lo = np.where(lo > 1e-12, lo, 0.0)
            mix = lo * rng.uniform(0.2, 1.0, size=lo.size)
            f[e] = mix / mix.sum()
        shared.append(f)

    w = rng.uniform(0.2, 1.0, size=n)
    w = w / w.sum() * rng.uniform(0.5, 0.95)
    for _ in range(60):
        adj_phi = {e: (born["phi"][e] - sum(w[i] * shared[i][e] for i in range(n))) / (1 - w.sum()) for e, _ in exps}
        adj_psi = [
            {e: (born[name][e] - w[i] * shared[i][e]) / (1 - w[i]) for e, _ in exps}
            for i, name in enumerate(fam.names)
        ]
        if all(np.all(v >= 0) for v in adj_phi.values()) and all(
            np.all(v >= 0) for a in adj_psi for v in a.values()
        ):
            break
        w = w / 2
    else:
        raise RuntimeError("could not build valid adjusted responses")

    columns = []  # one response dict per ontic state
    columns += [{e: born[p][e] for e, _ in exps} for p in frag.preparations]  # canonical states
    columns += shared
    columns.append(adj_phi)
    columns += adj_psi
    for _ in range(n_noise):
        columns.append({e: rng.dirichlet(np.ones(len(ex.labels))) for e, ex in exps})
    L = len(columns)
    experiments = {
        e: tuple((lab, np.clip(np.array([col[e][k] for col in columns]), 0.0, 1.0)) for k, lab in enumerate(ex.labels))
        for e, ex in exps
    }
    table = ResponseTable(L, experiments)

    n_prep = len(frag.preparations)
    s0 = n_prep
    a0 = s0 + n
    preps = {}
    p = np.zeros(L)
    p[s0:s0 + n] = w
    p[a0] = 1 - w.sum()
    preps["phi"] = p
    for i, name in enumerate(fam.names):
        p = np.zeros(L)
        p[s0 + i] = w[i]
        p[a0 + 1 + i] = 1 - w[i]
        preps[name] = p
    return table, table.model(preps)


def fitted_audit_model(fam: BclmFamily, seed: int) -> OntModel:
    """Maximise the summed phi/member overlaps over a random response family."""
    from .lpopt import max_total_overlap_fit

    table, _ = random_response_family(fam, seed)
    model, _ = max_total_overlap_fit(family_fragment(fam), table, [("phi", n) for n in fam.names])
    return model
