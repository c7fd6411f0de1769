"""Seeded scenario generators for the uninformativeness and independence checks.

Posterior-atom scenarios fix, for every ontic state, a product posterior
``p_a * q_b`` over the four choice pairs and a response vector, and leave
only the total weight ``T`` of each state free. Every such scenario passes
the uninformativeness check by construction, and both statistics and
overlaps are linear in ``T``, so the weights come from one LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..antidist import PBR_PAIR_ORDER, pbr_measurement
from ..lpopt import OPTIMAL, LinearProgram, ResponseTable, max_overlap_fit, solve_lp
from ..omodel import classical_overlap, qubit_direction_measurement
from ..qcore import KET0, KET_PLUS, Fragment, bloch_state, born_distribution, tensor
from .scenarios import (
    PAIR_KEYS,
    JointScenario,
    ProductJointScenario,
    check_independence,
    check_puc,
    pair_name,
    product_scenario,
)

PBR_LABELS = ("xi1", "xi2", "xi3", "xi4")


def pbr_fragment() -> Fragment:
    """The product quadruple keyed by choice pair, plus the antidistinguishing measurement as ``pbr``."""
    cert = pbr_measurement()
    preps = {pair_name(k): s for k, s in zip(PBR_PAIR_ORDER, cert.states)}
    return Fragment(4, preps, {"pbr": cert.experiment})


def _born_table(fragment: Fragment) -> np.ndarray:
    """Row r: outcome probabilities of the r-th choice pair; outcome k never fires on pair k."""
    (exp,) = fragment.experiments.values()
    return np.array([born_distribution(fragment.preparations[pair_name(k)], exp) for k in PAIR_KEYS])


@dataclass(frozen=True)
class PosteriorAtom:
    p: np.ndarray  # posterior over A's choice (psi, phi)
    q: np.ndarray  # posterior over B's choice
    response: np.ndarray  # outcome probabilities of the four-outcome experiment

    def pair_weights(self) -> np.ndarray:
        return np.outer(self.p, self.q).ravel()


def _side(rng, kind):
    if kind == "point":
        return np.eye(2)[rng.integers(2)]
    u = rng.uniform(0.15, 0.85)
    return np.array([u, 1 - u])


def random_atom(rng, kinds=("point", "full"), exact: bool = True, forced=None) -> PosteriorAtom:
    """Atom with random posterior shape; in exact mode responses vanish on outcomes precluding a supported pair."""
    ka, kb = forced or (rng.choice(kinds), rng.choice(kinds))
    if exact and ka == kb == "full":
        kb = "point"
    p, q = _side(rng, ka), _side(rng, kb)
    allowed = np.ones(4, dtype=bool)
    if exact:
        allowed = np.outer(p, q).ravel() == 0
    f = np.zeros(4)
    f[allowed] = rng.dirichlet(np.full(allowed.sum(), 0.7))
    return PosteriorAtom(p, q, f)


def canonical_atoms(born: np.ndarray) -> list[PosteriorAtom]:
    return [PosteriorAtom(np.eye(2)[r // 2], np.eye(2)[r % 2], born[r].copy()) for r in range(4)]


def atoms_to_scenario(atoms, T, tags=()) -> JointScenario:
    W = np.array([a.pair_weights() for a in atoms]).T * np.asarray(T)[None, :]
    R = np.array([a.response for a in atoms]).T
    preps = {k: W[r] for r, k in enumerate(PAIR_KEYS)}
    exps = {"pbr": tuple((lab, R[k]) for k, lab in enumerate(PBR_LABELS))}
    return JointScenario(len(atoms), preps, exps, tags)


def solve_atom_weights(atoms, born: np.ndarray | None, objective: np.ndarray, epsilon: float | None = None):
    """Maximise ``objective . T`` over atom weights.

    With ``born`` every choice pair reproduces its row exactly; with
    ``epsilon`` each outcome instead fires with probability at most
    ``epsilon`` on the pair it is meant to preclude. Returns ``T`` or None.
    """
    W = np.array([a.pair_weights() for a in atoms]).T  # 4 x n
    R = np.array([a.response for a in atoms]).T  # 4 x n
    n = W.shape[1]
    rows, rhs = [W], [np.ones(4)]
    A_ub = b_ub = None
    if born is not None:
        for k in range(3):  # the last outcome follows from normalisation
            rows.append(W * R[k][None, :])
            rhs.append(born[:, k])
    if epsilon is not None:
        A_ub = W * R  # row k: pair k's probability of outcome k
        b_ub = np.full(4, float(epsilon))
    lp = LinearProgram(np.asarray(objective, float), "max", np.vstack(rows), np.concatenate(rhs), A_ub, b_ub)
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        return None
    return np.clip(sol.values[:n], 0.0, None)


def _overlap_objective(atoms, pair_x: int, pair_y: int) -> np.ndarray:
    return np.array([min(a.pair_weights()[pair_x], a.pair_weights()[pair_y]) for a in atoms])


def puc_exact_scenario(seed: int, n_atoms: int = 32) -> JointScenario:
    """Uninformative scenario reproducing the antidistinguishing statistics exactly."""
    rng = np.random.default_rng(seed)
    born = _born_table(pbr_fragment())
    atoms = canonical_atoms(born)
    # point atoms with random admissible responses let the fit absorb what mixed atoms contribute
    for _ in range(3):
        atoms += [random_atom(rng, forced=("point", "point")) for _ in range(4)]
    while len(atoms) < n_atoms:
        atoms.append(random_atom(rng, forced=("full", "point") if rng.random() < 0.5 else ("point", "full")))
    c = np.array([rng.uniform(0.5, 1.5) if a.pair_weights().max() < 1 else 0.0 for a in atoms])
    T = solve_atom_weights(atoms, born, c)
    if T is None:  # canonical atoms alone are always feasible, so this means LP failure
        raise RuntimeError("atom-weight LP failed")
    return atoms_to_scenario(atoms, T, ("puc-exact", f"seed={seed}"))


def puc_epsilon_scenario(seed: int, epsilon: float = 0.01, n_atoms: int = 32) -> JointScenario:
    """Uninformative scenario whose experiment only nearly precludes, maximising one joint overlap.

    Even seeds maximise the (psi psi, phi phi) overlap, odd seeds the
    (psi phi, phi psi) overlap.
    """
    rng = np.random.default_rng(seed)
    born = _born_table(pbr_fragment())
    atoms = canonical_atoms(born) + [random_atom(rng, exact=False) for _ in range(n_atoms - 4)]
    # make sure some atoms can carry the targeted overlap at all
    for _ in range(4):
        atoms.append(random_atom(rng, exact=False, forced=("full", "full")))
    x, y = (0, 3) if seed % 2 == 0 else (1, 2)
    T = solve_atom_weights(atoms, None, _overlap_objective(atoms, x, y), epsilon)
    if T is None:
        raise RuntimeError("atom-weight LP failed")
    return atoms_to_scenario(atoms, T, ("puc-epsilon", f"seed={seed}", f"epsilon={epsilon!r}"))


def random_product_scenario(rng) -> ProductJointScenario:
    def local(n):
        p = rng.dirichlet(np.ones(n))
        p[rng.random(n) < 0.3] = 0.0
        if p.sum() == 0:
            p[rng.integers(n)] = 1.0
        return p / p.sum()

    la, lb = rng.integers(1, 7, size=2)
    return product_scenario({c: local(la) for c in ("psi", "phi")}, {c: local(lb) for c in ("psi", "phi")})


def random_disjoint_scenario(rng) -> JointScenario:
    L = int(rng.integers(4, 13))
    owner = np.concatenate([np.arange(4), rng.integers(0, 4, L - 4)])
    rng.shuffle(owner)
    preps = {}
    for r, k in enumerate(PAIR_KEYS):
        w = np.where(owner == r, rng.uniform(0.05, 1.0, L), 0.0)
        preps[k] = w / w.sum()
    return JointScenario(L, preps)


def _argmin_responses(joints: dict) -> tuple:
    """Each joint ontic state fires the outcome precluding whichever pair weighs least there."""
    W = np.vstack([joints[k].ravel() for k in PAIR_KEYS])
    which = np.argmin(W, axis=0)
    return tuple((lab, (which == k).astype(float)) for k, lab in enumerate(PBR_LABELS))


def pip_epsilon_scenario(seed: int, epsilon: float = 0.0025) -> ProductJointScenario:
    """Exchange-symmetric product scenario with local overlap as large as ``epsilon`` allows.

    Local psi and phi distributions share a common block of weight ``t``;
    responses fire the outcome whose precluded pair is least likely, and
    ``t`` is bisected to the largest value keeping the scenario's epsilon
    within budget.
    """
    rng = np.random.default_rng(seed)
    n_own = rng.integers(1, 4, size=2)
    n_shared = int(rng.integers(1, 4))
    L = int(n_own.sum()) + n_shared
    own_psi = np.zeros(L)
    own_psi[: n_own[0]] = rng.dirichlet(np.ones(n_own[0]))
    own_phi = np.zeros(L)
    own_phi[n_own[0]: n_own.sum()] = rng.dirichlet(np.ones(n_own[1]))
    sh_psi = np.zeros(L)
    sh_phi = np.zeros(L)
    sh_psi[n_own.sum():] = rng.dirichlet(np.ones(n_shared))
    sh_phi[n_own.sum():] = rng.dirichlet(np.ones(n_shared))

    def build(t):
        loc = {"psi": (1 - t) * own_psi + t * sh_psi, "phi": (1 - t) * own_phi + t * sh_phi}
        joints = {(a, b): np.outer(loc[a], loc[b]) for a, b in PAIR_KEYS}
        return ProductJointScenario(L, L, joints, {"pbr": _argmin_responses(joints)}, ("pip-epsilon", f"seed={seed}"))

    from .theorems import epsilon_of_experiment

    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = (lo + hi) / 2
        if epsilon_of_experiment(build(mid), "pbr") <= epsilon:
            lo = mid
        else:
            hi = mid
    return build(lo)


def _qubit_fragment() -> Fragment:
    exps = {
        "z": qubit_direction_measurement([0, 0, 1]),
        "x": qubit_direction_measurement([1, 0, 0]),
        "y": qubit_direction_measurement([0, 1, 0]),
    }
    return Fragment(2, {"psi": KET0, "phi": KET_PLUS}, exps)


def pbr_product_scenario(local_states, dists_a, dists_b, tags=()) -> ProductJointScenario:
    """Product scenario whose ontic states are pairs of qubit states, responding by the Born rule."""
    cert = pbr_measurement()
    n = len(local_states)
    resp = np.zeros((4, n, n))
    for i, x in enumerate(local_states):
        for j, y in enumerate(local_states):
            resp[:, i, j] = born_distribution(tensor(x, y), cert.experiment)
    exps = {"pbr": tuple((lab, resp[k].ravel()) for k, lab in enumerate(cert.experiment.labels))}
    return product_scenario(dists_a, dists_b, exps, tags)


def canonical_pbr_scenario() -> ProductJointScenario:
    local = {"psi": np.array([1.0, 0.0]), "phi": np.array([0.0, 1.0])}
    return pbr_product_scenario([KET0, KET_PLUS], local, local, ("canonical",))


def lp_fitted_pip_scenario(seed: int, n_random: int = 6) -> ProductJointScenario:
    """Exchange-symmetric product scenario whose local distributions come from an overlap-maximising fit.

    Local ontic states are qubit states (psi, phi and random ones) responding
    to z, x and y measurements by the Born rule.
    """
    rng = np.random.default_rng(seed)
    states = [KET0, KET_PLUS] + [bloch_state(v) for v in rng.normal(size=(n_random, 3))]
    order = rng.permutation(len(states))
    states = [states[i] for i in order]
    frag = _qubit_fragment()
    table = ResponseTable(
        len(states),
        {
            e: tuple((lab, np.array([born_distribution(s, ex)[k] for s in states])) for k, lab in enumerate(ex.labels))
            for e, ex in frag.experiments.items()
        },
    )
    model, _ = max_overlap_fit(frag, table, "psi", "phi")
    local = {c: model.distribution(c) for c in ("psi", "phi")}
    return pbr_product_scenario(states, local, local, ("lp-fitted", f"seed={seed}"))


def diagonal_embedding(js: JointScenario) -> ProductJointScenario:
    """Place ontic state ``i`` at ``(i, i)``; off-diagonal cells carry no weight and respond uniformly."""
    L = js.lambda_size
    joints = {k: np.diag(v) for k, v in js.prep_pairs.items()}
    exps = {}
    for name, outcomes in js.experiments.items():
        n_out = len(outcomes)
        exps[name] = tuple((lab, (np.full((L, L), 1.0 / n_out) * (1 - np.eye(L)) + np.diag(r)).ravel()) for lab, r in outcomes)
    return ProductJointScenario(L, L, joints, exps, js.tags + ("diagonal-embedding",))


@dataclass
class GapResult:
    scenario: ProductJointScenario
    omega: float
    seed: int
    puc_violation: float
    independence_violation: float
    reproduction_error: float


def search_puc_nca_gap(fragment: Fragment | None = None, lambda_size: int = 24, seeds=range(8)) -> GapResult | None:
    """Look for an uninformative scenario where psi psi and psi phi overlap.

    Atoms are biased towards the shape that can carry that overlap (A
    pinned to psi, B undecided). The weights maximise the overlap under
    exact reproduction. Candidates must pass the uninformativeness check
    and reproduce the fragment within 1e-9. The best one is returned,
    embedded diagonally into a product ontic space, or None if nothing
    qualifies. No optimality is claimed.
    """
    from .theorems import reproduction_error

    if not 4 < lambda_size <= 32:
        raise ValueError("lambda_size must be in (4, 32]")
    fragment = fragment or pbr_fragment()
    born = _born_table(fragment)
    cert = pbr_measurement()
    best = None
    for seed in seeds:
        rng = np.random.default_rng(seed)
        atoms = canonical_atoms(born)
        while len(atoms) < lambda_size:
            if rng.random() < 0.4:
                p = np.array([1.0, 0.0])
                u = rng.uniform(0.2, 0.8)
                q = np.array([u, 1 - u])
                f = np.zeros(4)
                f[2:] = rng.dirichlet([0.7, 0.7])
                atoms.append(PosteriorAtom(p, q, f))
            else:
                atoms.append(random_atom(rng))
        T = solve_atom_weights(atoms, born, _overlap_objective(atoms, 0, 1))
        if T is None:
            continue
        js = atoms_to_scenario(atoms, T, ("puc-nca-gap", f"seed={seed}"))
        keep = np.flatnonzero(js.weights().sum(axis=0) > 0)
        js = JointScenario(
            keep.size,
            {k: v[keep] for k, v in js.prep_pairs.items()},
            {e: tuple((lab, r[keep]) for lab, r in outs) for e, outs in js.experiments.items()},
            js.tags,
        )
        puc = check_puc(js, 1e-9)
        err = reproduction_error(js, "pbr", cert)
        if not puc.ok or err > 1e-9:
            continue
        omega = classical_overlap(js.prep_pairs[("psi", "psi")], js.prep_pairs[("psi", "phi")])
        if best is None or omega > best.omega:
            prod = diagonal_embedding(js)
            best = GapResult(prod, omega, int(seed), puc.worst, check_independence(prod).worst, err)
    return best
