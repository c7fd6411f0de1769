"""Bipartite and N-partite preparation scenarios and the independence-style checks on them.

Preparation choices are two-valued per subsystem. In bipartite scenarios
they are keyed by ``(a, b)`` label pairs, by default drawn from
``("psi", "phi")``. Posteriors always use a uniform prior over the choices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from ..omodel import OntModel, ontologically_distinct

CHOICES = ("psi", "phi")
PAIR_KEYS = tuple(itertools.product(CHOICES, CHOICES))


class PreconditionError(ValueError):
    """A verifier's premise does not hold, so it makes no claim."""

    def __init__(self, precondition: str, detail: str = ""):
        super().__init__(f"{precondition} failed" + (f": {detail}" if detail else ""))
        self.precondition = precondition


def pair_name(key: tuple[str, str]) -> str:
    return f"{key[0]},{key[1]}"


def parse_pair_name(name: str) -> tuple[str, str]:
    parts = name.split(",")
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"preparation key {name!r} is not of the form 'a,b'")
    return parts[0], parts[1]


def _side_choices(keys: Sequence[tuple[str, str]]):
    a_vals = list(dict.fromkeys(k[0] for k in keys))
    b_vals = list(dict.fromkeys(k[1] for k in keys))
    if len(a_vals) != 2 or len(b_vals) != 2 or set(keys) != set(itertools.product(a_vals, b_vals)):
        raise ValueError("preparations must cover all four pairs of two choices per side")
    return tuple(a_vals), tuple(b_vals)


@dataclass(frozen=True, eq=False)
class JointScenario:
    """Four preparation-pair distributions over one joint ontic space, with no product structure."""

    lambda_size: int
    prep_pairs: Mapping[tuple, np.ndarray]
    experiments: Mapping[str, tuple] = field(default_factory=dict)
    tags: tuple = ()

    def __post_init__(self):
        pairs = {tuple(k): v for k, v in self.prep_pairs.items()}
        _side_choices(list(pairs))
        m = OntModel(self.lambda_size, {pair_name(k): v for k, v in pairs.items()}, self.experiments)
        object.__setattr__(self, "prep_pairs", {k: m.distribution(pair_name(k)) for k in pairs})
        object.__setattr__(self, "experiments", m.experiments)
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "_model", m)

    def __eq__(self, other):
        if not isinstance(other, JointScenario):
            return NotImplemented
        return self.model == other.model and list(self.prep_pairs) == list(other.prep_pairs) and self.tags == other.tags

    @property
    def choices(self):
        return _side_choices(list(self.prep_pairs))

    @property
    def model(self) -> OntModel:
        return self._model

    def weights(self) -> np.ndarray:
        """Rows in ``self.keys()`` order."""
        return np.vstack([self.prep_pairs[k] for k in self.keys()])

    def keys(self) -> list[tuple[str, str]]:
        a_vals, b_vals = self.choices
        return list(itertools.product(a_vals, b_vals))

    def outcome_probabilities(self, experiment: str) -> dict[tuple, np.ndarray]:
        if experiment not in self.experiments:
            raise KeyError(f"unknown experiment {experiment!r}")
        R = self.model.response_matrix(experiment)
        return {k: R @ self.prep_pairs[k] for k in self.keys()}


@dataclass(frozen=True, eq=False)
class ProductJointScenario:
    """Joint distributions over pairs (lambda_A, lambda_B); flattened index is ``i_a * lambda_b_size + i_b``."""

    lambda_a_size: int
    lambda_b_size: int
    joints: Mapping[tuple, np.ndarray]
    experiments: Mapping[str, tuple] = field(default_factory=dict)
    tags: tuple = ()

    def __post_init__(self):
        shape = (int(self.lambda_a_size), int(self.lambda_b_size))
        joints = {}
        for k, v in self.joints.items():
            arr = np.array(v, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"joint {k} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            joints[tuple(k)] = arr
        _side_choices(list(joints))
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "tags", tuple(self.tags))
        flat = JointScenario(shape[0] * shape[1], {k: v.ravel() for k, v in joints.items()}, self.experiments, self.tags)
        object.__setattr__(self, "experiments", flat.experiments)
        object.__setattr__(self, "_flat", flat)

    def __eq__(self, other):
        if not isinstance(other, ProductJointScenario):
            return NotImplemented
        return (
            (self.lambda_a_size, self.lambda_b_size) == (other.lambda_a_size, other.lambda_b_size)
            and self.flatten() == other.flatten()
        )

    def flatten(self) -> JointScenario:
        return self._flat

    @property
    def choices(self):
        return _side_choices(list(self.joints))

    def marginal_a(self, key) -> np.ndarray:
        return self.joints[tuple(key)].sum(axis=1)

    def marginal_b(self, key) -> np.ndarray:
        return self.joints[tuple(key)].sum(axis=0)

    def local_distributions(self):
        """Subsystem distributions ``({a: P^A_a}, {b: P^B_b})``, averaging over the other side's choice."""
        a_vals, b_vals = self.choices
        pa = {a: np.mean([self.marginal_a((a, b)) for b in b_vals], axis=0) for a in a_vals}
        pb = {b: np.mean([self.marginal_b((a, b)) for a in a_vals], axis=0) for b in b_vals}
        return pa, pb

    def is_exchange_symmetric(self, tol: float = 1e-12) -> bool:
        if self.lambda_a_size != self.lambda_b_size:
            return False
        a_vals, b_vals = self.choices
        if a_vals != b_vals:
            return False
        return all(
            np.max(np.abs(self.joints[(a, b)] - self.joints[(b, a)].T)) <= tol for a in a_vals for b in b_vals
        )


class CheckResult(NamedTuple):
    ok: bool
    worst: float
    where: object = None


def posteriors(s: JointScenario) -> tuple[np.ndarray, np.ndarray]:
    """Posterior over the four choice pairs at each ontic state with positive weight.

    Returns ``(post, idx)``: ``post[:, j]`` is the posterior at ``idx[j]``,
    rows ordered as ``s.keys()`` (a-major).
    """
    W = s.weights()
    total = W.sum(axis=0)
    idx = np.flatnonzero(total > 0)
    return W[:, idx] / total[idx], idx


def check_puc(s: JointScenario, tol: float = 1e-9) -> CheckResult:
    """Telling one side's choice must not change the odds of the other's.

    At every ontic state with positive weight the uniform-prior posterior
    over choice pairs must equal the product of its two marginals.
    """
    post, idx = posteriors(s)
    if idx.size == 0:
        return CheckResult(True, 0.0)
    P = post.reshape(2, 2, -1)
    prod = P.sum(axis=1)[:, None, :] * P.sum(axis=0)[None, :, :]
    dev = np.abs(P - prod).max(axis=(0, 1))
    j = int(np.argmax(dev))
    worst = float(dev[j])
    return CheckResult(worst <= tol, worst, int(idx[j]))


def determined_sides(s: JointScenario, threshold: float = 1 - 1e-9):
    """Per positive-weight ontic state: whether the posterior pins down side A and side B."""
    post, idx = posteriors(s)
    P = post.reshape(2, 2, -1)
    a_det = P.sum(axis=1).max(axis=0) >= threshold
    b_det = P.sum(axis=0).max(axis=0) >= threshold
    return idx, a_det, b_det


def phi_plus_example(disentangled: bool = False) -> JointScenario:
    """Both parties act with identity or bit flip on a shared maximally entangled pair.

    Matched choices leave the same state and so share an ontic state, as
    do mismatched ones. With ``disentangled`` the four choices lead to four
    distinct product states and hence four disjoint ontic states.
    """
    keys = [("I", "I"), ("I", "X"), ("X", "I"), ("X", "X")]
    if disentangled:
        preps = {k: np.eye(4)[i] for i, k in enumerate(keys)}
        exps = {"which": tuple((f"{a}{b}", np.eye(4)[i]) for i, (a, b) in enumerate(keys))}
        return JointScenario(4, preps, exps, ("local-state-preparation",))
    even, odd = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    preps = {("I", "I"): even, ("X", "X"): even, ("I", "X"): odd, ("X", "I"): odd}
    exps = {"parity": (("even", even.copy()), ("odd", odd.copy()))}
    return JointScenario(2, preps, exps, ("not-local-state-preparation",))


def check_opi(s: ProductJointScenario, tol: float = 1e-9) -> CheckResult:
    """Each side's marginal must not depend on the other side's choice."""
    a_vals, b_vals = s.choices
    worst, where = 0.0, None
    for a in a_vals:
        dev = float(np.max(np.abs(s.marginal_a((a, b_vals[0])) - s.marginal_a((a, b_vals[1])))))
        if dev > worst:
            worst, where = dev, ("A", a)
    for b in b_vals:
        dev = float(np.max(np.abs(s.marginal_b((a_vals[0], b)) - s.marginal_b((a_vals[1], b)))))
        if dev > worst:
            worst, where = dev, ("B", b)
    return CheckResult(worst <= tol, worst, where)


def check_independence(s: ProductJointScenario, tol: float = 1e-9) -> CheckResult:
    """Each joint distribution must equal the product of its marginals."""
    worst, where = 0.0, None
    for k, J in s.joints.items():
        dev = float(np.max(np.abs(J - np.outer(J.sum(axis=1), J.sum(axis=0)))))
        if dev > worst:
            worst, where = dev, k
    return CheckResult(worst <= tol, worst, where)


def check_pip(s: ProductJointScenario, tol: float = 1e-9) -> CheckResult:
    opi = check_opi(s, tol)
    ind = check_independence(s, tol)
    worst = max(opi.worst, ind.worst)
    return CheckResult(opi.ok and ind.ok, worst, opi.where if opi.worst >= ind.worst else ind.where)


def product_scenario(local_a: Mapping[str, np.ndarray], local_b: Mapping[str, np.ndarray], experiments=None, tags=()):
    joints = {(a, b): np.outer(pa, pb) for a, pa in local_a.items() for b, pb in local_b.items()}
    la = len(next(iter(local_a.values())))
    lb = len(next(iter(local_b.values())))
    return ProductJointScenario(la, lb, joints, experiments or {}, tags)


def all_distinct(s: JointScenario) -> bool:
    keys = s.keys()
    return all(ontologically_distinct(s.prep_pairs[x], s.prep_pairs[y]) for x, y in itertools.combinations(keys, 2))


@dataclass(frozen=True, eq=False)
class ArrayScenario:
    """N subsystems, each prepared in one of two states; preparations keyed by bitstrings ('0' = psi, '1' = phi).

    ``pair_experiments[(i, j)]`` names the joint experiment that
    antidistinguishes the four choices on subsystems ``i < j``. Its outcome
    ``k`` never fires when that pair is prepared in the ``k``-th of
    (psi psi, psi phi, phi psi, phi phi).
    """

    n_subsystems: int
    model: OntModel
    pair_experiments: Mapping[tuple, str]
    pair_probabilities: np.ndarray  # 4 x 4: row = pair choice index, column = outcome

    def __post_init__(self):
        n = self.n_subsystems
        if not 2 <= n <= 12:
            raise ValueError("number of subsystems must be between 2 and 12")
        expected = {"".join(bits) for bits in itertools.product("01", repeat=n)}
        if set(self.model.preparations) != expected:
            raise ValueError(f"preparations must be exactly the {2 ** n} bitstrings of length {n}")
        pe = {tuple(k): v for k, v in self.pair_experiments.items()}
        if set(pe) != set(itertools.combinations(range(n), 2)):
            raise ValueError("need one antidistinguishing experiment per subsystem pair")
        for name in pe.values():
            if name not in self.model.experiments or len(self.model.experiments[name]) != 4:
                raise ValueError(f"pair experiment {name!r} missing or not four-outcome")
        probs = np.array(self.pair_probabilities, dtype=float)
        if probs.shape != (4, 4):
            raise ValueError("pair probabilities must be 4 x 4")
        object.__setattr__(self, "pair_experiments", pe)
        object.__setattr__(self, "pair_probabilities", probs)

    @property
    def lambda_size(self) -> int:
        return self.model.lambda_size

    def bitstrings(self) -> list[str]:
        return ["".join(b) for b in itertools.product("01", repeat=self.n_subsystems)]
