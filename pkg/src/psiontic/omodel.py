"""Finite ontological models.

An ontic state space is ``range(lambda_size)``; every subset is measurable,
so suprema over events reduce to finite sums. Preparation distributions and
response functions are plain float arrays of length ``lambda_size``.
Construction only checks shapes; :func:`validate_model` reports the
probabilistic invariants so that broken models can be inspected rather than
rejected outright.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .config import TOL
from .qcore import (
    Experiment,
    Fragment,
    bloch_state,
    born_probability,
    inner_product,
    quantum_distinguishability,
    states_equal,
)


def _ro(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class OntModel:
    lambda_size: int
    preparations: Mapping[str, np.ndarray]
    experiments: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.lambda_size) < 1:
            raise ValueError("lambda_size must be positive")
        object.__setattr__(self, "lambda_size", int(self.lambda_size))
        preps = {str(k): _ro(v) for k, v in self.preparations.items()}
        exps = {
            str(k): tuple((str(lab), _ro(resp)) for lab, resp in outcomes)
            for k, outcomes in self.experiments.items()
        }
        for k, v in preps.items():
            if v.shape != (self.lambda_size,):
                raise ValueError(f"preparation {k!r} has shape {v.shape}, expected ({self.lambda_size},)")
        for k, outcomes in exps.items():
            for lab, resp in outcomes:
                if resp.shape != (self.lambda_size,):
                    raise ValueError(f"response {k!r}/{lab!r} has shape {resp.shape}")
        object.__setattr__(self, "preparations", preps)
        object.__setattr__(self, "experiments", exps)

    def response_matrix(self, experiment: str) -> np.ndarray:
        """Rows are outcomes, columns ontic states."""
        try:
            outcomes = self.experiments[experiment]
        except KeyError:
            raise KeyError(f"unknown experiment {experiment!r}") from None
        return np.array([resp for _, resp in outcomes])

    def labels(self, experiment: str) -> list[str]:
        return [lab for lab, _ in self.experiments[experiment]]

    def distribution(self, prep: str) -> np.ndarray:
        try:
            return self.preparations[prep]
        except KeyError:
            raise KeyError(f"unknown preparation {prep!r}") from None

    def outcome_distribution(self, prep: str, experiment: str) -> np.ndarray:
        return self.response_matrix(experiment) @ self.distribution(prep)

    def __eq__(self, other):
        if not isinstance(other, OntModel):
            return NotImplemented
        if self.lambda_size != other.lambda_size:
            return False
        if self.preparations.keys() != other.preparations.keys():
            return False
        if self.experiments.keys() != other.experiments.keys():
            return False
        if any(not np.array_equal(v, other.preparations[k]) for k, v in self.preparations.items()):
            return False
        for k, outs in self.experiments.items():
            other_outs = other.experiments[k]
            if len(outs) != len(other_outs):
                return False
            for (la, ra), (lb, rb) in zip(outs, other_outs):
                if la != lb or not np.array_equal(ra, rb):
                    return False
        return True


class Violation(NamedTuple):
    kind: str
    where: str
    value: float


def validate_model(m: OntModel) -> list[Violation]:
    out: list[Violation] = []
    for name, p in m.preparations.items():
        neg = np.flatnonzero(p < -TOL.distribution)
        for i in neg:
            out.append(Violation("negative-weight", f"preparation {name} at lambda {i}", float(p[i])))
        s = float(p.sum())
        if abs(s - 1.0) > TOL.distribution:
            out.append(Violation("normalization", f"preparation {name}", s))
    for name, outcomes in m.experiments.items():
        if not outcomes:
            out.append(Violation("empty-experiment", f"experiment {name}", 0.0))
            continue
        resp = np.array([r for _, r in outcomes])
        for (lab, r) in outcomes:
            bad = np.flatnonzero((r < -TOL.response) | (r > 1 + TOL.response))
            for i in bad:
                out.append(Violation("response-range", f"experiment {name} outcome {lab} at lambda {i}", float(r[i])))
        sums = resp.sum(axis=0)
        for i in np.flatnonzero(np.abs(sums - 1.0) > TOL.distribution):
            out.append(Violation("response-sum", f"experiment {name} at lambda {i}", float(sums[i])))
    return out


def predicted_probability(m: OntModel, prep: str, exp: str, outcome: str) -> float:
    p = m.distribution(prep)
    for lab, resp in m.experiments.get(exp, ()):
        if lab == outcome:
            return float(np.dot(resp, p))
    if exp not in m.experiments:
        raise KeyError(f"unknown experiment {exp!r}")
    raise KeyError(f"unknown outcome {outcome!r} of experiment {exp!r}")


class DeviationRow(NamedTuple):
    prep: str
    experiment: str
    outcome: str
    model_p: float
    born_p: float
    diff: float


class Reproduction(NamedTuple):
    ok: bool
    max_deviation: float
    rows: list


def reproduces_fragment(m: OntModel, f: Fragment, tol: float) -> Reproduction:
    missing = [p for p in f.preparations if p not in m.preparations]
    missing += [e for e in f.experiments if e not in m.experiments]
    if missing:
        raise KeyError(f"model lacks fragment names: {missing}")
    rows = []
    worst = 0.0
    for pname, st in f.preparations.items():
        for ename, ex in f.experiments.items():
            model_labels = m.labels(ename)
            if sorted(model_labels) != sorted(ex.labels):
                raise KeyError(f"outcome labels of {ename!r} differ between model and fragment")
            dist = m.outcome_distribution(pname, ename)
            for lab, mp in zip(model_labels, dist):
                bp = born_probability(st, ex, lab)
                diff = abs(float(mp) - bp)
                worst = max(worst, diff)
                rows.append(DeviationRow(pname, ename, lab, float(mp), bp, diff))
    return Reproduction(worst <= tol, worst, rows)


def _check_lengths(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return p, q


def tv_distance(p, q) -> float:
    p, q = _check_lengths(p, q)
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def classical_overlap(p, q) -> float:
    return 1.0 - tv_distance(p, q)


def joint_overlap(dists: Sequence) -> float:
    """Total mass of the pointwise minimum of several distributions."""
    return float(np.min(np.vstack(dists), axis=0).sum())


def support(p, tol: float = TOL.support) -> np.ndarray:
    return np.asarray(p) > tol


def ontologically_distinct(p, q, tol: float = TOL.support) -> bool:
    p, q = _check_lengths(p, q)
    return not bool(np.any(support(p, tol) & support(q, tol)))


def model_distinguishability(m: OntModel, prep1: str, prep2: str) -> float:
    """Largest single-outcome probability gap over the model's declared experiments.

    Only declared experiments count; with indicator responses on every subset
    the value would trivially equal the total variation distance.
    """
    p, q = m.distribution(prep1), m.distribution(prep2)
    best = 0.0
    for name in m.experiments:
        r = m.response_matrix(name)
        best = max(best, float(np.max(np.abs(r @ p - r @ q))))
    return best


@dataclass(frozen=True)
class ModelClassification:
    psi_ontic: bool
    psi_epistemic: bool
    pairwise_psi_epistemic: bool
    maximally_psi_epistemic: bool
    witness: tuple | None = None


def classify(m: OntModel, f: Fragment, tol: float = TOL.classification) -> ModelClassification:
    rep = reproduces_fragment(m, f, 1e-6)
    if not rep.ok:
        raise ValueError(f"model does not reproduce the fragment (max deviation {rep.max_deviation:.3g})")
    ontic, pairwise, maximal = True, True, True
    witness = {}
    for a, b in itertools.combinations(sorted(f.preparations), 2):
        sa, sb = f.preparations[a], f.preparations[b]
        pa, pb = m.distribution(a), m.distribution(b)
        distinct = ontologically_distinct(pa, pb)
        if not states_equal(sa, sb) and not distinct:
            ontic = False
            witness.setdefault("psi_ontic", (a, b))
        nonorth = abs(inner_product(sa, sb)) > TOL.phase_equality
        if nonorth and distinct:
            pairwise = False
            witness.setdefault("pairwise", (a, b))
        if abs(tv_distance(pa, pb) - quantum_distinguishability(sa, sb)) > tol:
            maximal = False
            witness.setdefault("maximal", (a, b))
    w = None
    for key, flag in (("psi_ontic", ontic), ("pairwise", pairwise), ("maximal", maximal)):
        if not flag and key in witness:
            w = witness[key]
            break
    return ModelClassification(ontic, not ontic, pairwise, maximal, w)


def bayes_posterior(prior: Mapping[str, float], conditionals: Mapping[tuple, float], observed: str) -> dict[str, float]:
    weights = {p: prior[p] * conditionals.get((p, observed), 0.0) for p in prior}
    total = sum(weights.values())
    if total <= 0:
        raise ValueError(f"outcome {observed!r} has zero total probability")
    return {p: w / total for p, w in weights.items()}


def canonical_psi_ontic(f: Fragment) -> OntModel:
    """One ontic state per preparation, responses equal to Born probabilities."""
    names = list(f.preparations)
    n = len(names)
    preps = {name: np.eye(n)[i] for i, name in enumerate(names)}
    exps = {}
    for ename, ex in f.experiments.items():
        exps[ename] = tuple(
            (lab, np.array([born_probability(f.preparations[p], ex, lab) for p in names]))
            for lab in ex.labels
        )
    return OntModel(n, preps, exps)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, near-uniform sample of ``n`` points on the unit sphere."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    theta = golden * np.arange(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def default_measurement_net(n: int) -> np.ndarray:
    """The z and x axes followed by ``n - 2`` Fibonacci directions."""
    axes = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    if n <= 2:
        return axes[:n]
    return np.vstack([axes, fibonacci_sphere(n - 2)])


def qubit_direction_measurement(direction) -> Experiment:
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    ns = n[0] * sx + n[1] * sy + n[2] * sz
    eye = np.eye(2)
    return Experiment((("+", (eye + ns) / 2), ("-", (eye - ns) / 2)))


def discretized_qubit_model(
    resolution: int,
    measurement_net,
    preparations: Mapping[str, Sequence[float]] | None = None,
) -> tuple[OntModel, Fragment]:
    """Kochen-Specker style hidden-variable model on a sampled Bloch sphere.

    P_psi(lambda) is proportional to max(0, n_psi . lambda); the "+" response
    for direction n is the indicator of the open hemisphere around n, with
    exact ties split evenly.
    """
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000")
    if preparations is None:
        preparations = {"0": (0.0, 0.0, 1.0), "+": (1.0, 0.0, 0.0)}
    lam = fibonacci_sphere(int(resolution))
    preps, states = {}, {}
    for name, direction in preparations.items():
        n = np.asarray(direction, dtype=float)
        n = n / np.linalg.norm(n)
        w = np.clip(lam @ n, 0.0, None)
        preps[name] = w / w.sum()
        states[name] = bloch_state(n)
    exps, fexps = {}, {}
    for k, direction in enumerate(np.asarray(measurement_net, dtype=float)):
        n = direction / np.linalg.norm(direction)
        c = lam @ n
        plus = np.where(c > 0, 1.0, np.where(c < 0, 0.0, 0.5))
        name = f"m{k}"
        exps[name] = (("+", plus), ("-", 1.0 - plus))
        fexps[name] = qubit_direction_measurement(n)
    return OntModel(int(resolution), preps, exps), Fragment(2, states, fexps)
