"""Small-dimension quantum states, measurements and the quantum-side metrics.

Vectors are numpy complex arrays held inside immutable wrappers. Tensor
products use the row-major convention of :func:`numpy.kron`: the left factor
is the slow index, so ``|a>|b>`` has amplitude ``a[i] * b[j]`` at ``i * dim_b + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import TOL

MAX_DIM = 64


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector in C^dim."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size == 0 or amps.size > MAX_DIM:
            raise ValueError(f"state dimension must be in [1, {MAX_DIM}], got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > TOL.normalization:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps: Iterable[complex], normalize: bool = False) -> "PureState":
        arr = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps, dtype=complex)
        if normalize:
            n = np.linalg.norm(arr)
            if n == 0:
                raise ValueError("cannot normalize the zero vector")
            arr = arr / n
        return cls(arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.amplitudes, other.amplitudes)

    def __hash__(self):
        return hash(self.amplitudes.tobytes())

    def __repr__(self):
        return f"PureState({np.array2string(self.amplitudes, precision=5)})"


def basis_state(index: int, dim: int = 2) -> PureState:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return PureState(v)


KET0 = basis_state(0)
KET1 = basis_state(1)
# |+>, |-> use the (|0> +- |1>)/sqrt(2) convention
KET_PLUS = PureState(np.array([1.0, 1.0]) / math.sqrt(2))
KET_MINUS = PureState(np.array([1.0, -1.0]) / math.sqrt(2))


def bloch_state(direction: Sequence[float]) -> PureState:
    """Qubit state whose Bloch vector points along ``direction``."""
    x, y, z = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    theta = math.acos(max(-1.0, min(1.0, z)))
    phase = math.atan2(y, x)
    return PureState.from_amplitudes(
        [math.cos(theta / 2), np.exp(1j * phase) * math.sin(theta / 2)], normalize=True
    )


@dataclass(frozen=True, eq=False)
class Experiment:
    """A finite POVM with labelled outcomes.

    Effects are checked for hermiticity, positivity and completeness on
    construction; an invalid POVM raises ``ValueError``.
    """

    outcomes: tuple

    def __post_init__(self):
        items = tuple((str(label), _frozen(effect)) for label, effect in self.outcomes)
        if not items:
            raise ValueError("an experiment needs at least one outcome")
        labels = [label for label, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be unique")
        dim = items[0][1].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for label, eff in items:
            if eff.shape != (dim, dim):
                raise ValueError(f"effect {label!r} has shape {eff.shape}, expected {(dim, dim)}")
            if not np.all(np.isfinite(eff)):
                raise ValueError(f"effect {label!r} is not finite")
            if np.max(np.abs(eff - eff.conj().T)) > TOL.hermitian:
                raise ValueError(f"effect {label!r} is not Hermitian")
            herm = (eff + eff.conj().T) / 2
            if np.linalg.eigvalsh(herm).min() < -TOL.psd:
                raise ValueError(f"effect {label!r} is not positive semidefinite")
            total = total + eff
        if np.max(np.abs(total - np.eye(dim))) > TOL.completeness:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "outcomes", items)

    @classmethod
    def from_basis(cls, vectors: Sequence[PureState], labels: Sequence[str] | None = None) -> "Experiment":
        if labels is None:
            labels = [str(k) for k in range(len(vectors))]
        return cls(tuple((lab, v.projector()) for lab, v in zip(labels, vectors)))

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.outcomes]

    def __eq__(self, other):
        if not isinstance(other, Experiment):
            return NotImplemented
        return len(self.outcomes) == len(other.outcomes) and all(
            la == lb and ea.shape == eb.shape and np.array_equal(ea, eb)
            for (la, ea), (lb, eb) in zip(self.outcomes, other.outcomes)
        )

    __hash__ = None

    def effect(self, label: str) -> np.ndarray:
        for lab, eff in self.outcomes:
            if lab == label:
                return eff
        raise KeyError(f"unknown outcome label {label!r}")


def computational_measurement(dim: int = 2) -> Experiment:
    return Experiment.from_basis([basis_state(k, dim) for k in range(dim)])


@dataclass(frozen=True)
class Fragment:
    """Named pure-state preparations and named experiments of a common dimension."""

    dim: int
    preparations: Mapping[str, PureState]
    experiments: Mapping[str, Experiment] = field(default_factory=dict)

    def __post_init__(self):
        preps = dict(self.preparations)
        exps = dict(self.experiments)
        for name, st in preps.items():
            if st.dim != self.dim:
                raise ValueError(f"preparation {name!r} has dimension {st.dim}, expected {self.dim}")
        for name, ex in exps.items():
            if ex.dim != self.dim:
                raise ValueError(f"experiment {name!r} has dimension {ex.dim}, expected {self.dim}")
        object.__setattr__(self, "preparations", preps)
        object.__setattr__(self, "experiments", exps)

    def born_table(self) -> dict[tuple[str, str, str], float]:
        return {
            (p, e, lab): born_probability(st, ex, lab)
            for p, st in self.preparations.items()
            for e, ex in self.experiments.items()
            for lab in ex.labels
        }


def _check_dims(a: PureState, b: PureState) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_dims(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(np.kron(a.amplitudes, b.amplitudes))


def tensor_all(states: Iterable[PureState]) -> PureState:
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def states_equal(a: PureState, b: PureState, tol: float = TOL.phase_equality) -> bool:
    """Equality up to a global phase."""
    return a.dim == b.dim and abs(abs(inner_product(a, b)) - 1.0) <= tol


def born_probability(s: PureState, e: Experiment, outcome: str) -> float:
    if s.dim != e.dim:
        raise ValueError(f"dimension mismatch: state {s.dim} vs experiment {e.dim}")
    eff = e.effect(outcome)
    p = float(np.vdot(s.amplitudes, eff @ s.amplitudes).real)
    return min(1.0, max(0.0, p))


def born_distribution(s: PureState, e: Experiment) -> np.ndarray:
    return np.array([born_probability(s, e, lab) for lab in e.labels])


def quantum_distinguishability(a: PureState, b: PureState) -> float:
    """sqrt(1 - |<a|b>|^2): the best single-outcome probability gap."""
    f = abs(inner_product(a, b)) ** 2
    return math.sqrt(max(0.0, 1.0 - f))


def quantum_overlap(a: PureState, b: PureState) -> float:
    return 1.0 - quantum_distinguishability(a, b)


def optimal_guess_probability(a: PureState, b: PureState) -> float:
    return 0.5 * (1.0 + quantum_distinguishability(a, b))
