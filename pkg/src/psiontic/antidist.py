"""Antidistinguishability: certificates, the explicit PBR basis, and a POVM search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .omodel import OntModel
from .qcore import (
    KET0,
    KET1,
    KET_MINUS,
    KET_PLUS,
    Experiment,
    PureState,
    born_probability,
    tensor,
)


@dataclass(frozen=True, eq=False)
class AntidistCertificate:
    """An experiment plus, for each outcome, the index of the state it rules out."""

    states: tuple
    experiment: Experiment
    assignment: Mapping[str, int]
    preclusion_values: tuple

    def __eq__(self, other):
        if not isinstance(other, AntidistCertificate):
            return NotImplemented
        return (
            list(self.states) == list(other.states)
            and self.experiment == other.experiment
            and dict(self.assignment) == dict(other.assignment)
            and list(self.preclusion_values) == list(other.preclusion_values)
        )

    @classmethod
    def build(cls, states: Sequence[PureState], experiment: Experiment, assignment: Mapping[str, int]):
        states = tuple(states)
        _check_assignment(states, experiment, assignment)
        values = tuple(born_probability(states[assignment[lab]], experiment, lab) for lab in experiment.labels)
        return cls(states, experiment, dict(assignment), values)


def _check_assignment(states, experiment, assignment) -> None:
    labels = experiment.labels
    if set(assignment) != set(labels):
        raise ValueError(f"assignment keys {sorted(assignment)} do not match outcomes {labels}")
    for lab, idx in assignment.items():
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < len(states):
            raise ValueError(f"outcome {lab!r} assigned to invalid state index {idx!r}")
    for s in states:
        if s.dim != experiment.dim:
            raise ValueError("state and experiment dimensions differ")


class CertificateCheck(NamedTuple):
    ok: bool
    max_preclusion: float


def verify_certificate(c: AntidistCertificate, tol: float = 1e-10) -> CertificateCheck:
    """Recompute every preclusion probability; stored values are not trusted."""
    _check_assignment(c.states, c.experiment, c.assignment)
    values = [born_probability(c.states[c.assignment[lab]], c.experiment, lab) for lab in c.experiment.labels]
    worst = max(values)
    stored = list(c.preclusion_values)
    consistent = len(stored) == len(values) and all(abs(a - b) <= 1e-12 for a, b in zip(stored, values))
    return CertificateCheck(bool(worst <= tol and consistent), worst)


def pbr_quadruple(psi: PureState, phi: PureState) -> list[PureState]:
    """Product states in the order (psi psi, psi phi, phi psi, phi phi)."""
    return [tensor(psi, psi), tensor(psi, phi), tensor(phi, psi), tensor(phi, phi)]


PBR_PAIR_ORDER = (("psi", "psi"), ("psi", "phi"), ("phi", "psi"), ("phi", "phi"))


def pbr_measurement() -> AntidistCertificate:
    """Entangled basis ruling out one of |00>, |0+>, |+0>, |++> per outcome."""
    r = 1 / math.sqrt(2)

    def sup(a, b, c, d):
        return PureState(r * (tensor(a, b).amplitudes + tensor(c, d).amplitudes))

    xi = [
        sup(KET0, KET1, KET1, KET0),
        sup(KET0, KET_MINUS, KET1, KET_PLUS),
        sup(KET_PLUS, KET1, KET_MINUS, KET0),
        sup(KET_PLUS, KET_MINUS, KET_MINUS, KET_PLUS),
    ]
    labels = ["xi1", "xi2", "xi3", "xi4"]
    exp = Experiment.from_basis(xi, labels)
    states = pbr_quadruple(KET0, KET_PLUS)
    return AntidistCertificate.build(states, exp, {lab: k for k, lab in enumerate(labels)})


class SweepRow(NamedTuple):
    overlap: float
    found: bool
    max_preclusion: float | None


def pbr_overlap_sweep(overlaps: Sequence[float], max_iters: int = 3000, restarts: int = 3, seed: int = 0) -> list[SweepRow]:
    """Search for a certificate of the product quadruple at each overlap |<psi|phi>|.

    ``psi = |0>`` and ``phi`` is real with the given overlap. Rows record
    what the search found; a miss is not a proof of impossibility.
    """
    rows = []
    for c in overlaps:
        if not 0 <= c <= 1:
            raise ValueError("overlaps must lie in [0, 1]")
        phi = PureState(np.array([c, math.sqrt(1 - c * c)]))
        cert = search_antidist(pbr_quadruple(KET0, phi), max_iters=max_iters, seed=seed, restarts=restarts)
        rows.append(SweepRow(float(c), cert is not None, None if cert is None else verify_certificate(cert).max_preclusion))
    return rows


def _complement_bases(states: np.ndarray) -> np.ndarray:
    n, d = states.shape
    Q = np.empty((n, d, d - 1), dtype=complex)
    for k in range(n):
        q, _ = np.linalg.qr(np.column_stack([states[k], np.eye(d)]))
        Q[k] = q[:, 1:d]
    return Q


def _completion_map(states: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of X -> sum_k P_k X P_k on d x d matrices, P_k = 1 - |psi_k><psi_k|."""
    n, d = states.shape
    P = np.eye(d)[None] - np.einsum("ki,kj->kij", states, states.conj())
    L = np.zeros((d * d, d * d), dtype=complex)
    for idx in range(d * d):
        X = np.zeros(d * d, dtype=complex)
        X[idx] = 1.0
        X = X.reshape(d, d)
        L[:, idx] = np.einsum("kij,jl,klm->im", P, X, P).ravel()
    return np.linalg.pinv(L, rcond=1e-12)


def _normalize_povm(E: np.ndarray) -> np.ndarray | None:
    S = E.sum(axis=0)
    S = (S + S.conj().T) / 2
    w, v = np.linalg.eigh(S)
    if w.min() <= 1e-12:
        return None
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    out = np.einsum("ij,kjl,lm->kim", s_inv_half, E, s_inv_half)
    return (out + np.conj(np.transpose(out, (0, 2, 1)))) / 2


def search_antidist(
    states: Sequence[PureState],
    max_iters: int = 5000,
    tol: float = 1e-10,
    seed: int = 0,
    restarts: int = 10,
    check_every: int = 10,
) -> AntidistCertificate | None:
    """Look for a POVM whose k-th outcome never occurs on the k-th state.

    Each effect lives on the orthogonal complement of the state it excludes,
    so preclusion is exact throughout; the iteration alternates an affine
    projection onto sum_k E_k = 1 with eigenvalue clipping. Candidates are
    made exactly complete by symmetric normalisation S^-1/2 E_k S^-1/2, which
    reintroduces a small preclusion error; success means that error is at
    most ``tol``. Restart 0 starts from the uniform mixture on each
    complement, the rest from seeded random starts.

    ``None`` means nothing was found within budget, not that no POVM exists.
    """
    states = list(states)
    n = len(states)
    if n == 0 or n > 8:
        raise ValueError("need between 1 and 8 states")
    d = states[0].dim
    if any(s.dim != d for s in states):
        raise ValueError("states must share a dimension")
    if d > 16:
        raise ValueError("dimension above 16 is not supported")
    if n == 1 or d == 1:
        # the only outcome probabilities of a lone state sum to one
        return None
    V = np.array([s.amplitudes for s in states])
    Q = _complement_bases(V)
    Qh = np.conj(np.transpose(Q, (0, 2, 1)))
    Lp = _completion_map(V)
    eye = np.eye(d)
    rng = np.random.default_rng(seed)
    labels = [f"x{k}" for k in range(n)]
    for attempt in range(max(1, restarts)):
        if attempt == 0:
            M = np.broadcast_to(np.eye(d - 1) / n, (n, d - 1, d - 1)).astype(complex)
        else:
            G = rng.normal(size=(n, d - 1, d - 1)) + 1j * rng.normal(size=(n, d - 1, d - 1))
            M = G @ np.conj(np.transpose(G, (0, 2, 1))) / (n * d)
        for it in range(max_iters):
            E = Q @ M @ Qh
            R = eye - E.sum(axis=0)
            Lam = (Lp @ R.ravel()).reshape(d, d)
            M = M + Qh @ Lam[None] @ Q
            M = (M + np.conj(np.transpose(M, (0, 2, 1)))) / 2
            w, v = np.linalg.eigh(M)
            M = (v * np.clip(w, 0.0, None)[:, None, :]) @ np.conj(np.transpose(v, (0, 2, 1)))
            if it % check_every == 0 or it == max_iters - 1:
                cert = _candidate(states, Q @ M @ Qh, labels, tol)
                if cert is not None:
                    return cert
    return None


def _candidate(states, E, labels, tol) -> AntidistCertificate | None:
    F = _normalize_povm(E)
    if F is None:
        return None
    obj = sum(float(np.vdot(s.amplitudes, F[k] @ s.amplitudes).real) for k, s in enumerate(states))
    if obj > tol:
        return None
    try:
        exp = Experiment(tuple(zip(labels, F)))
    except ValueError:
        return None
    cert = AntidistCertificate.build(states, exp, {lab: k for k, lab in enumerate(labels)})
    return cert if verify_certificate(cert, tol).ok else None


def triple_criterion(a: float, b: float, c: float, eps: float = 1e-12) -> bool:
    """Antidistinguishability of three pure states from their squared overlaps.

    True iff a + b + c < 1 and (1 - a - b - c)^2 >= 4abc; the equality
    boundary counts as antidistinguishable.
    """
    for v in (a, b, c):
        if not -eps <= v <= 1 + eps:
            raise ValueError("squared overlaps must lie in [0, 1]")
    s = a + b + c
    return s < 1.0 and (1.0 - s) ** 2 >= 4.0 * a * b * c - eps


def squared_overlaps(x: PureState, y: PureState, z: PureState) -> tuple[float, float, float]:
    from .qcore import inner_product

    return (
        abs(inner_product(x, y)) ** 2,
        abs(inner_product(y, z)) ** 2,
        abs(inner_product(x, z)) ** 2,
    )


def null_joint_overlap_check(
    m: OntModel,
    c: AntidistCertificate,
    prep_names: Sequence[str],
    experiment: str,
    tol: float = 1e-10,
) -> bool:
    """No ontic state may carry weight under every listed preparation.

    ``prep_names[k]`` is the model's name for ``c.states[k]``. The model must
    reproduce the certificate's statistics within 1e-8, else ``ValueError``.
    """
    if len(prep_names) != len(c.states):
        raise ValueError("need one preparation name per certificate state")
    for k, name in enumerate(prep_names):
        for lab in c.experiment.labels:
            mp = float(dict(m.experiments[experiment])[lab] @ m.distribution(name))
            bp = born_probability(c.states[k], c.experiment, lab)
            if abs(mp - bp) > 1e-8:
                raise ValueError(
                    f"model does not reproduce {experiment!r} for {name!r} (outcome {lab}: {mp:.6g} vs {bp:.6g})"
                )
    dists = np.vstack([m.distribution(n) for n in prep_names])
    return not bool(np.any(np.all(dists > tol, axis=0)))
