"""Verifiers for the no-overlap conclusions drawn from antidistinguishable product preparations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..antidist import PBR_PAIR_ORDER, AntidistCertificate
from ..config import TOL
from ..omodel import classical_overlap, ontologically_distinct
from ..qcore import born_probability
from .scenarios import (
    JointScenario,
    PreconditionError,
    ProductJointScenario,
    check_pip,
    check_puc,
    determined_sides,
)

BOUND_SLACK = TOL.bound_slack


@dataclass
class Verdict:
    check: str
    passed: bool
    worst: float = 0.0
    bounds: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def _as_joint(s) -> JointScenario:
    return s.flatten() if isinstance(s, ProductJointScenario) else s


def _certificate_pairs(s: JointScenario):
    """Scenario keys in the certificate's state order, mapping psi/phi onto the scenario's choices."""
    a_vals, b_vals = s.choices
    lookup_a = dict(zip(("psi", "phi"), a_vals))
    lookup_b = dict(zip(("psi", "phi"), b_vals))
    return [(lookup_a[x], lookup_b[y]) for x, y in PBR_PAIR_ORDER]


def reproduction_error(s, experiment: str, cert: AntidistCertificate) -> float:
    """Largest gap between the scenario's and the certificate's outcome probabilities."""
    js = _as_joint(s)
    labels = js.model.labels(experiment)
    if sorted(labels) != sorted(cert.experiment.labels):
        raise PreconditionError("reproduction", f"experiment {experiment!r} has outcomes {labels}")
    probs = js.outcome_probabilities(experiment)
    worst = 0.0
    for key, state in zip(_certificate_pairs(js), cert.states):
        for lab, p in zip(labels, probs[key]):
            worst = max(worst, abs(float(p) - born_probability(state, cert.experiment, lab)))
    return worst


def verify_pbr_conclusion(
    s: ProductJointScenario, cert: AntidistCertificate, experiment: str = "pbr", tol: float = 1e-9
) -> Verdict:
    """Under preparation independence, the subsystem distributions for psi and phi cannot overlap.

    At least one side must be distinct; when the scenario is symmetric
    under exchanging A and B, both must be.
    """
    pip = check_pip(s, tol)
    if not pip.ok:
        raise PreconditionError("check_pip", f"worst deviation {pip.worst:.3g}")
    err = reproduction_error(s, experiment, cert)
    if err > tol:
        raise PreconditionError("reproduction", f"experiment statistics off by {err:.3g}")
    (pa, pb) = s.local_distributions()
    a_vals, b_vals = s.choices
    dist_a = ontologically_distinct(pa[a_vals[0]], pa[a_vals[1]])
    dist_b = ontologically_distinct(pb[b_vals[0]], pb[b_vals[1]])
    symmetric = s.is_exchange_symmetric()
    passed = (dist_a and dist_b) if symmetric else (dist_a or dist_b)
    return Verdict(
        "pbr_conclusion",
        passed,
        details={"distinct_a": dist_a, "distinct_b": dist_b, "exchange_symmetric": symmetric},
    )


def epsilon_of_experiment(s, experiment: str) -> float:
    """Largest, over outcomes, of the smallest probability any of the four preparations gives it."""
    probs = _as_joint(s).outcome_probabilities(experiment)
    table = np.vstack(list(probs.values()))
    return float(np.max(np.min(table, axis=0)))


def verify_robustness(s, experiment: str = "pbr", mode: str = "PUC", tol: float = 1e-9) -> Verdict:
    """Overlap bounds that survive when the experiment only nearly antidistinguishes.

    PIP mode bounds the subsystem overlaps: their product is at most
    ``n_outcomes * eps``, so for four outcomes their geometric mean is at
    most ``2 sqrt(eps)``, and so is each overlap when A and B are
    exchange-symmetric. PUC mode bounds the joint overlaps of the
    diagonal and off-diagonal preparation pairs by ``4 sqrt(eps)``.
    """
    mode = mode.upper()
    eps = epsilon_of_experiment(s, experiment)
    if mode == "PIP":
        if not isinstance(s, ProductJointScenario):
            raise PreconditionError("check_pip", "PIP mode needs a product scenario")
        pip = check_pip(s, tol)
        if not pip.ok:
            raise PreconditionError("check_pip", f"worst deviation {pip.worst:.3g}")
        k = len(s.flatten().model.labels(experiment))
        bound = math.sqrt(k * eps)
        pa, pb = s.local_distributions()
        a_vals, b_vals = s.choices
        om_a = classical_overlap(pa[a_vals[0]], pa[a_vals[1]])
        om_b = classical_overlap(pb[b_vals[0]], pb[b_vals[1]])
        gm = math.sqrt(om_a * om_b)
        symmetric = s.is_exchange_symmetric()
        worst = max(om_a, om_b) if symmetric else gm
        return Verdict(
            "robustness_pip",
            worst <= bound + BOUND_SLACK,
            worst,
            {"epsilon": eps, "bound": bound},
            {"omega_a": om_a, "omega_b": om_b, "geometric_mean": gm, "exchange_symmetric": symmetric},
        )
    if mode == "PUC":
        js = _as_joint(s)
        puc = check_puc(js, tol)
        if not puc.ok:
            raise PreconditionError("check_puc", f"worst violation {puc.worst:.3g}")
        bound = 4 * math.sqrt(eps)
        keys = _certificate_pairs(js)
        om_diag = classical_overlap(js.prep_pairs[keys[0]], js.prep_pairs[keys[3]])
        om_off = classical_overlap(js.prep_pairs[keys[1]], js.prep_pairs[keys[2]])
        worst = max(om_diag, om_off)
        return Verdict(
            "robustness_puc",
            worst <= bound + BOUND_SLACK,
            worst,
            {"epsilon": eps, "bound": bound},
            {"omega_diagonal": om_diag, "omega_offdiagonal": om_off},
        )
    raise ValueError(f"mode must be PIP or PUC, got {mode!r}")


def verify_puc_theorem(
    s, cert: AntidistCertificate, experiment: str = "pbr", tol: float = 1e-9, null_tol: float = 1e-9
) -> Verdict:
    """With uninformative preparations and exact antidistinguishing statistics, each ontic state pins down a side.

    Consequently the diagonal pairs (psi psi, phi phi) and the off-diagonal
    pairs (psi phi, phi psi) have null overlap.
    """
    js = _as_joint(s)
    puc = check_puc(js, tol)
    if not puc.ok:
        raise PreconditionError("check_puc", f"worst violation {puc.worst:.3g}")
    err = reproduction_error(js, experiment, cert)
    if err > 1e-10:
        raise PreconditionError("reproduction", f"experiment statistics off by {err:.3g}")
    idx, a_det, b_det = determined_sides(js)
    undetermined = idx[~(a_det | b_det)]
    keys = _certificate_pairs(js)
    om_diag = classical_overlap(js.prep_pairs[keys[0]], js.prep_pairs[keys[3]])
    om_off = classical_overlap(js.prep_pairs[keys[1]], js.prep_pairs[keys[2]])
    passed = undetermined.size == 0 and om_diag <= null_tol and om_off <= null_tol
    return Verdict(
        "puc_theorem",
        passed,
        max(om_diag, om_off),
        {"null_tolerance": null_tol},
        {
            "omega_diagonal": om_diag,
            "omega_offdiagonal": om_off,
            "undetermined_states": undetermined.tolist(),
            "a_determined": int(a_det.sum()),
            "b_determined": int(b_det.sum()),
        },
    )
