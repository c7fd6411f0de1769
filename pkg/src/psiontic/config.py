"""Numerical tolerances shared by every checker in the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    normalization: float = 1e-12
    hermitian: float = 1e-12
    psd: float = 1e-10
    completeness: float = 1e-10
    phase_equality: float = 1e-10
    distribution: float = 1e-10
    response: float = 1e-12
    support: float = 1e-12
    classification: float = 1e-6
    lp_feasibility: float = 1e-9
    lp_complementarity: float = 1e-7
    overlap_report: float = 1e-8
    determination: float = 1e-9
    bound_slack: float = 1e-7


TOL = Tolerances()
