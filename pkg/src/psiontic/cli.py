"""Command-line entry point: built-in fixtures, verifiers over JSON inputs, and seeded audits.

Exit codes: 0 when every check passes, 1 when a check or premise fails,
2 for unusable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import io
from .antidist import pbr_measurement, verify_certificate
from .omodel import (
    bayes_posterior,
    default_measurement_net,
    discretized_qubit_model,
    reproduces_fragment,
    validate_model,
)
from .pucthm.scenarios import (
    PreconditionError,
    ProductJointScenario,
    check_independence,
    check_opi,
    check_puc,
    phi_plus_example,
)
from .qcore import Fragment

log = logging.getLogger("psiontic")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_SEED = 42
FIXTURES = ("pbr-0plus", "bclm-d4", "phi-plus", "coin", "ks-qubit")


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)  # path -> sha256
    verdicts: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    def add(self, check: str, passed: bool, worst: float = 0.0, bounds: dict | None = None, **details):
        self.verdicts.append(
            {"check": check, "pass": bool(passed), "worst": worst, "bounds": bounds or {}, "details": details}
        )

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = io.report_float(asdict(self))
        data["schema"] = "report"
        data["artifacts"] = [str(a) for a in self.artifacts] + [str(path)]
        path.write_text(json.dumps(data, indent=1, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")
        return path


# fixtures ------------------------------------------------------------------

def coin_table():
    half, two, one = Fraction(1, 2), Fraction(2, 3), Fraction(1, 3)
    prior = {"P0": half, "P1": half}
    cond = {("P0", "heads"): half, ("P0", "tails"): half, ("P1", "heads"): two, ("P1", "tails"): one}
    return prior, cond


def posterior_ratio_factor(prior, cond, observed: str, num="P1", den="P0"):
    """How much seeing ``observed`` multiplies the odds of ``num`` against ``den``."""
    post = bayes_posterior(prior, cond, observed)
    return (post[num] / post[den]) / (prior[num] / prior[den])


def build_fixture(name: str) -> dict[str, object]:
    """Objects making up a named fixture, keyed by file name."""
    from .pucthm.generators import pbr_fragment

    if name == "pbr-0plus":
        return {"fragment.json": pbr_fragment(), "certificate.json": pbr_measurement()}
    if name == "bclm-d4":
        from .bclm import construct_family, family_fragment, mubs_d4

        mubs = mubs_d4()
        mub_frag = Fragment(4, {f"b{k}v{i}": v for k, b in enumerate(mubs.bases) for i, v in enumerate(b)})
        fam = construct_family(0, 0)
        return {"mubs.json": mub_frag, "fragment.json": family_fragment(fam)}
    if name == "phi-plus":
        return {"scenario.json": phi_plus_example()}
    if name == "coin":
        prior, cond = coin_table()
        return {"bayes.json": io.bayes_to_json(prior, cond)}
    if name == "ks-qubit":
        model, frag = discretized_qubit_model(2000, default_measurement_net(6))
        return {"model.json": model, "fragment.json": frag}
    raise KeyError(name)


def cmd_fixture(args) -> int:
    if args.name not in FIXTURES:
        print(f"unknown fixture {args.name!r}; valid names: {', '.join(FIXTURES)}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or args.name)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(f"fixture {args.name}")
    for fname, obj in build_fixture(args.name).items():
        path = io.save(obj, out / fname)
        report.artifacts.append(path)
        # self-check: the written file must load back to the same object
        back = io.load(path)
        same = back == (io.bayes_from_json(obj) if isinstance(obj, dict) else obj)
        report.add(f"round_trip:{fname}", same)
        if isinstance(back, type(pbr_measurement())):
            ok, worst = verify_certificate(back, 1e-10)
            report.add("verify_certificate", ok, worst)
        if args.name == "coin":
            prior, cond = back
            for obs, expected in (("heads", Fraction(4, 3)), ("tails", Fraction(2, 3))):
                f = posterior_ratio_factor(prior, cond, obs)
                report.add(f"posterior_ratio:{obs}", f == expected, factor=str(f), expected=str(expected))
    report.write(out / "report.json")
    for v in report.verdicts:
        print(f"{'PASS' if v['pass'] else 'FAIL'} {v['check']}")
    return EXIT_PASS if report.passed else EXIT_FAIL


# verify --------------------------------------------------------------------

def cmd_verify(args) -> int:
    report = RunReport(f"verify {args.kind}", {str(args.path): _digest(args.path)})
    schema = {"model": "model", "certificate": "certificate", "scenario": "scenario"}[args.kind]
    obj = io.load(args.path, schema)
    tol = args.tol
    if args.kind == "model":
        viol = validate_model(obj)
        report.add("validate_model", not viol, max((abs(v.value) for v in viol), default=0.0), violations=[list(v) for v in viol])
        if args.fragment:
            frag = io.load(args.fragment, "fragment")
            report.inputs[str(args.fragment)] = _digest(args.fragment)
            rep = reproduces_fragment(obj, frag, tol if tol is not None else 1e-8)
            report.add("reproduces_fragment", rep.ok, rep.max_deviation)
    elif args.kind == "certificate":
        ok, worst = verify_certificate(obj, tol if tol is not None else 1e-10)
        report.add("verify_certificate", ok, worst, {"tol": tol if tol is not None else 1e-10})
    else:
        tol = tol if tol is not None else 1e-9
        if args.check == "pip":
            if not isinstance(obj, ProductJointScenario):
                report.add("cartesian_product", False, note="scenario has no product structure")
            else:
                opi, ind = check_opi(obj, tol), check_independence(obj, tol)
                report.add("check_opi", opi.ok, opi.worst, {"tol": tol})
                report.add("check_independence", ind.ok, ind.worst, {"tol": tol})
                report.add("check_pip", opi.ok and ind.ok, max(opi.worst, ind.worst), {"tol": tol})
        else:
            js = obj.flatten() if isinstance(obj, ProductJointScenario) else obj
            r = check_puc(js, tol)
            report.add("check_puc", r.ok, r.worst, {"tol": tol}, where=r.where, tags=list(js.tags))
    out = Path(args.out) if args.out else Path(args.path).with_suffix(".report.json")
    report.write(out)
    return _finish(report)


# audits ----------------------------------------------------------------------

def _bclm_run(seed: int):
    from .bclm import audit_model, construct_family, fitted_audit_model

    fam = construct_family(0, 0)
    res = audit_model(fitted_audit_model(fam, seed), fam)
    return seed, res


def _run_seeds(fn, seeds, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, seeds))
    return [fn(s) for s in seeds]


def audit_bclm(args, report: RunReport, out: Path):
    from .bclm import CSV_HEADER, bound_arithmetic

    arith = bound_arithmetic(4)
    bounds = {"mean_bound": arith.mean_bound, "ratio_coefficient": arith.ratio_coefficient, "omega_q": arith.omega_q}
    summary, pairs = [], []
    for seed, res in _run_seeds(_bclm_run, _seeds(args), args.jobs):
        summary.append((seed, res.omega_bar, float(res.overlaps.sum()), res.min_index, res.min_omega, res.min_ratio,
                        res.mean_bound, res.ratio_coefficient, res.mean_ok, res.min_ok))
        pairs += [(seed,) + tuple(r) for r in res.rows]
        report.add(f"bclm_mean_bound:seed={seed}", res.mean_ok, res.omega_bar, bounds)
        report.add(f"bclm_small_pair:seed={seed}", res.min_ok, res.min_ratio, bounds, pair=res.min_index)
    report.artifacts.append(io.write_csv(out / "bclm_audit.csv", (
        "seed", "omega_bar", "omega_sum", "min_index", "min_omega", "min_ratio", "mean_bound",
        "ratio_coefficient", "mean_ok", "min_ok"), summary))
    report.artifacts.append(io.write_csv(out / "bclm_pairs.csv", ("seed",) + CSV_HEADER, pairs))


def _pbr_run(seed: int):
    from .pucthm.generators import lp_fitted_pip_scenario
    from .pucthm.theorems import verify_pbr_conclusion

    return seed, verify_pbr_conclusion(lp_fitted_pip_scenario(seed), pbr_measurement())


def _pip_eps_run(task):
    from .pucthm.generators import pip_epsilon_scenario
    from .pucthm.theorems import verify_robustness

    seed, eps = task
    return seed, verify_robustness(pip_epsilon_scenario(seed, eps), "pbr", "PIP")


def audit_pbr(args, report: RunReport, out: Path):
    from .pucthm.theorems import verify_pbr_conclusion

    cert = pbr_measurement()
    rows = []
    if args.input:
        s = _load_input(args.input, report, "scenario")
        if not isinstance(s, ProductJointScenario):
            raise PreconditionError("check_pip", "scenario has no product structure")
        v = verify_pbr_conclusion(s, cert, args.experiment)
        report.add("pbr_conclusion", v.passed, 0.0, **v.details)
        rows.append(("input", "conclusion", "", "", "", v.passed))
    else:
        eps = args.epsilon if args.epsilon is not None else 0.0025
        seeds = _seeds(args)
        for seed, v in _run_seeds(_pbr_run, seeds, args.jobs):
            report.add(f"pbr_conclusion:seed={seed}", v.passed, 0.0, **v.details)
            rows.append((seed, "conclusion", "", "", "", v.passed))
        for seed, v in _run_seeds(_pip_eps_run, [(s, eps) for s in seeds], args.jobs):
            report.add(f"robustness_pip:seed={seed}", v.passed, v.worst, v.bounds)
            rows.append((seed, "robustness_pip", v.bounds["epsilon"], v.worst, v.bounds["bound"], v.passed))
    report.artifacts.append(io.write_csv(out / "pbr_audit.csv", ("seed", "check", "epsilon", "omega", "bound", "pass"), rows))


def _puc_eps_run(task):
    from .pucthm.generators import puc_epsilon_scenario
    from .pucthm.theorems import verify_robustness

    seed, eps = task
    return seed, verify_robustness(puc_epsilon_scenario(seed, eps), "pbr", "PUC")


def _puc_exact_run(seed):
    from .pucthm.generators import puc_exact_scenario
    from .pucthm.theorems import verify_puc_theorem

    return seed, verify_puc_theorem(puc_exact_scenario(seed), pbr_measurement())


def audit_puc(args, report: RunReport, out: Path):
    from .pucthm.theorems import epsilon_of_experiment, verify_puc_theorem, verify_robustness

    rows = []
    header = ("seed", "check", "epsilon", "omega_diagonal", "omega_offdiagonal", "bound", "pass")
    if args.input:
        s = _load_input(args.input, report, "scenario")
        eps = epsilon_of_experiment(s, args.experiment)
        v = verify_robustness(s, args.experiment, "PUC")
        report.add("robustness_puc", v.passed, v.worst, v.bounds)
        rows.append(("input", "robustness_puc", eps, v.details["omega_diagonal"], v.details["omega_offdiagonal"], v.bounds["bound"], v.passed))
        if eps <= 1e-10:
            t = verify_puc_theorem(s, pbr_measurement(), args.experiment)
            report.add("puc_theorem", t.passed, t.worst, t.bounds)
            rows.append(("input", "puc_theorem", eps, t.details["omega_diagonal"], t.details["omega_offdiagonal"], 0.0, t.passed))
    else:
        eps = args.epsilon if args.epsilon is not None else 0.01
        seeds = _seeds(args)
        for seed, v in _run_seeds(_puc_exact_run, seeds, args.jobs):
            report.add(f"puc_theorem:seed={seed}", v.passed, v.worst, v.bounds)
            rows.append((seed, "puc_theorem", 0.0, v.details["omega_diagonal"], v.details["omega_offdiagonal"], 0.0, v.passed))
        for seed, v in _run_seeds(_puc_eps_run, [(s, eps) for s in seeds], args.jobs):
            report.add(f"robustness_puc:seed={seed}", v.passed, v.worst, v.bounds)
            rows.append((seed, "robustness_puc", v.bounds["epsilon"], v.details["omega_diagonal"], v.details["omega_offdiagonal"], v.bounds["bound"], v.passed))
    report.artifacts.append(io.write_csv(out / "puc_audit.csv", header, rows))


def audit_narray(args, report: RunReport, out: Path):
    from .pucthm.narray import canonical_array, extendibility_probe, n_array_determination, one_undetermined_array

    n_max = args.n_max
    rows = []
    for label, gen in (("canonical", canonical_array), ("one-undetermined", one_undetermined_array)):
        for n in range(3, n_max + 1):
            r = n_array_determination(gen(n))
            report.add(f"n_array:{label}:N={n}", r.passed, float(r.max_undetermined), {"lower_bound": r.lower_bound})
            rows.append((label, n, r.max_undetermined, r.min_fraction, r.lower_bound, r.passed))
        probe = extendibility_probe(gen, n_max)
        report.add(f"extendibility:{label}", probe.consistent, max(probe.mismatch.values(), default=0.0),
                   {"tol": probe.tol}, fractions={str(k): v for k, v in probe.fractions.items()})
    report.artifacts.append(io.write_csv(out / "narray_audit.csv", ("family", "n", "max_undetermined", "min_fraction", "lower_bound", "pass"), rows))


def cmd_audit(args) -> int:
    out = Path(args.out or f"audit-{args.kind}")
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(f"audit {args.kind}")
    runner = {"bclm": audit_bclm, "pbr": audit_pbr, "puc": audit_puc, "n-array": audit_narray}[args.kind]
    try:
        runner(args, report, out)
    except PreconditionError as exc:
        report.add(exc.precondition, False, note=str(exc))
        print(str(exc), file=sys.stderr)
    report.write(out / "report.json")
    return _finish(report)


# plumbing ------------------------------------------------------------------

def _digest(path) -> str:
    try:
        return io.sha256_file(path)
    except OSError as exc:
        raise io.LoadError(f"cannot read {path}: {exc}") from None


def _load_input(path, report: RunReport, schema: str):
    report.inputs[str(path)] = _digest(path)
    return io.load(path, schema)


def _seeds(args) -> list[int]:
    if args.seeds < 1:
        raise io.LoadError("--seeds must be positive")
    return list(range(args.seed_start, args.seed_start + args.seeds))


def _finish(report: RunReport) -> int:
    for v in report.verdicts:
        worst = io.format_cell(float(v["worst"])) if isinstance(v["worst"], (int, float)) else v["worst"]
        print(f"{'PASS' if v['pass'] else 'FAIL'} {v['check']} worst={worst}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psiontic", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fixture", help="write a built-in fixture as JSON")
    f.add_argument("name", help=f"one of: {', '.join(FIXTURES)}")
    f.add_argument("--out", help="output directory (default: the fixture name)")
    f.set_defaults(func=cmd_fixture)

    v = sub.add_parser("verify", help="check a JSON model, certificate or scenario")
    v.add_argument("kind", choices=("model", "certificate", "scenario"))
    v.add_argument("path")
    v.add_argument("--tol", type=float)
    v.add_argument("--check", choices=("puc", "pip"), default="puc", help="scenario check to run")
    v.add_argument("--fragment", help="also check a model reproduces this fragment")
    v.add_argument("--out", help="report path (default: beside the input)")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("audit", help="run a seeded theorem audit")
    a.add_argument("kind", choices=("bclm", "pbr", "puc", "n-array"))
    a.add_argument("--input", help="scenario JSON to audit instead of generated ones (pbr, puc)")
    a.add_argument("--experiment", default="pbr", help="name of the antidistinguishing experiment in --input")
    a.add_argument("--seeds", type=int, default=1, help="number of seeds (default 1)")
    a.add_argument("--seed-start", type=int, default=DEFAULT_SEED, help=f"first seed (default {DEFAULT_SEED})")
    a.add_argument("--epsilon", type=float, help="near-preclusion budget (pbr: 0.0025, puc: 0.01)")
    a.add_argument("--n-max", type=int, default=6, help="largest array size for n-array (3..6)")
    a.add_argument("--out", help="output directory (default: audit-KIND)")
    a.add_argument("--jobs", type=int, default=1, help="worker processes for independent seeds")
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "epsilon", None) is not None and not (0 <= args.epsilon <= 1 and math.isfinite(args.epsilon)):
        print("--epsilon must lie in [0, 1]", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "n_max", 6) is not None and args.command == "audit" and not 3 <= args.n_max <= 6:
        print("--n-max must lie in [3, 6]", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except io.LoadError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError, ValueError) as exc:
        # loaders wrap what they can; anything left over is still bad input
        log.debug("unhandled input problem", exc_info=True)
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
