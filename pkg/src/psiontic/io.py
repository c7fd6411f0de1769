"""JSON (de)serialisation for fragments, models, scenarios, certificates, Bayes tables and reports.

Floats are written with Python's shortest round-trip ``repr``, so
``load(dump(x))`` reproduces every value bit for bit. Complex numbers are
``[re, im]`` pairs. Every document carries a ``"schema"`` tag. Anything
malformed raises :class:`LoadError`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .antidist import AntidistCertificate
from .omodel import OntModel
from .pucthm.scenarios import JointScenario, ProductJointScenario, pair_name, parse_pair_name
from .qcore import Experiment, Fragment, PureState

REPORT_DIGITS = 12


class LoadError(ValueError):
    """Input that cannot be turned into the requested object."""


def _reject_constant(name):
    raise LoadError(f"non-finite number {name} is not allowed")


def parse_json(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc}") from None


def _real(x, what="value") -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise LoadError(f"{what} must be a number, got {type(x).__name__}")
    x = float(x)
    if not math.isfinite(x):
        raise LoadError(f"{what} is not finite")
    return x


def _real_list(xs, what) -> np.ndarray:
    if not isinstance(xs, list):
        raise LoadError(f"{what} must be a list")
    return np.array([_real(x, what) for x in xs], dtype=float)


def _cplx(pair, what) -> complex:
    if not isinstance(pair, list) or len(pair) != 2:
        raise LoadError(f"{what} entries must be [re, im] pairs")
    return complex(_real(pair[0], what), _real(pair[1], what))


def _cvec(xs, what) -> np.ndarray:
    if not isinstance(xs, list) or not xs:
        raise LoadError(f"{what} must be a non-empty list")
    return np.array([_cplx(p, what) for p in xs], dtype=complex)


def _cmat(rows, what) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise LoadError(f"{what} must be a non-empty list of rows")
    out = [_cvec(r, what) for r in rows]
    if len({len(r) for r in out}) != 1:
        raise LoadError(f"{what} rows differ in length")
    return np.array(out)


def _enc_c(z) -> list:
    return [float(z.real), float(z.imag)]


def _enc_cvec(v) -> list:
    return [_enc_c(z) for z in v]


def _dict(d, what) -> dict:
    if not isinstance(d, dict):
        raise LoadError(f"{what} must be an object")
    return d


def _get(d, key, what):
    if key not in d:
        raise LoadError(f"{what} lacks {key!r}")
    return d[key]


def _int(x, what) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise LoadError(f"{what} must be an integer")
    return x


# experiments -------------------------------------------------------------

def experiment_to_json(e: Experiment) -> dict:
    return {"outcomes": [{"label": lab, "effect": [_enc_cvec(row) for row in eff]} for lab, eff in e.outcomes]}


def experiment_from_json(d, what="experiment") -> Experiment:
    outs = _get(_dict(d, what), "outcomes", what)
    if not isinstance(outs, list) or not outs:
        raise LoadError(f"{what} outcomes must be a non-empty list")
    items = []
    for o in outs:
        o = _dict(o, f"{what} outcome")
        lab = _get(o, "label", f"{what} outcome")
        if not isinstance(lab, str):
            raise LoadError(f"{what} outcome label must be a string")
        items.append((lab, _cmat(_get(o, "effect", f"{what} outcome"), f"{what} effect")))
    try:
        return Experiment(tuple(items))
    except ValueError as exc:
        raise LoadError(f"{what}: {exc}") from None


# fragments -----------------------------------------------------------------

def fragment_to_json(f: Fragment) -> dict:
    return {
        "schema": "fragment",
        "dim": f.dim,
        "preparations": {k: _enc_cvec(s.amplitudes) for k, s in f.preparations.items()},
        "experiments": {k: experiment_to_json(e) for k, e in f.experiments.items()},
    }


def fragment_from_json(d) -> Fragment:
    d = _dict(d, "fragment")
    dim = _int(_get(d, "dim", "fragment"), "dim")
    try:
        preps = {str(k): PureState(_cvec(v, f"preparation {k}")) for k, v in _dict(_get(d, "preparations", "fragment"), "preparations").items()}
        exps = {str(k): experiment_from_json(v, f"experiment {k}") for k, v in _dict(d.get("experiments", {}), "experiments").items()}
        return Fragment(dim, preps, exps)
    except LoadError:
        raise
    except ValueError as exc:
        raise LoadError(str(exc)) from None


# models --------------------------------------------------------------------

def _model_body(m: OntModel, names=None) -> dict:
    return {
        "lambda_size": m.lambda_size,
        "preparations": {k: v.tolist() for k, v in m.preparations.items()},
        "experiments": {
            k: [{"label": lab, "response": r.tolist()} for lab, r in outs] for k, outs in m.experiments.items()
        },
    }


def model_to_json(m: OntModel) -> dict:
    return {"schema": "model", **_model_body(m)}


def _model_parts(d, what):
    L = _int(_get(d, "lambda_size", what), "lambda_size")
    if L < 1:
        raise LoadError("lambda_size must be positive")
    preps = {str(k): _real_list(v, f"preparation {k}") for k, v in _dict(_get(d, "preparations", what), "preparations").items()}
    exps = {}
    for k, outs in _dict(d.get("experiments", {}), "experiments").items():
        if not isinstance(outs, list) or not outs:
            raise LoadError(f"experiment {k} must be a non-empty list of outcomes")
        items = []
        for o in outs:
            o = _dict(o, f"experiment {k} outcome")
            lab = _get(o, "label", f"experiment {k} outcome")
            if not isinstance(lab, str):
                raise LoadError("outcome label must be a string")
            items.append((lab, _real_list(_get(o, "response", f"experiment {k} outcome"), f"response {k}/{lab}")))
        exps[str(k)] = tuple(items)
    return L, preps, exps


def model_from_json(d) -> OntModel:
    d = _dict(d, "model")
    L, preps, exps = _model_parts(d, "model")
    try:
        return OntModel(L, preps, exps)
    except ValueError as exc:
        raise LoadError(str(exc)) from None


# scenarios -----------------------------------------------------------------

def scenario_to_json(s) -> dict:
    if isinstance(s, ProductJointScenario):
        flat = s.flatten()
        out = {"schema": "scenario", "kind": "product", "lambda_a_size": s.lambda_a_size, "lambda_b_size": s.lambda_b_size}
    else:
        flat = s
        out = {"schema": "scenario", "kind": "joint"}
    out.update(_model_body(flat.model))
    out["tags"] = list(flat.tags)
    return out


def scenario_from_json(d):
    d = _dict(d, "scenario")
    kind = d.get("kind", "joint")
    L, preps, exps = _model_parts(d, "scenario")
    tags = d.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise LoadError("tags must be a list of strings")
    try:
        pairs = {parse_pair_name(k): v for k, v in preps.items()}
        if kind == "joint":
            return JointScenario(L, pairs, exps, tuple(tags))
        if kind == "product":
            la = _int(_get(d, "lambda_a_size", "scenario"), "lambda_a_size")
            lb = _int(_get(d, "lambda_b_size", "scenario"), "lambda_b_size")
            if la < 1 or lb < 1 or la * lb != L:
                raise LoadError("lambda_a_size * lambda_b_size must equal lambda_size")
            for k, v in pairs.items():
                if v.size != L:
                    raise LoadError(f"preparation {pair_name(k)} has the wrong length")
            return ProductJointScenario(la, lb, {k: v.reshape(la, lb) for k, v in pairs.items()}, exps, tuple(tags))
    except LoadError:
        raise
    except ValueError as exc:
        raise LoadError(str(exc)) from None
    raise LoadError(f"unknown scenario kind {kind!r}")


# certificates --------------------------------------------------------------

def certificate_to_json(c: AntidistCertificate) -> dict:
    return {
        "schema": "certificate",
        "states": [_enc_cvec(s.amplitudes) for s in c.states],
        "experiment": experiment_to_json(c.experiment),
        "assignment": dict(c.assignment),
        "preclusion_values": [float(v) for v in c.preclusion_values],
    }


def certificate_from_json(d) -> AntidistCertificate:
    d = _dict(d, "certificate")
    states_raw = _get(d, "states", "certificate")
    if not isinstance(states_raw, list) or not states_raw:
        raise LoadError("certificate states must be a non-empty list")
    try:
        states = tuple(PureState(_cvec(s, "state")) for s in states_raw)
    except ValueError as exc:
        raise LoadError(str(exc)) from None
    exp = experiment_from_json(_get(d, "experiment", "certificate"))
    assignment = _dict(_get(d, "assignment", "certificate"), "assignment")
    for k, v in assignment.items():
        _int(v, f"assignment of {k}")
    values = _real_list(_get(d, "preclusion_values", "certificate"), "preclusion_values")
    return AntidistCertificate(states, exp, dict(assignment), tuple(float(v) for v in values))


# Bayes tables --------------------------------------------------------------

def _prob(x, what):
    """A probability given as a number or an exact rational string such as ``"2/3"``."""
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise LoadError(f"{what}: cannot parse {x!r} as a rational") from None
    return _real(x, what)


def bayes_to_json(prior: dict, conditionals: dict) -> dict:
    enc = lambda v: str(v) if isinstance(v, Fraction) else v  # noqa: E731
    return {
        "schema": "bayes",
        "prior": {k: enc(v) for k, v in prior.items()},
        "conditionals": [{"preparation": p, "outcome": o, "probability": enc(v)} for (p, o), v in conditionals.items()],
    }


def bayes_from_json(d):
    d = _dict(d, "bayes table")
    prior = {str(k): _prob(v, "prior") for k, v in _dict(_get(d, "prior", "bayes table"), "prior").items()}
    rows = _get(d, "conditionals", "bayes table")
    if not isinstance(rows, list):
        raise LoadError("conditionals must be a list")
    cond = {}
    for r in rows:
        r = _dict(r, "conditional")
        cond[(str(_get(r, "preparation", "conditional")), str(_get(r, "outcome", "conditional")))] = _prob(
            _get(r, "probability", "conditional"), "conditional"
        )
    return prior, cond


# dispatch ------------------------------------------------------------------

_LOADERS = {
    "fragment": fragment_from_json,
    "model": model_from_json,
    "scenario": scenario_from_json,
    "certificate": certificate_from_json,
    "bayes": bayes_from_json,
}


def to_json(obj) -> dict:
    if isinstance(obj, Fragment):
        return fragment_to_json(obj)
    if isinstance(obj, OntModel):
        return model_to_json(obj)
    if isinstance(obj, (JointScenario, ProductJointScenario)):
        return scenario_to_json(obj)
    if isinstance(obj, AntidistCertificate):
        return certificate_to_json(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_json(d, expected: str | None = None):
    d = _dict(d, "document")
    schema = d.get("schema")
    if expected is not None and schema != expected:
        raise LoadError(f"expected schema {expected!r}, found {schema!r}")
    if schema not in _LOADERS:
        raise LoadError(f"unknown schema {schema!r}")
    return _LOADERS[schema](d)


def dumps(obj) -> str:
    data = obj if isinstance(obj, dict) else to_json(obj)
    return json.dumps(data, indent=1, allow_nan=False) + "\n"


def save(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def load(path, expected: str | None = None):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise LoadError(f"cannot read {path}: {exc}") from None
    return from_json(parse_json(text), expected)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# reports -------------------------------------------------------------------

def report_float(x):
    """Round to the fixed number of significant digits used in human-facing reports."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.{REPORT_DIGITS}g}")
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, dict):
        return {str(k): report_float(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [report_float(v) for v in x]
    return x


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{REPORT_DIGITS}g}"
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format_cell(x) for x in r])
    return path
