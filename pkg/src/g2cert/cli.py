"""Command-line driver: run registered checks on a model and emit reports."""
from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import g2, numeric
from .exterior import DiffForm, VectorField, _interior
from .models import base, checks
from .models.base import AnnihilationFailure, DistributionModel, MissingParam, UnknownModel
from .models.catalog import BUILTINS, builtin
from .symcore import Context, constant, dynamic
from .symcore.errors import SymcoreError

REPORT_VERSION = 1
MAX_SEED = 2**64 - 1


class UnknownCheck(KeyError):
    pass


class SchemaError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NotApplicable(Exception):
    pass


# ------------------------------------------------------------------ plans
@dataclass
class CheckPlan:
    model: str
    checks: list = field(default_factory=list)
    points: int = 3
    seed: int = 0
    threads: int = 1
    params: dict | None = None
    model_file: str | None = None

    def __post_init__(self):
        if self.points < 3:
            raise ValueError("points must be >= 3")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned value")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for c in self.checks:
            if c not in CHECKS:
                raise UnknownCheck(f"unknown check {c!r}; see `g2cert list`")


class _Session:
    """Per-run model plus lazily shared results (basis, constant table)."""

    def __init__(self, plan: CheckPlan, model: DistributionModel):
        self.plan = plan
        self.model = model
        self._lock = threading.RLock()
        self._cache = {}

    def get(self, key, make):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = make()
            return self._cache[key]

    def basis(self):
        return self.get("basis", lambda: g2.generate(base.seed_triple(self.model)))

    def table(self):
        return self.get("table", lambda: g2.structure_constants(self.basis(), self.plan.points, self.plan.seed))


# ---------------------------------------------------------------- checks
def _requires(model, *names):
    if model.name not in names:
        raise NotApplicable(f"check applies to {', '.join(names)}, not {model.name}")


def _report_details(rep: checks.Report) -> tuple[bool, dict]:
    items = [
        {k: v for k, v in (("key", i.key), ("passed", i.passed), ("factor", i.factor), ("detail", i.detail)) if v not in (None, "")}
        for i in rep.items
    ]
    out = {"title": rep.title, "items": items}
    if rep.info:
        out["info"] = rep.info
    return rep.passed, out


def check_structure_table(s: _Session):
    sc = s.table()
    bad = g2.verify_table(sc)
    details = {
        "pairs": len(g2.PAIRS),
        "verified": sum(v == "symbolic" for v in sc.certificates.values()),
        "not_closed": sorted(g2._pname(p) for p, v in sc.certificates.items() if v != "symbolic"),
        "mismatches": bad,
    }
    ok = not bad and sc.all_verified()
    m = s.model
    if m.name == "hc_family" and not m.params["rho"].diff("x"):
        rec = checks.hc_recovery(s.plan.params)
        details["hilbert_cartan_comparison"] = _report_details(rec)[1]
    return ok, details


def check_jacobi(s: _Session):
    bad = g2.jacobi_failures(s.table())
    return not bad, {"failures": [list(t) for t in bad]}


def check_killing(s: _Session):
    B, rk, sig = g2.killing_form(s.table())
    return rk == 14, {"rank": rk, "signature": list(sig)}


def check_weights(s: _Session):
    sc = s.table()
    got = g2.cartan_weights(sc)
    want = g2.figure_weights(sc.cctx)
    res = {n: [str(v) for v in got[n]] for n in got}
    bad = [n for n in want if tuple(got[n]) != tuple(want[n])]
    return not bad, {"weights": res, "mismatches": bad, "matched": len(want) - len(bad)}


def check_theta_span(s: _Session):
    m = s.model
    from .exterior import NotInSpan, span_coefficients

    out, ok = {}, True
    if m.amap is not None:
        try:
            rows = base.theta_span(m)
            out["theta_rows"] = [[str(c) for c in r] for r in rows]
            want = m.displays.get("theta_rows")
            if want is not None:
                good = all(rows[i][j] == want[i][j] for i in range(3) for j in range(3))
                out["matches_display"] = good
                ok = ok and good
        except NotInSpan as e:
            return False, {"residual": str(e.residual)}
    if m.cfuncs is not None:
        T = base.big_theta(m.cfuncs, m.ctx)
        try:
            rows = [span_coefficients(f, list(m.omegas)) for f in T]
        except NotInSpan as e:
            return False, {"residual": str(e.residual)}
        out["Theta_rows"] = [[str(c) for c in r] for r in rows]
        want = m.displays.get("Theta_rows")
        if want is not None:
            good = all(rows[i][j] == want[i][j] for i in range(3) for j in range(3))
            out["matches_display"] = good
            ok = ok and good
    if not out:
        raise NotApplicable("model has neither an a-map nor c-functions")
    return ok, out


def check_residual_obstructions(s: _Session):
    from .models.chazy import ExtractionMismatch, chazy_k23_free, chazy_k32_free, residual_obstructions

    _requires(s.model, "chazy_k32", "chazy_k23")
    free = chazy_k32_free() if s.model.name == "chazy_k32" else chazy_k23_free()
    try:
        b1, b2 = residual_obstructions(free)
    except ExtractionMismatch as e:
        return False, {"error": str(e)}
    aux = free.params["aux"]
    out = {"b1": str(b1), "b2": str(b2), "b1_matches_display": b1 == aux.b1, "b2_matches_display": b2 == aux.b2}
    return out["b1_matches_display"] and out["b2_matches_display"], out


def check_reductions(s: _Session):
    _requires(s.model, "chazy_k32", "chazy_k23")
    return _report_details(checks.reduction_checks())


def check_lame_solutions(s: _Session):
    _requires(s.model, "lame_spin32", "lame_spin4")
    return _report_details(checks.lame_solution_checks())


def check_engel(s: _Session):
    _requires(s.model, "flat_cartan")
    res = base.engel_check()
    return all(res.values()), {"relations": res}


def check_rescaling(s: _Session):
    _requires(s.model, "flat_cartan")
    return _report_details(checks.rescaling_check())


def check_symmetry_condition(s: _Session):
    _requires(s.model, "flat_cartan")
    return _report_details(checks.symmetry_condition(s.basis()))


def check_seeds_annihilated(s: _Session):
    m = s.model
    S = base.seed_triple(m)
    forms = list(m.omegas)
    if m.cfuncs is not None:
        forms += list(base.big_theta(m.cfuncs, m.ctx))
    bad = []
    for i, X in enumerate(S[:2]):
        for j, w in enumerate(forms):
            v = _interior(X, w).coeffs.get((), None)
            if v:
                bad.append(f"form{j + 1}(S{i + 1}) = {v}")
    return not bad, {"forms": len(forms), "nonzero": bad}


def check_numeric_noth(s: _Session):
    _requires(s.model, "lame_spin32")
    r = numeric.noth_residual(samples=100)
    return r["passed"], r


def check_numeric_halphen(s: _Session):
    _requires(s.model, "lame_spin32")
    r = numeric.halphen_residual(samples=100)
    return r["passed"], r


def check_numeric_rk4_order(s: _Session):
    _requires(s.model, "lame_spin32", "chazy_k32")
    r = numeric.rk4_order_factor()
    return r["passed"], r


def check_numeric_path(s: _Session):
    _requires(s.model, "lame_spin32", "chazy_k32")
    r = numeric.spin32_path_check()
    return r["passed"], r


def check_numeric_float_bracket(s: _Session):
    r = numeric.float_bracket_check(s.basis(), s.table(), points=s.plan.points, seed=s.plan.seed)
    return r["passed"], r


CHECKS = {
    "structure_table": check_structure_table,
    "jacobi": check_jacobi,
    "killing": check_killing,
    "weights": check_weights,
    "theta_span": check_theta_span,
    "residual_obstructions": check_residual_obstructions,
    "reductions": check_reductions,
    "lame_solutions": check_lame_solutions,
    "engel": check_engel,
    "rescaling": check_rescaling,
    "symmetry_condition": check_symmetry_condition,
    "seeds_annihilated": check_seeds_annihilated,
    "numeric_noth": check_numeric_noth,
    "numeric_halphen": check_numeric_halphen,
    "numeric_rk4_order": check_numeric_rk4_order,
    "numeric_path": check_numeric_path,
    "numeric_float_bracket": check_numeric_float_bracket,
}

DEFAULT_CHECKS = {
    "flat_cartan": ["structure_table", "jacobi", "killing", "weights", "engel", "rescaling",
                    "symmetry_condition", "seeds_annihilated", "numeric_float_bracket"],
    "hilbert_cartan": ["structure_table", "theta_span", "seeds_annihilated", "numeric_float_bracket"],
    "hc_family": ["structure_table", "seeds_annihilated"],
    "chazy_k32": ["structure_table", "theta_span", "residual_obstructions", "reductions", "seeds_annihilated"],
    "chazy_k23": ["structure_table", "theta_span", "residual_obstructions", "reductions", "seeds_annihilated"],
    "lame_spin32": ["structure_table", "theta_span", "lame_solutions", "seeds_annihilated",
                    "numeric_noth", "numeric_halphen", "numeric_rk4_order"],
    "lame_spin4": ["structure_table", "theta_span", "lame_solutions", "seeds_annihilated"],
}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    return str(v)


def _run_one(s: _Session, name: str) -> dict:
    t = time.perf_counter()
    try:
        ok, details = CHECKS[name](s)
        status = "pass" if ok else "fail"
    except NotApplicable as e:
        status, details = "error", {"error": f"not applicable: {e}"}
    except Exception as e:  # a check that crashes is reported, not fatal
        status, details = "error", {"error": f"{type(e).__name__}: {e}"}
    return {"name": name, "status": status, "details": _jsonable(details),
            "elapsed_ms": int((time.perf_counter() - t) * 1000)}


def resolve_model(plan: CheckPlan) -> DistributionModel:
    if plan.model_file:
        m = load_model(plan.model_file)
        m.name = plan.model
        return m
    return builtin(plan.model, plan.params)


def run(plan: CheckPlan) -> dict:
    """Execute the plan; results are ordered as the checks were requested."""
    model = resolve_model(plan)
    names = plan.checks or DEFAULT_CHECKS.get(model.name, ["structure_table", "seeds_annihilated"])
    s = _Session(plan, model)
    if plan.threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as ex:
            results = list(ex.map(lambda n: _run_one(s, n), names))
    else:
        results = [_run_one(s, n) for n in names]
    summary = {
        "passed": sum(r["status"] == "pass" for r in results),
        "failed": sum(r["status"] == "fail" for r in results),
        "errors": sum(r["status"] == "error" for r in results),
    }
    return {"version": REPORT_VERSION, "model": plan.model, "seed": plan.seed, "checks": results, "summary": summary}


def exit_code(report: dict) -> int:
    sm = report["summary"]
    return 0 if sm["failed"] == 0 and sm["errors"] == 0 else 1


# ------------------------------------------------------------------ output
def emit(report: dict, fmt: str, path) -> None:
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=False) + "\n"
    elif fmt == "md":
        text = to_markdown(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    Path(path).write_text(text)


def to_markdown(report: dict) -> str:
    sm = report["summary"]
    lines = [
        f"# g2cert report: {report['model']}",
        "",
        f"seed {report['seed']}; passed {sm['passed']}, failed {sm['failed']}, errors {sm['errors']}",
        "",
        "| check | status | ms | note |",
        "|---|---|---|---|",
    ]
    for c in report["checks"]:
        d = c["details"]
        note = d.get("error") or ""
        if not note and c["status"] == "fail":
            note = "; ".join(f"{k}: {v}" for k, v in d.items() if k in ("mismatches", "failures", "nonzero"))[:200]
        lines.append(f"| {c['name']} | {c['status']} | {c['elapsed_ms']} | {note} |")
    return "\n".join(lines) + "\n"


def strip_timing(report: dict) -> dict:
    out = json.loads(json.dumps(report))
    for c in out["checks"]:
        c.pop("elapsed_ms", None)
    return out


# -------------------------------------------------------------- model files
MODEL_SCHEMA = {
    "type": "object",
    "required": ["coords", "forms", "fields"],
    "additionalProperties": False,
    "properties": {
        "coords": {"type": "array", "items": {"type": "string"}, "minItems": 5, "maxItems": 5},
        "constants": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "relation": {"type": "array", "prefixItems": [{"type": "integer", "minimum": 2}, {"type": "string"}],
                                 "minItems": 2, "maxItems": 2},
                },
            },
        },
        "atoms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "dx"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "dx": {"type": "string"}},
            },
        },
        "forms": {"type": "object", "minProperties": 3, "maxProperties": 3,
                  "additionalProperties": {"$ref": "#/$defs/five"}},
        "fields": {"type": "object", "minProperties": 2, "maxProperties": 2,
                   "additionalProperties": {"$ref": "#/$defs/five"}},
        "cfuncs": {"$ref": "#/$defs/five"},
    },
    "$defs": {"five": {"type": "array", "items": {"type": "string"}, "minItems": 5, "maxItems": 5}},
}


def _validate(data, source):
    import jsonschema

    v = jsonschema.Draft202012Validator(MODEL_SCHEMA)
    errs = sorted(v.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        loc = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{source}#{loc}", e.message)


def model_from_dict(data: dict, source="<model>") -> DistributionModel:
    _validate(data, source)
    atoms = []
    for c in data.get("constants", []):
        rel = c.get("relation")
        atoms.append(constant(c["name"], (rel[0], rel[1]) if rel else None))
    for a in data.get("atoms", []):
        atoms.append(dynamic(a["name"], a["dx"]))
    ctx = Context(data["coords"], atoms, name=Path(str(source)).stem)
    dx = [DiffForm.d(ctx, n) for n in ctx.coordinates]
    omegas = []
    for name, comps in data["forms"].items():
        w = DiffForm(ctx, 1)
        for c, e in zip(comps, dx):
            w = w + ctx.parse(c) * e
        omegas.append(w)
    spanning = tuple(VectorField(ctx, [ctx.parse(c) for c in comps]) for comps in data["fields"].values())
    cf = data.get("cfuncs")
    model = DistributionModel(ctx.name, ctx, tuple(omegas), spanning,
                              cfuncs=tuple(ctx.parse(c) for c in cf) if cf else None)
    model.check_annihilation()
    return model


def load_model(path) -> DistributionModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(str(path), f"invalid JSON: {e}") from e
    return model_from_dict(data, path)


def models_equal(a: DistributionModel, b: DistributionModel) -> bool:
    """Canonical comparison of charts, forms, spanning fields and c-functions."""
    if a.ctx.coordinates != b.ctx.coordinates:
        return False

    def forms(m):
        return [{k: str(v) for k, v in w.coeffs.items()} for w in m.omegas]

    def fields(m):
        return [[str(c) for c in X.components] for X in m.spanning]

    cf = lambda m: [str(c) for c in m.cfuncs] if m.cfuncs is not None else None  # noqa: E731
    return forms(a) == forms(b) and fields(a) == fields(b) and cf(a) == cf(b)


# -------------------------------------------------------------------- main
def _params(text):
    if not text:
        return None
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"bad parameter {item!r}; expected K=V")
        k, v = item.split("=", 1)
        v = v.strip()
        out[k.strip()] = v if v == "symbolic" else Fraction(v)
    return out


def _parser():
    p = argparse.ArgumentParser(prog="g2cert", description="Exact verification of split g2 vector-field algebras.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("list", help="list built-in models and registered checks")

    v = sub.add_parser("verify", help="run checks on a model")
    v.add_argument("model")
    v.add_argument("--check", action="append", default=[], metavar="NAME")
    v.add_argument("--points", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--json", metavar="PATH")
    v.add_argument("--md", metavar="PATH")
    v.add_argument("--model-file", metavar="PATH")
    v.add_argument("--params", metavar="K=V,...", help="numeric values for model constants")

    c = sub.add_parser("chazy", help="Chazy system utilities")
    csub = c.add_subparsers(dest="chazy_cmd", required=True)
    ci = csub.add_parser("integrate", help="integrate the (P, Q, R) system")
    ci.add_argument("--k", required=True)
    ci.add_argument("--init", required=True, metavar="P,Q,R")
    ci.add_argument("--range", required=True, metavar="X0:X1")
    g = ci.add_mutually_exclusive_group()
    g.add_argument("--step", type=float)
    g.add_argument("--rtol", type=float)
    ci.add_argument("--atol", type=float)
    ci.add_argument("--out", required=True, metavar="CSV")

    n = sub.add_parser("noth-residual", help="float Noth residual along a Lame chart")
    n.add_argument("--model", required=True)
    n.add_argument("--params", default="")
    n.add_argument("--samples", type=int, default=100)
    n.add_argument("--tol", type=float, default=numeric.RESIDUAL_TOL)
    return p


def _cmd_list():
    print("models:")
    for name in BUILTINS:
        print(f"  {name}")
    print("checks:")
    for name in CHECKS:
        print(f"  {name}")
    return 0


def _cmd_verify(a):
    plan = CheckPlan(a.model, a.check, a.points, a.seed, a.threads, _params(a.params), a.model_file)
    report = run(plan)
    if a.json:
        emit(report, "json", a.json)
    if a.md:
        emit(report, "md", a.md)
    for c in report["checks"]:
        print(f"{c['status']:5} {c['name']} ({c['elapsed_ms']} ms)")
    sm = report["summary"]
    print(f"passed {sm['passed']}, failed {sm['failed']}, errors {sm['errors']}")
    return exit_code(report)


def _cmd_integrate(a):
    k = Fraction(a.k)
    init = [float(v) for v in a.init.split(",")]
    if len(init) != 3:
        raise ValueError("--init needs three values P,Q,R")
    x0, x1 = (float(v) for v in a.range.split(":"))
    if a.step is not None:
        cfg = numeric.IntegratorConfig("rk4", x0, x1, step=a.step)
    else:
        cfg = numeric.IntegratorConfig("rkf45", x0, x1, rtol=a.rtol or numeric.RTOL, atol=a.atol or numeric.ATOL)
    try:
        traj = numeric.integrate(numeric.chazy_system(k), init, cfg)
    except (numeric.BlowUp, numeric.StepUnderflow) as e:
        print(f"integration stopped: {e}", file=sys.stderr)
        return 1
    traj.to_csv(a.out)
    x, y = traj.final
    print(f"{len(traj.samples)} samples, accepted {traj.accepted}, rejected {traj.rejected}; "
          f"x = {x:.17g}: " + ", ".join(f"{n} = {v:.17g}" for n, v in zip(traj.names, y)))
    return 0


def _cmd_noth(a):
    if a.model != "lame_spin32":
        raise ValueError("noth-residual supports the lame_spin32 chart only")
    params = _params(a.params) or {}
    unknown = set(params) - {"alpha", "beta", "g3", "delta"}
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    r = numeric.noth_residual(params.get("alpha", 1), params.get("beta", 0), params.get("g3", 4),
                              samples=a.samples, tol=a.tol)
    print(json.dumps(r))
    return 0 if r["passed"] else 1


def main(argv=None) -> int:
    p = _parser()
    try:
        a = p.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        if a.cmd == "list":
            return _cmd_list()
        if a.cmd == "verify":
            return _cmd_verify(a)
        if a.cmd == "chazy":
            return _cmd_integrate(a)
        return _cmd_noth(a)
    except (UnknownModel, UnknownCheck, MissingParam, SchemaError, AnnihilationFailure, SymcoreError, ValueError) as e:
        print(f"g2cert: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"g2cert: I/O error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
