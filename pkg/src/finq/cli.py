"""Command-line verifier: load a JSON manifest, run check suites, print reports.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from . import linalg as la
from .action import (Action, action_from_json, group_like_cocycle, group_likes, is_invariant_weight,
                     ovw_checks, v_theta_checks, validate_action)
from .crossed import (CrossedProduct, biduality, crossed_checks, dual_weight, dual_weight_checks,
                      dual_weight_modular_checks, fixed_point_duality_check)
from .errors import FinqError, InputError, TheoremViolation
from .finvn import ConcreteStarAlgebra, Weight, is_factor, weight_from_json
from .implementation import (agrees_with_v_theta, biduality_cocycle, cocycle_change_check,
                             implementation_checks, unitary_implementation, weight_change_check)
from .inclusion import (cocycle_surjection_check, depth2_check, depth2_to_json,
                        dual_action_witness, inclusion_checks, outer_minimal_logic, semidual_check)
from .qgroup import dual_checks, find_isomorphism, qgroup_from_json, validate
from .report import Report

log = logging.getLogger("finq")

SUITES = ("axioms", "crossed", "dualweight", "implementation", "inclusion", "all")
KINDS = ("quantum_group", "algebra", "weight", "action")
# the biduality cocycle lives on B(H) (x) N and its crossed product on H (x) H (x) N;
# skip it when that ambient space gets large
BIDUAL_COCYCLE_LIMIT = 32

ANCHOR_DUAL_ISO = "quantum-group/duality"
ANCHOR_PIPELINE = "pipeline/error"


@dataclass
class Manifest:
    quantum_groups: dict = field(default_factory=dict)
    algebras: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)
    dual_iso: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)
    source: str = ""

    @property
    def entries(self) -> dict:
        out = {}
        for d in (self.quantum_groups, self.algebras, self.weights, self.actions):
            out.update(d)
        return out

    def __len__(self):
        return len(self.entries)

    def weights_for(self, a: Action) -> list:
        """Weights living on the target of ``a``; the trace when none are listed."""
        ws = [w for w in self.weights.values() if w.algebra is a.target]
        return ws or [Weight.trace(a.target, "trace")]


def default_manifest_path() -> pathlib.Path:
    return pathlib.Path(str(resources.files("finq") / "data" / "corpus.json"))


def _parse(text: str, source: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return data


def _settings(raw) -> dict:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise InputError("settings must be an object")
    out = {"tolerance": la.DEFAULT_TOL, "report": "text", "seed": 0}
    if "tolerance" in raw:
        tol = raw["tolerance"]
        if not isinstance(tol, (int, float)) or not tol > 0:
            raise InputError(f"settings.tolerance must be a positive number, got {tol!r}")
        out["tolerance"] = float(tol)
    if "report" in raw:
        if raw["report"] not in ("json", "text"):
            raise InputError(f"settings.report must be 'json' or 'text', got {raw['report']!r}")
        out["report"] = raw["report"]
    if "seed" in raw:
        if not isinstance(raw["seed"], int) or raw["seed"] < 0:
            raise InputError(f"settings.seed must be a non-negative integer, got {raw['seed']!r}")
        out["seed"] = raw["seed"]
    return out


def manifest_from_dict(data: dict, source: str = "<manifest>") -> Manifest:
    if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
        raise InputError(f"{source}: expected an object with an 'entries' list")
    man = Manifest(settings=_settings(data.get("settings")), source=source)
    seen = set()
    by_kind = {k: [] for k in KINDS}
    for i, e in enumerate(data["entries"]):
        if not isinstance(e, dict):
            raise InputError(f"entry {i} is not an object")
        kind, name = e.get("kind"), e.get("name")
        if kind not in KINDS:
            raise InputError(f"entry {i} ({name!r}): unknown kind {kind!r}")
        if not isinstance(name, str) or not name:
            raise InputError(f"entry {i} has no name")
        if name in seen:
            raise InputError(f"duplicate name {name!r}")
        seen.add(name)
        by_kind[kind].append(e)
    for e in by_kind["quantum_group"]:
        man.quantum_groups[e["name"]] = qgroup_from_json(e)
    for e in by_kind["quantum_group"]:
        ref = e.get("dual_iso")
        if ref is not None:
            if ref not in man.quantum_groups:
                raise InputError(f"quantum_group {e['name']!r}: unresolved reference {ref!r} in dual_iso")
            man.dual_iso[e["name"]] = ref
    for e in by_kind["algebra"]:
        man.algebras[e["name"]] = ConcreteStarAlgebra.from_json(e)
    for e in by_kind["weight"]:
        ref = e.get("algebra")
        if ref not in man.algebras:
            raise InputError(f"weight {e['name']!r}: unresolved reference to algebra {ref!r}")
        man.weights[e["name"]] = weight_from_json(e, man.algebras[ref])
    for e in by_kind["action"]:
        ref = e.get("qg")
        if ref not in man.quantum_groups:
            raise InputError(f"action {e['name']!r}: unresolved reference to quantum group {ref!r}")
        man.actions[e["name"]] = action_from_json(e, man.quantum_groups, man.algebras)
    return man


def load_manifest(path) -> Manifest:
    path = pathlib.Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror}") from None
    return manifest_from_dict(_parse(text, str(path)), path.name)


def resolve_tol(flag: float | None, manifest: Manifest | None) -> float:
    """CLI flag, then FINQ_TOL, then the manifest setting, then the default."""
    if flag is not None:
        return float(flag)
    env = os.environ.get("FINQ_TOL")
    if env:
        try:
            val = float(env)
        except ValueError:
            raise InputError(f"FINQ_TOL is not a number: {env!r}") from None
        if not val > 0:
            raise InputError(f"FINQ_TOL must be positive, got {val}")
        return val
    if manifest is not None:
        return manifest.settings["tolerance"]
    return la.DEFAULT_TOL


# -- suites ------------------------------------------------------------------------


def _guard(rep: Report, check_id: str, anchor: str, tol: float, fn):
    """Run ``fn`` and fold its report into ``rep``; theorem violations become failed records."""
    try:
        out = fn()
    except TheoremViolation as exc:
        res = exc.residual if exc.residual is not None else np.inf
        rep.add(check_id, anchor, max(res, 10 * tol), tol, note=f"TheoremViolation: {exc}")
        return None
    except InputError:
        raise
    except FinqError as exc:
        rep.add(check_id, anchor, np.inf, tol, note=f"{type(exc).__name__}: {exc}")
        return None
    if isinstance(out, Report):
        rep.extend(out)
    return out


def suite_axioms(man: Manifest, tol: float, seed: int) -> Report:
    rep = Report(title="axioms")
    for name, qg in man.quantum_groups.items():
        _guard(rep, f"{name}.validate", "quantum-group/axioms", tol, lambda: validate(qg, tol, name))
        _guard(rep, f"{name}.dual", "quantum-group/duality", tol, lambda: dual_checks(qg, tol, name))
        other = man.dual_iso.get(name)
        if other is not None:
            def iso(qg=qg, other=other, name=name):
                r = Report()
                res = find_isomorphism(qg.dual(), man.quantum_groups[other])
                r.add(f"{name}.dual_isomorphic_to_{other}", ANCHOR_DUAL_ISO, res.residual, max(tol, 1e-8),
                      note=res.message)
                return r
            _guard(rep, f"{name}.dual_isomorphic_to_{other}", ANCHOR_DUAL_ISO, tol, iso)
    for name, a in man.actions.items():
        _guard(rep, f"{name}.action", "action/coaction", tol, lambda: validate_action(a, tol, name))
        _guard(rep, f"{name}.ovw", "action/operator-valued-weight", tol, lambda: ovw_checks(a, tol, name))
    return rep


def suite_crossed(man: Manifest, tol: float, seed: int) -> Report:
    rep = Report(title="crossed")
    for name, a in man.actions.items():
        cp = CrossedProduct(a, name=f"cp({name})")

        def dim_note(cp=cp):
            r = crossed_checks(cp, tol, seed=seed)
            r.records[0].note += f" factor={is_factor(cp.algebra)}"
            return r
        _guard(rep, f"cp({name}).crossed", "crossed-product/definition", tol, dim_note)
        _guard(rep, f"cp({name}).fixed", "crossed-product/fixed-point-duality", tol,
               lambda: fixed_point_duality_check(cp, tol))
        _guard(rep, f"cp({name}).bidual", "crossed-product/biduality", tol, lambda: biduality(cp, tol).report)
    return rep


def _pairs(man: Manifest):
    for name, a in man.actions.items():
        for w in man.weights_for(a):
            yield name, a, w


def suite_dualweight(man: Manifest, tol: float, seed: int) -> Report:
    rep = Report(title="dualweight")
    for name, a, w in _pairs(man):
        pre = f"{name}[{w.name}]"

        def run(a=a, w=w, pre=pre):
            cp = CrossedProduct(a, w, name=f"cp({name})")
            dw = dual_weight(cp, w, tol)
            r = dual_weight_checks(dw, tol, prefix=pre)
            r.extend(dual_weight_modular_checks(dw, tol, prefix=pre))
            return r
        _guard(rep, pre + ".dual_weight", "dual-weight/definition", tol, run)
    return rep


def suite_implementation(man: Manifest, tol: float, seed: int) -> Report:
    rep = Report(title="implementation")
    for name, a, w in _pairs(man):
        pre = f"{name}[{w.name}]"
        _guard(rep, pre + ".implementation", "unitary-implementation/definition", tol,
               lambda: implementation_checks(unitary_implementation(a, w, tol, check=False), tol, prefix=pre))
        ok, _ = is_invariant_weight(w, a, tol)
        if ok:
            def vt(a=a, w=w, pre=pre):
                r = v_theta_checks(a, w, tol, prefix=pre)
                r.add(pre + ".u_equals_v_theta", "unitary-implementation/invariant-weight-agreement",
                      agrees_with_v_theta(a, w, tol), max(tol, 1e-8))
                return r
            _guard(rep, pre + ".u_equals_v_theta", "unitary-implementation/invariant-weight-agreement", tol, vt)
    for name, a in man.actions.items():
        ws = man.weights_for(a)
        for w1 in ws:
            for w2 in ws:
                if w1 is not w2:
                    pre = f"{name}[{w1.name}->{w2.name}]"
                    _guard(rep, pre + ".weight_change", "unitary-implementation/weight-change", tol,
                           lambda: weight_change_check(a, w1, w2, tol, prefix=pre))
        w = ws[0]
        for i, u0 in enumerate(group_likes(a.qg)):
            if la.residual(u0, a.qg.unit) <= tol:
                continue
            pre = f"{name}[group_like{i}]"
            _guard(rep, pre + ".cocycle_change", "unitary-implementation/cocycle-change", tol,
                   lambda: cocycle_change_check(a, group_like_cocycle(a, u0), w, tol, prefix=pre))
        h = a.qg.pi_basis.shape[1]
        if h * h * h * a.n <= BIDUAL_COCYCLE_LIMIT:
            pre = f"{name}[bidual_cocycle]"

            def bc(a=a, pre=pre):
                mu, c = biduality_cocycle(a)
                return cocycle_change_check(mu, c, Weight.trace(mu.target, "trace"), tol, prefix=pre)
            _guard(rep, pre + ".cocycle_change", "unitary-implementation/cocycle-change", tol, bc)
    return rep


def suite_inclusion(man: Manifest, tol: float, seed: int) -> Report:
    rep = Report(title="inclusion")
    for name, a in man.actions.items():
        w = man.weights_for(a)[0]
        pre = f"{name}[{w.name}]"
        _guard(rep, pre + ".inclusion", "inclusion/basic-construction", tol,
               lambda: inclusion_checks(a, w, tol, prefix=pre, seed=seed))
        for i, u0 in enumerate(group_likes(a.qg)):
            pre_c = f"{name}[group_like{i}]"
            _guard(rep, pre_c + ".cocycle_rho", "inclusion/cocycle-equivalent-surjection", tol,
                   lambda: cocycle_surjection_check(a, group_like_cocycle(a, u0), tol=tol, prefix=pre_c, seed=seed))
        h = a.qg.pi_basis.shape[1]
        if h * h * h * a.n <= BIDUAL_COCYCLE_LIMIT:
            pre_b = f"{name}[bidual_cocycle]"

            def bc(a=a, pre_b=pre_b):
                mu, c = biduality_cocycle(a)
                return cocycle_surjection_check(mu, c, tol=tol, prefix=pre_b, seed=seed)
            _guard(rep, pre_b + ".cocycle_rho", "inclusion/cocycle-equivalent-surjection", tol, bc)

        def sd(a=a, name=name):
            r = Report()
            cp = CrossedProduct(a)
            res = semidual_check(cp.dual_action, witness=dual_action_witness(cp), tol=tol)
            r.add(f"{name}.dual_action_semidual", "inclusion/semidual", res.residual, tol, note=res.note)
            return r
        _guard(rep, f"{name}.semidual", "inclusion/semidual", tol, sd)
    _guard(rep, "outer_minimal", "inclusion/outer-minimal", tol,
           lambda: outer_minimal_logic(list(man.actions.values()), tol))
    return rep


SUITE_FUNCS = {
    "axioms": suite_axioms,
    "crossed": suite_crossed,
    "dualweight": suite_dualweight,
    "implementation": suite_implementation,
    "inclusion": suite_inclusion,
}


def run_suite(man: Manifest, suite: str, tol: float | None = None, seed: int | None = None) -> Report:
    """Run a named suite; records come back sorted by check id."""
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    tol = resolve_tol(tol, man)
    seed = man.settings["seed"] if seed is None else seed
    names = list(SUITE_FUNCS) if suite == "all" else [suite]
    rep = Report(title=f"suite {suite}")
    with la.tolerance(tol):
        for s in names:
            log.info("running suite %s", s)
            rep.extend(SUITE_FUNCS[s](man, tol, seed))
    return rep.sorted()


# -- command line -------------------------------------------------------------------


def _select(d: dict, names, what: str) -> dict:
    if not names:
        return d
    missing = [n for n in names if n not in d]
    if missing:
        raise InputError(f"unresolved reference: no {what} named {', '.join(map(repr, missing))}")
    return {n: d[n] for n in names}


def _weight(man: Manifest, a: Action, name: str | None) -> Weight:
    if name is None:
        return man.weights_for(a)[0]
    if name not in man.weights:
        raise InputError(f"unresolved reference: no weight named {name!r}")
    w = man.weights[name]
    if w.algebra is not a.target:
        raise InputError(f"weight {name!r} is not on the target of action {a.name!r}")
    return w


def _emit(path, payload: dict) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".npy":
        np.save(path, np.asarray(payload["matrix"]))
        return
    out = dict(payload)
    if "matrix" in out:
        out["matrix"] = la.matrix_to_json(out["matrix"])
    path.write_text(json.dumps(out, indent=1) + "\n")


def cmd_validate(man, args, tol):
    rep = Report(title="validate")
    for name, qg in _select(man.quantum_groups, args.qg, "quantum group").items():
        _guard(rep, f"{name}.validate", "quantum-group/axioms", tol, lambda: validate(qg, tol, name))
    if args.emit_matrix:
        name, qg = next(iter(_select(man.quantum_groups, args.qg, "quantum group").items()))
        _emit(args.emit_matrix, {"name": f"W({name})", "matrix": qg.W})
    return rep, {}


def cmd_dual(man, args, tol):
    rep = Report(title="dual")
    extra = {}
    for name, qg in _select(man.quantum_groups, args.qg, "quantum group").items():
        _guard(rep, f"{name}.dual", "quantum-group/duality", tol, lambda: dual_checks(qg, tol, name))
        other = man.dual_iso.get(name)
        if other is not None:
            res = find_isomorphism(qg.dual(), man.quantum_groups[other])
            rep.add(f"{name}.dual_isomorphic_to_{other}", ANCHOR_DUAL_ISO, res.residual, max(tol, 1e-8),
                    note=res.message)
        extra[name] = {"dual_dim": qg.dual().dim, "dual_blocks": list(qg.dual_data.algebra.blocks.sizes)}
    if args.emit_matrix:
        name, qg = next(iter(_select(man.quantum_groups, args.qg, "quantum group").items()))
        _emit(args.emit_matrix, {"name": f"W_hat({name})", "matrix": qg.dual().W})
    return rep, {"duals": extra}


def cmd_action_validate(man, args, tol):
    rep = Report(title="action-validate")
    for name, a in _select(man.actions, args.action, "action").items():
        _guard(rep, f"{name}.action", "action/coaction", tol, lambda: validate_action(a, tol, name))
        _guard(rep, f"{name}.ovw", "action/operator-valued-weight", tol, lambda: ovw_checks(a, tol, name))
    return rep, {}


def cmd_crossed(man, args, tol):
    rep = Report(title="crossed")
    extra = {}
    acts = _select(man.actions, args.action, "action")
    for name, a in acts.items():
        w = _weight(man, a, args.theta) if args.theta else None
        cp = CrossedProduct(a, w, name=f"cp({name})")
        _guard(rep, f"cp({name}).crossed", "crossed-product/definition", tol,
               lambda: crossed_checks(cp, tol, seed=args.seed))
        _guard(rep, f"cp({name}).fixed", "crossed-product/fixed-point-duality", tol,
               lambda: fixed_point_duality_check(cp, tol))
        _guard(rep, f"cp({name}).bidual", "crossed-product/biduality", tol, lambda: biduality(cp, tol).report)
        if w is not None:
            def dwc(cp=cp, w=w, name=name):
                dw = dual_weight(cp, w, tol)
                r = dual_weight_checks(dw, tol, prefix=f"{name}[{w.name}]")
                r.extend(dual_weight_modular_checks(dw, tol, prefix=f"{name}[{w.name}]"))
                return r
            _guard(rep, f"{name}[{w.name}].dual_weight", "dual-weight/definition", tol, dwc)
        extra[name] = {"dim": cp.algebra.dim, "factor": bool(is_factor(cp.algebra)),
                       "blocks": list(cp.algebra.blocks.sizes)}
        if args.emit_matrix and name == next(iter(acts)):
            _emit(args.emit_matrix, {"name": f"alpha_images({name})",
                                     "matrices": [la.matrix_to_json(x) for x in cp.alpha_images]})
    return rep, {"crossed_products": extra}


def cmd_implement(man, args, tol):
    rep = Report(title="implement")
    acts = _select(man.actions, args.action, "action")
    for name, a in acts.items():
        w = _weight(man, a, args.theta)
        pre = f"{name}[{w.name}]"
        impl = _guard(rep, pre + ".implementation", "unitary-implementation/definition", tol,
                      lambda: unitary_implementation(a, w, tol, check=False))
        if impl is not None:
            rep.extend(implementation_checks(impl, tol, prefix=pre))
            if args.emit_matrix and name == next(iter(acts)):
                _emit(args.emit_matrix, {"name": f"U({pre})", "matrix": impl.U})
    return rep, {}


def cmd_tower(man, args, tol):
    rep = Report(title="tower")
    extra = {}
    acts = _select(man.actions, args.action, "action")
    for name, a in acts.items():
        w = _weight(man, a, args.theta)
        pre = f"{name}[{w.name}]"
        _guard(rep, pre + ".inclusion", "inclusion/basic-construction", tol,
               lambda: inclusion_checks(a, w, tol, prefix=pre, seed=args.seed))
        res = depth2_check(a.fixed_points, a.target, w)
        extra[name] = depth2_to_json(res)
        if args.figures:
            from .figures import bratteli_figure
            m = res.matrices
            d = pathlib.Path(args.figures)
            bratteli_figure([m["N0_N1"], m["N1_N2"], m["N2_N3"]], ["N0", "N1", "N2", "N3"],
                            d / f"tower_{name}.png", title=f"Jones tower of N^alpha in N, {name}")
            bratteli_figure([m["A_B"], m["B_C"]], ["A", "B", "C"], d / f"relcomm_{name}.png",
                            title=f"relative commutants, {name}")
        if args.emit_matrix and name == next(iter(acts)):
            out = pathlib.Path(args.emit_matrix)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps({"name": f"inclusion_matrices({name})",
                                       "inclusion_matrices": extra[name]["inclusion_matrices"]}, indent=1) + "\n")
    return rep, {"towers": extra}


def cmd_predicates(man, args, tol):
    acts = _select(man.actions, args.action, "action")
    rep = outer_minimal_logic(list(acts.values()), tol)
    extra = {}
    for name, a in acts.items():
        res = semidual_check(a, seed=args.seed, tol=tol)
        extra[name] = {"semidual": bool(res.flag), "semidual_residual": float(res.residual),
                       "solution_dim": int(res.solution_dim), "note": res.note}
        if args.emit_matrix and res.v is not None and name == next(iter(acts)):
            _emit(args.emit_matrix, {"name": f"semidual_v({name})", "matrix": res.v})
    return rep, {"semidual": extra}


def cmd_suite(man, args, tol):
    return run_suite(man, args.suite, tol, args.seed), {}


COMMANDS = {
    "validate": cmd_validate,
    "dual": cmd_dual,
    "action-validate": cmd_action_validate,
    "crossed": cmd_crossed,
    "implement": cmd_implement,
    "tower": cmd_tower,
    "predicates": cmd_predicates,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-m", "--manifest", help="JSON manifest (default: the bundled corpus)")
    common.add_argument("--tol", type=float, default=None, help="residual threshold")
    common.add_argument("--report", choices=("json", "text"), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--emit-matrix", dest="emit_matrix", default=None, metavar="PATH")
    common.add_argument("--figures", default=None, metavar="DIR", help="write matplotlib figures here")
    common.add_argument("--theta", default=None, help="weight name for crossed/implement/tower")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="finq", description="Residual checks for finite quantum group actions.")
    p.add_argument("--version", action="version", version=f"finq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("validate", "dual"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--qg", action="append", help="restrict to these quantum groups")
    for name in ("action-validate", "crossed", "implement", "tower", "predicates"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--action", action="append", help="restrict to these actions")
    s = sub.add_parser("suite", parents=[common])
    s.add_argument("suite", choices=SUITES)
    return p


def _render(rep: Report, fmt: str, meta: dict, extra: dict) -> str:
    if fmt == "json":
        d = {"meta": meta, **rep.to_dict(timing=True)}
        if extra:
            d["details"] = extra
        return json.dumps(d, indent=2, default=_json_default)
    lines = [rep.to_text()]
    if extra:
        lines.append(json.dumps(extra, indent=1, default=_json_default))
    return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        path = args.manifest or default_manifest_path()
        man = load_manifest(path)
        tol = resolve_tol(args.tol, man)
        args.seed = man.settings["seed"] if args.seed is None else args.seed
        fmt = args.report or man.settings["report"]
        with la.tolerance(tol):
            rep, extra = COMMANDS[args.command](man, args, tol)
        rep = rep.sorted()
    except InputError as exc:
        print(f"finq: input error: {exc}", file=sys.stderr)
        return 2
    meta = {"command": args.command, "manifest": man.source, "tolerance": tol, "seed": args.seed,
            "version": __version__}
    if args.command == "suite":
        meta["suite"] = args.suite
    print(_render(rep, fmt, meta, extra))
    if args.figures:
        from .figures import residual_figure, timing_figure
        d = pathlib.Path(args.figures)
        residual_figure(rep, d / f"{args.command}_residuals.png")
        timing_figure(rep, d / f"{args.command}_timing.png")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
