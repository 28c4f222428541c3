"""fockbound command-line driver.

    fockbound <verify|product|commutant|expectation|spectrum> --config PATH
              [--dump DIR] [--seed N] [--out PATH] [x-spec ...]

Exit codes: 0 success, 1 a check failed or did not converge, 2 bad input.
Reports are JSON with sorted keys and no timings, so equal inputs give
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, suites
from .algebra import choi_effros_symbolic, eigen_check_symbolic, EigenTaggedElement
from .boundary import (PeripheralElement, PeripheralSpanBasis, center_probe, closed_form_product,
                       commutant_probe, conditional_expectation)
from .config import RunConfig
from .dynamics import UcpMap, choi_effros_numeric, detect_peripheral_eigenvalue, eigen_residual
from .errors import BasisError, ConfigError, ConvergenceError, FockboundError, TrustError, ValidationError
from .operators import (add, compose, dump_csv, make_identity, max_abs, realize, restrict, scale,
                        trust_distance, trusted_entries)
from .scalars import UnitEigenvalue
from .words import TruncationParams
from .xspec import format_lambda, parse, single_word

COMMANDS = ("verify", "product", "commutant", "expectation", "spectrum")


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _entries_json(op, tol: float = 0.0) -> list:
    return [[list(J), list(I), v.real, v.imag] for J, I, v in trusted_entries(op, tol)]


def _lambda_json(lam):
    return None if lam is None else format_lambda(UnitEigenvalue.coerce(lam))


def _setup(cfg: RunConfig):
    p = TruncationParams(cfg.n, cfg.depth)
    return p, cfg.weights_obj(), UcpMap(cfg.weights_obj(), p)


def _parse_spec(text: str, n: int):
    try:
        spec = parse(text)
        spec.check_alphabet(n)
    except ValidationError as exc:
        raise InputError(str(exc)) from exc
    return spec


def _eigen_operand(spec, p, w, m, eigen_tol):
    """Numeric operator, its eigenvalue and (when available) the symbolic element."""
    sym = spec.to_symbolic(p.n) if spec.symbolic_ok else None
    op = spec.to_numeric(p)
    lam = None
    if sym is not None and not sym.is_zero():
        lam = eigen_check_symbolic(w, sym)
    if lam is None:
        try:
            lam = detect_peripheral_eigenvalue(m, op, eigen_tol)
        except ValidationError:
            lam = None
    if lam is None:
        raise InputError(f"{spec.text!r} is not a peripheral eigen-element")
    return op, lam, sym


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig, dump: Path | None = None):
    w = cfg.weights_obj()
    n, d, q, qp, k = cfg.n, cfg.depth, cfg.lambda_order, cfg.probe_lambda_order, cfg.word_bound
    plan = [
        ("relations", lambda: suites.relations_suite(n, d, cfg.identity_tol, time_limit=None)),
        ("eigen", lambda: suites.eigen_suite(n, d, q, w, cfg.identity_tol, cfg.eigen_tol)),
        ("products", lambda: suites.products_suite(n, d, q, k, k, w, cfg.product_tol, cfg.conv_tol,
                                                   time_limit=None)),
        ("phi", lambda: suites.phi_suite(n, d, q, k, w, cfg.identity_tol)),
        ("commutant", lambda: suites.commutant_suite(n, d, qp, k, w, cfg.svd_tol, cfg.gap_tol,
                                                     time_limit=None)[0]),
        ("factorization", lambda: suites.factorization_suite(n, d, w, cfg.seed, k=k, q=qp,
                                                             product_tol=cfg.product_tol)),
        ("expectation", lambda: suites.expectation_suite(n, d + 2, qp, w, cfg.seed,
                                                         tol=cfg.product_tol)),
        ("intertwine", lambda: suites.intertwine_suite(n, max(d - 2, k + 2), q, k, w, cfg.seed,
                                                       tol=cfg.identity_tol,
                                                       product_tol=cfg.product_tol)),
        ("oracle", lambda: suites.oracle_suite(n, (d, d + 2), w, cfg.seed,
                                               cfg.identity_tol)),
    ]
    results = []
    for name, run in plan:
        try:
            res = run()
        except FockboundError as exc:
            res = suites.SuiteResult(name, False, {}, {}, 0.0, [f"{type(exc).__name__}: {exc}"])
        print(res.line(), file=sys.stderr)
        results.append(res)
    report = {"suites": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        for r in results:
            (dump / f"{r.name.split()[0]}.json").write_text(
                json.dumps(r.to_dict(), sort_keys=True, indent=2))
    return report, 0 if report["passed"] else 1


def cmd_product(cfg: RunConfig, specs, dump: Path | None = None):
    if len(specs) != 2:
        raise InputError("product needs exactly two x-specs")
    p, w, m = _setup(cfg)
    xs, ys = (_parse_spec(s, cfg.n) for s in specs)
    X, lx, xsym = _eigen_operand(xs, p, w, m, cfg.eigen_tol)
    Y, ly, ysym = _eigen_operand(ys, p, w, m, cfg.eigen_tol)
    out = {"x": xs.text, "y": ys.text, "lambda_x": _lambda_json(lx), "lambda_y": _lambda_json(ly)}
    try:
        sot, steps = choi_effros_numeric(m, (X, lx), (Y, ly), tol=cfg.conv_tol, max_iter=cfg.max_iter,
                                         eigen_tol=cfg.eigen_tol, with_steps=True)
    except (ConvergenceError, TrustError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
        return out, 1
    # closed form: bare right-creation factors use the finite formulas
    closed, method, plain = None, None, None
    I = single_word(ys, "r")
    if I:
        closed, method = closed_form_product("right_mul", X, I, w, lx), "right_mul"
    elif single_word(xs, "rs"):
        closed, method = closed_form_product("star_left_mul", Y, single_word(xs, "rs"), w, ly), "star_left_mul"
    elif single_word(xs, "r"):
        J = single_word(xs, "r")
        closed, method = closed_form_product("left_mul", Y, J, w, ly), "left_mul"
        plain = compose(X, Y)
    elif single_word(ys, "rs"):
        J = single_word(ys, "rs")
        closed, method = closed_form_product("star_right_mul", X, J, w, lx), "star_right_mul"
        plain = compose(X, Y)
    elif xsym is not None and ysym is not None:
        z = choi_effros_symbolic(EigenTaggedElement(xsym, lx, w), EigenTaggedElement(ysym, ly, w))
        closed, method = realize(p, z), "symbolic"
        out["closed_form_symbolic"] = z.to_json()
    out.update({"steps": steps, "trust": sot.trust, "closed_form_method": method,
                "sot": _entries_json(sot)})
    code = 0
    if closed is not None:
        dist = trust_distance(sot, closed)
        out["closed_form"] = _entries_json(closed)
        out["distance"] = dist
        code = 0 if dist < cfg.product_tol else 1
    if plain is not None:
        corr = max_abs(add(closed, scale(-1, plain)))
        out["correction_norm"] = corr
        out["correction_vanishes"] = corr < cfg.identity_tol
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        dump_csv(sot, dump / "sot.csv")
        if closed is not None:
            dump_csv(closed, dump / "closed_form.csv")
    return out, code


def _probe_basis(cfg: RunConfig, p, w):
    if cfg.basis is None:
        return PeripheralSpanBasis.grid(cfg.n, w, cfg.probe_lambda_order, cfg.word_bound).independent(p)
    elems = []
    for text in cfg.basis:
        spec = _parse_spec(text, cfg.n)
        if not spec.symbolic_ok:
            raise InputError(f"basis element {text!r} needs a root-of-unity phase")
        elems.append(spec.to_symbolic(cfg.n))
    try:
        return PeripheralSpanBasis.from_elements(cfg.n, w, elems, labels=list(cfg.basis))
    except BasisError as exc:
        raise InputError(str(exc)) from exc


def cmd_commutant(cfg: RunConfig, dump: Path | None = None, center: bool = False):
    p, w, m = _setup(cfg)
    basis = _probe_basis(cfg, p, w)
    try:
        rep = commutant_probe(basis, m, cfg.svd_tol)
    except BasisError as exc:
        raise InputError(str(exc)) from exc
    out = {"commutant": rep.to_dict(), "basis": [e.label for e in basis.entries],
           "dropped_dependent": list(basis.dropped)}
    reports = [rep]
    if center:
        cen = center_probe(basis, m, cfg.svd_tol)
        out["center"] = cen.to_dict()
        reports.append(cen)
    ok = True
    for r in reports:
        ok &= r.nullspace_dimension == 1 and (r.gap_ratio is None or r.gap_ratio < cfg.gap_tol)
    if rep.degenerate_threshold:
        msg = (f"svd_tol = {cfg.svd_tol} >= 1 makes every singular value 'nonzero'; "
               "reported dimension 0 is a thresholding artifact")
        out["warning"] = msg
        print(f"warning: {msg}", file=sys.stderr)
        ok = False
    if dump is not None:
        rep.write_csv(dump / "commutant")
        if center:
            out_c = dump / "center"
            reports[1].write_csv(out_c)
    return out, 0 if ok else 1


def _peripheral(spec, p, w, q):
    """Split an x-spec into eigen-components with eigenvalues among the q-th roots."""
    comps = {}
    sym_parts = {}
    for term in spec.terms:
        if spec.symbolic_ok:
            el = spec.term_symbolic(p.n, term)
            if el.is_zero():
                continue
            lam = eigen_check_symbolic(w, el)
            op = realize(p, el)
        else:
            el = None
            op = spec.term_numeric(p, term)
            lam = detect_peripheral_eigenvalue(UcpMap(w, p), op)
        if lam is None:
            raise InputError(f"term {term} of {spec.text!r} is not a peripheral eigen-element")
        if lam.turns is None or (lam.turns * q).denominator != 1:
            raise InputError(f"eigenvalue {lam} of a term is not a {q}-th root of unity")
        t = Fraction(lam.turns)
        comps[t] = add(comps[t], op) if t in comps else op
        if el is not None:
            sym_parts[t] = sym_parts[t] + el if t in sym_parts else el
    return PeripheralElement(p, comps), sym_parts


def cmd_expectation(cfg: RunConfig, specs, dump: Path | None = None):
    """E(x) with its axiom residuals.

    Averaging over q steps costs q levels of trust, and the idempotence
    residual applies E twice, so the work is done at depth d + q and E(x)
    is reported on the depth-d block, where every entry is exact.
    """
    if len(specs) != 1:
        raise InputError("expectation needs exactly one x-spec")
    p, w, _ = _setup(cfg)
    q = cfg.probe_lambda_order
    pb = TruncationParams(cfg.n, cfg.depth + q)
    mb = UcpMap(w, pb)
    spec = _parse_spec(specs[0], cfg.n)
    X, sym = _peripheral(spec, pb, w, q)
    one = make_identity(pb)
    Ex = conditional_expectation(mb, X, q) if X.components else scale(0, one)
    fixed = X.components.get(Fraction(0), scale(0, one))
    res = {
        "idempotence": trust_distance(conditional_expectation(mb, Ex, q), Ex),
        "fixed_point_range": trust_distance(mb.apply(Ex), Ex),
        "unitality": trust_distance(conditional_expectation(mb, one, q), one),
        "lambda1_component": trust_distance(Ex, fixed),
    }
    Ed = restrict(Ex, p)
    out = {"x": spec.text, "lambda_order": q, "trust": Ed.trust, "E": _entries_json(Ed, 0.0),
           "components": sorted(str(t) for t in X.components), "axiom_residuals": res}
    if sym or not X.components:
        el = sym.get(Fraction(0))
        out["E_symbolic"] = [] if el is None else el.to_json()
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        dump_csv(Ed, dump / "expectation.csv")
    return out, 0 if max(res.values()) < cfg.product_tol else 1


def cmd_spectrum(cfg: RunConfig, specs, dump: Path | None = None):
    if len(specs) != 1:
        raise InputError("spectrum needs exactly one x-spec")
    p, w, m = _setup(cfg)
    spec = _parse_spec(specs[0], cfg.n)
    X = spec.to_numeric(p)
    try:
        lam = detect_peripheral_eigenvalue(m, X, cfg.eigen_tol)
    except ValidationError as exc:
        raise InputError(str(exc)) from exc
    out = {"x": spec.text, "lambda": _lambda_json(lam),
           "residual": None if lam is None else eigen_residual(m, X, lam)}
    if spec.symbolic_ok:
        sym = spec.to_symbolic(cfg.n)
        out["lambda_symbolic"] = None if sym.is_zero() else _lambda_json(eigen_check_symbolic(w, sym))
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        dump_csv(X, dump / "operator.csv")
    return out, 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fockbound",
                                 description="Peripheral boundary experiments on the full Fock space.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("specs", nargs="*", metavar="x-spec", help="operator expressions")
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--dump", type=Path, help="directory for CSV/JSON dumps")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", type=Path, help="write the report here instead of stdout")
    ap.add_argument("--center", action="store_true", help="commutant: also run the center probe")
    return ap


def render(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cmd = args.command
    try:
        if cmd == "verify":
            body, code = cmd_verify(cfg, args.dump)
        elif cmd == "product":
            body, code = cmd_product(cfg, args.specs, args.dump)
        elif cmd == "commutant":
            body, code = cmd_commutant(cfg, args.dump, args.center)
        elif cmd == "expectation":
            body, code = cmd_expectation(cfg, args.specs, args.dump)
        else:
            body, code = cmd_spectrum(cfg, args.specs, args.dump)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FockboundError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report = {"command": cmd, "config": cfg.to_dict(), "version": __version__, "exit_code": code,
              "result": body}
    text = render(report)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
