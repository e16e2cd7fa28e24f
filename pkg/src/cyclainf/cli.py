"""Command-line driver: parse documents, run module operations, emit
deterministic human-readable and machine-readable reports.

Every subcommand is a thin composition of module operations; exit status is 0
exactly when the run produced no violations.  Output documents are canonical,
so identical inputs and flags give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from math import factorial

from .novikov import MonoidElement
from .ainf import (verify_ainf, verify_cyclic, verify_unital,
                   verify_morphism, verify_cyclic_morphism)
from .transfer import transfer_canonical
from .isotopy import (verify_isotopy, verify_isotopy2, integrate_to_morphism,
                      extend_isotopy)
from .deform import BoundingData, deform_by_b, mc_value, DivergentConfigurationError
from .trees import enumerate_trees, tree_partial_order, order_polytope_volume
from . import docio


def parallelism():
    """Worker cap from the environment; results never depend on it."""
    try:
        return max(1, int(os.environ.get("CYCLAINF_PARALLELISM", "1")))
    except ValueError:
        return 1


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_doc(doc, path, out):
    text = docio.serialize_document(doc)
    if path is None or path == "-":
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, MonoidElement):
        return [str(x.energy), x.maslov]
    if isinstance(x, dict):
        return {str(_jsonable(k)): _jsonable(v) for k, v in sorted(
            x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    return str(x)


def _emit(out, command, reports, extra=None):
    """Human lines followed by one machine-readable JSON line."""
    violations = []
    for rep in reports:
        for v in rep.violations:
            out.write("VIOLATION %s\n" % v)
            violations.append({"check": v.check, "k": v.k,
                               "beta": _jsonable(v.beta),
                               "where": _jsonable(v.where),
                               "discrepancy": _jsonable(v.discrepancy)})
    ok = not violations
    out.write("%s: %s\n" % (command, "ok" if ok else
                            "%d violation(s)" % len(violations)))
    machine = {"command": command, "ok": ok, "violations": violations}
    if extra:
        machine.update(_jsonable(extra))
    out.write("REPORT " + json.dumps(machine, sort_keys=True) + "\n")
    return 0 if ok else 1


def _load(path, expect=None):
    kind, obj, extras = docio.parse_document(_read(path))
    if expect is not None and kind not in expect:
        raise docio.DocumentError("expected a %s document, got %r"
                                  % (" or ".join(expect), kind))
    return kind, obj, extras


def cmd_verify(args, out):
    kind, obj, _ = _load(args.input)
    if kind == "algebra":
        reports = [verify_ainf(obj, args.k_max), verify_cyclic(obj, args.k_max)]
        if obj.unit is not None:
            reports.append(verify_unital(obj, args.k_max))
    elif kind == "isotopy":
        reports = [verify_isotopy(obj, args.k_max)]
    elif kind == "isotopy2":
        reports = [verify_isotopy2(obj, k_max=args.k_max or 3)]
    else:
        reports = [verify_morphism(obj, args.k_max),
                   verify_cyclic_morphism(obj, args.k_max)]
    return _emit(out, "verify", reports)


def cmd_transfer(args, out):
    _, algebra, _ = _load(args.input, ("algebra",))
    canonical, morphism, _ = transfer_canonical(algebra, k_max=args.k_max)
    _write_doc(docio.algebra_to_doc(canonical), args.out, out)
    return _emit(out, "transfer",
                 [verify_morphism(morphism), verify_cyclic_morphism(morphism)],
                 {"canonical_dim": canonical.space.dim})


def cmd_isotopy_verify(args, out):
    kind, iso, _ = _load(args.input, ("isotopy", "isotopy2"))
    if kind == "isotopy":
        reports = [verify_isotopy(iso, args.k_max)]
    else:
        reports = [verify_isotopy2(iso, k_max=args.k_max or 3)]
    return _emit(out, "isotopy-verify", reports)


def cmd_isotopy_integrate(args, out):
    _, iso, _ = _load(args.input, ("isotopy",))
    f = integrate_to_morphism(iso, args.tau0, args.tau1, k_max=args.k_max)
    _write_doc(docio.morphism_to_doc(f), args.out, out)
    return _emit(out, "isotopy-integrate",
                 [verify_morphism(f), verify_cyclic_morphism(f)],
                 {"tau0": str(Fraction(args.tau0)),
                  "tau1": str(Fraction(args.tau1))})


def cmd_isotopy_extend(args, out):
    _, iso, _ = _load(args.input, ("isotopy",))
    _, boundary, _ = _load(args.boundary, ("algebra",))
    if args.e_cut is None:
        raise docio.DocumentError("isotopy-extend needs --e-cut")
    ext = extend_isotopy(iso, boundary, Fraction(args.e_cut))
    _write_doc(docio.isotopy_to_doc(ext), args.out, out)
    return _emit(out, "isotopy-extend", [verify_isotopy(ext, args.k_max)],
                 {"e_cut": str(Fraction(args.e_cut))})


def cmd_deform(args, out):
    _, algebra, extras = _load(args.input, ("algebra",))
    if "bounding" not in extras:
        raise docio.DocumentError("deform needs a 'bounding' block")
    b = extras["bounding"]
    high = BoundingData(algebra.space, high=b.high)
    deformed = deform_by_b(algebra, high)
    _write_doc(docio.algebra_to_doc(deformed), args.out, out)
    extra = {}
    try:
        value = mc_value(algebra, b, divisor_data=extras.get("divisor"))
        extra["mc_value"] = {algebra.space.names[i]: str(c)
                             for i, c in value.items()}
    except DivergentConfigurationError as e:
        extra["mc_value_error"] = str(e)
    reports = [verify_ainf(deformed, args.k_max)]
    if algebra.unit is not None:
        reports.append(verify_unital(deformed, args.k_max))
    return _emit(out, "deform", reports, extra)


def cmd_trees(args, out):
    _, obj, _ = _load(args.input)
    monoid, e_cut = obj.monoid, obj.e_cut
    if args.e_cut is not None:
        e_cut = Fraction(args.e_cut)
    k_max = args.k_max if args.k_max is not None else 3
    table = []
    for beta in monoid.enumerate(e_cut):
        for k in range(0, k_max + 1):
            ts = enumerate_trees(monoid, beta, k, e_cut=e_cut)
            if not ts:
                continue
            vols = [str(order_polytope_volume(tree_partial_order(t)))
                    for t in ts]
            out.write("trees beta=%s/%d k=%d count=%d\n"
                      % (beta.energy, beta.maslov, k, len(ts)))
            for t, v in zip(ts, vols):
                out.write("  %s volume=%s\n" % (t.encode(), v))
            table.append({"beta": _jsonable(beta), "k": k,
                          "count": len(ts),
                          "trees": [t.encode() for t in ts],
                          "volumes": vols})
    from .ainf import VerifyReport
    return _emit(out, "trees", [VerifyReport("trees")], {"table": table})


def build_parser():
    p = argparse.ArgumentParser(
        prog="cyclainf",
        description="verify, transfer and deform gapped cyclic filtered "
                    "A-infinity structures stored as canonical documents")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, boundary=False):
        sp.add_argument("input", help="input document path, or - for stdin")
        if boundary:
            sp.add_argument("boundary", help="boundary algebra document")
        sp.add_argument("--e-cut", dest="e_cut", default=None,
                        help="energy cutoff override (rational)")
        sp.add_argument("--k-max", dest="k_max", type=int, default=None,
                        help="largest arity to process")
        sp.add_argument("--out", dest="out", default=None,
                        help="output document path (default stdout)")

    for name, fn, extra in (
            ("verify", cmd_verify, {}),
            ("transfer", cmd_transfer, {}),
            ("isotopy-verify", cmd_isotopy_verify, {}),
            ("isotopy-integrate", cmd_isotopy_integrate, {"tau": True}),
            ("isotopy-extend", cmd_isotopy_extend, {"boundary": True}),
            ("deform", cmd_deform, {}),
            ("trees", cmd_trees, {})):
        sp = sub.add_parser(name)
        common(sp, boundary=extra.get("boundary", False))
        if extra.get("tau"):
            sp.add_argument("--tau0", default="0", help="start time in [0,1]")
            sp.add_argument("--tau1", default="1", help="end time in [0,1]")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parallelism()  # validated and accepted; all code paths are deterministic
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args, out)
    except docio.DocumentError as e:
        out.write("ERROR %s\n" % e)
        return 2
    except (ValueError, OSError) as e:
        out.write("ERROR %s\n" % e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
