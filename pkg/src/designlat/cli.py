"""Command line front end.

One verb per engine operation; every verb prints a machine-readable JSON
report to stdout (or --out) and a one-line human summary to stderr.  Exit
codes: 0 affirmative/solved, 1 negative/UNSAT/not-member, 2 budget
exhausted, 3 malformed input.  Reports carry no timestamps so identical
argv and seed give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import applications as apps
from .errors import BudgetExceeded, DesignlatError
from .lattice import (lattice_member_L, lattice_member_Lminus,
                      lattice_member_oracle)
from .solver import (SearchConfig, nibble_greedy, solve_exact, solve_integral,
                     verify)
from .vectors import Selection

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_NO = 1
EXIT_BUDGET = 2
EXIT_INPUT = 3


def _parse_budget(text):
    """Accept 10^6, 1e6, or plain integers."""
    text = str(text).strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    if "e" in text.lower():
        return int(float(text))
    return int(text)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, frozenset):
        return sorted(x, key=repr)
    if isinstance(x, tuple):
        return [_jsonable(a) for a in x]
    if isinstance(x, list):
        return [_jsonable(a) for a in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _emit(report, args, summary):
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def _load_problem(args):
    """Instance plus optional decoder, from --builtin or a problem file."""
    if getattr(args, "builtin", None):
        got = apps.builtin_instance(args.builtin, seed=args.seed or 0)
        return got["instance"], got["decoder"]
    if getattr(args, "infile", None):
        with open(args.infile) as fh:
            data = json.load(fh)
        if "problem" in data:
            inst = apps.ProblemInstance.from_json(data["problem"])
            dec = (apps.Decoder.from_json(data["decoder"])
                   if data.get("decoder") else None)
            return inst, dec
        return apps.ProblemInstance.from_json(data), None
    raise DesignlatError("need --builtin or --in")


def _search_config(args):
    kw = {"seed": args.seed or 0}
    if getattr(args, "budget", None) is not None:
        kw["budget"] = args.budget
    return SearchConfig(**kw)


def _certificate(result, decoder, mode="SET"):
    cert = {"format_version": FORMAT_VERSION, "mode": mode,
            "selection": result.selection.to_json(),
            "decoder_id": decoder.kind if decoder else None,
            "decoded": None}
    if decoder is not None:
        cert["decoded"] = decoder.decode(result.selection)
        cert["decoder"] = decoder.to_json()
    return cert


def _witness_json(wit):
    if wit is None:
        return None
    level, rep = wit
    return {"level": level, "orbit": [[a, v] for a, v in rep]}


def _cmd_build(args):
    inst, dec = _load_problem(args)
    report = {"format_version": FORMAT_VERSION, "verb": "build",
              "problem": inst.to_json(),
              "decoder": dec.to_json() if dec else None}
    _emit(report, args, f"build: {inst!r}")
    return EXIT_OK


def _cmd_reduce(args):
    if args.resolvable:
        n, q, r, lam = args.resolvable
        inst, dec = apps.reduce_resolvable(
            apps.complete_design(q, r), apps.complete_multigraph(n, r, lam),
            q=q, n=n, seed=args.seed or 0)
    elif args.large_set:
        q, r, lam, n = args.large_set
        inst, dec = apps.reduce_large_set(q, r, lam, n, seed=args.seed or 0)
    elif args.complete_resolution:
        q, n = args.complete_resolution
        inst, dec = apps.reduce_complete_resolution(q, n)
    else:
        raise DesignlatError("need one of --resolvable, --large-set, "
                             "--complete-resolution")
    report = {"format_version": FORMAT_VERSION, "verb": "reduce",
              "problem": inst.to_json(), "decoder": dec.to_json()}
    _emit(report, args, f"reduce: {inst!r} with decoder {dec.kind}")
    return EXIT_OK


def _cmd_check_divisible(args):
    if args.design:
        n, q, r, lam = args.design
        ok, wit = apps.check_design_divisible(n, q, r, lam)
        what = {"check": "design", "params": [n, q, r, lam]}
    elif args.large_set:
        q, r, lam, n = args.large_set
        ok, wit = apps.check_large_set_divisible(q, r, lam, n)
        what = {"check": "large-set", "params": [q, r, lam, n]}
    elif args.resolvable:
        n, q, r, lam = args.resolvable
        ok, wit = apps.check_resolvable_divisible(n, q, r, lam)
        what = {"check": "resolvable", "params": [n, q, r, lam]}
    elif args.complete_resolution:
        q, n = args.complete_resolution
        ok, wit = apps.check_complete_resolution_divisible(q, n)
        what = {"check": "complete-resolution", "params": [q, n]}
    elif args.rainbow:
        q, r, n, mode = args.rainbow
        ok, wit = apps.check_rainbow_divisible(int(q), int(r), int(n), mode)
        what = {"check": "rainbow", "params": [int(q), int(r), int(n), mode]}
    else:
        raise DesignlatError("need one of --design, --large-set, "
                             "--resolvable, --complete-resolution, --rainbow")
    report = {"format_version": FORMAT_VERSION, "verb": "check-divisible",
              **what, "divisible": bool(ok),
              "witness": _jsonable(wit) if not ok else None}
    _emit(report, args, f"check-divisible: {what['check']} -> {bool(ok)}")
    return EXIT_OK if ok else EXIT_NO


def _lattice_report(inst, args):
    method = args.method or "sharp"
    if method == "oracle":
        member = lattice_member_oracle(inst.system, inst.target,
                                       budget=args.budget)
        report = {"member": bool(member), "method": "oracle", "witness": None}
        return member, report
    ok, wit = lattice_member_L(inst.system, inst.target, method=method)
    report = {"member": bool(ok), "method": method,
              "witness": _witness_json(wit)}
    if inst.provenance.get("builder") == "twisted-octahedron":
        report.update(apps.twisted_octahedron_report(inst))
    return ok, report


def _cmd_lattice_member(args):
    inst, _ = _load_problem(args)
    ok, body = _lattice_report(inst, args)
    report = {"format_version": FORMAT_VERSION, "verb": "lattice-member",
              **body}
    _emit(report, args, f"lattice-member: {bool(ok)}")
    return EXIT_OK if ok else EXIT_NO


def _cmd_oracle(args):
    inst, _ = _load_problem(args)
    member = lattice_member_oracle(inst.system, inst.target,
                                   budget=args.budget)
    report = {"format_version": FORMAT_VERSION, "verb": "oracle",
              "member": bool(member)}
    _emit(report, args, f"oracle: {bool(member)}")
    return EXIT_OK if member else EXIT_NO


def _cmd_solve(args):
    inst, dec = _load_problem(args)
    cfg = _search_config(args)
    res = solve_exact(inst.system, inst.complex, inst.target, cfg)
    report = {"format_version": FORMAT_VERSION, "verb": "solve",
              "status": res.status, "nodes": res.nodes, "certificate": None}
    code = EXIT_NO
    if res.status == "SOLVED":
        report["certificate"] = _certificate(res, dec)
        code = EXIT_OK
    elif res.status == "BUDGET":
        code = EXIT_BUDGET
    _emit(report, args, f"solve: {res.status} after {res.nodes} nodes")
    return code


def _cmd_solve_integral(args):
    inst, dec = _load_problem(args)
    cfg = _search_config(args)
    res = solve_integral(inst.system, inst.complex, inst.target, cfg)
    report = {"format_version": FORMAT_VERSION, "verb": "solve-integral",
              "status": res.status, "nodes": res.nodes, "certificate": None}
    code = EXIT_NO
    if res.status == "SOLVED":
        report["certificate"] = _certificate(res, dec, mode="INTEGRAL")
        code = EXIT_OK
    elif res.status == "BUDGET":
        code = EXIT_BUDGET
    _emit(report, args, f"solve-integral: {res.status}")
    return code


def _cmd_verify(args):
    inst, dec = _load_problem(args)
    with open(args.certificate) as fh:
        data = json.load(fh)
    cert = data.get("certificate", data)
    if cert is None:
        raise DesignlatError("certificate file holds no certificate")
    sel = Selection.from_json(cert["selection"])
    mode = cert.get("mode", "SET")
    ok, detail = verify(inst.system, inst.complex, sel, inst.target,
                        mode=mode)
    report = {"format_version": FORMAT_VERSION, "verb": "verify",
              "ok": bool(ok), "mode": mode, "detail": _jsonable(detail)}
    if dec is not None and ok:
        report["decoded"] = dec.decode(sel)
    _emit(report, args, f"verify: {bool(ok)}")
    return EXIT_OK if ok else EXIT_NO


def _cmd_nibble(args):
    inst, _ = _load_problem(args)
    trace = nibble_greedy(inst.system, inst.complex, inst.target,
                          seed=args.seed or 0)
    total = inst.target.norm1()
    frac = Fraction(trace.leave.norm1(), total) if total else Fraction(0)
    report = {"format_version": FORMAT_VERSION, "verb": "nibble",
              "chosen": len(trace.chosen),
              "leave_norm": trace.leave.norm1(),
              "target_norm": total,
              "leave_fraction": str(frac),
              "max_degree_ratio": str(trace.ratio),
              "fixpoint": bool(trace.fixpoint),
              "degree_histogram": {str(k): v for k, v in
                                   sorted(trace.histogram.items())}}
    _emit(report, args,
          f"nibble: {len(trace.chosen)} picks, leave {trace.leave.norm1()}"
          f"/{total}")
    return EXIT_OK


def _cmd_typicality(args):
    if args.complete:
        n, r = args.complete
        G = apps.complete_multigraph(n, r, args.lam)
        c = apps.measure_typicality(G, args.s)
    elif args.edges:
        with open(args.edges) as fh:
            data = json.load(fh)
        G = {frozenset(tuple(v) if isinstance(v, list) else v
                       for v in e): 1 for e in data["edges"]}
        if data.get("parts"):
            spec = apps.PartitionSpec(
                tuple(tuple(p) for p in data["label_parts"]),
                {(tuple(v) if isinstance(v, list) else v): p
                 for v, p in data["parts"]})
            c = apps.measure_typicality_partite(G, args.s, spec)
        else:
            c = apps.measure_typicality(G, args.s)
    else:
        raise DesignlatError("need --complete or --edges")
    report = {"format_version": FORMAT_VERSION, "verb": "typicality",
              "s": args.s, "typicality": str(c)}
    _emit(report, args, f"typicality: {c}")
    return EXIT_OK


def _add_common(sp, budget=False, method=False):
    sp.add_argument("--builtin", choices=apps.BUILTINS)
    sp.add_argument("--in", dest="infile")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)  # reserved
    sp.add_argument("--format", choices=("json", "text"), default="json")
    if budget:
        sp.add_argument("--budget", type=_parse_budget, default=None)
    if method:
        sp.add_argument("--method", choices=("sharp", "shadow", "oracle"),
                        default="sharp")


def _build_parser():
    p = argparse.ArgumentParser(
        prog="designlat",
        description="Vector-valued decomposition problems over labelled "
                    "complexes: build, check, solve, verify.")
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("build", help="emit a builtin or file problem")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_build)

    sp = sub.add_parser("reduce", help="rewrite a scheduling problem as a "
                                       "partite decomposition")
    _add_common(sp)
    sp.add_argument("--resolvable", nargs=4, type=int,
                    metavar=("N", "Q", "R", "LAM"))
    sp.add_argument("--large-set", dest="large_set", nargs=4, type=int,
                    metavar=("Q", "R", "LAM", "N"))
    sp.add_argument("--complete-resolution", dest="complete_resolution",
                    nargs=2, type=int, metavar=("Q", "N"))
    sp.set_defaults(fn=_cmd_reduce)

    sp = sub.add_parser("check-divisible", help="closed-form divisibility")
    _add_common(sp)
    sp.add_argument("--design", nargs=4, type=int,
                    metavar=("N", "Q", "R", "LAM"))
    sp.add_argument("--large-set", dest="large_set", nargs=4, type=int,
                    metavar=("Q", "R", "LAM", "N"))
    sp.add_argument("--resolvable", nargs=4, type=int,
                    metavar=("N", "Q", "R", "LAM"))
    sp.add_argument("--complete-resolution", dest="complete_resolution",
                    nargs=2, type=int, metavar=("Q", "N"))
    sp.add_argument("--rainbow", nargs=4, metavar=("Q", "R", "N", "MODE"))
    sp.set_defaults(fn=_cmd_check_divisible)

    sp = sub.add_parser("lattice-member", help="degree-lattice membership")
    _add_common(sp, budget=True, method=True)
    sp.set_defaults(fn=_cmd_lattice_member)

    sp = sub.add_parser("oracle", help="brute-force lattice membership")
    _add_common(sp, budget=True)
    sp.set_defaults(fn=_cmd_oracle)

    sp = sub.add_parser("solve", help="exact set decomposition search")
    _add_common(sp, budget=True)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("solve-integral", help="signed integral combination")
    _add_common(sp, budget=True)
    sp.set_defaults(fn=_cmd_solve_integral)

    sp = sub.add_parser("verify", help="check a certificate independently")
    _add_common(sp)
    sp.add_argument("--certificate", required=True)
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("nibble", help="seeded greedy matching trace")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_nibble)

    sp = sub.add_parser("typicality", help="exact typicality constant")
    _add_common(sp)
    sp.add_argument("--complete", nargs=2, type=int, metavar=("N", "R"))
    sp.add_argument("--lam", type=int, default=1)
    sp.add_argument("--edges")
    sp.add_argument("--s", type=int, default=2)
    sp.set_defaults(fn=_cmd_typicality)

    return p


def run(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.fn(args)
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (DesignlatError, OSError, KeyError, ValueError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
