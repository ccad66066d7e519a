"""``fpn`` command line: generate colourings, certify patterns, run and verify removal.

Exit codes: 0 success, 1 negative result, 2 input error, 3 resource cap,
4 pipeline failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .counting import pattern_density
from .fileio import FormatError, generate_colouring, read_colouring, write_colouring
from .gf import CapExceeded, max_points
from .patterns import is_partition_regular, pattern_from_json
from .regularity import RegularityError, SelectionError, arl, frac_str
from .removal import PipelineConfig, PipelineError, compare_colourings, recolour, verify_removal

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_CAP, EXIT_PIPELINE = 0, 1, 2, 3, 4


class InputError(ValueError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc
    return value


def _load_pattern(path):
    try:
        return pattern_from_json(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read pattern: {exc}") from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load_colouring(path):
    try:
        return read_colouring(path)
    except OSError as exc:
        raise InputError(f"cannot read colouring: {exc}") from exc
    except FormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _match(pat, phi, what="colouring"):
    if pat.p != phi.p or pat.r != phi.r:
        raise InputError(f"pattern has p={pat.p}, r={pat.r} but {what} has p={phi.p}, r={phi.r}")


def _report(command: str, config: dict, results: dict, seed=None) -> dict:
    return {"command": command, "config": config, "results": results, "seed": seed, "timings": {}}


def cmd_gen(args) -> tuple[int, dict]:
    phi = generate_colouring(args.p, args.n, args.r, args.seed, args.mode)
    write_colouring(args.output, phi)
    counts = {str(c): int((phi.table == c).sum()) for c in range(1, phi.r + 1)}
    cfg = {"p": args.p, "n": args.n, "r": args.r, "mode": args.mode}
    return EXIT_OK, _report("gen", cfg, {"output": str(args.output), "colour_counts": counts}, args.seed)


def cmd_check_pr(args) -> tuple[int, dict]:
    pat = _load_pattern(args.pattern)
    cert = is_partition_regular(pat)
    results = {
        "partition_regular": cert is not None,
        "certificate": cert.to_json() if cert else None,
        "K": pat.system.K.tolist(),
    }
    if cert is None:
        results["message"] = "not partition-regular"
    return (EXIT_OK if cert else EXIT_NEGATIVE), _report("check-pr", {"pattern": str(args.pattern)}, results)


def cmd_density(args) -> tuple[int, dict]:
    pat = _load_pattern(args.pattern)
    phi = _load_colouring(args.colouring)
    _match(pat, phi)
    d = pattern_density(phi, pat)
    cfg = {"pattern": str(args.pattern), "colouring": str(args.colouring)}
    return EXIT_OK, _report("density", cfg, {"density": frac_str(d), "decimal": float(d)})


def cmd_arl(args) -> tuple[int, dict]:
    phi = _load_colouring(args.colouring)
    cfg = {"colouring": str(args.colouring), "epsilon": frac_str(args.epsilon), "max_codim": args.max_codim}
    try:
        part = arl(phi.indicators(), args.epsilon, None, args.max_codim)
        code = EXIT_OK
    except RegularityError as exc:
        part = exc.partition
        code = EXIT_PIPELINE
    results = part.to_json()
    results["regular"] = part.is_regular
    if args.trace:
        Path(args.trace).write_text(part.trace_json())
    return code, _report("arl", cfg, results)


def cmd_recolour(args) -> tuple[int, dict]:
    pat = _load_pattern(args.pattern)
    phi = _load_colouring(args.colouring)
    _match(pat, phi)
    cfg = PipelineConfig.for_pattern(args.epsilon, pat, seed=args.seed, max_codim=args.max_codim)
    echo = {"pattern": str(args.pattern), "colouring": str(args.colouring), **cfg.to_json(phi.p)}
    try:
        plan = recolour(phi, pat, cfg)
    except (SelectionError, PipelineError) as exc:
        report = _report("recolour", echo, {"success": False, "error": f"selection failed: {exc}"}, args.seed)
        if args.report:
            _write_json(args.report, report)
        return EXIT_PIPELINE, report
    write_colouring(args.output, plan.result)
    rep = verify_removal(plan, pat)
    results = rep.to_json()
    results["output"] = str(args.output)
    report = _report("recolour", echo, results, args.seed)
    if args.report:
        _write_json(args.report, report)
    return (EXIT_OK if rep.success else EXIT_NEGATIVE), report


def cmd_verify(args) -> tuple[int, dict]:
    pat = _load_pattern(args.pattern)
    orig = _load_colouring(args.original)
    new = _load_colouring(args.recoloured)
    _match(pat, orig, "original colouring")
    if (orig.p, orig.n, orig.r) != (new.p, new.n, new.r):
        raise InputError("original and recoloured files differ in p, n or r")
    rep = compare_colourings(orig, new, pat, args.epsilon)
    cfg = {
        "pattern": str(args.pattern),
        "original": str(args.original),
        "recoloured": str(args.recoloured),
        "epsilon": frac_str(args.epsilon),
    }
    return (EXIT_OK if rep.success else EXIT_NEGATIVE), _report("verify", cfg, rep.to_json())


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a seeded random colouring")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", default="uniform", help="uniform or sparse:<colour>:<num/den>")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check-pr", help="certify partition regularity of a pattern")
    c.add_argument("pattern")
    c.set_defaults(func=cmd_check_pr)

    d = sub.add_parser("density", help="exact pattern density of a colouring")
    d.add_argument("pattern")
    d.add_argument("colouring")
    d.set_defaults(func=cmd_density)

    a = sub.add_parser("arl", help="regularity partition of the colour classes")
    a.add_argument("colouring")
    a.add_argument("--epsilon", type=_fraction, required=True)
    a.add_argument("--max-codim", type=int, default=None)
    a.add_argument("--trace", default=None, help="write the refinement trace JSON here")
    a.set_defaults(func=cmd_arl)

    r = sub.add_parser("recolour", help="remove all instances of a pattern by recolouring")
    r.add_argument("pattern")
    r.add_argument("colouring")
    r.add_argument("--epsilon", type=_fraction, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-codim", type=int, default=None)
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--report", default=None)
    r.set_defaults(func=cmd_recolour)

    v = sub.add_parser("verify", help="independently re-check a recolouring")
    v.add_argument("pattern")
    v.add_argument("original")
    v.add_argument("recoloured")
    v.add_argument("--epsilon", type=_fraction, required=True)
    v.set_defaults(func=cmd_verify)
    return ap


def run(argv=None) -> tuple[int, dict | None]:
    """Parse and execute; returns (exit code, report)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code else EXIT_OK), None
    start = time.perf_counter()
    try:
        code, report = args.func(args)
    except InputError as exc:
        return EXIT_INPUT, {"command": args.command, "error": str(exc)}
    except ValueError as exc:
        return EXIT_INPUT, {"command": args.command, "error": str(exc)}
    except CapExceeded as exc:
        return EXIT_CAP, {"command": args.command, "error": f"{exc} (FPN_MAX_POINTS={max_points()})"}
    report["timings"] = {"seconds": round(time.perf_counter() - start, 6)}
    return code, report


def main(argv=None) -> int:
    code, report = run(argv)
    if report is not None:
        stream = sys.stdout if code in (EXIT_OK, EXIT_NEGATIVE) else sys.stderr
        print(json.dumps(report, indent=2), file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
