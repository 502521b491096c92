"""Command-line entry point.

Exit codes: 0 verified / terminated / proved, 1 verification failure, stuck
run or unproved entailment, 2 parse error or ill-formed program, 3 fuel
exhausted, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .entailment import DEFAULT_DEPTH, entails
from .harness import MUTATION_KINDS, run_corpus
from .opsem import DEFAULT_FUEL, run_program
from .parser import ParseError, fmt_assertion, parse_assertion, parse_file
from .semantics import default_universe, implies_oracle_open
from .syntax import Program, check_wellformed
from .verifier import verify_program

EXIT_OK, EXIT_FAIL, EXIT_ILLFORMED, EXIT_FUEL, EXIT_INTERNAL = 0, 1, 2, 3, 4


class _Exit(Exception):
    def __init__(self, code: int, messages: Sequence[str]):
        super().__init__(code)
        self.code = code
        self.messages = list(messages)


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {n}")
    return n


def _nonneg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"must not be negative: {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcpp", description="Verifier and interpreter for annotated class programs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check well-formedness and verify every proof obligation")
    v.add_argument("files", nargs="+", type=Path)
    v.add_argument("--depth", type=_positive, default=DEFAULT_DEPTH, help="rewrite budget per entailment")
    v.add_argument("--emit-derivation", metavar="PATH",
                   help="write obligations and derivation trees as JSON ('-' for standard output)")

    r = sub.add_parser("run", help="run main with the reference interpreter")
    r.add_argument("file", type=Path)
    r.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    r.add_argument("--emit-trace", metavar="PATH",
                   help="write the rule trace as JSON lines ('-' for standard output)")

    c = sub.add_parser("check", help="decide an entailment between two assertions")
    c.add_argument("file", type=Path, help="program supplying classes and predicates")
    c.add_argument("--pre", required=True)
    c.add_argument("--post", required=True)
    c.add_argument("--this", dest="this_cls", metavar="CLASS", help="static type of this")
    c.add_argument("--depth", type=_positive, default=DEFAULT_DEPTH)
    c.add_argument("--exact", action="store_true", help="require an empty frame")
    c.add_argument("--oracle", action="store_true", help="cross-check against the finite semantic oracle")

    k = sub.add_parser("corpus", help="check a corpus directory against its expectations")
    k.add_argument("directory", type=Path)
    k.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    k.add_argument("--depth", type=_positive, default=DEFAULT_DEPTH)
    k.add_argument("--seed", type=_nonneg, help="also run generated programs starting at this seed")
    k.add_argument("--generated", type=_nonneg, default=20, help="number of generated programs (with --seed)")
    k.add_argument("--mutations", nargs="*", metavar="KIND", choices=MUTATION_KINDS + ("all",),
                   help="mutation kinds to run on verified entries (no value or 'all' for every kind)")
    k.add_argument("--report", type=Path, help="write the structured JSON report here")
    return ap


def _load(path: Path) -> Program:
    if not path.exists():
        raise _Exit(EXIT_ILLFORMED, [f"{path}: no such file"])
    try:
        return parse_file(path)
    except ParseError as e:
        raise _Exit(EXIT_ILLFORMED, [str(d) for d in e.diagnostics] or [str(e)]) from None


def _write(target: str, text: str, out) -> None:
    if target == "-":
        out.write(text)
    else:
        Path(target).write_text(text)


def cmd_verify(args, out) -> int:
    code = EXIT_OK
    docs = []
    human = args.emit_derivation != "-"
    errors: list[str] = []
    for path in args.files:
        try:
            prog = _load(path)
        except _Exit as e:
            errors += e.messages
            code = max(code, e.code)
            continue
        v = verify_program(prog, args.depth)
        doc = {"file": str(path), **v.to_json()}
        docs.append(doc)
        if v.verdict == "ill-formed":
            errors += [f"{path}: {d}" for d in v.diagnostics]
            code = max(code, EXIT_ILLFORMED)
        elif v.verdict == "failed":
            errors += [f"{path}: {d}" for d in v.diagnostics]
            code = max(code, EXIT_FAIL)
        if human:
            for o in v.obligations:
                line = f"{o.key}: {o.verdict}"
                if o.labels:
                    line += "  [" + ", ".join(o.labels) + "]"
                out.write(line + "\n")
                for w in o.warnings:
                    out.write(f"  warning: {w}\n")
            summary = {"verified": "all obligations verified",
                       "failed": f"{len(v.failed())} of {len(v.obligations)} obligations failed",
                       "ill-formed": "program is ill-formed"}[v.verdict]
            out.write(f"{path}: {summary}\n")
    if args.emit_derivation:
        payload = docs[0] if len(docs) == 1 else {"files": docs}
        _write(args.emit_derivation, json.dumps(payload, indent=2) + "\n", out)
    if errors:
        raise _Exit(code, errors)
    return code


def cmd_run(args, out) -> int:
    prog = _load(args.file)
    wf = check_wellformed(prog)
    if wf:
        raise _Exit(EXIT_ILLFORMED, [f"{args.file}: {d}" for d in wf])
    res = run_program(prog, args.fuel, trace=bool(args.emit_trace))
    if args.emit_trace:
        lines = [json.dumps({"step": i, "rule": e.rule, "depth": e.depth, "detail": e.detail})
                 for i, e in enumerate(res.trace)]
        _write(args.emit_trace, "".join(l + "\n" for l in lines), out)
    if args.emit_trace != "-":
        out.write(f"{res.summary()} after {res.steps} steps\n")
        if res.heap is not None:
            out.write(f"heap: {res.heap}\n")
    if res.kind == "stuck":
        raise _Exit(EXIT_FAIL, [f"{args.file}: stuck in {res.stuck.rule}: {res.stuck.reason}"
                                + (f" ({res.stuck.detail})" if res.stuck.detail else "")])
    if res.kind == "fuel_exhausted":
        raise _Exit(EXIT_FUEL, [f"{args.file}: fuel exhausted after {args.fuel} steps"])
    return EXIT_OK


def cmd_check(args, out) -> int:
    prog = _load(args.file)
    wf = check_wellformed(prog)
    if wf:
        raise _Exit(EXIT_ILLFORMED, [f"{args.file}: {d}" for d in wf])
    if args.this_cls is not None and not prog.has_class(args.this_cls):
        raise _Exit(EXIT_ILLFORMED, [f"undeclared class {args.this_cls}"])
    try:
        p = parse_assertion(args.pre, prog.class_names)
        q = parse_assertion(args.post, prog.class_names)
    except ParseError as e:
        raise _Exit(EXIT_ILLFORMED, [str(d) for d in e.diagnostics]) from None
    res = entails(prog, p, q, args.depth, require_empty=args.exact, this_cls=args.this_cls)
    out.write(res.describe() + "\n")
    if res.proved:
        out.write(f"frame: {' * '.join(fmt_assertion(c) for c in res.frame) or 'emp'}\n")
        if res.labels:
            out.write("rules: " + ", ".join(res.labels) + "\n")
    if args.oracle:
        u = default_universe(prog)
        orc = implies_oracle_open(prog, p, q, u, args.this_cls)
        if orc.holds:
            out.write(f"oracle: holds ({orc.checked} heaps checked)\n")
        else:
            asg = ", ".join(f"{k}={v}" for k, v in (orc.assignment or {}).items())
            out.write(f"oracle: counterexample {orc.counterexample}" + (f" with {asg}" if asg else "") + "\n")
            if res.proved and not args.exact:
                raise _Exit(EXIT_INTERNAL, ["engine proved an entailment the oracle refutes"])
    if not res.proved:
        raise _Exit(EXIT_FAIL, [f"not proved: {res.describe()}"])
    return EXIT_OK


def cmd_corpus(args, out) -> int:
    if not args.directory.is_dir():
        raise _Exit(EXIT_ILLFORMED, [f"{args.directory}: not a directory"])
    kinds: tuple = ()
    if args.mutations is not None:
        kinds = MUTATION_KINDS if not args.mutations or "all" in args.mutations else tuple(args.mutations)
    try:
        rep = run_corpus(args.directory, args.fuel, args.depth, kinds, args.seed, args.generated)
    except (FileNotFoundError, ValueError) as e:
        raise _Exit(EXIT_ILLFORMED, [str(e)]) from None
    out.write(rep.table() + "\n")
    if args.report:
        rep.write_json(args.report)
    if not rep.ok:
        bad = [e.name for e in rep.entries if not e.ok] + [s.name for s in rep.soundness if not s.passed]
        raise _Exit(EXIT_FAIL, [f"corpus check failed: {', '.join(bad) or 'stuck mutant'}"])
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "run": cmd_run, "check": cmd_check, "corpus": cmd_corpus}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except _Exit as e:
        for m in e.messages:
            err.write(f"mcpp: {m}\n")
        return e.code
    except Exception as e:  # noqa: BLE001 - last-resort guard for exit code 4
        err.write(f"mcpp: internal error: {type(e).__name__}: {e}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
