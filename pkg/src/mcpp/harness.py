"""Corpus management, mutation testing and random program generation.

A corpus is a directory of ``<name>.mcpp`` programs, each paired with a
``<name>.expect`` file of ``key: value`` lines:

    verdict: verified | failed | ill-formed
    obligation: <key>          (optional, repeatable; must be among the failures)
    diagnostic: <substring>    (optional, repeatable; must occur in some diagnostic)
    run: terminated | stuck(<reason>) | fuel_exhausted
    heap: {...}                (optional; final heap, rendered as by ``Heap.__str__``)
    fuel: <n>                  (optional; fuel for the run, default 100000)
"""
from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional

from .opsem import DEFAULT_FUEL, Interpreter, Outcome, run_program
from .parser import ParseError, parse_program, pretty_print
from .runtime import Heap, NULL
from .syntax import (
    And,
    Assertion,
    BaseInit,
    Bool,
    ClassDef,
    ClassRef,
    Cmd,
    CtorDef,
    Delete,
    DtorDef,
    DynAssn,
    DynCall,
    Exists,
    FALSE,
    Let,
    Lookup,
    MethodDef,
    New,
    Or,
    PointsTo,
    PredAssn,
    Program,
    Seq,
    Skip,
    Star,
    THIS,
    TRUE,
    Update,
    Upcast,
    Var,
    check_wellformed,
)
from .verifier import DEFAULT_DEPTH, Verdict, verify_program

VERDICTS = ("verified", "failed", "ill-formed")


# -- corpus entries ----------------------------------------------------------------------

@dataclass(frozen=True)
class Expectation:
    verdict: str
    run: Optional[str] = None
    obligations: tuple[str, ...] = ()
    diagnostics: tuple[str, ...] = ()
    heap: Optional[str] = None
    fuel: int = DEFAULT_FUEL

    @classmethod
    def parse(cls, text: str, where: str = "<expect>") -> "Expectation":
        vals: dict[str, list[str]] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition(":")
            if not sep:
                raise ValueError(f"{where}:{n}: expected 'key: value'")
            key = key.strip()
            if key not in ("verdict", "run", "obligation", "diagnostic", "heap", "fuel"):
                raise ValueError(f"{where}:{n}: unknown key {key!r}")
            vals.setdefault(key, []).append(val.strip())
        for key in ("verdict", "run", "heap", "fuel"):
            if len(vals.get(key, [])) > 1:
                raise ValueError(f"{where}: key {key!r} given twice")
        if "verdict" not in vals:
            raise ValueError(f"{where}: missing verdict")
        verdict = vals["verdict"][0]
        if verdict not in VERDICTS:
            raise ValueError(f"{where}: unknown verdict {verdict!r}")
        return cls(
            verdict=verdict,
            run=vals.get("run", [None])[0],
            obligations=tuple(vals.get("obligation", [])),
            diagnostics=tuple(vals.get("diagnostic", [])),
            heap=vals.get("heap", [None])[0],
            fuel=int(vals["fuel"][0]) if "fuel" in vals else DEFAULT_FUEL,
        )

    def render(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        lines += [f"obligation: {o}" for o in self.obligations]
        lines += [f"diagnostic: {d}" for d in self.diagnostics]
        if self.run is not None:
            lines.append(f"run: {self.run}")
        if self.heap is not None:
            lines.append(f"heap: {self.heap}")
        if self.fuel != DEFAULT_FUEL:
            lines.append(f"fuel: {self.fuel}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    source: str
    expect: Expectation
    path: Optional[Path] = None

    @property
    def program(self) -> Program:
        return parse_program(self.source, str(self.path or self.name))


def load_entry(path) -> CorpusEntry:
    path = Path(path)
    exp = path.with_suffix(".expect")
    if not exp.exists():
        raise FileNotFoundError(f"{path}: no matching .expect file")
    return CorpusEntry(path.stem, path.read_text(), Expectation.parse(exp.read_text(), str(exp)), path)


def load_corpus(directory) -> list[CorpusEntry]:
    return [load_entry(p) for p in sorted(Path(directory).glob("*.mcpp"))]


# -- checking entries --------------------------------------------------------------------

@dataclass
class EntryReport:
    name: str
    ok: bool
    verdict: str
    run: Optional[str]
    heap: Optional[str]
    seconds: float
    problems: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "verdict": self.verdict, "run": self.run,
                "heap": self.heap, "seconds": round(self.seconds, 3), "problems": self.problems}


def _verdict_of(source: str, name: str, depth: int) -> tuple[Optional[Program], Verdict]:
    try:
        prog = parse_program(source, name)
    except ParseError as e:
        return None, Verdict("ill-formed", [], [str(d) for d in e.diagnostics] or [str(e)])
    return prog, verify_program(prog, depth)


def check_entry(entry: CorpusEntry, depth: int = DEFAULT_DEPTH) -> EntryReport:
    """Compare an entry's verdict and run outcome against its expectation."""
    t0 = time.perf_counter()
    prog, v = _verdict_of(entry.source, entry.name, depth)
    exp = entry.expect
    problems = []
    if v.verdict != exp.verdict:
        problems.append(f"verdict {v.verdict}, expected {exp.verdict}")
    failed = {o.key for o in v.failed()}
    for key in exp.obligations:
        if key not in failed:
            problems.append(f"obligation {key} did not fail")
    for d in exp.diagnostics:
        if not any(d in got for got in v.diagnostics):
            problems.append(f"no diagnostic mentions {d!r}")
    run = heap = None
    if prog is not None and exp.run is not None:
        out = run_program(prog, exp.fuel, trace=False)
        run = out.summary()
        heap = str(out.heap) if out.heap is not None else None
        if run != exp.run:
            problems.append(f"run {run}, expected {exp.run}")
        if exp.heap is not None and heap != exp.heap:
            problems.append(f"heap {heap}, expected {exp.heap}")
    return EntryReport(entry.name, not problems, v.verdict, run, heap,
                       time.perf_counter() - t0, problems)


@dataclass
class SoundnessReport:
    name: str
    passed: bool
    outcome: str
    trace_suffix: list[str] = field(default_factory=list)
    derivations: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "outcome": self.outcome,
                "trace_suffix": self.trace_suffix, "derivations": self.derivations}


class NotVerified(ValueError):
    pass


def soundness_check(entry: CorpusEntry, fuel: int = DEFAULT_FUEL, depth: int = DEFAULT_DEPTH,
                    suffix: int = 20) -> SoundnessReport:
    """A verified program must terminate or run out of fuel, never get stuck."""
    prog, v = _verdict_of(entry.source, entry.name, depth)
    if prog is None or not v.ok:
        raise NotVerified(f"{entry.name}: program does not verify ({v.verdict})")
    out = run_program(prog, fuel, trace=True)
    if out.kind != "stuck":
        return SoundnessReport(entry.name, True, out.summary())
    return SoundnessReport(
        entry.name, False, out.summary(),
        [str(e) for e in out.trace[-suffix:]] + [f"stuck: {out.stuck}"],
        {o.key: o.derivation.to_json() for o in v.obligations if o.derivation is not None},
    )


# -- mutations ---------------------------------------------------------------------------

MUTATION_KINDS = (
    "drop-override", "weaken-pre", "strengthen-post", "swap-base-order",
    "drop-dyn-chunk-in-spec", "change-predicate-index",
)


@dataclass(frozen=True, order=True)
class Mutation:
    kind: str
    location: tuple

    def __str__(self) -> str:
        return f"{self.kind}@{'/'.join(str(x) for x in self.location)}"


class Inapplicable(ValueError):
    pass


def _members(c: ClassDef):
    """(member name, declaration) pairs carrying a specification."""
    if c.ctor is not None:
        yield c.name, c.ctor
    if c.dtor is not None:
        yield "~" + c.name, c.dtor
    for m in c.methods:
        yield m.name, m


def _spec_slots(c: ClassDef):
    """(member, slot, assertion) triples for every assertion in a class."""
    for p in c.preds:
        yield "pred " + p.name, "body", p.body
    for name, d in _members(c):
        yield name, "pre", d.pre
        yield name, "post", d.post


def _walk(a: Assertion, pick: Callable[[Assertion], bool]):
    if pick(a):
        yield a
    if isinstance(a, (And, Or, Star)):
        yield from _walk(a.left, pick)
        yield from _walk(a.right, pick)
    elif isinstance(a, Exists):
        yield from _walk(a.body, pick)


def _rewrite_nth(a: Assertion, pick, fn, n: int) -> Assertion:
    """Replace the n-th node (preorder) selected by ``pick`` with ``fn(node)``."""
    count = [0]

    def go(x: Assertion) -> Assertion:
        if pick(x):
            i = count[0]
            count[0] += 1
            if i == n:
                return fn(x)
        if isinstance(x, (And, Or, Star)):
            return type(x)(go(x.left), go(x.right))
        if isinstance(x, Exists):
            return Exists(x.var, go(x.body))
        return x

    out = go(a)
    if count[0] <= n:
        raise Inapplicable(f"no occurrence {n}")
    return out


def _is_dyn(a) -> bool:
    return isinstance(a, DynAssn)


def _is_pred(a) -> bool:
    return isinstance(a, PredAssn)


def _is_true(a) -> bool:
    return isinstance(a, Bool) and a.value


def _overrides(program: Program, c: ClassDef):
    for m in c.methods:
        if any(_declares(program, b, m.name) for b in c.bases):
            yield m.name


def _declares(program: Program, cls: str, name: str) -> bool:
    if not program.has_class(cls):
        return False
    c = program.cls(cls)
    return c.method(name) is not None or any(_declares(program, b, name) for b in c.bases)


def enumerate_mutations(program: Program, kinds: Iterable[str] = MUTATION_KINDS) -> list[Mutation]:
    kinds = set(kinds)
    out: list[Mutation] = []
    for c in program.classes:
        if "drop-override" in kinds:
            out += [Mutation("drop-override", (c.name, m)) for m in _overrides(program, c)]
        if "swap-base-order" in kinds and len(c.bases) >= 2:
            out.append(Mutation("swap-base-order", (c.name,)))
        for name, d in _members(c):
            if "weaken-pre" in kinds and not _is_true(d.pre):
                out.append(Mutation("weaken-pre", (c.name, name)))
            if "strengthen-post" in kinds:
                out.append(Mutation("strengthen-post", (c.name, name)))
        for member, slot, a in _spec_slots(c):
            if "drop-dyn-chunk-in-spec" in kinds:
                out += [Mutation("drop-dyn-chunk-in-spec", (c.name, member, slot, i))
                        for i, _ in enumerate(_walk(a, _is_dyn))]
            if "change-predicate-index" in kinds:
                out += [Mutation("change-predicate-index", (c.name, member, slot, i))
                        for i, _ in enumerate(_walk(a, _is_pred))]
    return sorted(out)


def _replace_class(program: Program, new: ClassDef) -> Program:
    return replace(program, classes=tuple(new if c.name == new.name else c for c in program.classes))


def _member(c: ClassDef, name: str):
    for n, d in _members(c):
        if n == name:
            return d
    raise Inapplicable(f"{c.name} has no member {name}")


def _set_member(c: ClassDef, name: str, new) -> ClassDef:
    if isinstance(new, CtorDef):
        return replace(c, ctor=new)
    if isinstance(new, DtorDef):
        return replace(c, dtor=new)
    return replace(c, methods=tuple(new if m.name == name else m for m in c.methods))


def _set_slot(c: ClassDef, member: str, slot: str, a: Assertion) -> ClassDef:
    if member.startswith("pred "):
        pname = member[5:]
        return replace(c, preds=tuple(replace(p, body=a) if p.name == pname else p for p in c.preds))
    return _set_member(c, member, replace(_member(c, member), **{slot: a}))


def _get_slot(c: ClassDef, member: str, slot: str) -> Assertion:
    if member.startswith("pred "):
        p = c.pred(member[5:])
        if p is None:
            raise Inapplicable(f"{c.name} has no predicate {member[5:]}")
        return p.body
    return getattr(_member(c, member), slot)


def _other_index(program: Program, use: PredAssn, owner: str):
    """A different class index for a predicate use, preferring classes declaring it."""
    current = use.index.name if isinstance(use.index, ClassRef) else None
    cands = [c.name for c in program.classes if c.name != current and c.pred(use.name) is not None]
    cands += [c.name for c in program.classes if c.name != current and c.name not in cands]
    if not cands:
        raise Inapplicable("no other class to index with")
    return ClassRef(owner if current is None and owner in cands else cands[0])


def apply_mutation(program: Program, m: Mutation) -> Program:
    """The mutated program; raises Inapplicable if the location does not fit."""
    cname = m.location[0]
    if not program.has_class(cname):
        raise Inapplicable(f"no class {cname}")
    c = program.cls(cname)
    if m.kind == "drop-override":
        name = m.location[1]
        if c.method(name) is None:
            raise Inapplicable(f"{cname} has no method {name}")
        if name not in set(_overrides(program, c)):
            raise Inapplicable(f"{cname}::{name} overrides nothing")
        new = replace(c, methods=tuple(x for x in c.methods if x.name != name))
    elif m.kind == "swap-base-order":
        if len(c.bases) < 2:
            raise Inapplicable(f"{cname} has fewer than two bases")
        new = replace(c, bases=tuple(reversed(c.bases)))
        if c.ctor is not None:
            new = replace(new, ctor=replace(c.ctor, base_inits=tuple(reversed(c.ctor.base_inits))))
    elif m.kind == "weaken-pre":
        d = _member(c, m.location[1])
        if _is_true(d.pre):
            raise Inapplicable("precondition is already true")
        new = _set_member(c, m.location[1], replace(d, pre=TRUE))
    elif m.kind == "strengthen-post":
        d = _member(c, m.location[1])
        extra = PointsTo(THIS, c.fields[0], THIS) if c.fields else FALSE
        new = _set_member(c, m.location[1], replace(d, post=Star(d.post, extra)))
    elif m.kind == "drop-dyn-chunk-in-spec":
        _, member, slot, i = m.location
        a = _rewrite_nth(_get_slot(c, member, slot), _is_dyn, lambda _: TRUE, i)
        new = _set_slot(c, member, slot, a)
    elif m.kind == "change-predicate-index":
        _, member, slot, i = m.location
        a = _get_slot(c, member, slot)
        a = _rewrite_nth(a, _is_pred, lambda u: replace(u, index=_other_index(program, u, cname)), i)
        new = _set_slot(c, member, slot, a)
    else:
        raise Inapplicable(f"unknown mutation kind {m.kind}")
    return _replace_class(program, new)


def mutate(entry: CorpusEntry, m: Mutation) -> CorpusEntry:
    """A mutant entry; the mutant is expected to be rejected (ill-formed or failed)."""
    prog = apply_mutation(entry.program, m)
    return CorpusEntry(f"{entry.name}[{m}]", pretty_print(prog), Expectation("failed"))


@dataclass
class MutationResult:
    entry: str
    mutation: Mutation
    status: str   # killed-ill-formed | killed-verification | survived-benign | survived-stuck | inapplicable
    detail: str = ""

    @property
    def killed(self) -> bool:
        return self.status.startswith("killed")

    def to_json(self) -> dict:
        return {"entry": self.entry, "mutation": str(self.mutation), "kind": self.mutation.kind,
                "status": self.status, "detail": self.detail}


def run_mutation(entry: CorpusEntry, m: Mutation, fuel: int = DEFAULT_FUEL,
                 depth: int = DEFAULT_DEPTH) -> MutationResult:
    try:
        mutant = mutate(entry, m)
    except Inapplicable as e:
        return MutationResult(entry.name, m, "inapplicable", str(e))
    prog, v = _verdict_of(mutant.source, mutant.name, depth)
    if v.verdict == "ill-formed":
        return MutationResult(entry.name, m, "killed-ill-formed", "; ".join(v.diagnostics[:3]))
    if v.verdict == "failed":
        return MutationResult(entry.name, m, "killed-verification",
                              ", ".join(o.key for o in v.failed()))
    out = run_program(prog, fuel, trace=False)
    if out.kind == "stuck":
        return MutationResult(entry.name, m, "survived-stuck", out.summary())
    return MutationResult(entry.name, m, "survived-benign", out.summary())


# -- random executable programs ----------------------------------------------------------

@dataclass(frozen=True)
class GenCaps:
    classes: int = 3
    cmds: int = 6
    methods: int = 2
    fields: int = 1
    depth: int = 3
    fan_in: int = 2


def generate_exec_program(seed: int, caps: GenCaps = GenCaps()) -> Program:
    """A random well-formed program with trivial specifications.

    Hierarchies have at most ``caps.depth`` levels and ``caps.fan_in`` direct
    bases per class.  Every class redeclares each inherited method, and a
    method body only dynamically calls methods with smaller names, so method
    calls always terminate; ``main`` may still get stuck (use after delete,
    null receivers), which is a classified outcome.
    """
    rng = random.Random(seed)
    classes: list[ClassDef] = []
    level: dict[str, int] = {}
    meths: dict[str, list[str]] = {}
    fields: dict[str, list[str]] = {}
    counter = 0

    def fresh_method() -> str:
        nonlocal counter
        counter += 1
        return f"m{counter}"

    for i in range(max(1, caps.classes)):
        name = f"C{i}"
        pool = [c.name for c in classes if level[c.name] < caps.depth]
        nb = rng.randint(0, min(caps.fan_in, len(pool)))
        bases = tuple(sorted(rng.sample(pool, nb)))
        level[name] = 1 + max((level[b] for b in bases), default=0)
        inherited = sorted({m for b in bases for m in meths[b]}, key=lambda s: int(s[1:]))
        own = [fresh_method() for _ in range(rng.randint(0, caps.methods))]
        names = inherited + own
        meths[name] = names
        fields[name] = [f"f{i}_{k}" for k in range(rng.randint(0, caps.fields))]

        def body(allowed_calls: list[str]) -> Cmd:
            parts: list[Cmd] = []
            for _ in range(rng.randint(0, 2)):
                r = rng.random()
                if r < 0.4 and fields[name]:
                    val = rng.choice([NULL, THIS])
                    parts.append(Update(THIS, rng.choice(fields[name]), val))
                elif r < 0.8 and allowed_calls:
                    parts.append(DynCall(THIS, rng.choice(allowed_calls), ()))
            return _seq(parts)

        methods = tuple(
            MethodDef(m, (), TRUE, TRUE, body([x for x in names if int(x[1:]) < int(m[1:])]))
            for m in names
        )
        ctor = CtorDef((), TRUE, TRUE, tuple(BaseInit(b) for b in bases), body(names))
        dtor = DtorDef(TRUE, TRUE, body(names))
        classes.append(ClassDef(name, bases, tuple(fields[name]), (), ctor, dtor, methods))

    prog = Program(tuple(classes), Skip())
    return replace(prog, main=_gen_main(rng, prog, meths, fields, caps.cmds))


def _seq(parts: list[Cmd]) -> Cmd:
    if not parts:
        return Skip()
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def _gen_main(rng: random.Random, prog: Program, meths, fields, n: int) -> Cmd:
    names = [c.name for c in prog.classes]
    scope: list[tuple[str, str]] = []
    fresh = [0]

    def var() -> str:
        fresh[0] += 1
        return f"x{fresh[0]}"

    def gen(k: int) -> Cmd:
        if k <= 0:
            return Skip()
        r = rng.random()
        if not scope or r < 0.3:
            x, cls = var(), rng.choice(names)
            scope.append((x, cls))
            rest = gen(k - 1)
            scope.pop()
            return Let(x, New(cls), rest)
        x, cls = rng.choice(scope)
        c = prog.cls(cls)
        if r < 0.45 and c.bases:
            y, b = var(), rng.choice(c.bases)
            scope.append((y, b))
            rest = gen(k - 1)
            scope.pop()
            return Let(y, Upcast(b, Var(x)), rest)
        if r < 0.6 and fields[cls]:
            f = rng.choice(fields[cls])
            if rng.random() < 0.5:
                y = var()
                return Let(y, Lookup(Var(x), f), gen(k - 1))
            val = rng.choice([NULL, Var(rng.choice(scope)[0])])
            return Seq(Update(Var(x), f, val), gen(k - 1))
        if r < 0.8 and meths[cls]:
            return Seq(DynCall(Var(x), rng.choice(meths[cls]), ()), gen(k - 1))
        return Seq(Delete(Var(x)), gen(k - 1))

    return gen(n)


def classify(outcome: Outcome) -> str:
    """Outcome class name used in generator reports."""
    return outcome.summary()


# -- corpus pipeline ---------------------------------------------------------------------

@dataclass
class CorpusReport:
    entries: list[EntryReport] = field(default_factory=list)
    soundness: list[SoundnessReport] = field(default_factory=list)
    mutations: list[MutationResult] = field(default_factory=list)
    generated: list[dict] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return (all(e.ok for e in self.entries) and all(s.passed for s in self.soundness)
                and not any(m.status == "survived-stuck" for m in self.mutations))

    def kill_rate(self, kind: str) -> Optional[float]:
        rs = [m for m in self.mutations if m.mutation.kind == kind and m.status != "inapplicable"]
        return sum(m.killed for m in rs) / len(rs) if rs else None

    def table(self) -> str:
        w = max([len(e.name) for e in self.entries] + [5])
        lines = [f"{'entry':<{w}}  {'result':<6}  {'verdict':<10}  {'run':<28}  time"]
        for e in self.entries:
            lines.append(f"{e.name:<{w}}  {'ok' if e.ok else 'FAIL':<6}  {e.verdict:<10}  "
                         f"{e.run or '-':<28}  {e.seconds:.2f}s")
            lines += [f"{'':<{w}}    {p}" for p in e.problems]
        for s in self.soundness:
            if not s.passed:
                lines.append(f"soundness FAIL {s.name}: {s.outcome}")
        stuck = sum(not s.passed for s in self.soundness)
        lines.append(f"soundness: {len(self.soundness)} verified entries run, {stuck} stuck")
        if self.mutations:
            by: dict[str, dict[str, int]] = {}
            for m in self.mutations:
                by.setdefault(m.mutation.kind, {}).setdefault(m.status, 0)
                by[m.mutation.kind][m.status] += 1
            for kind in sorted(by):
                counts = ", ".join(f"{k}={v}" for k, v in sorted(by[kind].items()))
                lines.append(f"mutations {kind}: {counts}")
        if self.generated:
            kinds: dict[str, int] = {}
            for g in self.generated:
                kinds[g["outcome"]] = kinds.get(g["outcome"], 0) + 1
            lines.append("generated: " + ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
        passed = sum(e.ok for e in self.entries)
        lines.append(f"{passed}/{len(self.entries)} entries as expected ({self.seconds:.2f}s)")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "entries": [e.to_json() for e in self.entries],
            "soundness": [s.to_json() for s in self.soundness],
            "mutations": [m.to_json() for m in self.mutations],
            "generated": self.generated,
            "seconds": round(self.seconds, 3),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def run_corpus(directory, fuel: int = DEFAULT_FUEL, depth: int = DEFAULT_DEPTH,
               mutation_kinds: Iterable[str] = (), seed: Optional[int] = None,
               generated: int = 0) -> CorpusReport:
    """Check every entry, run soundness checks on verified ones, then optional extras."""
    t0 = time.perf_counter()
    rep = CorpusReport()
    entries = load_corpus(directory)
    kinds = tuple(mutation_kinds)
    for e in entries:
        r = check_entry(e, depth)
        rep.entries.append(r)
        if r.verdict == "verified":
            rep.soundness.append(soundness_check(e, fuel, depth))
            if kinds:
                for m in enumerate_mutations(e.program, kinds):
                    rep.mutations.append(run_mutation(e, m, fuel, depth))
    if seed is not None:
        for i in range(generated):
            prog = generate_exec_program(seed + i)
            interp = Interpreter(prog, fuel, trace=False, check_heap=True)
            out = interp.exec_cmd(Heap(), prog.main)
            rep.generated.append({"seed": seed + i, "outcome": classify(out),
                                  "heap_violations": len(interp.heap_violations)})
    rep.seconds = time.perf_counter() - t0
    return rep


def wellformed(program: Program) -> bool:
    return not check_wellformed(program)
