"""Symbolic execution against the Hoare rules, plus member and program verification.

Every check produces an ``Obligation`` carrying a derivation tree whose
nodes are named after the proof rules (HNew, HDelete, ...), the member
rules (ctor/dtor/method correctness, override, refinement) or, at the
leaves, the weakening rules used by the entailment engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .entailment import (
    DEFAULT_DEPTH,
    Entailer,
    EntailmentResult,
    Fresh,
    SymHeap,
    class_of,
    layer_labels,
    render_chunks,
    sym_downcast,
)
from .runtime import Null, ObjectPointer
from .syntax import (
    TRUE,
    Assertion,
    ClassRef,
    Cmd,
    CtedAssn,
    Delete,
    DynAssn,
    DynCall,
    EVar,
    Expr,
    Let,
    Lookup,
    New,
    PointsTo,
    Program,
    Seq,
    Skip,
    Star,
    StaticCall,
    Sym,
    Term,
    Update,
    Upcast,
    Var,
    check_wellformed,
    mk_sub,
    static_type,
    substitute,
)
from .parser import fmt_cmd, fmt_expr, fmt_term

HOARE_RULES = ("HFrame", "HConseq", "HNull", "HPointer", "HLookup", "HUpdate", "HLet", "HSeq",
               "HSkip", "HContext", "HConsContext", "HConstruct", "HNew", "HDestruct",
               "HDeleteNull", "HDelete", "HStaticDispatch", "HDynamicDispatch", "HExists", "HUpcast")
MEMBER_RULES = ("CtorCorrect", "DtorCorrect", "MethodCorrect", "OverrideCorrect",
                "DtorOverrideCorrect", "Refinement", "ProgramCorrect", "Main")
WEAKENING_RULES = ("ADyntype", "AMovePred", "AMoveCted", "APredDef", "AFrame", "ATrans", "AImply")


# -- derivations ----------------------------------------------------------------------

@dataclass
class Derivation:
    rule: str
    pre: str = ""
    post: str = ""
    children: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"rule": self.rule, "pre": self.pre, "post": self.post,
                "children": [c.to_json() for c in self.children]}

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def rules(self) -> list[str]:
        return [d.rule for d in self.walk()]


DERIVATION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "mcpp-derivation",
    "type": "object",
    "required": ["rule", "pre", "post", "children"],
    "additionalProperties": False,
    "properties": {
        "rule": {"type": "string"},
        "pre": {"type": "string"},
        "post": {"type": "string"},
        "children": {"type": "array", "items": {"$ref": "#"}},
    },
}


def entailment_derivation(res: EntailmentResult, pre: str, post: str) -> Derivation:
    """HConseq node whose children are the weakening steps, one per layer."""
    kids = [Derivation(label, "", "") for label in layer_labels(res.steps)]
    if kids:
        by_layer: dict[int, list] = {}
        for st in res.rewrites:
            by_layer.setdefault(st.layer, []).append(st)
        for kid, layer in zip(kids, sorted(by_layer)):
            kid.pre = " ; ".join(render_chunks(s.before) for s in by_layer[layer])
            kid.post = " ; ".join(render_chunks(s.after) for s in by_layer[layer])
    return Derivation("HConseq", pre, post, kids)


# -- states ------------------------------------------------------------------------------

@dataclass(frozen=True)
class VcState:
    heap: SymHeap = SymHeap()
    bindings: tuple = ()

    def lookup(self, x: str) -> Optional[Term]:
        for k, v in reversed(self.bindings):
            if k == x:
                return v
        return None

    def bind(self, x: str, v: Term) -> "VcState":
        return VcState(self.heap, self.bindings + ((x, v),))

    def unbind_to(self, n: int) -> "VcState":
        return VcState(self.heap, self.bindings[:n])

    def with_heap(self, heap: SymHeap) -> "VcState":
        return VcState(heap, self.bindings)

    def __str__(self) -> str:
        return str(self.heap)


class VerifyFailure(Exception):
    def __init__(self, message: str, derivation: Optional[Derivation] = None):
        super().__init__(message)
        self.message = message
        self.derivation = derivation


@dataclass
class Obligation:
    key: str
    kind: str
    verdict: str = "pass"
    diagnostics: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    derivation: Optional[Derivation] = None
    labels: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict == "pass"

    def to_json(self, with_derivation: bool = True) -> dict:
        out = {"key": self.key, "kind": self.kind, "verdict": self.verdict,
               "diagnostics": list(self.diagnostics), "warnings": list(self.warnings)}
        if self.labels:
            out["labels"] = list(self.labels)
        if with_derivation and self.derivation is not None:
            out["derivation"] = self.derivation.to_json()
        return out


@dataclass
class Verdict:
    verdict: str                    # "verified" | "failed" | "ill-formed"
    obligations: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict == "verified"

    def obligation(self, key: str) -> Obligation:
        for o in self.obligations:
            if o.key == key:
                return o
        raise KeyError(key)

    def failed(self) -> list[Obligation]:
        return [o for o in self.obligations if not o.ok]

    def to_json(self, with_derivation: bool = True) -> dict:
        return {"verdict": self.verdict, "diagnostics": list(self.diagnostics),
                "obligations": [o.to_json(with_derivation) for o in self.obligations]}


# -- symbolic execution -----------------------------------------------------------------

def _is_pointer(v: Term) -> bool:
    return not isinstance(v, (Null, ClassRef, EVar)) and static_type(v) is not None


class SymExec:
    """Symbolic executor for one obligation (owns its fresh-name supply)."""

    def __init__(self, program: Program, depth: int = DEFAULT_DEPTH):
        self.program = program
        self.fresh = Fresh()
        self.engine = Entailer(program, depth, self.fresh)

    # -- consume / produce with derivation bookkeeping --
    def consume(self, st: VcState, a: Assertion, what: str, require_empty: bool = False,
                subst: Optional[dict] = None) -> tuple[EntailmentResult, Derivation]:
        res = self.engine.consume(st.heap, a, subst, require_empty)
        if not res.proved:
            msg = f"{what}: {res.describe()}"
            if require_empty and res.failed_goal is None:
                msg = f"{what}: leftover resources {render_chunks(res.state)}"
            raise VerifyFailure(msg, Derivation("HConseq", str(st), f"{what} (failed)"))
        return res, entailment_derivation(res, str(st), render_chunks(res.frame))

    def produce(self, st: VcState, a: Assertion) -> list[VcState]:
        return [st.with_heap(h) for h in self.engine.produce(st.heap, a)]

    def fresh_sym(self, base: str, static: Optional[str] = None) -> Sym:
        return Sym(self.fresh.name(base), static)

    # -- expressions --
    def expr(self, st: VcState, e: Expr) -> list[tuple[VcState, Term, Optional[Derivation]]]:
        if isinstance(e, Null):
            return [(st, e, Derivation("HNull", str(st), "result = null"))]
        if isinstance(e, ObjectPointer):
            return [(st, e, Derivation("HPointer", str(st), f"result = {e}"))]
        if isinstance(e, Var):
            v = st.lookup(e.name)
            if v is None:
                raise VerifyFailure(f"unbound variable {e.name}")
            return [(st, v, None)]
        if isinstance(e, Lookup):
            out = []
            for st1, o, d in self.expr(st, e.obj):
                if not _is_pointer(o):
                    raise VerifyFailure(f"lookup {fmt_expr(e)}: {fmt_term(o)} is not known to be an object pointer")
                v = EVar(self.fresh.name("v"))
                res, cd = self.consume(st1, PointsTo(o, e.field, v), f"lookup {fmt_expr(e)}")
                val = res.subst.get(v, v)
                st2 = st1.with_heap(SymHeap(res.frame + (PointsTo(o, e.field, val),)))
                node = Derivation("HLookup", str(st1), f"{st2} /\\ result = {fmt_term(val)}",
                                  [cd] if res.rewrites else [])
                out.append((st2, val, _context(d, node)))
            return out
        if isinstance(e, Upcast):
            out = []
            for st1, o, d in self.expr(st, e.expr):
                src = static_type(o) if _is_pointer(o) else None
                if src is None or not self.program.has_class(src) or e.cls not in self.program.bases(src):
                    raise VerifyFailure(f"bad upcast ({e.cls}*) {fmt_term(o)}")
                v = mk_sub(o, e.cls)
                out.append((st1, v, _context(d, Derivation("HUpcast", str(st1), f"result = {fmt_term(v)}"))))
            return out
        if isinstance(e, New):
            out = []
            for st1, vs, ds in self.exprs(st, e.args):
                cd = self.program.cls(e.cls)
                k = cd.ctor
                if len(k.params) != len(vs):
                    raise VerifyFailure(f"new {e.cls}: arity mismatch")
                s = dict(zip(k.params, vs))
                res, conseq = self.consume(st1, substitute(k.pre, s), f"precondition of new {e.cls}")
                r = self.fresh_sym("r", e.cls)
                post = Star(substitute(k.post, {**s, "this": r}), CtedAssn(r, ClassRef(e.cls)))
                for st2 in self.produce(st1.with_heap(SymHeap(res.frame)), post):
                    node = Derivation("HNew", str(st1), str(st2), [conseq] if res.rewrites else [])
                    out.append((st2, r, _context_many(ds, _frame(res, node))))
            return out
        raise VerifyFailure(f"unsupported expression {e!r}")

    def exprs(self, st: VcState, es) -> list[tuple[VcState, list, list]]:
        paths = [(st, [], [])]
        for e in es:
            nxt = []
            for st1, vs, ds in paths:
                for st2, v, d in self.expr(st1, e):
                    nxt.append((st2, vs + [v], ds + ([d] if d else [])))
            paths = nxt
        return paths

    # -- calls shared by commands and member rules --
    def construct(self, st: VcState, o: Term, cls: str, args: list) -> list[tuple[VcState, Derivation]]:
        """HConstruct: ``o->C(v)`` with the constructor spec of ``cls``."""
        k = self.program.cls(cls).ctor
        s = dict(zip(k.params, args))
        res, conseq = self.consume(st, substitute(k.pre, s), f"precondition of {cls} constructor on {fmt_term(o)}")
        out = []
        for st2 in self.produce(st.with_heap(SymHeap(res.frame)), substitute(k.post, {**s, "this": o})):
            out.append((st2, _frame(res, Derivation("HConstruct", str(st), str(st2),
                                                     [conseq] if res.rewrites else []))))
        return out

    def destruct(self, st: VcState, o: Term, cls: str) -> list[tuple[VcState, Derivation]]:
        """HDestruct: ``o->~C()`` with ``C`` substituted for theta."""
        d = self.program.cls(cls).dtor
        res, conseq = self.consume(st, substitute(d.pre, {"this": o, "theta": ClassRef(cls)}),
                                   f"precondition of ~{cls} on {fmt_term(o)}")
        out = []
        for st2 in self.produce(st.with_heap(SymHeap(res.frame)), d.post):
            out.append((st2, _frame(res, Derivation("HDestruct", str(st), str(st2),
                                                     [conseq] if res.rewrites else []))))
        return out

    # -- commands --
    def cmd(self, st: VcState, c: Cmd) -> tuple[list[VcState], Derivation]:
        if isinstance(c, Skip):
            return [st], Derivation("HSkip", str(st), str(st))
        if isinstance(c, Seq):
            sts, d1 = self.cmd(st, c.first)
            out, kids = [], [d1]
            for st1 in sts:
                sts2, d2 = self.cmd(st1, c.second)
                out += sts2
                kids.append(d2)
            return out, Derivation("HSeq", str(st), _render_states(out), kids)
        if isinstance(c, Let):
            out, kids = [], []
            for st1, v, d in self.expr(st, c.expr):
                n = len(st1.bindings)
                sts, d2 = self.cmd(st1.bind(c.var, v), c.body)
                out += [x.unbind_to(n) for x in sts]
                kids += ([d] if d else []) + [d2]
            return out, Derivation("HLet", str(st), _render_states(out), kids)
        if isinstance(c, Update):
            out, kids = [], []
            for st1, o, d1 in self.expr(st, c.obj):
                for st2, v, d2 in self.expr(st1, c.value):
                    if not _is_pointer(o):
                        raise VerifyFailure(f"update {fmt_cmd(c)}: {fmt_term(o)} is not known to be an object pointer")
                    old = EVar(self.fresh.name("old"))
                    res, cd = self.consume(st2, PointsTo(o, c.field, old), f"update {fmt_cmd(c)}")
                    st3 = st2.with_heap(SymHeap(res.frame + (PointsTo(o, c.field, v),)))
                    node = Derivation("HUpdate", str(st2), str(st3), [cd] if res.rewrites else [])
                    kids.append(_context_many([x for x in (d1, d2) if x], node))
                    out.append(st3)
            return out, _one(kids, "HUpdate", st, out)
        if isinstance(c, Delete):
            out, kids = [], []
            for st1, o, d in self.expr(st, c.expr):
                if isinstance(o, Null):
                    node = Derivation("HDeleteNull", str(st1), str(st1))
                    out.append(st1)
                    kids.append(_context(d, node))
                    continue
                sts, node = self.delete(st1, o)
                out += sts
                kids.append(_context(d, node))
            return out, _one(kids, "HDelete", st, out)
        if isinstance(c, (StaticCall, DynCall)):
            out, kids = [], []
            for st1, vs, ds in self.exprs(st, (c.obj,) + c.args):
                o, args = vs[0], vs[1:]
                sts, node = self.call(st1, c, o, args)
                out += sts
                kids.append(_context_many(ds, node))
            rule = "HStaticDispatch" if isinstance(c, StaticCall) else "HDynamicDispatch"
            return out, _one(kids, rule, st, out)
        raise VerifyFailure(f"unsupported command {c!r}")

    def delete(self, st: VcState, o: Term) -> tuple[list[VcState], Derivation]:
        if not _is_pointer(o):
            raise VerifyFailure(f"delete {fmt_term(o)}: not known to be null or an object pointer")
        cls = static_type(o)
        cands = []
        for ch in st.heap.chunks:
            if isinstance(ch, CtedAssn) and class_of(ch.index) is not None:
                k = class_of(ch.index)
                if sym_downcast(o, k) is not None and sym_downcast(o, k) == sym_downcast(ch.target, k):
                    if k not in cands:
                        cands.append(k)
        if not cands:
            probe = EVar(self.fresh.name("k"))
            res = self.engine.consume(st.heap, CtedAssn(o, probe))
            if res.proved and class_of(res.subst.get(probe)) is not None:
                cands.append(class_of(res.subst[probe]))
        if not cands:
            raise VerifyFailure(f"delete {fmt_term(o)}: missing cted")
        if len(cands) > 1:
            raise VerifyFailure(f"delete {fmt_term(o)}: ambiguous cted index among {', '.join(cands)}")
        k = cands[0]
        d = self.program.cls(cls).dtor
        pre = Star(CtedAssn(o, ClassRef(k)), substitute(d.pre, {"this": o, "theta": ClassRef(k)}))
        res, conseq = self.consume(st, pre, f"delete {fmt_term(o)} (cted and ~{cls} precondition with theta = {k})")
        out = self.produce(st.with_heap(SymHeap(res.frame)), d.post)
        node = Derivation("HDelete", str(st), _render_states(out), [conseq] if res.rewrites else [])
        return out, _frame(res, node)

    def call(self, st: VcState, c, o: Term, args: list) -> tuple[list[VcState], Derivation]:
        if not _is_pointer(o):
            raise VerifyFailure(f"call {fmt_cmd(c)}: receiver {fmt_term(o)} is not known to be an object pointer")
        cls = static_type(o)
        if isinstance(c, StaticCall):
            if cls != c.cls:
                raise VerifyFailure(f"call {fmt_cmd(c)}: static type of {fmt_term(o)} is {cls}, not {c.cls}")
            theta, rule, kids = c.cls, "HStaticDispatch", []
        else:
            probe = EVar(self.fresh.name("k"))
            res = self.engine.consume(st.heap, DynAssn(o, probe))
            theta = class_of(res.subst.get(probe)) if res.proved else None
            if theta is None:
                raise VerifyFailure(f"call {fmt_cmd(c)}: no dynamic type known for {fmt_term(o)}"
                                    + (f" ({res.describe()})" if not res.proved else ""))
            rule = "HDynamicDispatch"
            kids = [entailment_derivation(res, str(st), f"dyn({fmt_term(o)}, {theta})")] if res.rewrites else []
        m = self.program.cls(cls).method(c.method)
        if m is None:
            raise VerifyFailure(f"call {fmt_cmd(c)}: method {c.method} not declared in {cls}")
        if len(m.params) != len(args):
            raise VerifyFailure(f"call {fmt_cmd(c)}: arity mismatch")
        s = {"this": o, "theta": ClassRef(theta), **dict(zip(m.params, args))}
        res, conseq = self.consume(st, substitute(m.pre, s), f"precondition of {cls}::{m.name} with theta = {theta}")
        out = self.produce(st.with_heap(SymHeap(res.frame)), substitute(m.post, s))
        node = Derivation(rule, str(st), _render_states(out), kids + ([conseq] if res.rewrites else []))
        return out, _frame(res, node)


def _render_states(sts: list[VcState]) -> str:
    if not sts:
        return "false"
    return " || ".join(str(s) for s in sts)


def _context(sub: Optional[Derivation], node: Derivation) -> Derivation:
    if sub is None:
        return node
    return Derivation("HContext", sub.pre, node.post, [sub, node])


def _context_many(subs: list, node: Derivation) -> Derivation:
    subs = [d for d in subs if d is not None]
    if not subs:
        return node
    return Derivation("HContext", subs[0].pre, node.post, subs + [node])


def _frame(res: EntailmentResult, node: Derivation) -> Derivation:
    if not res.frame:
        return node
    return Derivation("HFrame", node.pre, node.post, [node])


def _one(kids: list, rule: str, st: VcState, out: list) -> Derivation:
    if len(kids) == 1:
        return kids[0]
    return Derivation(rule, str(st), _render_states(out), kids)


# -- member rules ------------------------------------------------------------------------

class Verifier:
    def __init__(self, program: Program, depth: int = DEFAULT_DEPTH):
        self.program = program
        self.depth = depth

    def _run(self, ob: Obligation, rule: str, body) -> Obligation:
        root = Derivation(rule, "", "")
        ob.derivation = root
        try:
            body(root)
        except VerifyFailure as f:
            ob.verdict = "fail"
            ob.diagnostics.append(f.message)
            if f.derivation is not None:
                root.children.append(f.derivation)
        return ob

    def _this(self, cls: str) -> Sym:
        return Sym("this", cls)

    # constructors
    def verify_ctor(self, cls: str) -> Obligation:
        cd = self.program.cls(cls)
        k = cd.ctor
        ob = Obligation(f"ctor({cls})", "ctor")

        def body(root: Derivation) -> None:
            x = SymExec(self.program, self.depth)
            o = self._this(cls)
            args = [Sym(p) for p in k.params]
            s = dict(zip(k.params, args))
            env = VcState(SymHeap(), (("this", o),) + tuple(s.items()))
            for st in x.produce(env, substitute(k.pre, s)):
                paths = [st]
                for bi in k.base_inits:
                    sub = mk_sub(o, bi.cls)
                    nxt = []
                    for p in paths:
                        for p1, vs, ds in x.exprs(p, bi.args):
                            for p2, dc in x.construct(p1, sub, bi.cls, vs):
                                res, cd2 = x.consume(p2, DynAssn(sub, ClassRef(bi.cls)),
                                                     f"dyn residue of base {bi.cls} in {cls} constructor")
                                root.children.append(_context_many(ds, dc))
                                if res.rewrites:
                                    root.children.append(cd2)
                                nxt.append(p2.with_heap(SymHeap(res.frame)))
                    paths = nxt
                init = Star(_fields_null(o, cd.fields), DynAssn(o, ClassRef(cls)))
                for p in paths:
                    for p1 in x.produce(p, init):
                        sts, dbody = x.cmd(p1, k.body)
                        root.children.append(dbody)
                        for p2 in sts:
                            _, dq = x.consume(p2, substitute(k.post, {**s, "this": o}),
                                              f"postcondition of {cls} constructor", require_empty=True)
                            root.children.append(dq)
            root.post = _fmt(substitute(k.post, {**s, "this": o}))
            root.pre = _fmt(substitute(k.pre, s))

        return self._run(ob, "CtorCorrect", body)

    # destructors
    def verify_dtor(self, cls: str) -> list[Obligation]:
        obs = self.override_checks(cls, None)
        cd = self.program.cls(cls)
        d = cd.dtor
        ob = Obligation(f"dtor({cls})", "dtor")

        def body(root: Derivation) -> None:
            x = SymExec(self.program, self.depth)
            o = self._this(cls)
            env = VcState(SymHeap(), (("this", o),))
            pre = substitute(d.pre, {"this": o, "theta": ClassRef(cls)})
            root.pre, root.post = _fmt(pre), _fmt(d.post)
            for st in x.produce(env, pre):
                sts, dbody = x.cmd(st, d.body)
                root.children.append(dbody)
                for p in sts:
                    residue = Star(_fields_any(o, cd.fields, x.fresh), DynAssn(o, ClassRef(cls)))
                    res, dr = x.consume(p, residue, f"fields and dyn({o}, {cls}) after ~{cls} body")
                    if res.rewrites:
                        root.children.append(dr)
                    paths = [p.with_heap(SymHeap(res.frame))]
                    for b in reversed(cd.bases):
                        sub = mk_sub(o, b)
                        nxt = []
                        for q in paths:
                            for q1 in x.produce(q, DynAssn(sub, ClassRef(b))):
                                for q2, dd in x.destruct(q1, sub, b):
                                    root.children.append(dd)
                                    nxt.append(q2)
                        paths = nxt
                    for q in paths:
                        _, dq = x.consume(q, d.post, f"postcondition of ~{cls}", require_empty=True)
                        root.children.append(dq)

        obs.append(self._run(ob, "DtorCorrect", body))
        return obs

    # methods
    def verify_method(self, cls: str, name: str) -> list[Obligation]:
        obs = self.override_checks(cls, name)
        m = self.program.cls(cls).method(name)
        ob = Obligation(f"method({cls},{name})", "method")

        def body(root: Derivation) -> None:
            x = SymExec(self.program, self.depth)
            o = self._this(cls)
            args = [Sym(p) for p in m.params]
            s = {"this": o, "theta": ClassRef(cls), **dict(zip(m.params, args))}
            env = VcState(SymHeap(), (("this", o),) + tuple(zip(m.params, args)))
            root.pre, root.post = _fmt(substitute(m.pre, s)), _fmt(substitute(m.post, s))
            for st in x.produce(env, substitute(m.pre, s)):
                sts, dbody = x.cmd(st, m.body)
                root.children.append(dbody)
                for p in sts:
                    _, dq = x.consume(p, substitute(m.post, s), f"postcondition of {cls}::{name}",
                                      require_empty=True)
                    root.children.append(dq)

        obs.append(self._run(ob, "MethodCorrect", body))
        return obs

    # overriding and refinement
    def override_checks(self, cls: str, member: Optional[str]) -> list[Obligation]:
        """Override obligations against each direct base, recursing per inheritance path."""
        out = []
        for b in self.program.bases(cls):
            if member is not None and self.program.cls(b).method(member) is None:
                continue
            label = member if member is not None else "dtor"
            ob = Obligation(f"override({cls},{label},{b})", "override")
            ob.derivation = Derivation("OverrideCorrect" if member else "DtorOverrideCorrect", "", "")
            for ref in self._override_rec(cls, member, [b]):
                out.append(ref)
                if ref.derivation is not None:
                    ob.derivation.children.append(ref.derivation)
                if not ref.ok:
                    ob.verdict = "fail"
                    ob.diagnostics += [f"against {'/'.join(ref.key.split(',')[1:2])}: {m}" for m in ref.diagnostics]
            out.append(ob)
        return out

    def _override_rec(self, cls: str, member: Optional[str], path: list[str]) -> list[Obligation]:
        out = [self.check_refinement(cls, path, member)]
        base = path[-1]
        for b2 in self.program.bases(base):
            if member is None or self.program.cls(b2).method(member) is not None:
                out += self._override_rec(cls, member, path + [b2])
        return out

    def _spec(self, cls: str, member: Optional[str]):
        c = self.program.cls(cls)
        if member is None:
            return (), c.dtor.pre, c.dtor.post
        m = c.method(member)
        return m.params, m.pre, m.post

    def check_refinement(self, derived: str, path, member: Optional[str]) -> Obligation:
        """``spec_D`` refines ``spec_B`` where B is reached from D along ``path``."""
        if isinstance(path, str):
            path = [path]
        base = path[-1]
        label = member if member is not None else "dtor"
        ob = Obligation(f"refinement({derived},{'/'.join(path)},{label})", "refinement")

        def body(root: Derivation) -> None:
            x = SymExec(self.program, self.depth)
            od = Sym("this", derived)
            o = od
            for step in path:
                o = mk_sub(o, step)
            params_d, pre_d, post_d = self._spec(derived, member)
            params_b, pre_b, post_b = self._spec(base, member)
            if len(params_d) != len(params_b):
                raise VerifyFailure("arity mismatch")
            vs = [Sym(p) for p in params_b]
            sb = {"this": o, "theta": ClassRef(derived), **dict(zip(params_b, vs))}
            sd = {"this": od, "theta": ClassRef(derived), **dict(zip(params_d, vs))}
            pb, pd, qd, qb = (substitute(pre_b, sb), substitute(pre_d, sd),
                              substitute(post_d, sd), substitute(post_b, sb))
            root.pre = f"{{{_fmt(pb)}}} _ {{{_fmt(qb)}}}"
            root.post = f"{{{_fmt(pd)}}} _ {{{_fmt(qd)}}}"
            steps = []
            for st in x.produce(VcState(), pb):
                res, dpre = x.consume(st, pd, f"refinement pre side ({derived} against {base})")
                steps += res.steps
                root.children.append(dpre)
                for st2 in x.produce(st.with_heap(SymHeap(res.frame)), qd):
                    res2, dpost = x.consume(st2, qb, f"refinement post side ({derived} against {base})")
                    steps += res2.steps
                    root.children.append(dpost)
            ob.labels = layer_labels(steps)

        return self._run(ob, "Refinement", body)

    # whole classes and programs
    def verify_class(self, cls: str) -> list[Obligation]:
        c = self.program.cls(cls)
        obs = [self.verify_ctor(cls)]
        obs += self.verify_dtor(cls)
        for m in c.methods:
            obs += self.verify_method(cls, m.name)
        return obs

    def verify_main(self) -> Obligation:
        ob = Obligation("main", "main")

        def body(root: Derivation) -> None:
            x = SymExec(self.program, self.depth)
            root.pre, root.post = "true", "true"
            sts, d = x.cmd(VcState(), self.program.main)
            root.children.append(d)
            for st in sts:
                if st.heap.chunks:
                    ob.warnings.append(f"main leaks {st.heap}")

        return self._run(ob, "Main", body)

    def verify_program(self) -> Verdict:
        wf = check_wellformed(self.program)
        if wf:
            return Verdict("ill-formed", [], [str(d) for d in wf])
        obs: list[Obligation] = []
        for c in self.program.classes:
            obs += self.verify_class(c.name)
        obs.append(self.verify_main())
        uniq = {o.key: o for o in obs}
        obs = sorted(uniq.values(), key=lambda o: o.key)
        verdict = "verified" if all(o.ok for o in obs) else "failed"
        return Verdict(verdict, obs, [f"{o.key}: {d}" for o in obs for d in o.diagnostics])


def _fmt(a: Assertion) -> str:
    from .parser import fmt_assertion
    return fmt_assertion(a)


def _fields_null(o: Term, fields) -> Assertion:
    out: Assertion = TRUE
    for f in fields:
        out = Star(out, PointsTo(o, f, Null()))
    return out


def _fields_any(o: Term, fields, fresh: Fresh) -> Assertion:
    out: Assertion = TRUE
    for f in fields:
        out = Star(out, PointsTo(o, f, EVar(fresh.name(f))))
    return out


def verify_program(program: Program, depth: int = DEFAULT_DEPTH) -> Verdict:
    return Verifier(program, depth).verify_program()


def check_refinement(program: Program, derived: str, base, member: Optional[str],
                     depth: int = DEFAULT_DEPTH) -> Obligation:
    return Verifier(program, depth).check_refinement(derived, base, member)
