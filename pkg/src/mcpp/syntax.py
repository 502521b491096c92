"""Abstract syntax of annotated programs and assertions.

Terms, expressions, commands and assertions are frozen dataclasses, so ASTs
compare structurally and can be shared freely.  Source locations are carried
on class members only and never take part in equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

from .runtime import (
    NULL,
    DowncastUndefined,
    Dyn,
    Null,
    ObjectPointer,
    downcast,
    dtype_of,
)

__all__ = [
    "NULL", "Null", "ObjectPointer", "DowncastUndefined", "downcast",
    "Var", "ClassRef", "Sub", "Sym", "EVar", "THIS", "THETA", "RESULT",
    "Lookup", "New", "Upcast", "Let", "Delete", "Update", "StaticCall",
    "DynCall", "Seq", "Skip", "Bool", "TRUE", "FALSE", "And", "Or", "Star",
    "Exists", "PointsTo", "PredAssn", "CtedAssn", "DynAssn", "PredDef",
    "MethodDef", "CtorDef", "BaseInit", "DtorDef", "ClassDef", "Program",
    "UnknownClass", "bases", "dtype", "static_type", "mk_sub", "substitute",
    "free_vars", "cmd_free_vars", "expr_free_vars", "subst_cmd", "subst_expr",
    "check_wellformed", "WfDiagnostic",
]


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


THIS = Var("this")
THETA = Var("theta")
RESULT = Var("result")


@dataclass(frozen=True)
class ClassRef:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Sub:
    """Subobject step applied to a non-literal term."""
    base: "Term"
    cls: str

    def __str__(self) -> str:
        return f"{self.base}.{self.cls}"


@dataclass(frozen=True)
class Sym:
    """Symbolic value.  ``static`` set means a non-null pointer of that static type."""
    name: str
    static: Optional[str] = None

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class EVar:
    """Unification variable standing for a goal-side existential."""
    name: str

    def __str__(self) -> str:
        return "?" + self.name


Term = Union[Null, ObjectPointer, Var, ClassRef, Sub, Sym, EVar]


def mk_sub(t: Term, cls: str) -> Term:
    if isinstance(t, ObjectPointer):
        return t.sub(cls)
    return Sub(t, cls)


def static_type(t: Term) -> Optional[str]:
    if isinstance(t, ObjectPointer):
        return t.static
    if isinstance(t, Sub):
        return t.cls
    if isinstance(t, Sym):
        return t.static
    return None


# -- expressions and commands ------------------------------------------------

@dataclass(frozen=True)
class Lookup:
    obj: "Expr"
    field: str


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Upcast:
    cls: str
    expr: "Expr"


Expr = Union[Null, ObjectPointer, Var, Lookup, New, Upcast]


@dataclass(frozen=True)
class Let:
    var: str
    expr: Expr
    body: "Cmd"


@dataclass(frozen=True)
class Delete:
    expr: Expr


@dataclass(frozen=True)
class Update:
    obj: Expr
    field: str
    value: Expr


@dataclass(frozen=True)
class StaticCall:
    obj: Expr
    cls: str
    method: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class DynCall:
    obj: Expr
    method: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Seq:
    first: "Cmd"
    second: "Cmd"


@dataclass(frozen=True)
class Skip:
    pass


Cmd = Union[Let, Delete, Update, StaticCall, DynCall, Seq, Skip]


# -- assertions ----------------------------------------------------------------

@dataclass(frozen=True)
class Bool:
    value: bool


TRUE = Bool(True)
FALSE = Bool(False)


@dataclass(frozen=True)
class And:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Or:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Star:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Assertion"


@dataclass(frozen=True)
class PointsTo:
    target: Term
    field: str
    value: Term


@dataclass(frozen=True)
class PredAssn:
    target: Term
    name: str
    index: Term
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class CtedAssn:
    target: Term
    index: Term


@dataclass(frozen=True)
class DynAssn:
    target: Term
    index: Term


Assertion = Union[Bool, And, Or, Star, Exists, PointsTo, PredAssn, CtedAssn, DynAssn]


# -- declarations --------------------------------------------------------------

Loc = Optional[tuple[int, int]]


@dataclass(frozen=True)
class PredDef:
    name: str
    params: tuple[str, ...]
    body: Assertion
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MethodDef:
    name: str
    params: tuple[str, ...]
    pre: Assertion
    post: Assertion
    body: Cmd
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BaseInit:
    cls: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class CtorDef:
    params: tuple[str, ...]
    pre: Assertion
    post: Assertion
    base_inits: tuple[BaseInit, ...]
    body: Cmd
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DtorDef:
    pre: Assertion
    post: Assertion
    body: Cmd
    loc: Loc = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ClassDef:
    name: str
    bases: tuple[str, ...] = ()
    fields: tuple[str, ...] = ()
    preds: tuple[PredDef, ...] = ()
    ctor: Optional[CtorDef] = None
    dtor: Optional[DtorDef] = None
    methods: tuple[MethodDef, ...] = ()
    loc: Loc = field(default=None, compare=False, repr=False)

    def method(self, name: str) -> Optional[MethodDef]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def pred(self, name: str) -> Optional[PredDef]:
        for p in self.preds:
            if p.name == name:
                return p
        return None


class UnknownClass(LookupError):
    pass


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDef, ...] = ()
    main: Cmd = Skip()

    @cached_property
    def _by_name(self) -> dict[str, ClassDef]:
        out: dict[str, ClassDef] = {}
        for c in self.classes:
            out.setdefault(c.name, c)
        return out

    def has_class(self, name: str) -> bool:
        return name in self._by_name

    def cls(self, name: str) -> ClassDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownClass(f"undeclared class {name}") from None

    def bases(self, name: str) -> tuple[str, ...]:
        return self.cls(name).bases

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    def is_base(self, derived: str, base: str) -> bool:
        return base in self.cls(derived).bases


def bases(program: Program, cls: str) -> frozenset[str]:
    return frozenset(program.bases(cls))


def dtype(program: Program, o: ObjectPointer, cls: str) -> frozenset[Dyn]:
    return frozenset(dtype_of(program.bases, o, cls))


# -- free variables and substitution -----------------------------------------------

def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Sub):
        return term_vars(t.base)
    return set()


def free_vars(a: Assertion) -> set[str]:
    if isinstance(a, Bool):
        return set()
    if isinstance(a, (And, Or, Star)):
        return free_vars(a.left) | free_vars(a.right)
    if isinstance(a, Exists):
        return free_vars(a.body) - {a.var}
    if isinstance(a, PointsTo):
        return term_vars(a.target) | term_vars(a.value)
    if isinstance(a, PredAssn):
        out = term_vars(a.target) | term_vars(a.index)
        for x in a.args:
            out |= term_vars(x)
        return out
    if isinstance(a, (CtedAssn, DynAssn)):
        return term_vars(a.target) | term_vars(a.index)
    raise TypeError(a)


def expr_free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Lookup):
        return expr_free_vars(e.obj)
    if isinstance(e, New):
        return set().union(*(expr_free_vars(x) for x in e.args)) if e.args else set()
    if isinstance(e, Upcast):
        return expr_free_vars(e.expr)
    return set()


def cmd_free_vars(c: Cmd) -> set[str]:
    if isinstance(c, Let):
        return expr_free_vars(c.expr) | (cmd_free_vars(c.body) - {c.var})
    if isinstance(c, Delete):
        return expr_free_vars(c.expr)
    if isinstance(c, Update):
        return expr_free_vars(c.obj) | expr_free_vars(c.value)
    if isinstance(c, (StaticCall, DynCall)):
        out = expr_free_vars(c.obj)
        for x in c.args:
            out |= expr_free_vars(x)
        return out
    if isinstance(c, Seq):
        return cmd_free_vars(c.first) | cmd_free_vars(c.second)
    return set()


def _fresh_name(base: str, avoid: set[str]) -> str:
    stem = base.rstrip("'")
    cand = stem + "'"
    while cand in avoid:
        cand += "'"
    return cand


def subst_term(t: Term, s: dict) -> Term:
    if isinstance(t, Var):
        return s.get(t.name, t)
    if isinstance(t, Sub):
        b = subst_term(t.base, s)
        return mk_sub(b, t.cls)
    if isinstance(t, EVar):
        return s.get(t, t)
    return t


def substitute(a: Assertion, s: dict) -> Assertion:
    """Capture-avoiding simultaneous substitution of variables by terms.

    Keys are variable names (``str``); ``EVar`` keys are also accepted so the
    entailment engine can instantiate unification variables.
    """
    if not s:
        return a
    if isinstance(a, Bool):
        return a
    if isinstance(a, (And, Or, Star)):
        return type(a)(substitute(a.left, s), substitute(a.right, s))
    if isinstance(a, Exists):
        inner = {k: v for k, v in s.items() if k != a.var}
        if not inner:
            return a
        range_vars: set[str] = set()
        for k, v in inner.items():
            if not isinstance(k, str) or k in free_vars(a.body):
                range_vars |= term_vars(v)
        var = a.var
        body = a.body
        if var in range_vars:
            avoid = range_vars | free_vars(a.body) | set(k for k in inner if isinstance(k, str))
            var = _fresh_name(a.var, avoid)
            body = substitute(body, {a.var: Var(var)})
        return Exists(var, substitute(body, inner))
    if isinstance(a, PointsTo):
        return PointsTo(subst_term(a.target, s), a.field, subst_term(a.value, s))
    if isinstance(a, PredAssn):
        return PredAssn(subst_term(a.target, s), a.name, subst_term(a.index, s),
                        tuple(subst_term(x, s) for x in a.args))
    if isinstance(a, CtedAssn):
        return CtedAssn(subst_term(a.target, s), subst_term(a.index, s))
    if isinstance(a, DynAssn):
        return DynAssn(subst_term(a.target, s), subst_term(a.index, s))
    raise TypeError(a)


def subst_expr(e: Expr, s: dict) -> Expr:
    """Substitute closed values for program variables."""
    if isinstance(e, Var):
        return s.get(e.name, e)
    if isinstance(e, Lookup):
        return Lookup(subst_expr(e.obj, s), e.field)
    if isinstance(e, New):
        return New(e.cls, tuple(subst_expr(x, s) for x in e.args))
    if isinstance(e, Upcast):
        return Upcast(e.cls, subst_expr(e.expr, s))
    return e


def subst_cmd(c: Cmd, s: dict) -> Cmd:
    if not s:
        return c
    if isinstance(c, Let):
        inner = {k: v for k, v in s.items() if k != c.var}
        return Let(c.var, subst_expr(c.expr, s), subst_cmd(c.body, inner))
    if isinstance(c, Delete):
        return Delete(subst_expr(c.expr, s))
    if isinstance(c, Update):
        return Update(subst_expr(c.obj, s), c.field, subst_expr(c.value, s))
    if isinstance(c, StaticCall):
        return StaticCall(subst_expr(c.obj, s), c.cls, c.method,
                          tuple(subst_expr(x, s) for x in c.args))
    if isinstance(c, DynCall):
        return DynCall(subst_expr(c.obj, s), c.method, tuple(subst_expr(x, s) for x in c.args))
    if isinstance(c, Seq):
        return Seq(subst_cmd(c.first, s), subst_cmd(c.second, s))
    return c


# -- well-formedness -------------------------------------------------------------

@dataclass(frozen=True, order=True)
class WfDiagnostic:
    message: str
    loc: Loc = field(default=None, compare=False)

    def __str__(self) -> str:
        return self.message


def _assn_classes(a: Assertion):
    """(class name, context) pairs mentioned by an assertion."""
    if isinstance(a, (And, Or, Star)):
        yield from _assn_classes(a.left)
        yield from _assn_classes(a.right)
    elif isinstance(a, Exists):
        yield from _assn_classes(a.body)
    else:
        terms: list[Term] = []
        if isinstance(a, PointsTo):
            terms = [a.target, a.value]
        elif isinstance(a, PredAssn):
            terms = [a.target, a.index, *a.args]
        elif isinstance(a, (CtedAssn, DynAssn)):
            terms = [a.target, a.index]
        for t in terms:
            yield from _term_classes(t)


def _term_classes(t: Term):
    if isinstance(t, ClassRef):
        yield t.name
    elif isinstance(t, Sub):
        yield t.cls
        yield from _term_classes(t.base)
    elif isinstance(t, ObjectPointer):
        yield t.cls
        yield from t.path


def _expr_classes(e: Expr):
    if isinstance(e, New):
        yield e.cls
        for x in e.args:
            yield from _expr_classes(x)
    elif isinstance(e, Upcast):
        yield e.cls
        yield from _expr_classes(e.expr)
    elif isinstance(e, Lookup):
        yield from _expr_classes(e.obj)
    elif isinstance(e, ObjectPointer):
        yield e.cls
        yield from e.path


def _cmd_exprs(c: Cmd):
    if isinstance(c, Let):
        yield c.expr
        yield from _cmd_exprs(c.body)
    elif isinstance(c, Delete):
        yield c.expr
    elif isinstance(c, Update):
        yield c.obj
        yield c.value
    elif isinstance(c, (StaticCall, DynCall)):
        yield c.obj
        yield from c.args
    elif isinstance(c, Seq):
        yield from _cmd_exprs(c.first)
        yield from _cmd_exprs(c.second)


def _sub_exprs(e: Expr):
    yield e
    if isinstance(e, Lookup):
        yield from _sub_exprs(e.obj)
    elif isinstance(e, New):
        for x in e.args:
            yield from _sub_exprs(x)
    elif isinstance(e, Upcast):
        yield from _sub_exprs(e.expr)


def _cmd_classes(c: Cmd):
    for e in _cmd_exprs(c):
        yield from _expr_classes(e)
    for call in _cmd_calls(c):
        if isinstance(call, StaticCall):
            yield call.cls


def _cmd_calls(c: Cmd):
    if isinstance(c, (StaticCall, DynCall)):
        yield c
    elif isinstance(c, Let):
        yield from _cmd_calls(c.body)
    elif isinstance(c, Seq):
        yield from _cmd_calls(c.first)
        yield from _cmd_calls(c.second)


def _pred_uses(a: Assertion):
    if isinstance(a, (And, Or, Star)):
        yield from _pred_uses(a.left)
        yield from _pred_uses(a.right)
    elif isinstance(a, Exists):
        yield from _pred_uses(a.body)
    elif isinstance(a, PredAssn):
        yield a


def check_wellformed(program: Program) -> list[WfDiagnostic]:
    """All well-formedness violations, sorted; empty means well-formed."""
    diags: set[WfDiagnostic] = set()

    def report(msg: str, loc: Loc = None) -> None:
        diags.add(WfDiagnostic(msg, loc))

    names = [c.name for c in program.classes]
    for n in sorted({n for n in names if names.count(n) > 1}):
        report(f"duplicate class {n}")
    declared = set(names)

    def need_class(n: str, where: str, loc: Loc) -> None:
        if n not in declared:
            report(f"undeclared class {n} in {where}", loc)

    # acyclic hierarchy
    state: dict[str, int] = {}

    def visit(n: str, stack: list[str]) -> None:
        if state.get(n) == 2 or n not in declared:
            return
        if state.get(n) == 1:
            cyc = stack[stack.index(n):] + [n]
            report("cyclic inheritance " + " -> ".join(cyc))
            return
        state[n] = 1
        for b in program.cls(n).bases:
            visit(b, stack + [n])
        state[n] = 2

    for n in sorted(declared):
        visit(n, [])

    def check_pred_uses(a: Assertion, where: str, loc: Loc) -> None:
        for use in _pred_uses(a):
            if isinstance(use.index, ClassRef) and use.index.name in declared:
                pd = program.cls(use.index.name).pred(use.name)
                if pd is None:
                    report(f"predicate {use.name} not declared in class {use.index.name} ({where})", loc)
                elif len(pd.params) != len(use.args):
                    report(f"predicate {use.index.name}.{use.name} expects {len(pd.params)} "
                           f"arguments, got {len(use.args)} ({where})", loc)

    def check_assn(a: Assertion, where: str, allowed: set[str], loc: Loc, theta_ok: bool) -> None:
        for n in _assn_classes(a):
            need_class(n, where, loc)
        fv = free_vars(a)
        if "theta" in fv and not theta_ok:
            report(f"theta not allowed in {where}", loc)
        for v in sorted(fv - allowed - {"theta"}):
            report(f"free variable {v} in {where}", loc)
        check_pred_uses(a, where, loc)

    def check_body(c: Cmd, where: str, allowed: set[str], loc: Loc) -> None:
        for n in _cmd_classes(c):
            need_class(n, where, loc)
        for v in sorted(cmd_free_vars(c) - allowed):
            report(f"free variable {v} in {where}", loc)
        check_arities(c, where, loc)

    def check_arities(c: Cmd, where: str, loc: Loc) -> None:
        for e in _cmd_exprs(c):
            for sub in _sub_exprs(e):
                if isinstance(sub, New) and sub.cls in declared:
                    ctor = program.cls(sub.cls).ctor
                    if ctor is not None and len(ctor.params) != len(sub.args):
                        report(f"new {sub.cls} expects {len(ctor.params)} arguments ({where})", loc)
        for call in _cmd_calls(c):
            if isinstance(call, StaticCall) and call.cls in declared:
                m = program.cls(call.cls).method(call.method)
                if m is not None and len(m.params) != len(call.args):
                    report(f"{call.cls}::{call.method} expects {len(m.params)} arguments ({where})", loc)

    for c in program.classes:
        where = f"class {c.name}"
        for b in c.bases:
            need_class(b, where, c.loc)
        for b in sorted({b for b in c.bases if c.bases.count(b) > 1}):
            report(f"duplicate direct base {b} in class {c.name}", c.loc)
        for kind, items in (("field", list(c.fields)), ("predicate", [p.name for p in c.preds]),
                            ("method", [m.name for m in c.methods])):
            for n in sorted({n for n in items if items.count(n) > 1}):
                report(f"duplicate {kind} {n} in class {c.name}", c.loc)
        for p in c.preds:
            pw = f"predicate {c.name}.{p.name}"
            if len(set(p.params)) != len(p.params):
                report(f"duplicate parameter in {pw}", p.loc)
            check_assn(p.body, pw, set(p.params) | {"this"}, p.loc, theta_ok=False)
        if c.ctor is None:
            report(f"class {c.name} declares no constructor", c.loc)
        else:
            k = c.ctor
            cw = f"constructor of {c.name}"
            params = set(k.params)
            check_assn(k.pre, cw + " precondition", params, k.loc, theta_ok=False)
            check_assn(k.post, cw + " postcondition", params | {"this"}, k.loc, theta_ok=False)
            if tuple(b.cls for b in k.base_inits) != c.bases:
                report(f"{cw} must initialize exactly its direct bases in declaration order", k.loc)
            for bi in k.base_inits:
                for e in bi.args:
                    for n in _expr_classes(e):
                        need_class(n, cw, k.loc)
                    for v in sorted(expr_free_vars(e) - params - {"this"}):
                        report(f"free variable {v} in {cw} base initializer", k.loc)
                if bi.cls in declared:
                    bctor = program.cls(bi.cls).ctor
                    if bctor is not None and len(bctor.params) != len(bi.args):
                        report(f"base initializer {bi.cls} expects {len(bctor.params)} arguments ({cw})", k.loc)
            check_body(k.body, cw, params | {"this"}, k.loc)
        if c.dtor is None:
            report(f"class {c.name} declares no destructor", c.loc)
        else:
            d = c.dtor
            dw = f"destructor of {c.name}"
            check_assn(d.pre, dw + " precondition", {"this"}, d.loc, theta_ok=True)
            post_fv = free_vars(d.post)
            if "this" in post_fv or "theta" in post_fv:
                report(f"{dw} postcondition must not mention this or theta", d.loc)
            check_assn(d.post, dw + " postcondition", {"this"}, d.loc, theta_ok=True)
            check_body(d.body, dw, {"this"}, d.loc)
        for m in c.methods:
            mw = f"method {c.name}.{m.name}"
            params = set(m.params)
            if len(params) != len(m.params):
                report(f"duplicate parameter in {mw}", m.loc)
            check_assn(m.pre, mw + " precondition", params | {"this"}, m.loc, theta_ok=True)
            check_assn(m.post, mw + " postcondition", params | {"this"}, m.loc, theta_ok=True)
            check_body(m.body, mw, params | {"this"}, m.loc)
        for b in c.bases:
            if b not in declared:
                continue
            for bm in program.cls(b).methods:
                own = c.method(bm.name)
                if own is None:
                    report(f"missing override: class {c.name} does not override {b}.{bm.name}", c.loc)
                elif len(own.params) != len(bm.params):
                    report(f"override {c.name}.{bm.name} has a different arity than {b}.{bm.name}", own.loc)
    for n in _cmd_classes(program.main):
        need_class(n, "main", None)
    for v in sorted(cmd_free_vars(program.main)):
        report(f"free variable {v} in main")
    check_arities(program.main, "main", None)
    return sorted(diags, key=lambda d: (d.message, d.loc or (0, 0)))
