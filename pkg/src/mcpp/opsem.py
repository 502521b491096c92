"""Big-step reference interpreter.

Each evaluation function is a generator that yields sub-computations and
receives their results; ``Interpreter._drive`` runs them on an explicit
stack, so nesting depth is bounded by fuel rather than by Python's recursion
limit.  Every rule application consumes one unit of fuel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Generator, Optional

from .runtime import (
    Alloc,
    Cted,
    DowncastUndefined,
    Field,
    Heap,
    NULL,
    Null,
    ObjectPointer,
    Value,
    downcast,
    dtype_of,
    heap_violations,
    leaves,
)
from .syntax import (
    Cmd,
    Delete,
    DynCall,
    Expr,
    Let,
    Lookup,
    New,
    Program,
    Seq,
    Skip,
    StaticCall,
    UnknownClass,
    Update,
    Upcast,
    Var,
    subst_cmd,
    subst_expr,
)
from .parser import fmt_cmd, fmt_expr

RULES = (
    "OVal", "OLookup", "OUpcast", "ONew", "OConstruct", "ODestruct", "ODelete",
    "ODeleteNull", "OStaticDispatch", "ODynamicDispatch", "OUpdate", "OLet",
    "OSeq", "OSkip",
)

DEFAULT_FUEL = 100_000


class Stuck(Exception):
    def __init__(self, rule: str, reason: str, detail: str = ""):
        self.rule = rule
        self.reason = reason
        self.detail = detail
        super().__init__(f"{rule}: {reason}" + (f" ({detail})" if detail else ""))


class FuelExhausted(Exception):
    pass


@dataclass(frozen=True)
class TraceEvent:
    rule: str
    detail: str
    depth: int

    def __str__(self) -> str:
        return f"{'  ' * self.depth}{self.rule} {self.detail}"


@dataclass
class Outcome:
    kind: str                       # "terminated" | "stuck" | "fuel_exhausted"
    heap: Optional[Heap] = None
    value: Optional[Value] = None
    stuck: Optional[Stuck] = None
    trace: list[TraceEvent] = field(default_factory=list)
    steps: int = 0

    @property
    def reason(self) -> Optional[str]:
        return self.stuck.reason if self.stuck else None

    def summary(self) -> str:
        if self.kind == "terminated":
            return "terminated"
        if self.kind == "stuck":
            return f"stuck({self.stuck.reason})"
        return "fuel_exhausted"

    def key(self):
        """Comparable fingerprint used by determinism/monotonicity checks."""
        return (self.kind, self.heap, self.value,
                (self.stuck.rule, self.stuck.reason, self.stuck.detail) if self.stuck else None)


Gen = Generator


class Interpreter:
    def __init__(self, program: Program, fuel: int = DEFAULT_FUEL, trace: bool = True,
                 check_heap: bool = False):
        self.program = program
        self.fuel = fuel
        self.used = 0
        self.record = trace
        self.trace: list[TraceEvent] = []
        self.check_heap = check_heap
        self.heap_violations: list[tuple[int, str]] = []
        self._depth = 0

    # -- bookkeeping --
    def _tick(self, rule: str, detail: str, h: Heap) -> None:
        if self.used >= self.fuel:
            raise FuelExhausted()
        self.used += 1
        if self.record:
            self.trace.append(TraceEvent(rule, detail, self._depth))
        if self.check_heap:
            for v in heap_violations(h):
                self.heap_violations.append((self.used, v))

    def _bases(self, cls: str) -> tuple[str, ...]:
        return self.program.bases(cls)

    def _class(self, rule: str, name: str):
        try:
            return self.program.cls(name)
        except UnknownClass:
            raise Stuck(rule, "undeclared class", name) from None

    def _drive(self, gen: Gen):
        stack = [gen]
        send = None
        exc: Optional[BaseException] = None
        while True:
            g = stack[-1]
            try:
                req = g.throw(exc) if exc is not None else g.send(send)
            except StopIteration as stop:
                stack.pop()
                self._depth = len(stack)
                exc, send = None, stop.value
                if not stack:
                    return send
                continue
            except (Stuck, FuelExhausted) as e:
                stack.pop()
                self._depth = len(stack)
                if not stack:
                    raise
                exc, send = e, None
                continue
            exc, send = None, None
            stack.append(req)
            self._depth = len(stack) - 1

    # -- public entry points --
    def _outcome(self, gen: Gen, with_value: bool) -> Outcome:
        try:
            res = self._drive(gen)
        except Stuck as s:
            return Outcome("stuck", stuck=s, trace=self.trace, steps=self.used)
        except FuelExhausted:
            return Outcome("fuel_exhausted", trace=self.trace, steps=self.used)
        if with_value:
            h, v = res
            return Outcome("terminated", heap=h, value=v, trace=self.trace, steps=self.used)
        return Outcome("terminated", heap=res, trace=self.trace, steps=self.used)

    def eval_expr(self, h: Heap, e: Expr) -> Outcome:
        return self._outcome(self._eval(h, e), True)

    def exec_cmd(self, h: Heap, c: Cmd) -> Outcome:
        return self._outcome(self._exec(h, c), False)

    def exec_ctor(self, h: Heap, o: ObjectPointer, cls: str, args: tuple[Expr, ...]) -> Outcome:
        return self._outcome(self._ctor(h, o, cls, args), False)

    def exec_dtor(self, h: Heap, o: ObjectPointer, cls: str) -> Outcome:
        return self._outcome(self._dtor(h, o, cls), False)

    # -- expressions --
    def _eval(self, h: Heap, e: Expr):
        if isinstance(e, (Null, ObjectPointer)):
            self._tick("OVal", str(e), h)
            return h, e
        if isinstance(e, Lookup):
            self._tick("OLookup", fmt_expr(e), h)
            h1, o = yield self._eval(h, e.obj)
            r = h1.field(o, e.field) if isinstance(o, ObjectPointer) else None
            if r is None:
                raise Stuck("OLookup", "missing points-to", f"{o}->{e.field}")
            return h1, r.value
        if isinstance(e, Upcast):
            self._tick("OUpcast", fmt_expr(e), h)
            h1, o = yield self._eval(h, e.expr)
            if not isinstance(o, ObjectPointer):
                raise Stuck("OUpcast", "bad upcast", f"({e.cls}*) {o}")
            if e.cls not in self._bases(o.static):
                raise Stuck("OUpcast", "bad upcast", f"{e.cls} is not a direct base of {o.static}")
            return h1, o.sub(e.cls)
        if isinstance(e, New):
            self._class("ONew", e.cls)
            used = h.ids()
            ident = next(i for i in range(len(used) + 1) if i not in used)
            o = ObjectPointer(ident, e.cls)
            self._tick("ONew", f"new {e.cls} => {o}", h)
            h1 = yield self._ctor(h.add(Alloc(ident)), o, e.cls, e.args)
            return h1.add(Cted(o)), o
        if isinstance(e, Var):
            raise Stuck("OVal", "unbound variable", e.name)
        raise TypeError(e)

    def _eval_all(self, h: Heap, es):
        vs = []
        for e in es:
            h, v = yield self._eval(h, e)
            vs.append(v)
        return h, vs

    def _bind(self, rule: str, params, vs, this=None) -> dict:
        if len(params) != len(vs):
            raise Stuck(rule, "arity mismatch", f"expected {len(params)} arguments, got {len(vs)}")
        s = dict(zip(params, vs))
        if this is not None:
            s["this"] = this
        return s

    # -- constructor / destructor calls --
    def _ctor(self, h: Heap, o: ObjectPointer, cls: str, args):
        cd = self._class("OConstruct", cls)
        if cd.ctor is None:
            raise Stuck("OConstruct", "no constructor", cls)
        self._tick("OConstruct", f"{o}->{cls}({', '.join(fmt_expr(a) for a in args)})", h)
        h, vs = yield self._eval_all(h, args)
        s = self._bind("OConstruct", cd.ctor.params, vs, this=o)
        for bi in cd.ctor.base_inits:
            sub = o.sub(bi.cls)
            h = yield self._ctor(h, sub, bi.cls, tuple(subst_expr(a, s) for a in bi.args))
            residue = dtype_of(self._bases, sub, bi.cls)
            if not h.contains_all(residue):
                raise Stuck("OConstruct", "dtype residue missing",
                            f"dtype({sub}, {bi.cls}) after base constructor")
            h = h.remove(*residue)
        h = h.add(*(Field(o, f, NULL) for f in cd.fields), *dtype_of(self._bases, o, cls))
        h = yield self._exec(h, subst_cmd(cd.ctor.body, s))
        return h

    def _dtor(self, h: Heap, o: ObjectPointer, cls: str):
        cd = self._class("ODestruct", cls)
        if cd.dtor is None:
            raise Stuck("ODestruct", "no destructor", cls)
        self._tick("ODestruct", f"{o}->~{cls}()", h)
        h = yield self._exec(h, subst_cmd(cd.dtor.body, {"this": o}))
        residue = dtype_of(self._bases, o, cls)
        if not h.contains_all(residue):
            raise Stuck("ODestruct", "destructor residue missing", f"dtype({o}, {cls})")
        h = h.remove(*residue)
        for f in cd.fields:
            r = h.field(o, f)
            if r is None:
                raise Stuck("ODestruct", "destructor residue missing", f"{o}->{f}")
            h = h.remove(r)
        for b in reversed(cd.bases):
            sub = o.sub(b)
            h = h.add(*dtype_of(self._bases, sub, b))
            h = yield self._dtor(h, sub, b)
        return h

    # -- commands --
    def _exec(self, h: Heap, c: Cmd):
        if isinstance(c, Skip):
            self._tick("OSkip", "skip", h)
            return h
        if isinstance(c, Seq):
            self._tick("OSeq", "", h)
            h = yield self._exec(h, c.first)
            h = yield self._exec(h, c.second)
            return h
        if isinstance(c, Let):
            self._tick("OLet", f"let {c.var} := {fmt_expr(c.expr)}", h)
            h, v = yield self._eval(h, c.expr)
            h = yield self._exec(h, subst_cmd(c.body, {c.var: v}))
            return h
        if isinstance(c, Update):
            self._tick("OUpdate", fmt_cmd(c), h)
            h, o = yield self._eval(h, c.obj)
            h, v = yield self._eval(h, c.value)
            r = h.field(o, c.field) if isinstance(o, ObjectPointer) else None
            if r is None:
                raise Stuck("OUpdate", "missing points-to", f"{o}->{c.field}")
            return h.remove(r).add(Field(o, c.field, v))
        if isinstance(c, Delete):
            h, v = yield self._eval(h, c.expr)
            if isinstance(v, Null):
                self._tick("ODeleteNull", "delete null", h)
                return h
            root = downcast(v, v.cls)
            if Cted(root) not in h:
                raise Stuck("ODelete", "missing cted", f"cted({root})")
            self._tick("ODelete", f"delete {v} => {root}->~{root.cls}()", h)
            h = yield self._dtor(h.remove(Cted(root)), root, root.cls)
            return h
        if isinstance(c, StaticCall):
            cd = self._class("OStaticDispatch", c.cls)
            m = cd.method(c.method)
            if m is None:
                raise Stuck("OStaticDispatch", "method not declared", f"{c.cls}::{c.method}")
            self._tick("OStaticDispatch", fmt_cmd(c), h)
            h, o = yield self._eval(h, c.obj)
            if not isinstance(o, ObjectPointer) or o.static != c.cls:
                raise Stuck("OStaticDispatch", "static type mismatch",
                            f"{o} is not of static type {c.cls}")
            h, vs = yield self._eval_all(h, c.args)
            s = self._bind("OStaticDispatch", m.params, vs, this=o)
            h = yield self._exec(h, subst_cmd(m.body, s))
            return h
        if isinstance(c, DynCall):
            h, o = yield self._eval(h, c.obj)
            h, vs = yield self._eval_all(h, c.args)
            if not isinstance(o, ObjectPointer):
                raise Stuck("ODynamicDispatch", "no dynamic type", f"{o}")
            d = h.dyn_of(leaves(self._bases, o)[0])
            if d is None or not h.contains_all(dtype_of(self._bases, o, d.cls)):
                raise Stuck("ODynamicDispatch", "no dynamic type", f"dtype({o}, _)")
            cd = self._class("ODynamicDispatch", d.cls)
            m = cd.method(c.method)
            if m is None:
                raise Stuck("ODynamicDispatch", "method not declared", f"{d.cls}::{c.method}")
            try:
                target = downcast(o, d.cls)
            except DowncastUndefined:
                raise Stuck("ODynamicDispatch", "downcast undefined", f"{o} to {d.cls}") from None
            self._tick("ODynamicDispatch", f"{o}->{c.method}() => {d.cls}::{c.method} this={target}", h)
            s = self._bind("ODynamicDispatch", m.params, vs, this=target)
            h = yield self._exec(h, subst_cmd(m.body, s))
            return h
        raise TypeError(c)


def eval_expr(program: Program, h: Heap, e: Expr, fuel: int = DEFAULT_FUEL) -> Outcome:
    return Interpreter(program, fuel).eval_expr(h, e)


def exec_cmd(program: Program, h: Heap, c: Cmd, fuel: int = DEFAULT_FUEL) -> Outcome:
    return Interpreter(program, fuel).exec_cmd(h, c)


def exec_ctor(program: Program, h: Heap, o: ObjectPointer, cls: str, args=(),
              fuel: int = DEFAULT_FUEL) -> Outcome:
    return Interpreter(program, fuel).exec_ctor(h, o, cls, tuple(args))


def exec_dtor(program: Program, h: Heap, o: ObjectPointer, cls: str,
              fuel: int = DEFAULT_FUEL) -> Outcome:
    return Interpreter(program, fuel).exec_dtor(h, o, cls)


def run_program(program: Program, fuel: int = DEFAULT_FUEL, trace: bool = True,
                check_heap: bool = False) -> Outcome:
    """Execute the main command in the empty heap."""
    return Interpreter(program, fuel, trace=trace, check_heap=check_heap).exec_cmd(Heap(), program.main)
