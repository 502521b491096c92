"""Concrete syntax (``.mcpp``) for annotated programs: lexer, parser, printer.

Grammar (EBNF; ``//`` comments run to end of line)::

    program   ::= class* "main" block
    class     ::= "class" ID [":" ID ("," ID)*] "{" member* "}" [";"]
    member    ::= "field" ID ";"
                | "pred" ID "(" [ID ("," ID)*] ")" "=" asn ";"
                | "ctor" ID params "req" asn "ens" asn [":" init ("," init)*] block
                | "dtor" "~" ID "(" ")" "req" asn "ens" asn block
                | "virtual" ID params "req" asn "ens" asn block
    init      ::= ID "(" [expr ("," expr)*] ")"
    block     ::= "{" [cmd] "}"                      (empty block is skip)
    cmd       ::= simple (";" simple)*
    simple    ::= "skip" | "delete" expr | "let" ID ":=" expr "in" cmd
                | "(" cmd ")" | expr "->" ID "::" ID args | expr "->" ID args
                | expr "->" ID ":=" expr
    expr      ::= primary ("->" ID)*
    primary   ::= "null" | "this" | ID | ptr | "new" ID args
                | "(" ID "*" ")" primary | "(" expr ")"
    ptr       ::= "(" INT ":" ID "*" ")" ("." ID)*
    asn       ::= conj ("||" conj)*
    conj      ::= sep ("&&" sep)*
    sep       ::= unit ("*" unit)*
    unit      ::= "exists" ID "." asn | "true" | "false" | "(" asn ")"
                | "cted" "(" term "," term ")" | "dyn" "(" term "," term ")"
                | term "->" ID "|->" term | term "->" ID "@" term "(" [term ("," term)*] ")"
    term      ::= ("this" | "theta" | "result" | "null" | ID | ptr) ("." ID)*

An upcast binds tighter than ``->``: ``(T*) x->f`` is ``((T*) x)->f``.
``let`` and ``exists`` extend as far to the right as possible.  An identifier
in term position denotes a bound variable if one is in scope, otherwise a
declared class name (or, in class-index position, a class name).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .syntax import (
    FALSE,
    NULL,
    RESULT,
    THETA,
    THIS,
    And,
    Assertion,
    BaseInit,
    Bool,
    ClassDef,
    ClassRef,
    Cmd,
    CtedAssn,
    CtorDef,
    Delete,
    DtorDef,
    DynAssn,
    DynCall,
    Exists,
    Expr,
    Let,
    Lookup,
    MethodDef,
    New,
    ObjectPointer,
    Or,
    PointsTo,
    PredAssn,
    PredDef,
    Program,
    Seq,
    Skip,
    Star,
    StaticCall,
    Sub,
    Term,
    TRUE,
    Update,
    Upcast,
    Var,
)

KEYWORDS = {
    "class", "field", "pred", "ctor", "dtor", "virtual", "req", "ens", "main",
    "let", "in", "skip", "delete", "new", "exists", "true", "false", "null",
    "this", "theta", "result", "cted", "dyn",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|->|->|:=|::|&&|\|\||[*@(){},;.:~=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    col: int
    path: str = "<input>"

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str   # "int", "id", "kw", "op", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str, path: str = "<input>") -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError([Diagnostic("error", f"unexpected character {text[pos]!r}",
                                         line, pos - line_start + 1, path)])
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            if kind == "id" and tok in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str, path: str = "<input>", classes: Iterable[str] = (),
                 bound: Iterable[str] = ()):
        self.path = path
        self.toks = tokenize(text, path)
        self.i = 0
        self.classes = set(classes)
        self.scope: list[str] = list(bound)
        # declared class names are known before any use
        for a, b in zip(self.toks, self.toks[1:]):
            if a.kind == "kw" and a.text == "class" and b.kind == "id":
                self.classes.add(b.text)

    # -- token helpers --
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k) if k else self.tok
        return t.kind in ("op", "kw") and t.text == text

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError([Diagnostic("error", msg, t.line, t.col, self.path)])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "id":
            found = self.tok.text or "end of input"
            raise self.error(f"expected identifier, found {found!r}")
        t = self.tok
        self.i += 1
        return t.text

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- program --
    def program(self) -> Program:
        classes = []
        while self.at("class"):
            classes.append(self.class_def())
        self.expect("main")
        main = self.block()
        self.done()
        return Program(tuple(classes), main)

    def class_def(self) -> ClassDef:
        start = self.expect("class")
        name = self.ident()
        bases: list[str] = []
        if self.accept(":"):
            bases.append(self.ident())
            while self.accept(","):
                bases.append(self.ident())
        self.expect("{")
        fields, preds, methods = [], [], []
        ctor = dtor = None
        while not self.at("}"):
            t = self.tok
            loc = (t.line, t.col)
            if self.accept("field"):
                fields.append(self.ident())
                self.expect(";")
            elif self.accept("pred"):
                pname = self.ident()
                params = self.params()
                self.expect("=")
                body = self.with_scope(params + ["this"], self.assertion)
                self.expect(";")
                preds.append(PredDef(pname, tuple(params), body, loc))
            elif self.accept("ctor"):
                cname_tok = self.tok
                cname = self.ident()
                if cname != name:
                    raise self.error(f"constructor name {cname} does not match class {name}", cname_tok)
                if ctor is not None:
                    raise self.error(f"class {name} declares more than one constructor", t)
                params = self.params()
                self.expect("req")
                pre = self.with_scope(params, self.assertion)
                self.expect("ens")
                post = self.with_scope(params + ["this"], self.assertion)
                inits: list[BaseInit] = []
                if self.accept(":"):
                    inits.append(self.base_init(params))
                    while self.accept(","):
                        inits.append(self.base_init(params))
                body = self.with_scope(params + ["this"], self.block)
                ctor = CtorDef(tuple(params), pre, post, tuple(inits), body, loc)
            elif self.accept("dtor"):
                self.expect("~")
                dname_tok = self.tok
                dname = self.ident()
                if dname != name:
                    raise self.error(f"destructor name ~{dname} does not match class {name}", dname_tok)
                if dtor is not None:
                    raise self.error(f"class {name} declares more than one destructor", t)
                self.expect("(")
                self.expect(")")
                self.expect("req")
                pre = self.with_scope(["this"], self.assertion)
                self.expect("ens")
                post = self.with_scope(["this"], self.assertion)
                body = self.with_scope(["this"], self.block)
                dtor = DtorDef(pre, post, body, loc)
            elif self.accept("virtual"):
                mname = self.ident()
                params = self.params()
                self.expect("req")
                pre = self.with_scope(params + ["this"], self.assertion)
                self.expect("ens")
                post = self.with_scope(params + ["this"], self.assertion)
                body = self.with_scope(params + ["this"], self.block)
                methods.append(MethodDef(mname, tuple(params), pre, post, body, loc))
            else:
                raise self.error(f"expected class member, found {self.tok.text or 'end of input'!r}")
        self.expect("}")
        self.accept(";")
        return ClassDef(name, tuple(bases), tuple(fields), tuple(preds), ctor, dtor,
                        tuple(methods), (start.line, start.col))

    def params(self) -> list[str]:
        self.expect("(")
        out: list[str] = []
        if not self.at(")"):
            out.append(self.ident())
            while self.accept(","):
                out.append(self.ident())
        self.expect(")")
        return out

    def base_init(self, params: list[str]) -> BaseInit:
        cls = self.ident()
        args = self.with_scope(params + ["this"], self.args)
        return BaseInit(cls, tuple(args))

    def with_scope(self, names, fn):
        saved = self.scope
        self.scope = saved + list(names)
        try:
            return fn()
        finally:
            self.scope = saved

    # -- commands --
    def block(self) -> Cmd:
        self.expect("{")
        if self.accept("}"):
            return Skip()
        c = self.cmd()
        self.expect("}")
        return c

    def cmd(self) -> Cmd:
        c = self.simple()
        while self.accept(";"):
            c = Seq(c, self.simple())
        return c

    def simple(self) -> Cmd:
        if self.accept("skip"):
            return Skip()
        if self.accept("delete"):
            return Delete(self.expr())
        if self.accept("let"):
            x = self.ident()
            self.expect(":=")
            e = self.expr()
            self.expect("in")
            body = self.with_scope([x], self.cmd)
            return Let(x, e, body)
        if self.at("(") and not self._starts_cast_or_ptr():
            save = self.i
            try:
                self.i += 1
                c = self.cmd()
                self.expect(")")
                if self.at("->") or self.at(":="):
                    raise _Backtrack()
                return c
            except (ParseError, _Backtrack):
                self.i = save
        return self.expr_stmt()

    def _starts_cast_or_ptr(self) -> bool:
        return (self.peek().kind == "int"
                or (self.peek().kind == "id" and self.at("*", 2) and self.at(")", 3)))

    def expr_stmt(self) -> Cmd:
        start = self.tok
        e = self.primary()
        while self.at("->"):
            if self.peek().kind != "id":
                raise self.error("expected member name after '->'", self.peek())
            if self.at("::", 2):
                self.i += 1
                cls = self.ident()
                self.expect("::")
                m = self.ident()
                return StaticCall(e, cls, m, tuple(self.args()))
            if self.at("(", 2):
                self.i += 1
                m = self.ident()
                return DynCall(e, m, tuple(self.args()))
            self.i += 1
            e = Lookup(e, self.ident())
        if self.accept(":="):
            if not isinstance(e, Lookup):
                raise self.error("left-hand side of ':=' must be a field access", start)
            return Update(e.obj, e.field, self.expr())
        raise self.error("expected a command", start)

    # -- expressions --
    def args(self) -> list[Expr]:
        self.expect("(")
        out: list[Expr] = []
        if not self.at(")"):
            out.append(self.expr())
            while self.accept(","):
                out.append(self.expr())
        self.expect(")")
        return out

    def expr(self) -> Expr:
        e = self.primary()
        while self.at("->") and self.peek().kind == "id" and not (self.at("(", 2) or self.at("::", 2)):
            self.i += 1
            e = Lookup(e, self.ident())
        return e

    def primary(self) -> Expr:
        t = self.tok
        if self.accept("null"):
            return NULL
        if self.accept("this"):
            return THIS
        if self.accept("new"):
            cls = self.ident()
            return New(cls, tuple(self.args()))
        if self.at("("):
            if self.peek().kind == "int":
                return self.pointer()
            if self._starts_cast_or_ptr():
                self.i += 1
                cls = self.ident()
                self.expect("*")
                self.expect(")")
                return Upcast(cls, self.primary())
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "id":
            self.i += 1
            return Var(t.text)
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def pointer(self) -> ObjectPointer:
        self.expect("(")
        if self.tok.kind != "int":
            raise self.error("expected allocation id")
        ident = int(self.tok.text)
        self.i += 1
        self.expect(":")
        cls = self.ident()
        self.expect("*")
        self.expect(")")
        p = ObjectPointer(ident, cls)
        while self.at(".") and self.peek().kind == "id":
            self.i += 1
            p = p.sub(self.ident())
        return p

    # -- assertions --
    def assertion(self) -> Assertion:
        a = self.conj()
        while self.accept("||"):
            a = Or(a, self.conj())
        return a

    def conj(self) -> Assertion:
        a = self.sep()
        while self.accept("&&"):
            a = And(a, self.sep())
        return a

    def sep(self) -> Assertion:
        a = self.unit()
        while self.accept("*"):
            a = Star(a, self.unit())
        return a

    def unit(self) -> Assertion:
        if self.accept("exists"):
            x = self.ident()
            self.expect(".")
            body = self.with_scope([x], self.assertion)
            return Exists(x, body)
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("(") and self.peek().kind != "int":
            self.i += 1
            a = self.assertion()
            self.expect(")")
            return a
        for kw, ctor in (("cted", CtedAssn), ("dyn", DynAssn)):
            if self.accept(kw):
                self.expect("(")
                target = self.term()
                self.expect(",")
                index = self.term(index=True)
                self.expect(")")
                return ctor(target, index)
        target = self.term()
        self.expect("->")
        name = self.ident()
        if self.accept("|->"):
            return PointsTo(target, name, self.term())
        if self.accept("@"):
            index = self.term(index=True)
            self.expect("(")
            args: list[Term] = []
            if not self.at(")"):
                args.append(self.term())
                while self.accept(","):
                    args.append(self.term())
            self.expect(")")
            return PredAssn(target, name, index, tuple(args))
        raise self.error("expected '|->' or '@' after field or predicate name")

    def term(self, index: bool = False) -> Term:
        t = self.tok
        base: Term
        if self.accept("this"):
            base = THIS
        elif self.accept("theta"):
            base = THETA
        elif self.accept("result"):
            base = RESULT
        elif self.accept("null"):
            base = NULL
        elif self.at("(") and self.peek().kind == "int":
            base = self.pointer()
        elif t.kind == "id":
            self.i += 1
            if t.text in self.scope:
                base = Var(t.text)
            elif index or t.text in self.classes:
                base = ClassRef(t.text)
            else:
                base = Var(t.text)
        else:
            raise self.error(f"expected term, found {t.text or 'end of input'!r}")
        while self.at(".") and self.peek().kind == "id":
            self.i += 1
            cls = self.ident()
            base = base.sub(cls) if isinstance(base, ObjectPointer) else Sub(base, cls)
        return base


def parse_program(text: str, path: str = "<input>") -> Program:
    """Parse program text; raises ParseError with located diagnostics."""
    return Parser(text, path).program()


def parse_file(path: str | Path) -> Program:
    p = Path(path)
    return parse_program(p.read_text(encoding="utf-8"), str(p))


def parse_assertion(text: str, classes: Iterable[str] = (), bound: Iterable[str] = ()) -> Assertion:
    p = Parser(text, "<assertion>", classes, bound)
    a = p.assertion()
    p.done()
    return a


def parse_cmd(text: str, classes: Iterable[str] = (), bound: Iterable[str] = ()) -> Cmd:
    p = Parser(text, "<command>", classes, bound)
    c = p.cmd()
    p.done()
    return c


def parse_expr(text: str, classes: Iterable[str] = (), bound: Iterable[str] = ()) -> Expr:
    p = Parser(text, "<expression>", classes, bound)
    e = p.expr()
    p.done()
    return e


# -- printing -------------------------------------------------------------------

def fmt_term(t: Term) -> str:
    if isinstance(t, Sub):
        return f"{fmt_term(t.base)}.{t.cls}"
    return str(t)


def fmt_expr(e: Expr) -> str:
    if isinstance(e, Lookup):
        return f"{fmt_expr(e.obj)}->{e.field}"
    if isinstance(e, New):
        return f"new {e.cls}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, Upcast):
        inner = fmt_expr(e.expr)
        if isinstance(e.expr, Lookup):
            inner = f"({inner})"
        return f"({e.cls}*) {inner}"
    return fmt_term(e)


def _fmt_args(args) -> str:
    return ", ".join(fmt_expr(a) for a in args)


def fmt_cmd(c: Cmd) -> str:
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Delete):
        return f"delete {fmt_expr(c.expr)}"
    if isinstance(c, Update):
        return f"{fmt_expr(c.obj)}->{c.field} := {fmt_expr(c.value)}"
    if isinstance(c, StaticCall):
        return f"{fmt_expr(c.obj)}->{c.cls}::{c.method}({_fmt_args(c.args)})"
    if isinstance(c, DynCall):
        return f"{fmt_expr(c.obj)}->{c.method}({_fmt_args(c.args)})"
    if isinstance(c, Let):
        return f"let {c.var} := {fmt_expr(c.expr)} in {fmt_cmd(c.body)}"
    if isinstance(c, Seq):
        left = fmt_cmd(c.first)
        if _open_tail(c.first):
            left = f"({left})"
        right = fmt_cmd(c.second)
        if isinstance(c.second, Seq):
            right = f"({right})"
        return f"{left}; {right}"
    raise TypeError(c)


def _open_tail(c: Cmd) -> bool:
    """True if the printed command ends in a ``let`` that would swallow a following ``;``."""
    if isinstance(c, Let):
        return True
    return isinstance(c, Seq) and isinstance(c.second, Let)


_PREC = {Or: 1, And: 2, Star: 3}
_OPS = {Or: "||", And: "&&", Star: "*"}


def fmt_assertion(a: Assertion) -> str:
    if isinstance(a, Bool):
        return "true" if a.value else "false"
    if isinstance(a, Exists):
        return f"exists {a.var}. {fmt_assertion(a.body)}"
    if isinstance(a, (Or, And, Star)):
        prec = _PREC[type(a)]

        def operand(x: Assertion, right: bool) -> str:
            s = fmt_assertion(x)
            if isinstance(x, Exists):
                return f"({s})"
            if type(x) in _PREC and (_PREC[type(x)] < prec or (right and _PREC[type(x)] == prec)):
                return f"({s})"
            return s

        return f"{operand(a.left, False)} {_OPS[type(a)]} {operand(a.right, True)}"
    if isinstance(a, PointsTo):
        return f"{fmt_term(a.target)}->{a.field} |-> {fmt_term(a.value)}"
    if isinstance(a, PredAssn):
        args = ", ".join(fmt_term(x) for x in a.args)
        return f"{fmt_term(a.target)}->{a.name}@{fmt_term(a.index)}({args})"
    if isinstance(a, CtedAssn):
        return f"cted({fmt_term(a.target)}, {fmt_term(a.index)})"
    if isinstance(a, DynAssn):
        return f"dyn({fmt_term(a.target)}, {fmt_term(a.index)})"
    raise TypeError(a)


def _fmt_block(c: Cmd) -> str:
    return "{ " + fmt_cmd(c) + " }"


def fmt_class(c: ClassDef) -> str:
    lines = [f"class {c.name}" + (" : " + ", ".join(c.bases) if c.bases else "") + " {"]
    for f in c.fields:
        lines.append(f"  field {f};")
    for p in c.preds:
        lines.append(f"  pred {p.name}({', '.join(p.params)}) = {fmt_assertion(p.body)};")
    if c.ctor is not None:
        k = c.ctor
        inits = ""
        if k.base_inits:
            inits = " : " + ", ".join(f"{b.cls}({_fmt_args(b.args)})" for b in k.base_inits)
        lines.append(f"  ctor {c.name}({', '.join(k.params)})")
        lines.append(f"    req {fmt_assertion(k.pre)}")
        lines.append(f"    ens {fmt_assertion(k.post)}{inits}")
        lines.append(f"    {_fmt_block(k.body)}")
    if c.dtor is not None:
        d = c.dtor
        lines.append(f"  dtor ~{c.name}()")
        lines.append(f"    req {fmt_assertion(d.pre)}")
        lines.append(f"    ens {fmt_assertion(d.post)}")
        lines.append(f"    {_fmt_block(d.body)}")
    for m in c.methods:
        lines.append(f"  virtual {m.name}({', '.join(m.params)})")
        lines.append(f"    req {fmt_assertion(m.pre)}")
        lines.append(f"    ens {fmt_assertion(m.post)}")
        lines.append(f"    {_fmt_block(m.body)}")
    lines.append("}")
    return "\n".join(lines)


def pretty_print(p: Program) -> str:
    parts = [fmt_class(c) for c in p.classes]
    parts.append(f"main {_fmt_block(p.main)}")
    return "\n\n".join(parts) + "\n"
