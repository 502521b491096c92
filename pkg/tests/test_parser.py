from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from mcpp.parser import (
    ParseError,
    fmt_assertion,
    parse_assertion,
    parse_cmd,
    parse_file,
    parse_program,
    pretty_print,
)
from mcpp.runtime import NULL, ObjectPointer
from mcpp.syntax import (
    FALSE,
    THETA,
    THIS,
    TRUE,
    And,
    BaseInit,
    ClassDef,
    ClassRef,
    CtedAssn,
    CtorDef,
    Delete,
    DtorDef,
    DynAssn,
    DynCall,
    Exists,
    Let,
    Lookup,
    MethodDef,
    New,
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
    Upcast,
    Update,
    Var,
)


def test_parse_trivial_main():
    assert parse_program("main { skip }") == Program((), Skip())


def test_parse_source_class_shape():
    p = parse_program(
        "class T { field t; pred Tok() = exists s. this->t |-> s; "
        "ctor T() req true ens this->Tok@T() {} dtor ~T() req this->Tok@theta() ens true {} "
        "virtual setSource(s) req this->Tok@theta() ens this->Tok@theta() { this->t := s } } "
        "main { skip }")
    t = p.cls("T")
    assert t.fields == ("t",)
    assert t.pred("Tok").body == Exists("s", PointsTo(THIS, "t", Var("s")))
    assert t.ctor.post == PredAssn(THIS, "Tok", ClassRef("T"), ())
    assert t.dtor.pre == PredAssn(THIS, "Tok", THETA, ())
    assert t.method("setSource").body == Update(THIS, "t", Var("s"))


def test_parse_let_new_delete():
    p = parse_program("class T { ctor T() req true ens true {} dtor ~T() req true ens true {} }\n"
                      "main { let x := new T() in delete x }")
    assert p.main == Let("x", New("T"), Delete(Var("x")))


def test_print_empty_program():
    assert " ".join(pretty_print(Program()).split()) == "main { skip }"


def test_assertion_examples():
    assert parse_assertion("dyn(this, theta) * this->f |-> null") == \
        Star(DynAssn(THIS, THETA), PointsTo(THIS, "f", NULL))
    assert parse_assertion("o->p@C(v)", classes=["C"]) == \
        PredAssn(Var("o"), "p", ClassRef("C"), (Var("v"),))
    assert parse_assertion("cted(x, C)", classes=["C"]) == CtedAssn(Var("x"), ClassRef("C"))


def test_star_binds_tighter_than_and_or():
    a = parse_assertion("x->f |-> null * y->f |-> null && true || false")
    assert a == Or(And(Star(PointsTo(Var("x"), "f", NULL), PointsTo(Var("y"), "f", NULL)), TRUE), FALSE)


def test_exists_extends_right():
    a = parse_assertion("exists x. x->f |-> null * true")
    assert a == Exists("x", Star(PointsTo(Var("x"), "f", NULL), TRUE))


def test_nested_exists_round_trips():
    a = Star(Exists("x", PointsTo(Var("x"), "f", NULL)), Exists("y", Or(TRUE, FALSE)))
    assert parse_assertion(fmt_assertion(a)) == a


def test_upcast_binds_tighter_than_arrow():
    c = parse_cmd("(T*) x->f := null", classes=["T"], bound=["x"])
    assert c == Update(Upcast("T", Var("x")), "f", NULL)


def test_pointer_literals():
    a = parse_assertion("(0:N*).T->f |-> null", classes=["N", "T"])
    assert a == PointsTo(ObjectPointer(0, "N", ("T",)), "f", NULL)


@pytest.mark.parametrize("src,line,col", [
    ("main { skip ", 1, 13),
    ("class { }", 1, 7),
    ("main {\n  let x := in skip }", 2, 12),
])
def test_diagnostics_have_locations(src, line, col):
    with pytest.raises(ParseError) as e:
        parse_program(src, "f.mcpp")
    d = e.value.diagnostics[0]
    assert (d.line, d.col) == (line, col)
    assert str(d).startswith(f"f.mcpp:{line}:{col}: error:")


def test_parse_errors_are_deterministic():
    msgs = set()
    for _ in range(3):
        with pytest.raises(ParseError) as e:
            parse_program("class A { field ; }")
        msgs.add(str(e.value))
    assert len(msgs) == 1


def test_corpus_round_trip(corpus_dir):
    for path in sorted(corpus_dir.glob("*.mcpp")):
        p = parse_file(path)
        text = pretty_print(p)
        assert parse_program(text) == p, path.name
        assert pretty_print(parse_program(text)) == text, path.name


# -- random ASTs --------------------------------------------------------------------

CLASSES = ["A", "B", "C"]
VARS = ["x", "y", "v"]
FIELDS = ["f", "g"]

_cls = st.sampled_from(CLASSES)
_ptr = st.builds(lambda i, c, p: ObjectPointer(i, c, tuple(p)),
                 st.integers(0, 3), _cls, st.lists(_cls, max_size=2))
_base_term = st.one_of(st.sampled_from([THIS, NULL, Var("result")] + [Var(v) for v in VARS]), _ptr)
_ptr_term = st.one_of(
    st.sampled_from([THIS] + [Var(v) for v in VARS]),
    st.builds(Sub, st.sampled_from([THIS, Var("x")]), _cls),
    _ptr,
)
_value = st.one_of(_base_term, _cls.map(ClassRef))
_index = st.one_of(st.just(THETA), _cls.map(ClassRef))

_atom = st.one_of(
    st.sampled_from([TRUE, FALSE]),
    st.builds(PointsTo, _ptr_term, st.sampled_from(FIELDS), _value),
    st.builds(PredAssn, _ptr_term, st.sampled_from(["p", "q"]), _index,
              st.lists(_value, max_size=2).map(tuple)),
    st.builds(CtedAssn, _ptr_term, _index),
    st.builds(DynAssn, _ptr_term, _index),
    # a class-valued variable in index position must be bound
    st.builds(lambda t: Exists("c", DynAssn(t, Var("c"))), _ptr_term),
)
_assn = st.recursive(_atom, lambda inner: st.one_of(
    st.builds(Star, inner, inner),
    st.builds(And, inner, inner),
    st.builds(Or, inner, inner),
    st.builds(Exists, st.sampled_from(VARS + ["c"]), inner),
), max_leaves=8)

_expr = st.recursive(
    st.sampled_from([NULL, THIS] + [Var(v) for v in VARS]) | _ptr,
    lambda inner: st.one_of(
        st.builds(Lookup, inner, st.sampled_from(FIELDS)),
        st.builds(New, _cls, st.lists(inner, max_size=2).map(tuple)),
        st.builds(Upcast, _cls, inner),
    ), max_leaves=4)

_simple = st.one_of(
    st.just(Skip()),
    st.builds(Delete, _expr),
    st.builds(Update, _expr, st.sampled_from(FIELDS), _expr),
    st.builds(StaticCall, _expr, _cls, st.sampled_from(["m", "n"]), st.lists(_expr, max_size=2).map(tuple)),
    st.builds(DynCall, _expr, st.sampled_from(["m", "n"]), st.lists(_expr, max_size=2).map(tuple)),
)
_cmd = st.recursive(_simple, lambda inner: st.one_of(
    st.builds(Seq, inner, inner),
    st.builds(Let, st.sampled_from(VARS), _expr, inner),
), max_leaves=6)


@st.composite
def _classes(draw):
    out = []
    # every class is declared, so class names in term position stay class names
    for name in CLASSES:
        bases = tuple(draw(st.lists(_cls, max_size=2, unique=True)))
        out.append(ClassDef(
            name, bases,
            tuple(draw(st.lists(st.sampled_from(FIELDS), max_size=2, unique=True))),
            tuple(PredDef(n, tuple(draw(st.lists(st.sampled_from(VARS), max_size=2, unique=True))), draw(_assn))
                  for n in draw(st.lists(st.sampled_from(["p", "q"]), max_size=2, unique=True))),
            CtorDef(tuple(draw(st.lists(st.sampled_from(VARS), max_size=2, unique=True))),
                    draw(_assn), draw(_assn),
                    tuple(BaseInit(b, tuple(draw(st.lists(_expr, max_size=1)))) for b in bases),
                    draw(_cmd)),
            DtorDef(draw(_assn), draw(_assn), draw(_cmd)),
            tuple(MethodDef(m, (), draw(_assn), draw(_assn), draw(_cmd))
                  for m in draw(st.lists(st.sampled_from(["m", "n"]), max_size=2, unique=True))),
        ))
    return tuple(out)


_programs = st.builds(Program, _classes(), _cmd)


@settings(max_examples=200, deadline=None)
@given(_programs)
def test_random_program_round_trip(p):
    text = pretty_print(p)
    assert parse_program(text) == p
    assert pretty_print(parse_program(text)) == text


@settings(max_examples=300, deadline=None)
@given(_assn)
def test_random_assertion_round_trip(a):
    assert parse_assertion(fmt_assertion(a), classes=CLASSES) == a


def test_let_inside_left_of_sequence_is_parenthesized():
    c = Seq(Seq(Skip(), Let("y", NULL, Skip())), Delete(NULL))
    p = Program((), c)
    assert parse_program(pretty_print(p)) == p
