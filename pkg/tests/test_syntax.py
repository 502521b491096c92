from __future__ import annotations

import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from mcpp.parser import parse_assertion, parse_program
from mcpp.runtime import DowncastUndefined, Dyn, ObjectPointer, downcast
from mcpp.syntax import (
    THETA,
    THIS,
    ClassRef,
    Exists,
    PointsTo,
    PredAssn,
    Program,
    Star,
    UnknownClass,
    Var,
    bases,
    check_wellformed,
    dtype,
    free_vars,
    substitute,
)

N0 = ObjectPointer(0, "N")


def test_bases_of_node(nts):
    assert bases(nts, "N") == {"T", "S"}
    assert bases(nts, "T") == frozenset()


def test_bases_undeclared(nts):
    with pytest.raises(UnknownClass):
        bases(nts, "X")


def test_downcast_examples():
    assert downcast(N0, "N") == N0
    assert downcast(N0.sub("T"), "N") == N0
    with pytest.raises(DowncastUndefined):
        downcast(N0.sub("T"), "S")


def test_dtype_examples(nts):
    t0 = ObjectPointer(0, "T")
    assert dtype(nts, t0, "T") == {Dyn(t0, "T")}
    assert dtype(nts, N0, "N") == {Dyn(N0.sub("T"), "N"), Dyn(N0.sub("S"), "N")}
    assert dtype(nts, N0.sub("T"), "N") == {Dyn(N0.sub("T"), "N")}


DIAMOND = parse_program("""
class A { ctor A() req true ens true {} dtor ~A() req true ens true {} }
class B1 : A { ctor B1() req true ens true : A() {} dtor ~B1() req true ens true {} }
class B2 : A { ctor B2() req true ens true : A() {} dtor ~B2() req true ens true {} }
class D : B1, B2 { ctor D() req true ens true : B1(), B2() {} dtor ~D() req true ens true {} }
main { skip }
""")


def _paths(program, o):
    out = [o]
    for b in program.bases(o.static):
        out += _paths(program, o.sub(b))
    return out


def _leaf_count(program, cls):
    bs = program.bases(cls)
    return 1 if not bs else sum(_leaf_count(program, b) for b in bs)


@pytest.mark.parametrize("cls", ["A", "B1", "B2", "D"])
def test_downcast_results_are_prefixes(cls):
    for o in _paths(DIAMOND, ObjectPointer(3, cls)):
        for target in DIAMOND.class_names:
            try:
                r = downcast(o, target)
            except DowncastUndefined:
                continue
            assert r.static == target
            assert o.path[:len(r.path)] == r.path and r.id == o.id


@pytest.mark.parametrize("cls", ["A", "B1", "B2", "D"])
def test_dtype_size_is_leaf_count(cls):
    for o in _paths(DIAMOND, ObjectPointer(0, cls)):
        assert len(dtype(DIAMOND, o, cls)) == _leaf_count(DIAMOND, o.static)


def test_substitute_examples():
    a = parse_assertion("this->f |-> v")
    assert substitute(a, {"this": Var("o")}) == parse_assertion("o->f |-> v")
    b = parse_assertion("this->p@theta(theta)")
    assert substitute(b, {"this": Var("o"), "theta": ClassRef("N")}) == \
        PredAssn(Var("o"), "p", ClassRef("N"), (ClassRef("N"),))


def test_substitute_avoids_capture():
    a = Exists("x", PointsTo(THIS, "f", Var("x")))
    out = substitute(a, {"this": Var("x")})
    assert isinstance(out, Exists) and out.var != "x"
    assert out.body == PointsTo(Var("x"), "f", Var(out.var))


_names = st.sampled_from(["a", "b", "c", "this"])
_terms = st.one_of(_names.map(Var), st.just(THETA))


@st.composite
def _assertions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return PointsTo(draw(_names.map(Var)), "f", draw(_terms))
    kind = draw(st.sampled_from(["star", "exists"]))
    if kind == "star":
        return Star(draw(_assertions(depth - 1)), draw(_assertions(depth - 1)))
    return Exists(draw(st.sampled_from(["a", "b", "c"])), draw(_assertions(depth - 1)))


def _alpha_eq(a, b) -> bool:
    """Equality up to renaming of bound variables."""
    return _canon(a) == _canon(b)


def _canon(a, env=None, n=None):
    env = env or {}
    n = n if n is not None else [0]
    if isinstance(a, Exists):
        n[0] += 1
        return ("ex", _canon(a.body, {**env, a.var: f"_{n[0]}"}, n))
    if isinstance(a, Star):
        return ("star", _canon(a.left, env, n), _canon(a.right, env, n))
    t = lambda x: env.get(x.name, x.name) if isinstance(x, Var) else str(x)  # noqa: E731
    return ("pt", t(a.target), a.field, t(a.value))


@settings(max_examples=200, deadline=None)
@given(_assertions(), st.sampled_from(["a", "b"]), st.sampled_from(["c", "this"]),
       st.sampled_from(["a", "b"]), st.sampled_from(["a", "b", "c", "z"]))
def test_substitute_composes(a, x, y, ra, rb):
    # [ra/x] then [rb/y], with y not in the range of the first: same as simultaneous
    seq = substitute(substitute(a, {x: Var(ra)}), {y: Var(rb)})
    sim = substitute(a, {x: Var(ra), y: Var(rb)})
    assert _alpha_eq(seq, sim)


def test_node_is_wellformed(node):
    assert check_wellformed(node) == []


def test_missing_override_diagnostic():
    p = parse_program("""
class A { ctor A() req true ens true {} dtor ~A() req true ens true {}
          virtual m() req true ens true {} }
class B : A { ctor B() req true ens true : A() {} dtor ~B() req true ens true {} }
main { skip }
""")
    msgs = [str(d) for d in check_wellformed(p)]
    assert any("missing override" in m for m in msgs)


def test_dtor_post_mentioning_this_is_rejected():
    p = parse_program("""
class A { field f; ctor A() req true ens true {} dtor ~A() req true ens this->f |-> null {} }
main { skip }
""")
    assert any("destructor" in str(d) for d in check_wellformed(p))


@pytest.mark.parametrize("src,needle", [
    ("class A { ctor A() req true ens true {} dtor ~A() req true ens true {} }\n"
     "class A { ctor A() req true ens true {} dtor ~A() req true ens true {} } main { skip }",
     "duplicate class"),
    ("class A : Z { ctor A() req true ens true : Z() {} dtor ~A() req true ens true {} } main { skip }",
     "undeclared class Z"),
    ("class A { pred p() = dyn(this, theta); ctor A() req true ens true {} "
     "dtor ~A() req true ens true {} } main { skip }",
     "theta"),
    ("class A { ctor A() req true ens this->q@A() {} dtor ~A() req true ens true {} } main { skip }",
     "predicate q not declared"),
    ("main { let x := new Ghost() in skip }", "undeclared class Ghost"),
])
def test_wellformedness_violations(src, needle):
    msgs = [str(d) for d in check_wellformed(parse_program(src))]
    assert any(needle in m for m in msgs), msgs


def test_wf_is_order_independent(corpus_dir):
    from mcpp.parser import parse_file
    for path in sorted(corpus_dir.glob("*.mcpp")):
        try:
            prog = parse_file(path)
        except Exception:
            continue
        base = check_wellformed(prog)
        for perm in itertools.islice(itertools.permutations(prog.classes), 6):
            assert check_wellformed(replace(prog, classes=tuple(perm))) == base, path.name


def test_free_vars():
    a = parse_assertion("exists x. this->f |-> x * y->g |-> theta")
    assert free_vars(a) == {"this", "y", "theta"}


def test_empty_program_is_wellformed():
    assert check_wellformed(Program()) == []
