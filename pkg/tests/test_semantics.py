from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from mcpp.parser import parse_assertion, parse_program
from mcpp.runtime import NULL, Alloc, Dyn, Field, Heap, ObjectPointer, dtype_of
from mcpp.semantics import (
    FiniteInterp,
    LeastInterp,
    OpenAssertion,
    Universe,
    apply_F,
    basis,
    default_universe,
    enumerate_heaps,
    fixpoint,
    implies_oracle,
    implies_oracle_open,
    satisfies,
)
from mcpp.syntax import (
    FALSE,
    TRUE,
    And,
    ClassRef,
    DynAssn,
    Exists,
    Or,
    PointsTo,
    PredAssn,
    Star,
    Var,
)

CELLS = parse_program("""
class Cell {
  field next;
  pred ok() = exists v. this->next |-> v;
  pred lst() = this->next |-> null || (exists n. this->next |-> n * n->lst@Cell());
  pred at(x) = this->next |-> x;
  ctor Cell() req true ens true {}
  dtor ~Cell() req true ens true {}
}
main { skip }
""")

C0, C1 = ObjectPointer(0, "Cell"), ObjectPointer(1, "Cell")


def _cell_universe(max_size=2) -> Universe:
    vals = (NULL, C0, C1)
    vocab = [Field(o, "next", v) for o in (C0, C1) for v in vals] + [Dyn(C0, "Cell"), Dyn(C1, "Cell")]
    return Universe(vals, ("Cell",), tuple(enumerate_heaps(vocab, max_size)))


def q(text):
    return parse_assertion(text, ["Cell", "N", "T", "S"])


def test_points_to_holds_by_membership():
    h = Heap([Field(C0, "next", NULL)])
    assert satisfies(CELLS, FiniteInterp(), h, PointsTo(C0, "next", NULL), _cell_universe())


def test_true_holds_everywhere():
    for h in _cell_universe().heaps:
        assert satisfies(CELLS, FiniteInterp(), h, TRUE, _cell_universe())
        assert not satisfies(CELLS, FiniteInterp(), h, FALSE, _cell_universe())


def test_dyn_holds_when_dtype_present(nts):
    n0 = ObjectPointer(0, "N")
    h = Heap(dtype_of(nts.bases, n0, "N"))
    u = default_universe(nts)
    assert satisfies(nts, FiniteInterp(), h, DynAssn(n0, ClassRef("N")), u)
    assert satisfies(nts, FiniteInterp(), h, DynAssn(n0.sub("T"), ClassRef("N")), u)
    assert not satisfies(nts, FiniteInterp(), h, DynAssn(n0, ClassRef("T")), u)


def test_open_assertion_is_rejected():
    with pytest.raises(OpenAssertion):
        satisfies(CELLS, FiniteInterp(), Heap(), q("x->next |-> null"), _cell_universe())


def test_no_predicates_gives_empty_fixpoint(nts):
    prog = parse_program("class A { ctor A() req true ens true {} dtor ~A() req true ens true {} } main { skip }")
    u = default_universe(prog)
    u = Universe(u.values, u.classes, (Heap(),))
    assert len(fixpoint(prog, u)) == 0


def test_one_application_of_F():
    u = _cell_universe()
    h = Heap([Field(C0, "next", NULL)])
    assert (h, C0, "ok", "Cell", ()) in apply_F(CELLS, FiniteInterp(), u).tuples


def test_kleene_chain_is_increasing_and_stabilizes():
    u = _cell_universe()
    cur = FiniteInterp()
    for _ in range(20):
        nxt = apply_F(CELLS, cur, u)
        assert cur <= nxt
        if nxt.tuples == cur.tuples:
            break
        cur = nxt
    assert cur.tuples == fixpoint(CELLS, u).tuples


def test_fixpoint_is_a_fixpoint():
    u = _cell_universe()
    fp = fixpoint(CELLS, u)
    assert apply_F(CELLS, fp, u).tuples == fp.tuples


def test_recursive_predicate():
    u = _cell_universe()
    fp = fixpoint(CELLS, u)
    h = Heap([Field(C0, "next", C1), Field(C1, "next", NULL)])
    assert (h, C0, "lst", "Cell", ()) in fp.tuples
    cyc = Heap([Field(C0, "next", C1), Field(C1, "next", C0)])
    assert (cyc, C0, "lst", "Cell", ()) not in fp.tuples


def test_lazy_interpretation_matches_full_fixpoint():
    u = _cell_universe()
    fp = fixpoint(CELLS, u)
    lazy = LeastInterp(CELLS, u)
    for h in u.heaps:
        for o in (C0, C1):
            for p, args in (("ok", ()), ("lst", ())) + tuple(("at", (v,)) for v in u.nu):
                t = (h, o, p, "Cell", args)
                assert lazy.contains(t) == fp.contains(t), t


# -- random closed assertions over the cell universe ------------------------------------

_vals = [NULL, C0, C1]


def _rand_assertion(rng: random.Random, depth: int = 3):
    if depth == 0 or rng.random() < 0.3:
        k = rng.randrange(5)
        if k == 0:
            return PointsTo(rng.choice([C0, C1]), "next", rng.choice(_vals))
        if k == 1:
            return PredAssn(rng.choice([C0, C1]), rng.choice(["ok", "lst"]), ClassRef("Cell"), ())
        if k == 2:
            return PredAssn(rng.choice([C0, C1]), "at", ClassRef("Cell"), (rng.choice(_vals),))
        if k == 3:
            return DynAssn(rng.choice([C0, C1]), ClassRef("Cell"))
        return rng.choice([TRUE, FALSE])
    k = rng.randrange(4)
    if k == 3:
        return Exists("z", PointsTo(rng.choice([C0, C1]), "next", Var("z")))
    cls = (Star, And, Or)[k]
    return cls(_rand_assertion(rng, depth - 1), _rand_assertion(rng, depth - 1))


def _candidates(u: Universe) -> list:
    out = []
    for h in u.heaps:
        for o in (C0, C1):
            out += [(h, o, "ok", "Cell", ()), (h, o, "lst", "Cell", ())]
            out += [(h, o, "at", "Cell", (v,)) for v in _vals]
    return out


def test_monotonicity_in_interpretation():
    """Satisfaction never decreases when the interpretation grows."""
    rng = random.Random(1)
    u = _cell_universe()
    cands = _candidates(u)
    for _ in range(200):
        big = set(rng.sample(cands, rng.randrange(len(cands))))
        small = set(rng.sample(sorted(big, key=str), rng.randrange(len(big) + 1))) if big else set()
        i, i2 = FiniteInterp(small), FiniteInterp(big)
        a = _rand_assertion(rng)
        h = rng.choice(u.heaps)
        if satisfies(CELLS, i, h, a, u):
            assert satisfies(CELLS, i2, h, a, u), (a, h)


def test_star_split_soundness():
    rng = random.Random(2)
    u = _cell_universe(3)
    fp = LeastInterp(CELLS, u)
    for _ in range(200):
        h1, h2 = rng.choice(u.heaps), rng.choice(u.heaps)
        if set(h1) & set(h2):
            continue
        p, r = _rand_assertion(rng, 2), _rand_assertion(rng, 2)
        if satisfies(CELLS, fp, h1, p, u) and satisfies(CELLS, fp, h2, r, u):
            assert satisfies(CELLS, fp, Heap(list(h1) + list(h2)), Star(p, r), u)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_satisfaction_is_upward_closed(seed):
    rng = random.Random(seed)
    u = _cell_universe(3)
    fp = LeastInterp(CELLS, u)
    a = _rand_assertion(rng, 2)
    h = rng.choice(u.heaps)
    bigger = [g for g in u.heaps if set(h) <= set(g)]
    if satisfies(CELLS, fp, h, a, u):
        assert all(satisfies(CELLS, fp, g, a, u) for g in bigger)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_basis_oracle_agrees_with_exhaustive_oracle(seed):
    rng = random.Random(seed)
    u = _cell_universe(3)
    p, r = _rand_assertion(rng, 2), _rand_assertion(rng, 2)
    exhaustive = implies_oracle(CELLS, p, r, u)
    lazy_u = Universe(u.values, u.classes)
    assert implies_oracle(CELLS, p, r, lazy_u).holds == exhaustive.holds


def test_basis_heaps_satisfy_the_assertion():
    u = Universe((NULL, C0, C1), ("Cell",))
    fp = LeastInterp(CELLS, u)
    a = q("(0:Cell*)->lst@Cell()")
    hs = basis(CELLS, a, u)
    assert hs and all(satisfies(CELLS, fp, h, a, u) for h in hs)


# -- oracle examples -------------------------------------------------------------------

def test_oracle_reflexive():
    a = q("(0:Cell*)->ok@Cell() * dyn((0:Cell*), Cell)")
    assert implies_oracle(CELLS, a, a).holds


def test_oracle_false_implies_anything():
    assert implies_oracle(CELLS, FALSE, q("(0:Cell*)->next |-> null")).holds


def test_oracle_dyn_exchange(nts):
    whole = q("dyn((0:N*), N)")
    parts = q("dyn((0:N*).T, N) * dyn((0:N*).S, N)")
    assert implies_oracle(nts, whole, parts).holds
    assert implies_oracle(nts, parts, whole).holds


def test_oracle_counterexample():
    p, c = q("(0:Cell*)->ok@Cell()"), q("(0:Cell*)->next |-> null")
    r = implies_oracle(CELLS, p, c)
    assert not r.holds
    u = default_universe(CELLS)
    fp = LeastInterp(CELLS, u)
    assert satisfies(CELLS, fp, r.counterexample, p, u)
    assert not satisfies(CELLS, fp, r.counterexample, c, u)


def test_oracle_on_open_assertions():
    r = implies_oracle_open(CELLS, q("x->next |-> y"), q("x->ok@Cell()"), this_cls=None)
    assert r.holds
    r = implies_oracle_open(CELLS, q("x->ok@Cell()"), q("x->next |-> null"))
    assert not r.holds and r.assignment is not None


def test_heap_enumeration_is_wellformed():
    from mcpp.runtime import heap_violations
    vocab = [Alloc(0), Field(C0, "next", NULL), Field(C0, "next", C1)]
    hs = enumerate_heaps(vocab, 3)
    assert Heap() in hs
    assert all(not heap_violations(h) for h in hs)
    assert Heap([Field(C0, "next", NULL), Field(C0, "next", C1)]) not in hs
