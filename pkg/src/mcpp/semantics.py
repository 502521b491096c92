"""Executable assertion semantics and predicate interpretations.

``satisfies`` decides ``I, h |= P`` for closed assertions over concrete
heaps.  Predicate interpretations come in two flavours: an explicit finite
set of tuples (``FiniteInterp``), and the program's least interpretation
computed on demand (``LeastInterp``), which solves only the part of the
fixpoint a query actually touches.  ``fixpoint`` computes the full Kleene
iterate over a finite universe and is used to cross-check the lazy solver.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .runtime import (
    Alloc,
    Cted,
    DowncastUndefined,
    Field,
    Heap,
    Null,
    ObjectPointer,
    downcast,
    dtype_of,
    heap_violations,
)
from .syntax import (
    And,
    Assertion,
    Bool,
    ClassRef,
    CtedAssn,
    DynAssn,
    Exists,
    Or,
    PointsTo,
    PredAssn,
    Program,
    Star,
    Sub,
    Term,
    mk_sub,
    substitute,
)

PredTuple = tuple  # (heap, pointer, pred name, class name, args)


class OpenAssertion(ValueError):
    pass


# -- universes -------------------------------------------------------------------

@dataclass(frozen=True)
class Universe:
    """Finite value bound plus an optional explicit heap bound.

    With ``heaps`` unset, implication checks enumerate the basis heaps of
    the antecedent instead of a fixed heap list (see ``implies_oracle``).
    """
    values: tuple
    classes: tuple[str, ...]
    heaps: Optional[tuple[Heap, ...]] = None
    unfold_depth: int = 4

    @property
    def nu(self) -> tuple:
        """Everything an existential may range over: values and class names."""
        return self.values + tuple(ClassRef(c) for c in self.classes)

    @property
    def pointers(self) -> tuple[ObjectPointer, ...]:
        return tuple(v for v in self.values if isinstance(v, ObjectPointer))


def pointers_of(program: Program, ident: int, cls: str, depth: int) -> list[ObjectPointer]:
    out: list[ObjectPointer] = []

    def walk(o: ObjectPointer, d: int) -> None:
        out.append(o)
        if d < depth:
            for b in program.bases(o.static):
                walk(o.sub(b), d + 1)

    walk(ObjectPointer(ident, cls), 0)
    return out


def default_universe(program: Program, ids: Iterable[int] = (0, 1), depth: int = 2) -> Universe:
    values: list = [Null()]
    for i in ids:
        for c in program.class_names:
            values.extend(pointers_of(program, i, c, depth))
    return Universe(tuple(values), program.class_names)


def enumerate_heaps(resources: Iterable, max_size: int) -> list[Heap]:
    """All well-formed heaps built from distinct resources, up to ``max_size``."""
    rs = sorted(set(resources), key=str)
    out = []
    for k in range(max_size + 1):
        for combo in itertools.combinations(rs, k):
            h = Heap(combo)
            if not heap_violations(h):
                out.append(h)
    return out


# -- predicate interpretations --------------------------------------------------------

class FiniteInterp:
    def __init__(self, tuples: Iterable[PredTuple] = ()):
        self.tuples = frozenset(tuples)

    def contains(self, t: PredTuple) -> bool:
        return t in self.tuples

    def __le__(self, other: "FiniteInterp") -> bool:
        return self.tuples <= other.tuples

    def __len__(self) -> int:
        return len(self.tuples)


class LeastInterp:
    """The program's least predicate interpretation, solved locally.

    A query seeds a demand set; every tuple in it is re-evaluated against the
    current under-approximation until nothing changes.  Tuples demanded along
    the way join the set, so the result is the least fixpoint restricted to
    the dependency closure of the query.
    """

    def __init__(self, program: Program, universe: Universe):
        self.program = program
        self.universe = universe
        self.true: set = set()
        self.false: set = set()
        self._solving = False
        self._current: set = set()
        self._demand: dict = {}
        self._grew = False

    def contains(self, t: PredTuple) -> bool:
        if t in self.true:
            return True
        if t in self.false:
            return False
        if self._solving:
            if t not in self._demand:
                self._demand[t] = None
                self._grew = True
            return t in self._current
        return self._solve(t)

    def _solve(self, t: PredTuple) -> bool:
        self._solving = True
        self._current, self._demand = set(), {t: None}
        try:
            while True:
                self._grew = False
                changed = False
                for u in list(self._demand):
                    if u not in self._current and pred_body_holds(self.program, self, u, self.universe):
                        self._current.add(u)
                        changed = True
                if not changed and not self._grew:
                    break
            self.true |= self._current
            self.false |= set(self._demand) - self._current
        finally:
            self._solving = False
        return t in self.true


def pred_body_holds(program: Program, interp, t: PredTuple, u: Universe) -> bool:
    """Membership of ``t`` in F(interp)."""
    h, o, p, cls, args = t
    if not program.has_class(cls):
        return False
    pd = program.cls(cls).pred(p)
    if pd is None or len(pd.params) != len(args):
        return False
    body = substitute(pd.body, {"this": o, **dict(zip(pd.params, args))})
    return satisfies(program, interp, h, body, u)


def fixpoint(program: Program, u: Universe, max_rounds: int = 10_000) -> FiniteInterp:
    """Least fixpoint of F over the finite universe by Kleene iteration from the empty set."""
    if u.heaps is None:
        raise ValueError("fixpoint needs a universe with an explicit heap bound")
    candidates = []
    for c in program.classes:
        for pd in c.preds:
            for o in u.pointers:
                if o.static != c.name:
                    continue
                for args in itertools.product(u.nu, repeat=len(pd.params)):
                    for h in u.heaps:
                        candidates.append((h, o, pd.name, c.name, tuple(args)))
    cur = FiniteInterp()
    for _ in range(max_rounds):
        nxt = FiniteInterp(t for t in candidates if pred_body_holds(program, cur, t, u))
        if nxt.tuples == cur.tuples:
            return cur
        cur = nxt
    raise RuntimeError("fixpoint iteration did not converge")


def apply_F(program: Program, interp, u: Universe) -> FiniteInterp:
    """One application of F restricted to the universe (for fixpoint checks)."""
    out = []
    for c in program.classes:
        for pd in c.preds:
            for o in u.pointers:
                if o.static != c.name:
                    continue
                for args in itertools.product(u.nu, repeat=len(pd.params)):
                    for h in u.heaps or ():
                        t = (h, o, pd.name, c.name, tuple(args))
                        if pred_body_holds(program, interp, t, u):
                            out.append(t)
    return FiniteInterp(out)


# -- satisfaction ------------------------------------------------------------------

def _value(t: Term):
    if isinstance(t, (Null, ObjectPointer, ClassRef)):
        return t
    if isinstance(t, Sub):
        b = _value(t.base)
        if isinstance(b, ObjectPointer):
            return mk_sub(b, t.cls)
        return None
    raise OpenAssertion(f"assertion is not closed: {t}")


def _class(t: Term) -> Optional[str]:
    v = _value(t)
    return v.name if isinstance(v, ClassRef) else None


def _down(t: Term, cls: Optional[str]) -> Optional[ObjectPointer]:
    v = _value(t)
    if not isinstance(v, ObjectPointer) or cls is None:
        return None
    try:
        return downcast(v, cls)
    except DowncastUndefined:
        return None


def _sub_heaps(h: Heap) -> Iterator[tuple[Heap, Heap]]:
    items = h.sorted()
    seen = set()
    for mask in itertools.product((0, 1), repeat=len(items)):
        left = tuple(r for r, m in zip(items, mask) if m)
        if left in seen:
            continue
        seen.add(left)
        yield Heap(left), Heap(r for r, m in zip(items, mask) if not m)


def satisfies(program: Program, interp, h: Heap, a: Assertion, u: Universe) -> bool:
    if isinstance(a, Bool):
        return a.value
    if isinstance(a, And):
        return satisfies(program, interp, h, a.left, u) and satisfies(program, interp, h, a.right, u)
    if isinstance(a, Or):
        return satisfies(program, interp, h, a.left, u) or satisfies(program, interp, h, a.right, u)
    if isinstance(a, Star):
        return any(satisfies(program, interp, h1, a.left, u) and satisfies(program, interp, h2, a.right, u)
                   for h1, h2 in _sub_heaps(h))
    if isinstance(a, Exists):
        return any(satisfies(program, interp, h, substitute(a.body, {a.var: nu}), u) for nu in u.nu)
    if isinstance(a, PointsTo):
        o, v = _value(a.target), _value(a.value)
        return isinstance(o, ObjectPointer) and not isinstance(v, ClassRef) and v is not None \
            and Field(o, a.field, v) in h
    if isinstance(a, PredAssn):
        cls = _class(a.index)
        o = _down(a.target, cls)
        if o is None:
            return False
        args = tuple(_value(x) for x in a.args)
        if any(x is None for x in args):
            return False
        return interp.contains((h, o, a.name, cls, args))
    if isinstance(a, CtedAssn):
        o = _down(a.target, _class(a.index))
        return o is not None and o.is_allocation and Cted(o) in h
    if isinstance(a, DynAssn):
        o, cls = _value(a.target), _class(a.index)
        if not isinstance(o, ObjectPointer) or cls is None or not program.has_class(o.static):
            return False
        return h.contains_all(dtype_of(program.bases, o, cls))
    raise TypeError(a)


# -- basis heaps and the implication oracle --------------------------------------------

def _union(h1: Heap, h2: Heap) -> Heap:
    return Heap(set(h1) | set(h2))


def basis(program: Program, a: Assertion, u: Universe, depth: Optional[int] = None) -> set[Heap]:
    """Heaps such that every well-formed model of ``a`` contains one of them.

    Each basis heap is itself a model (checked by the oracle).  Predicate
    bodies unfold up to ``depth`` levels; deeper recursion is cut off, which
    under-approximates the models (the oracle is one-directional).
    """
    depth = u.unfold_depth if depth is None else depth

    def go(a: Assertion, d: int) -> set[Heap]:
        if isinstance(a, Bool):
            return {Heap()} if a.value else set()
        if isinstance(a, Or):
            return go(a.left, d) | go(a.right, d)
        if isinstance(a, (Star, And)):
            ls, rs = go(a.left, d), go(a.right, d)
            out = set()
            for h1 in ls:
                for h2 in rs:
                    h = h1.add(*h2) if isinstance(a, Star) else _union(h1, h2)
                    if not heap_violations(h):
                        out.add(h)
            return out
        if isinstance(a, Exists):
            out = set()
            for nu in u.nu:
                out |= go(substitute(a.body, {a.var: nu}), d)
            return out
        if isinstance(a, PointsTo):
            o, v = _value(a.target), _value(a.value)
            if isinstance(o, ObjectPointer) and v is not None and not isinstance(v, ClassRef):
                return {Heap([Field(o, a.field, v)])}
            return set()
        if isinstance(a, DynAssn):
            o, cls = _value(a.target), _class(a.index)
            if isinstance(o, ObjectPointer) and cls is not None and program.has_class(o.static):
                return {Heap(dtype_of(program.bases, o, cls))}
            return set()
        if isinstance(a, CtedAssn):
            o = _down(a.target, _class(a.index))
            if o is not None and o.is_allocation:
                return {Heap([Cted(o), Alloc(o.id)])}
            return set()
        if isinstance(a, PredAssn):
            cls = _class(a.index)
            o = _down(a.target, cls)
            if o is None or d <= 0 or not program.has_class(cls):
                return set()
            pd = program.cls(cls).pred(a.name)
            if pd is None or len(pd.params) != len(a.args):
                return set()
            body = substitute(pd.body, {"this": o, **dict(zip(pd.params, a.args))})
            return go(body, d - 1)
        raise TypeError(a)

    return go(a, depth)


@dataclass
class OracleResult:
    holds: bool
    counterexample: Optional[Heap] = None
    checked: int = 0
    assignment: Optional[dict] = None

    def __bool__(self) -> bool:
        return self.holds


def implies_oracle(program: Program, p: Assertion, q: Assertion,
                   u: Optional[Universe] = None, interp=None) -> OracleResult:
    """Finite check of ``forall h. h |= p => h |= q`` under the least interpretation.

    With an explicit heap bound every heap is checked.  Otherwise the basis
    heaps of ``p`` are checked, which suffices because satisfaction is
    upward closed in the heap.
    """
    u = u or default_universe(program)
    interp = interp or LeastInterp(program, u)
    heaps = u.heaps if u.heaps is not None else sorted(basis(program, p, u), key=lambda h: (len(h), str(h)))
    n = 0
    for h in heaps:
        n += 1
        if satisfies(program, interp, h, p, u) and not satisfies(program, interp, h, q, u):
            return OracleResult(False, h, n)
    return OracleResult(True, None, n)


def implies_oracle_open(program: Program, p: Assertion, q: Assertion,
                        u: Optional[Universe] = None, this_cls: Optional[str] = None,
                        interp=None) -> OracleResult:
    """``implies_oracle`` for open assertions, over every assignment of their free variables.

    ``this`` ranges over pointers of static type ``this_cls`` (any pointer
    when unset), ``theta`` over class names, other variables over values.
    """
    from .syntax import free_vars
    u = u or default_universe(program)
    interp = interp or LeastInterp(program, u)
    names = sorted(free_vars(p) | free_vars(q))
    ranges = []
    for n in names:
        if n == "this":
            ranges.append([o for o in u.pointers if this_cls is None or o.static == this_cls])
        elif n == "theta":
            ranges.append([ClassRef(c) for c in u.classes])
        else:
            ranges.append(list(u.values))
    total = 0
    for vals in itertools.product(*ranges):
        s = dict(zip(names, vals))
        r = implies_oracle(program, substitute(p, s), substitute(q, s), u, interp)
        total += r.checked
        if not r.holds:
            return OracleResult(False, r.counterexample, total, s)
    return OracleResult(True, None, total, None)
