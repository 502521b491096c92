"""Symbolic heaps and a syntactic entailment engine with frame inference.

A symbolic heap is a multiset of spatial chunks (the atomic assertions,
with symbolic values in term positions).  ``consume`` searches for a way to
carve a goal assertion out of a state using unification plus the weakening
rewrites:

* predicate fold/unfold (APredDef), only at a concrete index equal to the
  target's static type;
* predicate and cted transfer along subobject steps (AMovePred, AMoveCted),
  only when the step class differs from the index;
* dyn split/merge along the direct bases (ADyntype).

Search is depth-first with iterative deepening on the number of rewrites.
Each rewrite is assigned a layer (one more than the layers of the chunks it
consumed); consecutive layers give the labels of a proof tree.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .runtime import DowncastUndefined, Null, ObjectPointer, downcast
from .syntax import (
    And,
    Assertion,
    Bool,
    ClassRef,
    CtedAssn,
    DynAssn,
    EVar,
    Exists,
    Or,
    PointsTo,
    PredAssn,
    Program,
    Star,
    Sub,
    Sym,
    Term,
    mk_sub,
    static_type,
    substitute,
)
from .parser import fmt_assertion

Chunk = Union[PointsTo, PredAssn, CtedAssn, DynAssn]
CHUNK_TYPES = (PointsTo, PredAssn, CtedAssn, DynAssn)

STEP_RULES = ("ADyntype-split", "ADyntype-merge", "AMovePred", "AMoveCted",
              "APredDef-unfold", "APredDef-fold", "match", "pure")

DEFAULT_DEPTH = 8


class UnsupportedConjunction(ValueError):
    """A conjunction of two different spatial assertions has no symbolic-heap form."""


# -- symbolic heaps -----------------------------------------------------------------

@dataclass(frozen=True)
class SymHeap:
    chunks: tuple = ()
    pure: frozenset = frozenset()        # disequalities, as ordered pairs of terms
    existentials: frozenset = frozenset()

    def __str__(self) -> str:
        return render_chunks(self.chunks)

    def as_assertion(self) -> Assertion:
        out: Assertion = Bool(True)
        for c in self.chunks:
            out = c if out == Bool(True) else Star(out, c)
        return out

    def spatial(self) -> Counter:
        return Counter(self.chunks)

    def with_chunks(self, chunks: Iterable[Chunk]) -> "SymHeap":
        return SymHeap(tuple(chunks), self.pure, self.existentials)


def render_chunks(chunks: Iterable[Chunk]) -> str:
    cs = list(chunks)
    return " * ".join(fmt_assertion(c) for c in cs) if cs else "true"


class Fresh:
    """Deterministic supply of fresh symbol names."""

    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self.n = 0

    def name(self, base: str) -> str:
        self.n += 1
        return f"{self.prefix}{base.rstrip(chr(39))}_{self.n}"


# -- terms --------------------------------------------------------------------------

def term_parent(t: Term) -> Optional[Term]:
    if isinstance(t, Sub):
        return t.base
    if isinstance(t, ObjectPointer) and t.path:
        return t.parent()
    return None


def sym_downcast(t: Term, cls: str) -> Optional[Term]:
    """Symbolic ``t`` downcast to ``cls``; None when undefined or unknown."""
    while True:
        if static_type(t) == cls:
            return t
        p = term_parent(t)
        if p is None:
            return None
        t = p


def is_above(t: Term, t2: Term) -> bool:
    """``t2`` is ``t`` extended by zero or more subobject steps."""
    while t2 is not None:
        if t2 == t:
            return True
        t2 = term_parent(t2)
    return False


def sym_leaves(program: Program, t: Term) -> Optional[list[Term]]:
    st = static_type(t)
    if st is None or not program.has_class(st):
        return None
    bs = program.bases(st)
    if not bs:
        return [t]
    out: list[Term] = []
    for b in bs:
        sub = sym_leaves(program, mk_sub(t, b))
        if sub is None:
            return None
        out.extend(sub)
    return out


def resolve(t: Term, s: dict) -> Term:
    while isinstance(t, EVar) and t in s:
        t = s[t]
    if isinstance(t, Sub):
        b = resolve(t.base, s)
        return t if b is t.base else mk_sub(b, t.cls)
    return t


def resolve_chunk(c: Chunk, s: dict) -> Chunk:
    if not s:
        return c
    if isinstance(c, PointsTo):
        return PointsTo(resolve(c.target, s), c.field, resolve(c.value, s))
    if isinstance(c, PredAssn):
        return PredAssn(resolve(c.target, s), c.name, resolve(c.index, s),
                        tuple(resolve(x, s) for x in c.args))
    if isinstance(c, CtedAssn):
        return CtedAssn(resolve(c.target, s), resolve(c.index, s))
    return DynAssn(resolve(c.target, s), resolve(c.index, s))


def has_evar(t: Term) -> bool:
    if isinstance(t, EVar):
        return True
    if isinstance(t, Sub):
        return has_evar(t.base)
    return False


def chunk_terms(c: Chunk) -> tuple:
    if isinstance(c, PointsTo):
        return (c.target, c.value)
    if isinstance(c, PredAssn):
        return (c.target, c.index, *c.args)
    return (c.target, c.index)


def unify(a: Term, b: Term, s: dict) -> Optional[dict]:
    a, b = resolve(a, s), resolve(b, s)
    if a == b:
        return s
    if isinstance(a, EVar):
        return {**s, a: b}
    if isinstance(b, EVar):
        return {**s, b: a}
    if isinstance(a, Sub) or isinstance(b, Sub):
        if static_type(a) == static_type(b):
            pa, pb = term_parent(a), term_parent(b)
            if pa is not None and pb is not None:
                return unify(pa, pb, s)
    return None


def unify_chunk(g: Chunk, c: Chunk, s: dict) -> Optional[dict]:
    if type(g) is not type(c):
        return None
    if isinstance(g, PointsTo) and g.field != c.field:
        return None
    if isinstance(g, PredAssn) and (g.name != c.name or len(g.args) != len(c.args)):
        return None
    for x, y in zip(chunk_terms(g), chunk_terms(c)):
        s = unify(x, y, s)
        if s is None:
            return None
    return s


def class_of(t: Term) -> Optional[str]:
    return t.name if isinstance(t, ClassRef) else None


# -- normalization ------------------------------------------------------------------

def _norm(a: Assertion, fresh: Fresh, mode: str) -> list[tuple[tuple, frozenset]]:
    """Disjuncts as (chunks, introduced symbol names)."""
    if isinstance(a, Bool):
        return [((), frozenset())] if a.value else []
    if isinstance(a, CHUNK_TYPES):
        return [((a,), frozenset())]
    if isinstance(a, Or):
        return _norm(a.left, fresh, mode) + _norm(a.right, fresh, mode)
    if isinstance(a, Star):
        return [(l + r, le | re) for (l, le), (r, re) in
                itertools.product(_norm(a.left, fresh, mode), _norm(a.right, fresh, mode))]
    if isinstance(a, And):
        out = []
        for (l, le), (r, re) in itertools.product(_norm(a.left, fresh, mode), _norm(a.right, fresh, mode)):
            if not l or Counter(l) == Counter(r):
                out.append((r, le | re))
            elif not r:
                out.append((l, le | re))
            elif mode == "produce":
                # keeping one conjunct only forgets information
                out.append((l, le | re))
            elif mode == "consume":
                # in an affine logic P * Q implies P && Q
                out.append((l + r, le | re))
            else:
                raise UnsupportedConjunction(fmt_assertion(a))
        return out
    if isinstance(a, Exists):
        name = fresh.name(a.var)
        v = EVar(name) if mode == "consume" else Sym(name)
        body = substitute(a.body, {a.var: v})
        return [(c, e | {name}) for c, e in _norm(body, fresh, mode)]
    raise TypeError(a)


def normalize(a: Assertion, fresh: Optional[Fresh] = None) -> list[SymHeap]:
    """Assertion to a disjunction of symbolic heaps (existentials become fresh symbols)."""
    fresh = fresh or Fresh()
    return [SymHeap(c, frozenset(), e) for c, e in _norm(a, fresh, "exact")]


def consistent(program: Program, chunks: Iterable[Chunk]) -> bool:
    """False when no well-formed heap can satisfy the chunks together."""
    fields, dyn_keys, cted_keys = set(), set(), set()
    for c in chunks:
        t = c.target
        if isinstance(t, (Null, ClassRef)):
            return False
        if isinstance(c, PointsTo):
            if isinstance(c.value, ClassRef):
                return False
            key = (t, c.field)
            if key in fields:
                return False
            fields.add(key)
        elif isinstance(c, (PredAssn, CtedAssn)):
            k = class_of(c.index)
            if k is not None and isinstance(t, ObjectPointer):
                try:
                    d = downcast(t, k)
                except DowncastUndefined:
                    return False
                if isinstance(c, CtedAssn) and not d.is_allocation:
                    return False
            if isinstance(c, CtedAssn) and k is not None:
                key = sym_downcast(t, k)
                if key is not None:
                    if key in cted_keys:
                        return False
                    cted_keys.add(key)
        elif isinstance(c, DynAssn):
            leaves = sym_leaves(program, t) or [t]
            for leaf in leaves:
                if leaf in dyn_keys:
                    return False
                dyn_keys.add(leaf)
    return True


def diseqs(chunks: Iterable[Chunk]) -> frozenset:
    by_field: dict[str, list[Term]] = {}
    for c in chunks:
        if isinstance(c, PointsTo):
            by_field.setdefault(c.field, []).append(c.target)
    out = set()
    for ts in by_field.values():
        for a, b in itertools.combinations(sorted(set(ts), key=str), 2):
            out.add((a, b))
    return frozenset(out)


# -- proof steps ----------------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    rule: str
    before: tuple
    after: tuple
    layer: int = 0

    @property
    def tree_rule(self) -> str:
        return self.rule.split("-")[0]

    def __str__(self) -> str:
        return f"{self.rule}: {render_chunks(self.before)} => {render_chunks(self.after)}"


def layer_labels(steps: Iterable[Step]) -> list[str]:
    """One label per layer, bottom-up; mixed layers join rule names with '+'."""
    by_layer: dict[int, list[str]] = {}
    for st in steps:
        if st.rule in ("match", "pure"):
            continue
        names = by_layer.setdefault(st.layer, [])
        if st.tree_rule not in names:
            names.append(st.tree_rule)
    return ["+".join(by_layer[k]) for k in sorted(by_layer)]


@dataclass
class EntailmentResult:
    proved: bool
    frame: tuple = ()
    subst: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    failed_goal: Optional[Chunk] = None
    state: tuple = ()
    reason: str = ""
    vacuous: bool = False

    @property
    def labels(self) -> list[str]:
        return layer_labels(self.steps)

    @property
    def rewrites(self) -> list[Step]:
        return [s for s in self.steps if s.rule not in ("match", "pure")]

    def __bool__(self) -> bool:
        return self.proved

    def describe(self) -> str:
        if self.proved:
            return "proved" + (" (vacuously)" if self.vacuous else "")
        goal = fmt_assertion(self.failed_goal) if self.failed_goal is not None else "?"
        return f"{self.reason}: cannot establish {goal} from {render_chunks(self.state)}"


# -- search ---------------------------------------------------------------------------

class _Cut(Exception):
    pass


@dataclass(frozen=True)
class _Node:
    """A state chunk with provenance for layering."""
    id: int
    chunk: Chunk
    layer: int


class Entailer:
    """Entailment engine bound to one program.

    ``depth`` bounds the number of rewrites per query.
    """

    def __init__(self, program: Program, depth: int = DEFAULT_DEPTH, fresh: Optional[Fresh] = None):
        self.program = program
        self.depth = depth
        self.fresh = fresh or Fresh()

    # -- produce --
    def produce(self, state: SymHeap, a: Assertion) -> list[SymHeap]:
        out = []
        for chunks, ex in _norm(a, self.fresh, "produce"):
            all_chunks = state.chunks + chunks
            if consistent(self.program, all_chunks):
                out.append(SymHeap(all_chunks, state.pure | diseqs(all_chunks), state.existentials | ex))
        return out

    # -- definitions --
    def pred_body(self, c: PredAssn) -> Optional[Assertion]:
        k = class_of(c.index)
        if k is None or static_type(c.target) != k or not self.program.has_class(k):
            return None
        pd = self.program.cls(k).pred(c.name)
        if pd is None or len(pd.params) != len(c.args):
            return None
        return substitute(pd.body, {"this": c.target, **dict(zip(pd.params, c.args))})

    def _bases(self, t: Term) -> tuple[str, ...]:
        st = static_type(t)
        if st is None or not self.program.has_class(st):
            return ()
        return self.program.bases(st)

    # -- consume --
    def consume(self, state: SymHeap, a: Assertion, subst: Optional[dict] = None,
                require_empty: bool = False) -> EntailmentResult:
        subst = dict(subst or {})
        goals_alts = _norm(a, self.fresh, "consume")
        if not goals_alts:
            return EntailmentResult(False, state=state.chunks, reason="no proof", failed_goal=None) \
                if not self._infeasible(state.chunks) else \
                EntailmentResult(True, frame=state.chunks, subst=subst, vacuous=True)
        best = None
        for goals, _ in goals_alts:
            res = self._solve(state.chunks, tuple(resolve_chunk(g, subst) for g in goals), subst, require_empty)
            if res.proved:
                return res
            if best is None or (best.reason != "depth exceeded" and res.reason == "depth exceeded"):
                best = res
        return best

    def _infeasible(self, chunks) -> bool:
        return not consistent(self.program, chunks)

    def _solve(self, chunks: tuple, goals: tuple, subst: dict, require_empty: bool) -> EntailmentResult:
        if self._infeasible(chunks):
            return EntailmentResult(True, frame=chunks, subst=subst, vacuous=True)
        self._next_id = itertools.count()
        start = tuple(_Node(next(self._next_id), c, 0) for c in chunks)
        gstart = tuple((next(self._next_id), g) for g in goals)
        self._failure = (goals[0] if goals else None, chunks)
        self._best_matched = -1
        cut_at_max = False
        for d in range(self.depth + 1):
            self._memo: dict = {}
            self._cut = False
            sol = self._dfs(start, gstart, subst, d, require_empty, 0)
            if sol is not None:
                return self._finish(sol, subst)
            if not self._cut:
                break
            cut_at_max = d == self.depth
        goal, st = self._failure
        return EntailmentResult(False, state=st, failed_goal=goal,
                                reason="depth exceeded" if cut_at_max else "no proof")

    def _finish(self, sol, subst0: dict) -> EntailmentResult:
        state, s, events, vacuous = sol
        goal_layer: dict[int, int] = {}
        steps: list[Step] = []
        pending_goal = []
        for ev in events:
            kind = ev[0]
            if kind == "state":
                _, rule, ins, outs = ev
                layer = 1 + max((n.layer for n in ins), default=0)
                steps.append(Step(rule, tuple(resolve_chunk(n.chunk, s) for n in ins),
                                  tuple(resolve_chunk(n.chunk, s) for n in outs), layer))
            elif kind == "match":
                _, gid, g, node = ev
                goal_layer[gid] = node.layer
                steps.append(Step("match", (resolve_chunk(node.chunk, s),), (), node.layer))
            else:
                pending_goal.append(ev)
        # goal rewrites: layer above their subgoals; children precede parents
        for ev in pending_goal:
            _, rule, gid, g, kids = ev
            layer = 1 + max((goal_layer.get(k, 0) for k, _ in kids), default=0)
            goal_layer[gid] = layer
            steps.append(Step(rule, tuple(resolve_chunk(c, s) for _, c in kids),
                              (resolve_chunk(g, s),), layer))
        for st in steps:
            if st.rule in ("AMovePred", "AMoveCted"):
                assert _transfer_ok(self.program, st), st
        steps.sort(key=lambda st: (st.layer, st.rule == "match"))
        return EntailmentResult(True, frame=tuple(resolve_chunk(n.chunk, s) for n in state),
                                subst=s, steps=steps, vacuous=vacuous)

    def _key(self, state, goals, s):
        return (tuple(sorted(repr(n.chunk) for n in state)),
                tuple(repr(resolve_chunk(g, s)) for _, g in goals))

    def _note_failure(self, matched: int, goal, state) -> None:
        if matched > self._best_matched:
            self._best_matched = matched
            self._failure = (goal, tuple(n.chunk for n in state))

    def _dfs(self, state: tuple, goals: tuple, s: dict, budget: int, require_empty: bool, matched: int):
        key = self._key(state, goals, s)
        if self._memo.get(key, -1) >= budget:
            return None
        if not goals:
            if not require_empty or not state:
                return (state, s, (), False)
            if budget <= 0:
                if any(self._state_moves(state, (), True)):
                    self._cut = True
                self._note_failure(matched, None, state)
                self._memo[key] = budget
                return None
            for ev, new_state, vac in self._state_moves(state, (), True):
                if vac:
                    return (new_state, s, (ev,), True)
                r = self._dfs(new_state, goals, s, budget - 1, require_empty, matched)
                if r is not None:
                    return (r[0], r[1], (ev,) + r[2], r[3])
            self._note_failure(matched, None, state)
            self._memo[key] = budget
            return None
        gi = next((i for i, (_, g) in enumerate(goals) if not has_evar(resolve(g.target, s))), 0)
        gid, g0 = goals[gi]
        g = resolve_chunk(g0, s)
        rest = goals[:gi] + goals[gi + 1:]
        # direct matches, exact ones first
        cands = sorted(range(len(state)), key=lambda i: state[i].chunk != g)
        for i in cands:
            s2 = unify_chunk(g, state[i].chunk, s)
            if s2 is None:
                continue
            r = self._dfs(state[:i] + state[i + 1:], rest, s2, budget, require_empty, matched + 1)
            if r is not None:
                return (r[0], r[1], (("match", gid, g, state[i]),) + r[2], r[3])
        moves = list(self._goal_moves(g)) + [None]
        if budget <= 0:
            if len(moves) > 1 or any(True for _ in self._state_moves(state, goals, False, g)):
                self._cut = True
            self._note_failure(matched, g, state)
            self._memo[key] = budget
            return None
        for mv in moves[:-1]:
            rule, kids = mv
            kid_goals = tuple((next(self._next_id), k) for k in kids)
            r = self._dfs(state, kid_goals + rest, s, budget - 1, require_empty, matched)
            if r is not None:
                ev = ("goal", rule, gid, g, kid_goals)
                return (r[0], r[1], r[2] + (ev,), r[3])
        for ev, new_state, vac in self._state_moves(state, goals, False, g):
            if vac:
                return (new_state, s, (ev,), True)
            r = self._dfs(new_state, goals, s, budget - 1, require_empty, matched)
            if r is not None:
                return (r[0], r[1], (ev,) + r[2], r[3])
        self._note_failure(matched, g, state)
        self._memo[key] = budget
        return None

    # -- rewrite generation --
    def _goal_moves(self, g: Chunk):
        if isinstance(g, PredAssn):
            body = self.pred_body(g)
            if body is not None:
                for chunks, _ in _norm(body, self.fresh, "consume"):
                    yield "APredDef-fold", chunks
        if isinstance(g, (PredAssn, CtedAssn)):
            rule = "AMovePred" if isinstance(g, PredAssn) else "AMoveCted"
            k = class_of(g.index)
            if k is not None:
                parent = term_parent(g.target)
                if parent is not None and static_type(g.target) != k:
                    yield rule, (_retarget(g, parent),)
        if isinstance(g, DynAssn):
            bs = self._bases(g.target)
            if bs:
                yield "ADyntype-merge", tuple(DynAssn(mk_sub(g.target, b), g.index) for b in bs)

    def _state_moves(self, state: tuple, goals: tuple, only_unfold: bool, g: Optional[Chunk] = None):
        goal_targets = [g.target] if g is not None else []
        goal_targets += [gg.target for _, gg in goals]
        for i, n in enumerate(state):
            c = n.chunk
            rest = state[:i] + state[i + 1:]
            if isinstance(c, PredAssn):
                body = self.pred_body(c)
                if body is not None:
                    alts = _norm(body, self.fresh, "produce")
                    if not alts:
                        yield ("state", "APredDef-unfold", (n,), ()), rest, True
                        continue
                    if len(alts) == 1:
                        outs = tuple(_Node(next(self._next_id), x, n.layer + 1) for x in alts[0][0])
                        new_state = rest + outs
                        if not consistent(self.program, [m.chunk for m in new_state]):
                            yield ("state", "APredDef-unfold", (n,), outs), new_state, True
                            continue
                        if only_unfold and outs:
                            continue
                        yield ("state", "APredDef-unfold", (n,), outs), new_state, False
            if only_unfold:
                continue
            if isinstance(c, (PredAssn, CtedAssn)):
                rule = "AMovePred" if isinstance(c, PredAssn) else "AMoveCted"
                k = class_of(c.index)
                if k is None:
                    continue
                parent = term_parent(c.target)
                if parent is not None and static_type(c.target) != k:
                    out = _Node(next(self._next_id), _retarget(c, parent), n.layer + 1)
                    yield ("state", rule, (n,), (out,)), rest + (out,), False
                for b in self._bases(c.target):
                    if b == k:
                        continue
                    t2 = mk_sub(c.target, b)
                    if any(is_above(t2, gt) for gt in goal_targets):
                        out = _Node(next(self._next_id), _retarget(c, t2), n.layer + 1)
                        yield ("state", rule, (n,), (out,)), rest + (out,), False
            elif isinstance(c, DynAssn):
                bs = self._bases(c.target)
                if bs:
                    outs = tuple(_Node(next(self._next_id), DynAssn(mk_sub(c.target, b), c.index), n.layer + 1)
                                 for b in bs)
                    yield ("state", "ADyntype-split", (n,), outs), rest + outs, False

    def entails(self, p: Assertion, q: Assertion, require_empty: bool = False) -> EntailmentResult:
        """``p |- q``: every disjunct of ``p`` must consume ``q``."""
        states = self.produce(SymHeap(), p)
        steps: list[Step] = []
        frames = []
        for st in states:
            r = self.consume(st, q, require_empty=require_empty)
            if not r.proved:
                return r
            steps.extend(r.steps)
            frames.append(r.frame)
        return EntailmentResult(True, frame=frames[0] if len(frames) == 1 else (), steps=steps,
                                vacuous=not states)


def _retarget(c: Chunk, t: Term) -> Chunk:
    if isinstance(c, PredAssn):
        return PredAssn(t, c.name, c.index, c.args)
    if isinstance(c, CtedAssn):
        return CtedAssn(t, c.index)
    raise TypeError(c)


def _transfer_ok(program: Program, st: Step) -> bool:
    """Side condition of AMovePred/AMoveCted: the subobject step differs from the index."""
    (a,), (b,) = st.before, st.after
    k = class_of(a.index)
    if k is None or k != class_of(b.index):
        return False
    lower = a.target if term_parent(a.target) == b.target else b.target
    upper = term_parent(lower)
    return upper is not None and static_type(lower) != k and \
        static_type(lower) in program.bases(static_type(upper))


# -- convenience wrappers ---------------------------------------------------------------

def produce(program: Program, state: SymHeap, a: Assertion, fresh: Optional[Fresh] = None) -> list[SymHeap]:
    return Entailer(program, fresh=fresh).produce(state, a)


def consume(program: Program, state: SymHeap, a: Assertion, subst: Optional[dict] = None,
            depth: int = DEFAULT_DEPTH, require_empty: bool = False) -> EntailmentResult:
    return Entailer(program, depth).consume(state, a, subst, require_empty)


def closing_subst(*assertions: Assertion, this_cls: Optional[str] = None) -> dict:
    """Free program variables to symbols, so open assertions can be checked."""
    from .syntax import free_vars
    names = set()
    for a in assertions:
        names |= free_vars(a)
    out = {}
    for n in sorted(names):
        out[n] = Sym(n, this_cls if n == "this" else None)
    return out


def entails(program: Program, p: Assertion, q: Assertion, depth: int = DEFAULT_DEPTH,
            require_empty: bool = False, this_cls: Optional[str] = None) -> EntailmentResult:
    s = closing_subst(p, q, this_cls=this_cls)
    return Entailer(program, depth).entails(substitute(p, s), substitute(q, s), require_empty)


# -- single rewrites (exposed for algebraic tests) ------------------------------------------

def unfold(program: Program, heap: SymHeap, i: int, fresh: Optional[Fresh] = None) -> SymHeap:
    """Replace predicate chunk ``i`` by its definition (single-disjunct bodies only)."""
    e = Entailer(program, fresh=fresh)
    c = heap.chunks[i]
    body = e.pred_body(c) if isinstance(c, PredAssn) else None
    if body is None:
        raise ValueError(f"APredDef not applicable to {fmt_assertion(c)}")
    alts = _norm(body, e.fresh, "produce")
    if len(alts) != 1:
        raise ValueError("predicate body is not a single symbolic heap")
    return heap.with_chunks(heap.chunks[:i] + heap.chunks[i + 1:] + alts[0][0])


def fold(program: Program, heap: SymHeap, target: PredAssn) -> SymHeap:
    """Replace the chunks forming ``target``'s definition by ``target`` itself."""
    e = Entailer(program, depth=0)
    body = e.pred_body(target)
    if body is None:
        raise ValueError(f"APredDef not applicable to {fmt_assertion(target)}")
    r = e.consume(heap, body)
    if not r.proved:
        raise ValueError(r.describe())
    return heap.with_chunks(r.frame + (target,))


def split_dyn(program: Program, heap: SymHeap, i: int) -> SymHeap:
    c = heap.chunks[i]
    bs = program.bases(static_type(c.target)) if isinstance(c, DynAssn) and static_type(c.target) else ()
    if not bs:
        raise ValueError("ADyntype split needs a dyn chunk on a non-leaf object")
    return heap.with_chunks(heap.chunks[:i] + tuple(DynAssn(mk_sub(c.target, b), c.index) for b in bs)
                            + heap.chunks[i + 1:])


def merge_dyn(program: Program, heap: SymHeap, target: Term, index: Term) -> SymHeap:
    bs = program.bases(static_type(target))
    parts = [DynAssn(mk_sub(target, b), index) for b in bs]
    if not bs or not Counter(heap.chunks) >= Counter(parts):
        raise ValueError("ADyntype merge needs the dyn chunks of every direct base")
    chunks = list(heap.chunks)
    pos = chunks.index(parts[0])
    for p in parts:
        chunks.remove(p)
    chunks.insert(pos, DynAssn(target, index))
    return heap.with_chunks(chunks)


def canonical(heap: SymHeap) -> tuple:
    """Order-insensitive form for comparing symbolic heaps."""
    return tuple(sorted(repr(c) for c in heap.chunks))
