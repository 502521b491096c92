"""Runtime values, heap resources and heaps.

Values are ``null`` or object pointers.  An object pointer is an allocation
pointer ``(id : C*)`` optionally extended by subobject steps, written
``(0:N*).T`` in concrete syntax.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Union


@dataclass(frozen=True, order=True)
class Null:
    def __str__(self) -> str:
        return "null"


NULL = Null()


@dataclass(frozen=True, order=True)
class ObjectPointer:
    id: int
    cls: str
    path: tuple[str, ...] = ()

    @property
    def static(self) -> str:
        """Static type: last subobject step, or the allocation class."""
        return self.path[-1] if self.path else self.cls

    @property
    def is_allocation(self) -> bool:
        return not self.path

    @property
    def root(self) -> "ObjectPointer":
        return ObjectPointer(self.id, self.cls)

    def sub(self, cls: str) -> "ObjectPointer":
        return ObjectPointer(self.id, self.cls, self.path + (cls,))

    def parent(self) -> "ObjectPointer":
        if not self.path:
            raise ValueError(f"{self} is an allocation pointer")
        return ObjectPointer(self.id, self.cls, self.path[:-1])

    def __str__(self) -> str:
        return f"({self.id}:{self.cls}*)" + "".join("." + c for c in self.path)


Value = Union[Null, ObjectPointer]


class DowncastUndefined(Exception):
    pass


def downcast(o: ObjectPointer, cls: str) -> ObjectPointer:
    """The enclosing object of class ``cls`` containing ``o``."""
    cur = o
    while True:
        if cur.static == cls:
            return cur
        if not cur.path:
            raise DowncastUndefined(f"{o} has no enclosing object of class {cls}")
        cur = cur.parent()


# -- resources ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Alloc:
    id: int

    def __str__(self) -> str:
        return f"alloc({self.id})"


@dataclass(frozen=True, order=True)
class Cted:
    ptr: ObjectPointer

    def __str__(self) -> str:
        return f"cted({self.ptr})"


@dataclass(frozen=True, order=True)
class Field:
    ptr: ObjectPointer
    name: str
    value: Value

    def __str__(self) -> str:
        return f"{self.ptr}->{self.name} |-> {self.value}"


@dataclass(frozen=True, order=True)
class Dyn:
    ptr: ObjectPointer
    cls: str

    def __str__(self) -> str:
        return f"dyn({self.ptr}, {self.cls})"


Resource = Union[Alloc, Cted, Field, Dyn]

_KIND_ORDER = {Alloc: 0, Cted: 1, Field: 2, Dyn: 3}


def resource_key(r: Resource):
    return (_KIND_ORDER[type(r)], str(r))


def leaves(bases_of, o: ObjectPointer) -> list[ObjectPointer]:
    """Leaf subobjects of ``o`` in declaration order."""
    bs = bases_of(o.static)
    if not bs:
        return [o]
    out: list[ObjectPointer] = []
    for b in bs:
        out.extend(leaves(bases_of, o.sub(b)))
    return out


def dtype_of(bases_of, o: ObjectPointer, cls: str) -> list[Dyn]:
    return [Dyn(leaf, cls) for leaf in leaves(bases_of, o)]


class Heap:
    """Finite multiset of resources.

    Immutable; every update returns a new heap.  Multiset union is used
    throughout so that heap-invariant violations are observable instead of
    silently absorbed.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Iterable[Resource] = ()):
        self._items = Counter(items)
        self._hash = None

    def __contains__(self, r: Resource) -> bool:
        return self._items.get(r, 0) > 0

    def __iter__(self) -> Iterator[Resource]:
        return iter(self._items.elements())

    def __len__(self) -> int:
        return sum(self._items.values())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Heap) and self._items == other._items

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._items.items()))
        return self._hash

    def count(self, r: Resource) -> int:
        return self._items.get(r, 0)

    def add(self, *rs: Resource) -> "Heap":
        h = Heap()
        h._items = self._items.copy()
        for r in rs:
            h._items[r] += 1
        return h

    def remove(self, *rs: Resource) -> "Heap":
        """Remove each resource once; KeyError if any is missing."""
        items = self._items.copy()
        for r in rs:
            if items.get(r, 0) <= 0:
                raise KeyError(r)
            items[r] -= 1
            if not items[r]:
                del items[r]
        h = Heap()
        h._items = items
        return h

    def contains_all(self, rs: Iterable[Resource]) -> bool:
        need = Counter(rs)
        return all(self._items.get(r, 0) >= n for r, n in need.items())

    def field(self, ptr: ObjectPointer, name: str) -> Field | None:
        for r in self._items:
            if isinstance(r, Field) and r.ptr == ptr and r.name == name:
                return r
        return None

    def dyn_of(self, ptr: ObjectPointer) -> Dyn | None:
        for r in self._items:
            if isinstance(r, Dyn) and r.ptr == ptr:
                return r
        return None

    def ids(self) -> set[int]:
        return {r.id for r in self._items if isinstance(r, Alloc)}

    def sorted(self) -> list[Resource]:
        return sorted(self, key=resource_key)

    def __str__(self) -> str:
        return "{" + ", ".join(str(r) for r in self.sorted()) + "}"

    __repr__ = __str__


def heap_violations(h: Heap) -> list[str]:
    """Heap well-formedness violations (empty list for a well-formed heap)."""
    out = []
    fields: Counter = Counter()
    allocs: Counter = Counter()
    cteds: Counter = Counter()
    dyns: Counter = Counter()
    for r in h:
        if isinstance(r, Field):
            fields[(r.ptr, r.name)] += 1
        elif isinstance(r, Alloc):
            allocs[r.id] += 1
        elif isinstance(r, Cted):
            cteds[r.ptr] += 1
            if not r.ptr.is_allocation:
                out.append(f"cted on subobject pointer {r.ptr}")
            if Alloc(r.ptr.id) not in h:
                out.append(f"cted({r.ptr}) without alloc({r.ptr.id})")
        elif isinstance(r, Dyn):
            dyns[r.ptr] += 1
    out += [f"duplicate points-to {p}->{f}" for (p, f), n in fields.items() if n > 1]
    out += [f"duplicate alloc({i})" for i, n in allocs.items() if n > 1]
    out += [f"duplicate cted({p})" for p, n in cteds.items() if n > 1]
    out += [f"more than one dyn for {p}" for p, n in dyns.items() if n > 1]
    return out
