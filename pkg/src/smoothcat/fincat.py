"""Finite categories, finite sets and topologies, and concrete functors.

Elements of a carrier are the integers ``0..size-1``.  A map between carriers
is a tuple ``f`` with ``f[i]`` the image of ``i``; composition ``g . f`` is
``tuple(g[x] for x in f)``.  Open sets of a finite topology are bitmasks.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

UMap = tuple  # tuple[int, ...]


class SmoothcatError(Exception):
    """Base class for engine errors (input or configuration problems)."""


class CapExceeded(SmoothcatError):
    """An enumeration would exceed the configured size bound."""

    def __init__(self, what: str, bound: int, count: int):
        super().__init__(f"{what}: {count} exceeds cap {bound}")
        self.what, self.bound, self.count = what, bound, count


@dataclass(frozen=True)
class Caps:
    max_carrier: int = 6
    max_test_objects: int = 4
    max_candidates: int = 200_000

    @classmethod
    def from_env(cls) -> "Caps":
        raw = os.environ.get("SMOOTHCAT_CAP")
        if raw:
            return cls(max_carrier=int(raw))
        return cls()


DEFAULT_CAPS = Caps.from_env()


def compose(g: UMap, f: UMap) -> UMap:
    """``g . f`` (apply ``f`` first)."""
    return tuple(g[x] for x in f)


def identity_map(n: int) -> UMap:
    return tuple(range(n))


# -- carriers ----------------------------------------------------------------


@dataclass(frozen=True)
class FinSet:
    size: int

    kind = "set"

    def __post_init__(self):
        if self.size < 0:
            raise SmoothcatError("negative carrier size")
        if self.size > DEFAULT_CAPS.max_carrier:
            raise CapExceeded("carrier size", DEFAULT_CAPS.max_carrier, self.size)

    @property
    def points(self) -> range:
        return range(self.size)

    def is_continuous(self, f: UMap, target: "Carrier") -> bool:
        return True

    def forget(self) -> "FinSet":
        return self

    def __repr__(self):
        return f"FinSet({self.size})"


def _closed_family(size: int, opens: frozenset) -> bool:
    full = (1 << size) - 1
    if 0 not in opens or full not in opens:
        return False
    return all(a | b in opens and a & b in opens for a in opens for b in opens)


@dataclass(frozen=True)
class FinTop:
    """A finite topological space; ``opens`` is a frozenset of bitmasks."""

    size: int
    opens: frozenset

    kind = "top"

    def __post_init__(self):
        if self.size > DEFAULT_CAPS.max_carrier:
            raise CapExceeded("carrier size", DEFAULT_CAPS.max_carrier, self.size)
        full = (1 << self.size) - 1
        if any(o & ~full for o in self.opens):
            raise SmoothcatError(f"open set outside carrier of size {self.size}")
        if not _closed_family(self.size, self.opens):
            raise SmoothcatError(
                "opens must contain the empty set and the carrier and be closed "
                "under pairwise union and intersection"
            )

    @classmethod
    def from_sets(cls, size: int, opens: Iterable[Iterable[int]]) -> "FinTop":
        masks = {0, (1 << size) - 1}
        masks.update(sum(1 << x for x in o) for o in opens)
        return cls(size, frozenset(masks))

    @classmethod
    def discrete(cls, size: int) -> "FinTop":
        return cls(size, frozenset(range(1 << size)))

    @classmethod
    def indiscrete(cls, size: int) -> "FinTop":
        return cls(size, frozenset({0, (1 << size) - 1}))

    @classmethod
    def sierpinski(cls) -> "FinTop":
        # points 0, 1; the open point is 1
        return cls.from_sets(2, [[1]])

    @property
    def points(self) -> range:
        return range(self.size)

    def open_sets(self) -> list[frozenset]:
        return [frozenset(x for x in range(self.size) if m >> x & 1) for m in sorted(self.opens)]

    def preimage(self, f: UMap, mask: int) -> int:
        return sum(1 << i for i, y in enumerate(f) if mask >> y & 1)

    def is_continuous(self, f: UMap, target: "Carrier") -> bool:
        # self is the domain
        if isinstance(target, FinSet):
            return True
        return all(self.preimage(f, v) in self.opens for v in target.opens)

    def minimal_nbhd(self, x: int) -> int:
        m = (1 << self.size) - 1
        for o in self.opens:
            if o >> x & 1:
                m &= o
        return m

    def forget(self) -> FinSet:
        return FinSet(self.size)

    def __repr__(self):
        return f"FinTop({self.size}, {sorted(self.opens)})"


Carrier = Union[FinSet, FinTop]


def same_kind(a: Carrier, b: Carrier) -> bool:
    return a.kind == b.kind


def is_map_continuous(f: UMap, a: Carrier, b: Carrier) -> bool:
    if a.kind == "set" or b.kind == "set":
        return True
    return a.is_continuous(f, b)


@lru_cache(maxsize=None)
def all_maps(a: Carrier, b: Carrier) -> tuple:
    """Every morphism ``a -> b`` of the underlying category, lexicographic."""
    maps = itertools.product(range(b.size), repeat=a.size)
    if a.kind == "top" and b.kind == "top":
        return tuple(f for f in maps if a.is_continuous(f, b))
    return tuple(maps)


def continuous_maps(a: FinTop, b: FinTop) -> set:
    return set(all_maps(a, b))


@lru_cache(maxsize=None)
def all_topologies(n: int) -> tuple:
    """All topologies on ``n`` points, sorted by their sorted open-mask lists."""
    if n > 4:
        raise CapExceeded("topology enumeration carrier", 4, n)
    full = (1 << n) - 1
    middle = [m for m in range(1, full)]
    found = []
    for bits in range(1 << len(middle)):
        opens = frozenset([0, full] + [m for k, m in enumerate(middle) if bits >> k & 1])
        if _closed_family(n, opens):
            found.append(FinTop(n, opens))
    found.sort(key=lambda t: sorted(t.opens))
    return tuple(found)


def carriers_up_to(kind: str, n: int) -> list:
    """All carriers of the given kind with at most ``n`` points."""
    out = []
    for k in range(n + 1):
        if kind == "set":
            out.append(FinSet(k))
        else:
            out.extend(all_topologies(k))
    return out


# -- finite categories ---------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass(eq=False)
class FinCategory:
    """A finite category given by an explicit composition table.

    ``morphisms`` maps id -> (dom, cod); ``table`` maps (g, f) -> g.f for
    composable pairs.
    """

    objects: tuple
    morphisms: dict
    identities: dict
    table: dict

    def __post_init__(self):
        self.objects = tuple(self.objects)
        self._hom: dict = {}
        for name, (d, c) in self.morphisms.items():
            self._hom.setdefault((d, c), []).append(name)

    def dom(self, m: str) -> str:
        return self.morphisms[m][0]

    def cod(self, m: str) -> str:
        return self.morphisms[m][1]

    def hom(self, a: str, b: str) -> list:
        return list(self._hom.get((a, b), ()))

    def into(self, b: str) -> list:
        return [m for m, (_, c) in self.morphisms.items() if c == b]

    def out_of(self, a: str) -> list:
        return [m for m, (d, _) in self.morphisms.items() if d == a]

    def identity(self, a: str) -> str:
        return self.identities[a]

    def compose(self, g: str, f: str) -> str:
        return self.table[(g, f)]

    def is_terminal(self, t: str) -> bool:
        return all(len(self.hom(a, t)) == 1 for a in self.objects)

    def terminal(self):
        for t in self.objects:
            if self.is_terminal(t):
                return t
        return None

    def full_subcategory(self, objs: Iterable[str]) -> "FinCategory":
        keep = [o for o in self.objects if o in set(objs)]
        ks = set(keep)
        mors = {m: dc for m, dc in self.morphisms.items() if dc[0] in ks and dc[1] in ks}
        table = {gf: h for gf, h in self.table.items() if gf[0] in mors and gf[1] in mors}
        return FinCategory(tuple(keep), mors, {o: self.identities[o] for o in keep}, table)


def validate_category(c: FinCategory) -> list[Violation]:
    out = []
    for o in c.objects:
        i = c.identities.get(o)
        if i is None or c.morphisms.get(i) != (o, o):
            out.append(Violation("identity", f"object {o} lacks an identity"))
    for g, (gd, gc) in c.morphisms.items():
        for f, (fd, fc) in c.morphisms.items():
            if fc != gd:
                continue
            h = c.table.get((g, f))
            if h is None:
                out.append(Violation("composition", f"{g}.{f} undefined"))
            elif c.morphisms.get(h) != (fd, gc):
                out.append(Violation("closure", f"{g}.{f} = {h} not in hom({fd},{gc})"))
    if out:
        return out
    for f, (fd, fc) in c.morphisms.items():
        if c.table[(c.identities[fc], f)] != f or c.table[(f, c.identities[fd])] != f:
            out.append(Violation("identity-law", f"identity law fails at {f}"))
    for h, (hd, _) in c.morphisms.items():
        for g in c.into(hd):
            for f in c.into(c.dom(g)):
                left = c.table[(h, c.table[(g, f)])]
                right = c.table[(c.table[(h, g)], f)]
                if left != right:
                    out.append(Violation("associativity", f"({h},{g},{f}): {left} != {right}"))
    return out


@dataclass(eq=False)
class ConcreteFunctor:
    on_objects: dict
    on_morphisms: dict

    def carrier(self, t: str) -> Carrier:
        return self.on_objects[t]

    def __call__(self, m: str) -> UMap:
        return self.on_morphisms[m]


def check_faithful_functor(u: ConcreteFunctor, t: FinCategory) -> list[Violation]:
    out = []
    for o in t.objects:
        if o not in u.on_objects:
            out.append(Violation("totality", f"object {o} unmapped"))
    for m, (d, c) in t.morphisms.items():
        f = u.on_morphisms.get(m)
        if f is None:
            out.append(Violation("totality", f"morphism {m} unmapped"))
            continue
        a, b = u.on_objects.get(d), u.on_objects.get(c)
        if a is None or b is None:
            continue
        if len(f) != a.size or any(not 0 <= y < b.size for y in f):
            out.append(Violation("carrier", f"{m} is not a map {d} -> {c}"))
        elif not is_map_continuous(f, a, b):
            out.append(Violation("continuity", f"u({m}) is not continuous"))
    if out:
        return out
    for o in t.objects:
        if u(t.identity(o)) != identity_map(u.carrier(o).size):
            out.append(Violation("functoriality", f"u(id_{o}) is not the identity"))
    for (g, f), h in sorted(t.table.items()):
        if compose(u(g), u(f)) != u(h):
            out.append(Violation("functoriality", f"u({g}).u({f}) != u({h})"))
    for (a, b), names in sorted(t._hom.items()):
        seen: dict = {}
        for m in names:
            if u(m) in seen:
                out.append(
                    Violation("faithfulness", f"hom({a},{b}): {seen[u(m)]} and {m} share a map")
                )
            seen[u(m)] = m
    return out


def induced_table(morphisms: Mapping[str, tuple], maps: Mapping[str, UMap]) -> dict:
    """Composition table of a concrete category, read off the carrier maps."""
    lookup = {(morphisms[m], f): m for m, f in maps.items()}
    table = {}
    for g, (gd, gc) in morphisms.items():
        for f, (fd, fc) in morphisms.items():
            if fc != gd:
                continue
            h = lookup.get(((fd, gc), compose(maps[g], maps[f])))
            if h is None:
                raise SmoothcatError(f"{g}.{f} has no declared morphism")
            table[(g, f)] = h
    return table


# -- sites -------------------------------------------------------------------


@dataclass(eq=False)
class Site:
    """Test category, concrete functor into FinSet/FinTop, and named data
    (coverages for the input sheaf rule, detecting-family lists)."""

    name: str
    kind: str
    category: FinCategory
    u: ConcreteFunctor
    coverages: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    caps: Caps = DEFAULT_CAPS

    def __post_init__(self):
        if self.kind not in ("set", "top"):
            raise SmoothcatError(f"unknown underlying kind {self.kind!r}")
        if len(self.category.objects) > self.caps.max_test_objects:
            raise CapExceeded("test objects", self.caps.max_test_objects, len(self.category.objects))
        for o in self.category.objects:
            if self.u.carrier(o).kind != self.kind:
                raise SmoothcatError(f"carrier of {o} is not of kind {self.kind}")
        self._im: dict = {}
        self._by_map: dict = {}
        for m, (d, c) in self.category.morphisms.items():
            self._im.setdefault((d, c), set()).add(self.u(m))
            self._by_map[(d, c, self.u(m))] = m

    @property
    def objects(self) -> tuple:
        return self.category.objects

    def carrier(self, t: str) -> Carrier:
        return self.u.carrier(t)

    def umap(self, m: str) -> UMap:
        return self.u(m)

    def im_u(self, a: str, b: str) -> set:
        return self._im.get((a, b), set())

    def in_im(self, a: str, b: str, f: UMap) -> bool:
        return f in self._im.get((a, b), ())

    def morphism_for(self, a: str, b: str, f: UMap):
        return self._by_map.get((a, b, f))

    def terminal(self):
        return self.category.terminal()

    def validate(self) -> list[Violation]:
        return validate_category(self.category) + check_faithful_functor(self.u, self.category)

    def __repr__(self):
        return f"Site({self.name!r}, {self.kind})"


def full_concrete_site(name: str, kind: str, carriers: Mapping[str, Carrier], **kw) -> Site:
    """The full subcategory of FinSet/FinTop on the given carriers."""
    morphisms, maps, ids = {}, {}, {}
    for a, ca in carriers.items():
        for b, cb in carriers.items():
            for k, f in enumerate(all_maps(ca, cb)):
                mid = f"{a}>{b}:{''.join(map(str, f))}" if f else f"{a}>{b}:_"
                morphisms[mid] = (a, b)
                maps[mid] = f
                if a == b and f == identity_map(ca.size):
                    ids[a] = mid
    cat = FinCategory(tuple(carriers), morphisms, ids, induced_table(morphisms, maps))
    return Site(name, kind, cat, ConcreteFunctor(dict(carriers), maps), **kw)


def iter_points(c: Carrier) -> Iterator[int]:
    return iter(range(c.size))
