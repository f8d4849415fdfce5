"""V-objects, their morphisms, the embedding of the test category, and fibres.

A V-object is a carrier with, for every test object ``t``, a family of input
tests ``u(t) -> X`` and a family of output tests ``X -> u(t)``.  Structures on
one carrier are compared by ``order_leq``: more inputs and fewer outputs is
higher.  Under that order the forcing-satisfying structures on a carrier form
a finite complete lattice, enumerated here exactly.

Internally a carrier's structures are handled as pairs of bitmasks over a
fixed indexing of all candidate test maps (see ``FibreContext``); the public
functions take and return ``VObject`` values.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

from smoothcat.fincat import (
    CapExceeded,
    Carrier,
    Site,
    SmoothcatError,
    UMap,
    Violation,
    all_maps,
    compose,
    is_map_continuous,
)


def _freeze(families: Mapping, objects: Iterable[str]) -> tuple:
    return tuple((t, frozenset(families.get(t, ()))) for t in objects)


@dataclass(frozen=True)
class VObject:
    """A carrier with input and output test families (strict subsets of
    hom-sets, so equality is set equality)."""

    carrier: Carrier
    itest: tuple
    otest: tuple

    @classmethod
    def make(cls, carrier: Carrier, itest: Mapping, otest: Mapping, objects=None) -> "VObject":
        objs = tuple(objects) if objects is not None else tuple(sorted(set(itest) | set(otest)))
        return cls(carrier, _freeze(itest, objs), _freeze(otest, objs))

    @property
    def objects(self) -> tuple:
        return tuple(t for t, _ in self.itest)

    def inputs(self, t: str) -> frozenset:
        for s, fam in self.itest:
            if s == t:
                return fam
        return frozenset()

    def outputs(self, t: str) -> frozenset:
        for s, fam in self.otest:
            if s == t:
                return fam
        return frozenset()

    def with_families(self, itest=None, otest=None) -> "VObject":
        return VObject(
            self.carrier,
            self.itest if itest is None else _freeze(itest, self.objects),
            self.otest if otest is None else _freeze(otest, self.objects),
        )

    def restricted_to(self, objects: Sequence[str]) -> "VObject":
        return VObject(
            self.carrier,
            tuple((t, self.inputs(t)) for t in objects),
            tuple((t, self.outputs(t)) for t in objects),
        )

    def sizes(self) -> dict:
        return {t: (len(self.inputs(t)), len(self.outputs(t))) for t in self.objects}

    def __repr__(self):
        body = ", ".join(f"{t}:{len(i)}/{len(self.outputs(t))}" for t, i in self.itest)
        return f"VObject({self.carrier!r}; {body})"


@dataclass(frozen=True)
class SmoothConfig:
    """A site together with a forcing specification."""

    site: Site
    forcing: object  # smoothcat.forcing.ForcingSpec

    @property
    def underlying_kind(self) -> str:
        return self.site.kind

    @property
    def test_category(self):
        return self.site.category

    @property
    def u(self):
        return self.site.u

    def with_forcing(self, forcing) -> "SmoothConfig":
        return SmoothConfig(self.site, forcing)


class FibreContext:
    """Bit indexing of every candidate test map on one carrier over one site.

    Input element ``k`` is a pair ``(t, f)`` with ``f: u(t) -> X``; output
    elements are pairs ``(t, f)`` with ``f: X -> u(t)``.  ``in_cl[k]`` is the
    mask of everything obtained from ``k`` by precomposing with test maps,
    ``in_up[k]`` the mask of elements whose closure contains ``k``; likewise
    for outputs under postcomposition.
    """

    def __init__(self, site: Site, carrier: Carrier):
        if carrier.kind != site.kind:
            raise SmoothcatError(f"carrier kind {carrier.kind} does not match site kind {site.kind}")
        self.site = site
        self.carrier = carrier
        self.cache: dict = {}
        objs = site.objects
        self.in_elems = [(t, f) for t in objs for f in all_maps(site.carrier(t), carrier)]
        self.out_elems = [(t, f) for t in objs for f in all_maps(carrier, site.carrier(t))]
        self.in_index = {e: k for k, e in enumerate(self.in_elems)}
        self.out_index = {e: k for k, e in enumerate(self.out_elems)}
        self.full_in = (1 << len(self.in_elems)) - 1
        self.full_out = (1 << len(self.out_elems)) - 1
        cat = site.category

        self.in_cl = []
        for t, f in self.in_elems:
            m = 0
            for h in cat.into(t):
                m |= 1 << self.in_index[(cat.dom(h), compose(f, site.umap(h)))]
            self.in_cl.append(m)
        self.out_cl = []
        for t, f in self.out_elems:
            m = 0
            for h in cat.out_of(t):
                m |= 1 << self.out_index[(cat.cod(h), compose(site.umap(h), f))]
            self.out_cl.append(m)
        self.in_up = _up_masks(self.in_cl)
        self.out_up = _up_masks(self.out_cl)

        # compat_in[ko]: inputs i with o.i in im u; compat_out[ki]: dually
        self.compat_in = [0] * len(self.out_elems)
        self.compat_out = [0] * len(self.in_elems)
        for ko, (to, o) in enumerate(self.out_elems):
            for ki, (ti, i) in enumerate(self.in_elems):
                if site.in_im(ti, to, compose(o, i)):
                    self.compat_in[ko] |= 1 << ki
                    self.compat_out[ki] |= 1 << ko

    # -- conversions --

    def masks(self, x: VObject) -> tuple:
        if x.carrier != self.carrier:
            raise SmoothcatError("carrier mismatch")
        im = om = 0
        try:
            for t, fam in x.itest:
                for f in fam:
                    im |= 1 << self.in_index[(t, f)]
            for t, fam in x.otest:
                for f in fam:
                    om |= 1 << self.out_index[(t, f)]
        except KeyError as exc:
            raise SmoothcatError(f"test map {exc.args[0]} is not a morphism of the underlying category")
        return im, om

    def vobject(self, imask: int, omask: int) -> VObject:
        ins: dict = {t: set() for t in self.site.objects}
        outs: dict = {t: set() for t in self.site.objects}
        for k in bits(imask):
            t, f = self.in_elems[k]
            ins[t].add(f)
        for k in bits(omask):
            t, f = self.out_elems[k]
            outs[t].add(f)
        return VObject.make(self.carrier, ins, outs, self.site.objects)

    def in_mask_of(self, t: str, maps: Iterable[UMap]) -> int:
        return sum(1 << self.in_index[(t, f)] for f in maps)

    def out_mask_of(self, t: str, maps: Iterable[UMap]) -> int:
        return sum(1 << self.out_index[(t, f)] for f in maps)

    # -- derived families --

    def in_closure(self, mask: int) -> int:
        out = 0
        for k in bits(mask):
            out |= self.in_cl[k]
        return out

    def out_closure(self, mask: int) -> int:
        out = 0
        for k in bits(mask):
            out |= self.out_cl[k]
        return out

    def outputs_compatible_with(self, imask: int) -> int:
        m = self.full_out
        for k in bits(imask):
            m &= self.compat_out[k]
        return m

    def inputs_compatible_with(self, omask: int) -> int:
        m = self.full_in
        for k in bits(omask):
            m &= self.compat_in[k]
        return m

    def in_is_closed(self, mask: int) -> bool:
        return self.in_closure(mask) == mask

    def out_is_closed(self, mask: int) -> bool:
        return self.out_closure(mask) == mask

    def is_valid(self, imask: int, omask: int) -> bool:
        return (
            self.in_is_closed(imask)
            and self.out_is_closed(omask)
            and omask & ~self.outputs_compatible_with(imask) == 0
        )

    # -- enumeration --

    def in_ideals(self) -> list:
        key = ("ideals", "in")
        if key not in self.cache:
            self.cache[key] = _ideals(self.in_cl, self.in_up, self.site.caps.max_candidates)
        return self.cache[key]

    def out_ideals(self) -> list:
        key = ("ideals", "out")
        if key not in self.cache:
            self.cache[key] = _ideals(self.out_cl, self.out_up, self.site.caps.max_candidates)
        return self.cache[key]

    def valid_pairs(self):
        """Every valid (input, output) mask pair, in canonical order."""
        outs = self.out_ideals()
        budget = self.site.caps.max_candidates
        count = 0
        for im in self.in_ideals():
            allowed = self.outputs_compatible_with(im)
            for om in outs:
                if om & ~allowed == 0:
                    count += 1
                    if count > budget:
                        raise CapExceeded("V-objects on carrier", budget, count)
                    yield im, om


def bits(mask: int):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def _up_masks(cl: list) -> list:
    up = [0] * len(cl)
    for k, m in enumerate(cl):
        for j in bits(m):
            up[j] |= 1 << k
    return up


def _ideals(cl: list, up: list, cap: int) -> list:
    """All closed subsets (unions of principal closures), sorted."""
    n = len(cl)
    found: list = []

    def rec(k: int, inc: int, exc: int):
        while k < n and (inc >> k & 1 or exc >> k & 1):
            k += 1
        if k == n:
            found.append(inc)
            if len(found) > cap:
                raise CapExceeded("subfunctor candidates", cap, len(found))
            return
        new = inc | cl[k]
        if not new & exc:
            rec(k + 1, new, exc)
        rec(k + 1, inc, exc | up[k])

    rec(0, 0, 0)
    found.sort()
    return found


@lru_cache(maxsize=None)
def context(site: Site, carrier: Carrier) -> FibreContext:
    return FibreContext(site, carrier)


# -- single objects ----------------------------------------------------------


def validate_vobject(x: VObject, site_or_cfg) -> list[Violation]:
    site = getattr(site_or_cfg, "site", site_or_cfg)
    out: list[Violation] = []
    if x.carrier.kind != site.kind:
        return [Violation("carrier", f"carrier kind {x.carrier.kind} != site kind {site.kind}")]
    cat = site.category
    for t in site.objects:
        for f in x.inputs(t):
            if len(f) != site.carrier(t).size or any(not 0 <= y < x.carrier.size for y in f):
                out.append(Violation("membership", f"input {f} at {t} is not a map u({t}) -> X"))
            elif not is_map_continuous(f, site.carrier(t), x.carrier):
                out.append(Violation("continuity", f"input {f} at {t} is not continuous"))
        for f in x.outputs(t):
            if len(f) != x.carrier.size or any(not 0 <= y < site.carrier(t).size for y in f):
                out.append(Violation("membership", f"output {f} at {t} is not a map X -> u({t})"))
            elif not is_map_continuous(f, x.carrier, site.carrier(t)):
                out.append(Violation("continuity", f"output {f} at {t} is not continuous"))
    if out:
        return out
    for m in sorted(cat.morphisms):
        s, t = cat.dom(m), cat.cod(m)
        for i in sorted(x.inputs(t)):
            j = compose(i, site.umap(m))
            if j not in x.inputs(s):
                out.append(Violation("subfunctor", f"input {i} at {t} composed with {m} gives {j}, missing at {s}"))
        for o in sorted(x.outputs(s)):
            p = compose(site.umap(m), o)
            if p not in x.outputs(t):
                out.append(Violation("subfunctor", f"{m} after output {o} at {s} gives {p}, missing at {t}"))
    for t in site.objects:
        for s in site.objects:
            for i in sorted(x.inputs(t)):
                for o in sorted(x.outputs(s)):
                    if not site.in_im(t, s, compose(o, i)):
                        out.append(
                            Violation("compatibility", f"output {o} at {s} after input {i} at {t} is not in im u")
                        )
    return out


def is_vmorphism(f: UMap, x1: VObject, x2: VObject) -> bool:
    if len(f) != x1.carrier.size or any(not 0 <= y < x2.carrier.size for y in f):
        raise SmoothcatError("map does not go between the carriers")
    if not is_map_continuous(f, x1.carrier, x2.carrier):
        return False
    for t, fam in x1.itest:
        target = x2.inputs(t)
        if any(compose(f, i) not in target for i in fam):
            return False
    for t, fam in x2.otest:
        target = x1.outputs(t)
        if any(compose(o, f) not in target for o in fam):
            return False
    return True


def vhom(x1: VObject, x2: VObject) -> list:
    """All V-morphisms ``x1 -> x2`` (as underlying maps), lexicographic."""
    return [f for f in all_maps(x1.carrier, x2.carrier) if is_vmorphism(f, x1, x2)]


def embed_test(t: str, site_or_cfg) -> VObject:
    site = getattr(site_or_cfg, "site", site_or_cfg)
    if t not in site.objects:
        raise SmoothcatError(f"unknown test object {t!r}")
    cat = site.category
    ins = {s: {site.umap(m) for m in cat.hom(s, t)} for s in site.objects}
    outs = {s: {site.umap(m) for m in cat.hom(t, s)} for s in site.objects}
    return VObject.make(site.carrier(t), ins, outs, site.objects)


def order_leq(a: VObject, b: VObject) -> bool:
    if a.carrier != b.carrier:
        raise SmoothcatError("order_leq needs a common carrier")
    objs = set(a.objects) | set(b.objects)
    return all(a.inputs(t) <= b.inputs(t) and a.outputs(t) >= b.outputs(t) for t in objs)


def masks_leq(a: tuple, b: tuple) -> bool:
    return a[0] & ~b[0] == 0 and b[1] & ~a[1] == 0


# -- fibres ------------------------------------------------------------------


@dataclass
class FibreLattice:
    """The forcing-satisfying structures on one carrier, canonically ordered."""

    carrier: Carrier
    elements: list
    masks: list
    ctx: FibreContext = field(repr=False)

    def __len__(self):
        return len(self.elements)

    @cached_property
    def _position(self) -> dict:
        return {m: k for k, m in enumerate(self.masks)}

    def index_of(self, x: VObject) -> int:
        return self._position[self.ctx.masks(x)]

    def __contains__(self, x: VObject) -> bool:
        try:
            return self.ctx.masks(x) in self._position
        except SmoothcatError:
            return False

    def leq(self, i: int, j: int) -> bool:
        return masks_leq(self.masks[i], self.masks[j])

    @cached_property
    def down_sets(self) -> list:
        """``down_sets[i]``: bitset of the elements below element ``i``."""
        out = []
        for a in self.masks:
            d = 0
            for j, b in enumerate(self.masks):
                if masks_leq(b, a):
                    d |= 1 << j
            out.append(d)
        return out

    @cached_property
    def up_sets(self) -> list:
        out = [0] * len(self.masks)
        for i, d in enumerate(self.down_sets):
            for j in bits(d):
                out[j] |= 1 << i
        return out

    def bounds(self, chosen: Sequence[tuple], lower: bool) -> list:
        """Masks of the fibre elements below (or above) every chosen pair."""
        sets = self.down_sets if lower else self.up_sets
        acc = (1 << len(self.masks)) - 1
        for m in chosen:
            k = self._position.get(m)
            if k is None:
                acc &= sum(
                    1 << j for j, c in enumerate(self.masks) if (masks_leq(c, m) if lower else masks_leq(m, c))
                )
            else:
                acc &= sets[k]
        return [self.masks[j] for j in bits(acc)]

    @cached_property
    def leq_matrix(self) -> list:
        n = len(self.masks)
        return [[self.leq(i, j) for j in range(n)] for i in range(n)]

    @property
    def minimum(self) -> VObject:
        return self.elements[self._extreme(lower=True)]

    @property
    def maximum(self) -> VObject:
        return self.elements[self._extreme(lower=False)]

    def _extreme(self, lower: bool) -> int:
        n = len(self.masks)
        for i in range(n):
            if all(self.leq(i, j) if lower else self.leq(j, i) for j in range(n)):
                return i
        raise SmoothcatError("fibre has no extreme element")


def fibre_enumerate(carrier: Carrier, cfg: SmoothConfig) -> FibreLattice:
    return _fibre(cfg, carrier)


@lru_cache(maxsize=None)
def _fibre(cfg: SmoothConfig, carrier: Carrier) -> FibreLattice:
    from smoothcat.forcing import satisfies_masks

    ctx = context(cfg.site, carrier)
    masks = [p for p in ctx.valid_pairs() if satisfies_masks(cfg, ctx, *p)]
    masks.sort()
    return FibreLattice(carrier, [ctx.vobject(*m) for m in masks], masks, ctx)


def fibre_min(carrier: Carrier, cfg: SmoothConfig) -> VObject:
    return fibre_enumerate(carrier, cfg).minimum


def fibre_max(carrier: Carrier, cfg: SmoothConfig) -> VObject:
    return fibre_enumerate(carrier, cfg).maximum


def indiscrete_structure(carrier: Carrier, cfg: SmoothConfig) -> VObject:
    """Alias of ``fibre_min`` under the naming of the meet-of-everything functor.

    Elsewhere the all-inputs structure (the fibre *maximum*) is also called
    indiscrete; prefer ``fibre_min``/``fibre_max``.
    """
    warnings.warn("indiscrete_structure is fibre_min; the name is ambiguous", stacklevel=2)
    return fibre_min(carrier, cfg)


def discrete_structure(carrier: Carrier, cfg: SmoothConfig) -> VObject:
    """Alias of ``fibre_max``; see ``indiscrete_structure``."""
    warnings.warn("discrete_structure is fibre_max; the name is ambiguous", stacklevel=2)
    return fibre_max(carrier, cfg)


def _common_carrier(s: Sequence[VObject], carrier) -> Carrier:
    carriers = {x.carrier for x in s}
    if carrier is not None:
        carriers.add(carrier)
    if len(carriers) != 1:
        raise SmoothcatError("meet/join needs exactly one common carrier")
    return carriers.pop()


def lattice_meet_masks(fib: FibreLattice, chosen: Sequence[tuple]) -> tuple:
    """Meet by intersecting inputs over the family and outputs over its
    lower bounds in the fibre."""
    ctx = fib.ctx
    im = ctx.full_in
    for m in chosen:
        im &= m[0]
    om = ctx.full_out
    for c in fib.bounds(chosen, lower=True):
        om &= c[1]
    return im, om


def lattice_join_masks(fib: FibreLattice, chosen: Sequence[tuple]) -> tuple:
    ctx = fib.ctx
    om = ctx.full_out
    for m in chosen:
        om &= m[1]
    im = ctx.full_in
    for c in fib.bounds(chosen, lower=False):
        im &= c[0]
    return im, om


def meet_structures(s: Iterable[VObject], cfg: SmoothConfig, carrier: Carrier | None = None) -> VObject:
    """Greatest lower bound in the fibre; the empty family gives the maximum."""
    s = list(s)
    fib = fibre_enumerate(_common_carrier(s, carrier), cfg)
    chosen = [fib.ctx.masks(x) for x in s]
    result = lattice_meet_masks(fib, chosen)
    if result not in fib._position:
        raise SmoothcatError("meet left the fibre; forcing condition is not functorial here")
    return fib.ctx.vobject(*result)


def join_structures(s: Iterable[VObject], cfg: SmoothConfig, carrier: Carrier | None = None) -> VObject:
    s = list(s)
    fib = fibre_enumerate(_common_carrier(s, carrier), cfg)
    chosen = [fib.ctx.masks(x) for x in s]
    result = lattice_join_masks(fib, chosen)
    if result not in fib._position:
        raise SmoothcatError("join left the fibre; forcing condition is not functorial here")
    return fib.ctx.vobject(*result)


def all_vobjects(site: Site, carrier: Carrier) -> list:
    """Every V-object on the carrier, ignoring forcing."""
    ctx = context(site, carrier)
    return [ctx.vobject(*p) for p in ctx.valid_pairs()]
