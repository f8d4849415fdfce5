"""Changing the underlying category: FinSet and FinTop, related by forgetting
the topology or equipping a set with the discrete or indiscrete one.

Every base functor here acts as the identity on map tuples, so a V-object is
transported by replacing its carrier and keeping its families.  Going up from
FinSet to FinTop, a structure over the forgotten site has a finest and a
coarsest lift (left and right adjoint to forgetting), and more generally an
initial lift along any source of V-morphisms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from smoothcat.fincat import (
    Carrier,
    ConcreteFunctor,
    FinTop,
    Site,
    SmoothcatError,
    UMap,
    Violation,
    all_maps,
    all_topologies,
    is_map_continuous,
)
from smoothcat.forcing import INPUT, ConditionTerm, ForcingSpec, forced_masks
from smoothcat.spaces import SmoothConfig, VObject, bits, context, is_vmorphism


class TransferRefused(SmoothcatError):
    """The injectivity hypothesis for transporting a forcing condition fails."""


def _site_with_carriers(site: Site, carriers: dict, kind: str, suffix: str) -> Site:
    u = ConcreteFunctor(carriers, dict(site.u.on_morphisms))
    return Site(
        f"{site.name}{suffix}",
        kind,
        site.category,
        u,
        coverages=site.coverages,
        families=site.families,
        caps=site.caps,
    )


@dataclass(eq=False)
class BaseFunctor:
    """A functor between underlying categories that fixes map tuples.

    ``table`` (custom functors only) sends source carriers to target
    carriers of the same size.
    """

    kind: str
    source: Site
    target: Site
    table: dict | None = None

    @classmethod
    def identity(cls, site: Site) -> "BaseFunctor":
        return cls("identity", site, site)

    @classmethod
    def forget(cls, site: Site) -> "BaseFunctor":
        if site.kind != "top":
            raise SmoothcatError("forget needs a topological site")
        carriers = {t: site.carrier(t).forget() for t in site.objects}
        return cls("forget", site, _site_with_carriers(site, carriers, "set", "/set"))

    @classmethod
    def discrete(cls, site: Site) -> "BaseFunctor":
        return cls._topologise(site, "discrete")

    @classmethod
    def indiscrete(cls, site: Site) -> "BaseFunctor":
        return cls._topologise(site, "indiscrete")

    @classmethod
    def _topologise(cls, site, kind):
        if site.kind != "set":
            raise SmoothcatError(f"{kind} needs a FinSet site")
        make = FinTop.discrete if kind == "discrete" else FinTop.indiscrete
        carriers = {t: make(site.carrier(t).size) for t in site.objects}
        return cls(kind, site, _site_with_carriers(site, carriers, "top", f"/{kind}"))

    @classmethod
    def custom(cls, source: Site, target: Site, table: dict) -> "BaseFunctor":
        g = cls("custom", source, target, dict(table))
        bad = check_witness(g)
        if bad:
            raise SmoothcatError(f"invalid base functor: {bad[0]}")
        return g

    def on_carrier(self, c: Carrier) -> Carrier:
        if self.kind == "identity":
            return c
        if self.kind == "forget":
            return c.forget()
        if self.kind == "discrete":
            return FinTop.discrete(c.size)
        if self.kind == "indiscrete":
            return FinTop.indiscrete(c.size)
        if c not in self.table:
            raise SmoothcatError(f"custom base functor has no image for {c!r}")
        return self.table[c]

    def on_map(self, f: UMap) -> UMap:
        return f


def check_witness(g: BaseFunctor) -> list[Violation]:
    """Intertwining (target u = G . source u) and functoriality on the
    carriers involved."""
    out = []
    for t in g.source.objects:
        if t not in g.target.objects:
            out.append(Violation("intertwining", f"test object {t} missing from target"))
            continue
        try:
            img = g.on_carrier(g.source.carrier(t))
        except SmoothcatError as exc:
            out.append(Violation("functoriality", str(exc)))
            continue
        if img != g.target.carrier(t):
            out.append(Violation("intertwining", f"G(u({t})) = {img!r} but target has {g.target.carrier(t)!r}"))
    for m in g.source.category.morphisms:
        if g.target.u.on_morphisms.get(m) != g.on_map(g.source.umap(m)):
            out.append(Violation("intertwining", f"G(u({m})) differs from the target map"))
    if g.table:
        for a in g.table:
            for b in g.table:
                for f in all_maps(a, b):
                    if not is_map_continuous(f, g.table[a], g.table[b]):
                        out.append(Violation("functoriality", f"{f}: {a!r} -> {b!r} has no image"))
    return out


def map_vobject(g: BaseFunctor, x: VObject) -> VObject:
    return VObject(g.on_carrier(x.carrier), x.itest, x.otest)


# -- transported forcing ---------------------------------------------------------


def check_injective(g: BaseFunctor, carriers: Iterable[Carrier]) -> bool:
    """Whether G is injective on maps into and out of test carriers."""
    tcs = [g.source.carrier(t) for t in g.source.objects]
    for c in carriers:
        for tc in tcs:
            for a, b in ((tc, c), (c, tc)):
                seen = {}
                for f in all_maps(a, b):
                    img = g.on_map(f)
                    if seen.setdefault(img, f) != f:
                        return False
    return True


@dataclass(frozen=True)
class TransferredTerm(ConditionTerm):
    """``f`` is forced at ``x`` when ``G(f)`` is forced at ``G(x)``."""

    functor: object
    target: SmoothConfig

    def direct(self, side, site, ctx, im, om):
        g = self.functor
        x = ctx.vobject(im, om)
        gx = map_vobject(g, x)
        tctx = context(self.target.site, gx.carrier)
        fin, fout = forced_masks(self.target, tctx, *tctx.masks(gx))
        if side == INPUT:
            forced = {tctx.in_elems[k] for k in bits(fin)}
            return sum(1 << k for k, (t, f) in enumerate(ctx.in_elems) if (t, g.on_map(f)) in forced)
        forced = {tctx.out_elems[k] for k in bits(fout)}
        return sum(1 << k for k, (t, f) in enumerate(ctx.out_elems) if (t, g.on_map(f)) in forced)

    def __str__(self):
        return f"via-{self.functor.kind}"


def transfer_forcing(g: BaseFunctor, spec: ForcingSpec, probe_carriers: Sequence[Carrier] = ()) -> ForcingSpec:
    """Pull a forcing condition on the target back along ``g``."""
    if g.kind == "identity":
        return spec
    if not check_injective(g, probe_carriers):
        raise TransferRefused(
            "base functor is not injective on test maps; map to plain V-objects "
            "and apply forcing_join or forcing_meet instead"
        )
    term = TransferredTerm(g, SmoothConfig(g.target, spec))
    return ForcingSpec(term, term)


# -- topological lifts ---------------------------------------------------------


def generated_topology(n: int, subbasis: Iterable[int]) -> FinTop:
    full = (1 << n) - 1
    basis = {full}
    for s in subbasis:
        basis |= {b & s for b in basis}
        basis.add(s)
    opens = {0, full}
    for b in basis:
        opens |= {o | b for o in opens}
    return FinTop(n, frozenset(opens))


def final_topology(n: int, legs: Iterable[tuple]) -> FinTop:
    """Finest topology making every ``(f, domain)`` leg continuous."""
    legs = list(legs)
    opens = [
        m
        for m in range(1 << n)
        if all(dom.preimage(f, m) in dom.opens for f, dom in legs)
    ]
    return FinTop(n, frozenset(opens))


def _check_over(b: VObject, site_top: Site):
    if b.carrier.kind != "set":
        raise SmoothcatError("lifts start from a structure on a finite set")


def finest_lift(b: VObject, site_top: Site) -> VObject:
    _check_over(b, site_top)
    legs = [(i, site_top.carrier(t)) for t, fam in b.itest for i in fam]
    return VObject(final_topology(b.carrier.size, legs), b.itest, b.otest)


def coarsest_lift(b: VObject, site_top: Site) -> VObject:
    return initial_lift(b, (), site_top)


def initial_lift(b: VObject, sinks: Sequence[tuple], site_top: Site) -> VObject:
    """Initial lift of ``b`` along legs ``(f, y)``, each ``f`` a V-morphism
    from ``b`` to the forgotten ``y``."""
    _check_over(b, site_top)
    sub = []
    # FinTop.preimage only reads the map, so any FinTop instance serves
    for t, fam in b.otest:
        c = site_top.carrier(t)
        sub += [c.preimage(o, v) for o in fam for v in c.opens]
    for f, y in sinks:
        if not is_vmorphism(f, b, VObject(y.carrier.forget(), y.itest, y.otest)):
            raise SmoothcatError(f"sink leg {f} is not a V-morphism")
        sub += [y.carrier.preimage(f, v) for v in y.carrier.opens]
    return VObject(generated_topology(b.carrier.size, sub), b.itest, b.otest)


def is_lift(b: VObject, top: FinTop, site_top: Site, sinks: Sequence[tuple] = ()) -> bool:
    for t, fam in b.itest:
        if any(not is_map_continuous(i, site_top.carrier(t), top) for i in fam):
            return False
    for t, fam in b.otest:
        if any(not is_map_continuous(o, top, site_top.carrier(t)) for o in fam):
            return False
    return all(is_map_continuous(f, top, y.carrier) for f, y in sinks)


@dataclass(frozen=True)
class LiftScan:
    lift: VObject
    candidates: int  # topologies on the carrier that carry a lift
    coarsest_unique: bool  # exactly one candidate lies below all others
    matches: bool  # that candidate is the computed lift


def scan_initial_lift(b: VObject, sinks: Sequence[tuple], site_top: Site) -> LiftScan:
    """Exhaustive check over all topologies on the carrier."""
    lift = initial_lift(b, sinks, site_top)
    cands = [t for t in all_topologies(b.carrier.size) if is_lift(b, t, site_top, sinks)]
    least = [t for t in cands if all(t.opens <= s.opens for s in cands)]
    return LiftScan(lift, len(cands), len(least) == 1, len(least) == 1 and least[0] == lift.carrier)


@dataclass(frozen=True)
class LiftedTerm(ConditionTerm):
    """A condition on the topological site read over the forgotten site:
    inputs are judged at the finest lift, outputs at the coarsest."""

    top: SmoothConfig

    def direct(self, side, site, ctx, im, om):
        b = ctx.vobject(im, om)
        y = finest_lift(b, self.top.site) if side == INPUT else coarsest_lift(b, self.top.site)
        tctx = context(self.top.site, y.carrier)
        fin, fout = forced_masks(self.top, tctx, *tctx.masks(y))
        if side == INPUT:
            forced = {tctx.in_elems[k] for k in bits(fin)}
            return sum(1 << k for k, e in enumerate(ctx.in_elems) if e in forced)
        forced = {tctx.out_elems[k] for k in bits(fout)}
        return sum(1 << k for k, e in enumerate(ctx.out_elems) if e in forced)

    def __str__(self):
        return f"lifted{self.top.forcing}"


def lifted_forcing(top: SmoothConfig) -> SmoothConfig:
    """The forcing condition on the forgotten site induced through the lifts."""
    g = BaseFunctor.forget(top.site)
    return SmoothConfig(g.target, ForcingSpec(LiftedTerm(top), LiftedTerm(top)))


def unit_counit_ok(b_probes: Sequence[VObject], y_probes: Sequence[VObject], site_top: Site) -> dict:
    """Units and counits of finest -| forget -| coarsest are identity maps;
    check each is a V-morphism and that forget undoes both lifts."""
    g = BaseFunctor.forget(site_top)
    res = {"sections": 0, "fin_counit": 0, "coa_unit": 0, "total_b": len(b_probes), "total_y": len(y_probes)}
    for b in b_probes:
        fb, cb = finest_lift(b, site_top), coarsest_lift(b, site_top)
        res["sections"] += map_vobject(g, fb) == b and map_vobject(g, cb) == b
    for y in y_probes:
        fy = map_vobject(g, y)
        ident = tuple(range(y.carrier.size))
        res["fin_counit"] += is_vmorphism(ident, finest_lift(fy, site_top), y)
        res["coa_unit"] += is_vmorphism(ident, y, coarsest_lift(fy, site_top))
    return res
