"""Changing the test category along an inclusion of a small site into a big one.

Structures over the big site restrict to the small one.  In the other
direction there are five extensions of a small structure ``x``:

* ``extend_pre_join`` / ``extend_pre_meet``: the largest and smallest
  big structures restricting to ``x`` (no forcing);
* ``extend_mid``: inputs from the first, outputs from the second;
* ``extend_join`` / ``extend_meet``: the forced versions, obtained by
  pushing the pre-extensions into the big forcing fibre.

The explicit descriptions of the pre-extensions, and hence everything here,
need the small site to be adequate: it must detect im u between big test
carriers by composing with morphisms to and from small objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from smoothcat.fincat import (
    ConcreteFunctor,
    FinCategory,
    Site,
    SmoothcatError,
    all_maps,
    carriers_up_to,
    compose,
)
from smoothcat.forcing import (
    EMPTY_EMPTY,
    INPUT,
    ConditionTerm,
    Determined,
    Empty,
    ForcingSpec,
    Saturation,
    Sheaf,
    SpecDet,
    Terminal,
    Union,
    forced_masks,
    forcing_join,
    forcing_meet,
    satisfies_forcing,
)
from smoothcat.spaces import (
    SmoothConfig,
    VObject,
    bits,
    context,
    fibre_enumerate,
    is_vmorphism,
    order_leq,
)


class InadequateInclusion(SmoothcatError):
    def __init__(self, witness):
        super().__init__(f"small site does not detect im u; undetected map {witness}")
        self.witness = witness


def sub_site(big: Site, objects: Sequence[str], morphisms: Iterable[str] | None = None, name=None) -> Site:
    """The subsite on ``objects`` (full unless ``morphisms`` is given).
    Coverings and named families are kept when all their members survive."""
    objs = [o for o in big.objects if o in set(objects)]
    missing = set(objects) - set(objs)
    if missing:
        raise SmoothcatError(f"unknown test objects {sorted(missing)}")
    cat = big.category.full_subcategory(objs)
    if morphisms is not None:
        keep = set(morphisms) | {cat.identity(o) for o in objs}
        mors = {m: dc for m, dc in cat.morphisms.items() if m in keep}
        table = {gf: h for gf, h in cat.table.items() if gf[0] in mors and gf[1] in mors}
        if any(h not in mors for h in table.values()):
            raise SmoothcatError("declared morphisms are not closed under composition")
        cat = FinCategory(cat.objects, mors, cat.identities, table)
    u = ConcreteFunctor(
        {o: big.carrier(o) for o in objs},
        {m: big.umap(m) for m in cat.morphisms},
    )
    return Site(
        name or f"{big.name}|{','.join(objs)}",
        big.kind,
        cat,
        u,
        coverages=_surviving(big.coverages, cat),
        families=_surviving(big.families, cat),
        caps=big.caps,
    )


def _surviving(named: dict, cat: FinCategory) -> dict:
    out = {}
    for name, per in named.items():
        kept = {
            t: [list(f) for f in fams if all(m in cat.morphisms for m in f)]
            for t, fams in per.items()
            if t in cat.objects
        }
        out[name] = {t: fams for t, fams in kept.items() if fams}
    return out


def restrict_term(term: ConditionTerm, big: Site) -> ConditionTerm:
    """The same rule judged only with small-site trials."""
    if isinstance(term, (Empty, Saturation, Sheaf)):
        return term
    if isinstance(term, Terminal):
        return Terminal(via=term.via or big)
    if isinstance(term, Determined):
        return Determined(via=term.via or big)
    if isinstance(term, SpecDet):
        return SpecDet(term.families, via=term.via or big)
    if isinstance(term, Union):
        return Union(tuple(restrict_term(t, big) for t in term.terms))
    raise SmoothcatError(f"cannot restrict condition {term}")


@dataclass(frozen=True)
class ExtendedTerm(ConditionTerm):
    """A small-site condition extended to the big site.

    ``minimal``: inputs ``f' . u(m)`` and outputs ``u(m) . f'`` with ``f'``
    forced on the small site.  ``maximal``: ``f`` is forced when every
    composite with a morphism from (to) a small object is forced there.
    """

    small: SmoothConfig
    minimal: bool

    def direct(self, side, site, ctx, im, om):
        sctx = context(self.small.site, ctx.carrier)
        key = ("ext-index", id(self.small.site))
        if key not in ctx.cache:
            ctx.cache[key] = (
                [ctx.in_index[e] for e in sctx.in_elems],
                [ctx.out_index[e] for e in sctx.out_elems],
            )
        in_pos, out_pos = ctx.cache[key]
        sim = sum(1 << k for k, b in enumerate(in_pos) if im >> b & 1)
        som = sum(1 << k for k, b in enumerate(out_pos) if om >> b & 1)
        fin, fout = forced_masks(self.small, sctx, sim, som)
        small_objs = set(self.small.site.objects)
        cat = site.category
        mask = 0
        if side == INPUT:
            forced = {sctx.in_elems[k] for k in bits(fin)}
            for k, (b, f) in enumerate(ctx.in_elems):
                if self.minimal:
                    hit = any(
                        (cat.cod(m), g) in forced and compose(g, site.umap(m)) == f
                        for m in cat.out_of(b)
                        if cat.cod(m) in small_objs
                        for g in all_maps(site.carrier(cat.cod(m)), ctx.carrier)
                    )
                else:
                    hit = all(
                        (cat.dom(m), compose(f, site.umap(m))) in forced
                        for m in cat.into(b)
                        if cat.dom(m) in small_objs
                    )
                if hit:
                    mask |= 1 << k
        else:
            forced = {sctx.out_elems[k] for k in bits(fout)}
            for k, (b, f) in enumerate(ctx.out_elems):
                if self.minimal:
                    hit = any(
                        (cat.dom(m), g) in forced and compose(site.umap(m), g) == f
                        for m in cat.into(b)
                        if cat.dom(m) in small_objs
                        for g in all_maps(ctx.carrier, site.carrier(cat.dom(m)))
                    )
                else:
                    hit = all(
                        (cat.cod(m), compose(site.umap(m), f)) in forced
                        for m in cat.out_of(b)
                        if cat.cod(m) in small_objs
                    )
                if hit:
                    mask |= 1 << k
        return mask

    def __str__(self):
        return ("minext" if self.minimal else "maxext") + f"({self.small.forcing})"


@dataclass(eq=False)
class SiteInclusion:
    """A small site inside a big one, each with its forcing condition."""

    small: SmoothConfig
    big: SmoothConfig
    mode: str = "forcing_from_big"
    _adequacy: object = field(default=None, repr=False)

    @classmethod
    def forcing_from_big(cls, big: SmoothConfig, objects: Sequence[str], morphisms=None) -> "SiteInclusion":
        site = sub_site(big.site, objects, morphisms)
        spec = ForcingSpec(restrict_term(big.forcing.input, big.site), restrict_term(big.forcing.output, big.site))
        return cls(SmoothConfig(site, spec), big, "forcing_from_big")

    @classmethod
    def forcing_min_ext(cls, big_site: Site, objects: Sequence[str], small_spec: ForcingSpec) -> "SiteInclusion":
        return cls._extended(big_site, objects, small_spec, True)

    @classmethod
    def forcing_max_ext(cls, big_site: Site, objects: Sequence[str], small_spec: ForcingSpec) -> "SiteInclusion":
        return cls._extended(big_site, objects, small_spec, False)

    @classmethod
    def _extended(cls, big_site, objects, small_spec, minimal):
        small = SmoothConfig(sub_site(big_site, objects), small_spec)
        term = ExtendedTerm(small, minimal)
        big = SmoothConfig(big_site, ForcingSpec(term, term))
        return cls(small, big, "forcing_min_ext" if minimal else "forcing_max_ext")

    @property
    def small_objects(self) -> tuple:
        return self.small.site.objects

    def adequacy(self) -> tuple:
        if self._adequacy is None:
            self._adequacy = _adequacy(self)
        return self._adequacy

    def require_adequate(self):
        ok, witness = self.adequacy()
        if not ok:
            raise InadequateInclusion(witness)

    def __repr__(self):
        return f"SiteInclusion({self.small.site.name} in {self.big.site.name}, {self.mode})"


def _adequacy(inc: SiteInclusion) -> tuple:
    big, small = inc.big.site, inc.small.site
    cat = big.category
    sobj = set(small.objects)
    for b1 in big.objects:
        for b2 in big.objects:
            for f in all_maps(big.carrier(b1), big.carrier(b2)):
                if big.in_im(b1, b2, f):
                    continue
                detected = any(
                    not big.in_im(cat.dom(m1), cat.cod(m2), compose(big.umap(m2), compose(f, big.umap(m1))))
                    for m1 in cat.into(b1)
                    if cat.dom(m1) in sobj
                    for m2 in cat.out_of(b2)
                    if cat.cod(m2) in sobj
                )
                if not detected:
                    return False, (b1, b2, f)
    return True, None


def is_adequate(inc: SiteInclusion) -> tuple:
    """``(True, None)`` or ``(False, (source, target, map))`` naming a map
    outside im u that no composite through small objects exposes."""
    return inc.adequacy()


def restrict(x: VObject, inc: SiteInclusion) -> VObject:
    return x.restricted_to(inc.small_objects)


# -- pre-extensions -------------------------------------------------------------


def _small_embedding(inc: SiteInclusion, b: str) -> VObject:
    """A big test object seen as a small-site V-object."""
    big = inc.big.site
    cat = big.category
    objs = inc.small_objects
    ins = {a: {big.umap(m) for m in cat.hom(a, b)} for a in objs}
    outs = {a: {big.umap(m) for m in cat.hom(b, a)} for a in objs}
    return VObject.make(big.carrier(b), ins, outs, objs)


def _pre_join_families(x: VObject, inc: SiteInclusion) -> tuple:
    big = inc.big.site
    cat = big.category
    small = set(inc.small_objects)
    ins, outs = {}, {}
    for b in big.objects:
        sb = _small_embedding(inc, b)
        ins[b] = {f for f in all_maps(big.carrier(b), x.carrier) if is_vmorphism(f, sb, x)}
        outs[b] = {
            compose(big.umap(m), o)
            for m in cat.into(b)
            if cat.dom(m) in small
            for o in x.outputs(cat.dom(m))
        }
    return ins, outs


def _pre_meet_families(x: VObject, inc: SiteInclusion) -> tuple:
    big = inc.big.site
    cat = big.category
    small = set(inc.small_objects)
    ins, outs = {}, {}
    for b in big.objects:
        sb = _small_embedding(inc, b)
        ins[b] = {
            compose(i, big.umap(m))
            for m in cat.out_of(b)
            if cat.cod(m) in small
            for i in x.inputs(cat.cod(m))
        }
        outs[b] = {g for g in all_maps(x.carrier, big.carrier(b)) if is_vmorphism(g, x, sb)}
    return ins, outs


def extend_pre_join(x: VObject, inc: SiteInclusion) -> VObject:
    inc.require_adequate()
    ins, outs = _pre_join_families(x, inc)
    return VObject.make(x.carrier, ins, outs, inc.big.site.objects)


def extend_pre_meet(x: VObject, inc: SiteInclusion) -> VObject:
    inc.require_adequate()
    ins, outs = _pre_meet_families(x, inc)
    return VObject.make(x.carrier, ins, outs, inc.big.site.objects)


def extend_mid(x: VObject, inc: SiteInclusion) -> VObject:
    inc.require_adequate()
    ins, _ = _pre_join_families(x, inc)
    _, outs = _pre_meet_families(x, inc)
    return VObject.make(x.carrier, ins, outs, inc.big.site.objects)


def _plain(inc: SiteInclusion) -> SmoothConfig:
    return inc.big.with_forcing(EMPTY_EMPTY)


def extend_join(x: VObject, inc: SiteInclusion) -> VObject:
    return forcing_join(extend_pre_join(x, inc), _plain(inc), inc.big)


def extend_meet(x: VObject, inc: SiteInclusion) -> VObject:
    return forcing_meet(extend_pre_meet(x, inc), _plain(inc), inc.big)


EXTENSIONS = {
    "PM": extend_pre_meet,
    "M": extend_meet,
    "E": extend_mid,
    "J": extend_join,
    "PJ": extend_pre_join,
}
CHAIN = ("PM", "M", "E", "J", "PJ")


# -- reports --------------------------------------------------------------------


def probe_family(cfg: SmoothConfig, max_carrier: int | None = None) -> list:
    """Every forcing-satisfying structure on carriers up to the bound."""
    if max_carrier is None:
        max_carrier = 3 if cfg.site.kind == "set" else 2
    out = []
    for c in carriers_up_to(cfg.site.kind, max_carrier):
        out.extend(fibre_enumerate(c, cfg).elements)
    return out


@dataclass(frozen=True)
class ChainRow:
    carrier: object
    index: int
    ids: tuple  # fibre positions (big fibre, -1 when outside) of PM, M, E, J, PJ
    chain: tuple  # PM<=M, M<=E, E<=J, J<=PJ
    sections: tuple  # restrict . F == id for each F in CHAIN
    satisfies: tuple  # M, E, J satisfy the big forcing condition

    @property
    def ok(self) -> bool:
        return all(self.chain) and all(self.sections) and all(self.satisfies)


def chain_report(inc: SiteInclusion, probes: Sequence[VObject] | None = None) -> list:
    inc.require_adequate()
    probes = probe_family(inc.small) if probes is None else probes
    rows = []
    for x in probes:
        fib_small = fibre_enumerate(x.carrier, inc.small)
        fib_big = fibre_enumerate(x.carrier, inc.big)
        vals = [EXTENSIONS[k](x, inc) for k in CHAIN]
        ids = tuple(fib_big.index_of(v) if v in fib_big else -1 for v in vals)
        chain = tuple(order_leq(vals[i], vals[i + 1]) for i in range(4))
        sections = tuple(restrict(v, inc) == x for v in vals)
        sat = tuple(satisfies_forcing(vals[i], inc.big) for i in (1, 2, 3))
        rows.append(ChainRow(x.carrier, fib_small.index_of(x), ids, chain, sections, sat))
    return rows


@dataclass(frozen=True)
class AgreementReport:
    pairs: dict  # (F, G) -> (agree on embedded big objects, agree on all probes)

    @property
    def violations(self) -> list:
        return [p for p, (img, full) in self.pairs.items() if img and not full]


def check_agreement(inc: SiteInclusion, probes: Sequence[VObject] | None = None) -> AgreementReport:
    """Whether J, E and M agree on the embedded big test objects, and whether
    they then agree everywhere on the probe family."""
    inc.require_adequate()
    probes = probe_family(inc.small) if probes is None else probes
    embedded = [_small_embedding(inc, b) for b in inc.big.site.objects]
    pairs = {}
    for f, g in (("J", "E"), ("M", "E"), ("J", "M")):
        ff, gg = EXTENSIONS[f], EXTENSIONS[g]
        img = all(ff(x, inc) == gg(x, inc) for x in embedded if satisfies_forcing(x, inc.small))
        full = all(ff(x, inc) == gg(x, inc) for x in probes)
        pairs[(f, g)] = (img, full)
    return AgreementReport(pairs)
