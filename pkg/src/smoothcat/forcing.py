"""Forcing conditions: which candidate test maps a structure is obliged to contain.

Each catalogue entry decides forcing through its direct characterisation
rather than by quantifying over trials:

* ``Saturation``: an input ``f`` is forced when every output test composed
  with ``f`` comes from the test category (dually for outputs).
* ``Terminal``: maps factoring through the terminal test object are forced.
* ``Sheaf``: an input is forced when some covering family pulls it into the
  inputs; an output (topological carriers only) when it agrees near every
  point with a genuine output test.
* ``Determined`` / ``SpecDet``: forced when all composites with a family
  that detects ``im u`` are tests.
* ``Union``: forced under any member.

The directly forced maps are then closed under precomposition (inputs) or
postcomposition (outputs) with test maps.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence


from smoothcat.fincat import (
    Site,
    SmoothcatError,
    UMap,
    Violation,
    all_maps,
    carriers_up_to,
    compose,
)
from smoothcat.spaces import (
    FibreContext,
    SmoothConfig,
    VObject,
    bits,
    context,
    embed_test,
    fibre_enumerate,
    lattice_join_masks,
    lattice_meet_masks,
    masks_leq,
)

INPUT, OUTPUT = "input", "output"


class ForcingError(SmoothcatError):
    pass


# -- condition terms -----------------------------------------------------------


class ConditionTerm:
    def direct(self, side: str, site: Site, ctx: FibreContext, im: int, om: int) -> int:
        raise NotImplementedError

    def check(self, side: str, site: Site) -> list[Violation]:
        return []


@dataclass(frozen=True)
class Empty(ConditionTerm):
    def direct(self, side, site, ctx, im, om):
        return 0

    def __str__(self):
        return "empty"


@dataclass(frozen=True)
class Terminal(ConditionTerm):
    # ``via``: a larger site supplying the terminal object, used when the
    # condition is restricted to a subsite that lacks one
    via: object = None

    def direct(self, side, site, ctx, im, om):
        ref = self.via or site
        key = ("terminal", side, id(ref))
        if key not in ctx.cache:
            term = ref.terminal()
            if term is None:
                raise ForcingError(f"terminal condition on site {ref.name} without a terminal object")
            cat, mask = ref.category, 0
            if side == INPUT:
                for h in all_maps(ref.carrier(term), ctx.carrier):
                    for t in site.objects:
                        for m in cat.hom(t, term):
                            mask |= 1 << ctx.in_index[(t, compose(h, ref.umap(m)))]
            else:
                for h in all_maps(ctx.carrier, ref.carrier(term)):
                    for t in site.objects:
                        for m in cat.hom(term, t):
                            mask |= 1 << ctx.out_index[(t, compose(ref.umap(m), h))]
            ctx.cache[key] = mask
        return ctx.cache[key]

    def check(self, side, site):
        ref = self.via or site
        if ref.terminal() is None:
            return [Violation("terminal", f"site {ref.name} has no terminal object")]
        return []

    def __str__(self):
        return "terminal"


@dataclass(frozen=True)
class Saturation(ConditionTerm):
    def direct(self, side, site, ctx, im, om):
        if side == INPUT:
            return ctx.inputs_compatible_with(om)
        return ctx.outputs_compatible_with(im)

    def __str__(self):
        return "saturation"


def _coverage(site: Site, name) -> dict:
    if name is None:
        return site.coverages.get("default", {})
    if name not in site.coverages:
        raise ForcingError(f"unknown coverage {name!r} on site {site.name}")
    return site.coverages[name]


@dataclass(frozen=True)
class Sheaf(ConditionTerm):
    coverage: str | None = None

    def direct(self, side, site, ctx, im, om):
        if side == INPUT:
            reqs = _family_requirements(site, ctx, INPUT, ("cov", self.coverage), self._families(site))
            return _any_family(reqs, im)
        if site.kind != "top":
            raise ForcingError("the output sheaf condition needs topological carriers")
        key = ("sheaf-out",)
        if key not in ctx.cache:
            ctx.cache[key] = _local_agreement(ctx)
        mask = 0
        for k, per_point in enumerate(ctx.cache[key]):
            if all(a & om for a in per_point):
                mask |= 1 << k
        return mask

    def _families(self, site) -> dict:
        cov = _coverage(site, self.coverage)
        return {t: [list(f) for f in cov.get(t, [])] for t in site.objects}

    def check(self, side, site):
        out = []
        if side == OUTPUT:
            if site.kind != "top":
                out.append(Violation("sheaf", "output sheaf condition requested over FinSet"))
            return out
        try:
            fams = self._families(site)
        except ForcingError as exc:
            return [Violation("sheaf", str(exc))]
        for t, lst in fams.items():
            for fam in lst:
                if not fam:
                    out.append(Violation("sheaf", f"empty covering family at {t}"))
                for m in fam:
                    if m not in site.category.morphisms or site.category.cod(m) != t:
                        out.append(Violation("sheaf", f"covering morphism {m} does not target {t}"))
        return out

    def __str__(self):
        return "sheaf" if self.coverage is None else f"sheaf({self.coverage})"


@dataclass(frozen=True)
class Determined(ConditionTerm):
    # detection is judged on ``via`` (default: the site itself); only the
    # site's own morphisms may appear in a detecting family
    via: object = None

    def direct(self, side, site, ctx, im, om):
        ref = self.via or site
        key = ("determined", side, id(ref))
        if key not in ctx.cache:
            ctx.cache[key] = _determined_table(site, ref, ctx, side)
        table = ctx.cache[key]
        mask = 0
        fam = im if side == INPUT else om
        for k, (req_bits, detectors) in enumerate(table):
            present = 0
            for pos, b in req_bits:
                if fam >> b & 1:
                    present |= 1 << pos
            if all(d & present for d in detectors):
                mask |= 1 << k
        return mask

    def __str__(self):
        return "determined"


@dataclass(frozen=True)
class SpecDet(ConditionTerm):
    families: str
    via: object = None

    def _lists(self, site) -> dict:
        if self.families not in site.families:
            raise ForcingError(f"unknown family list {self.families!r} on site {site.name}")
        raw = site.families[self.families]
        return {t: [list(f) for f in raw.get(t, [])] for t in site.objects}

    def direct(self, side, site, ctx, im, om):
        reqs = _family_requirements(site, ctx, side, ("specdet", self.families), self._lists(site), identity=False)
        return _any_family(reqs, im if side == INPUT else om)

    def check(self, side, site):
        out = []
        try:
            lists = self._lists(site)
        except ForcingError as exc:
            return [Violation("specdet", str(exc))]
        for t, fams in lists.items():
            for fam in fams:
                for m in fam:
                    ok = m in site.category.morphisms and (
                        site.category.cod(m) == t if side == INPUT else site.category.dom(m) == t
                    )
                    if not ok:
                        out.append(Violation("specdet", f"family member {m} does not sit at {t}"))
                if not out and not detects(self.via or site, t, fam, side):
                    out.append(Violation("specdet", f"family {fam} at {t} does not detect im u"))
        return out

    def __str__(self):
        return f"specdet({self.families})"


@dataclass(frozen=True)
class Union(ConditionTerm):
    terms: tuple

    def direct(self, side, site, ctx, im, om):
        mask = 0
        for term in self.terms:
            mask |= term.direct(side, site, ctx, im, om)
        return mask

    def check(self, side, site):
        return [v for term in self.terms for v in term.check(side, site)]

    def __str__(self):
        return "union(" + ",".join(map(str, self.terms)) + ")"


@dataclass(frozen=True)
class Explicit(ConditionTerm):
    """Force a fixed list of ``(test object, map)`` pairs whenever they are
    candidate maps of the structure at hand.  Mostly useful for auditing."""

    maps: tuple

    def direct(self, side, site, ctx, im, om):
        index = ctx.in_index if side == INPUT else ctx.out_index
        return sum(1 << index[e] for e in self.maps if e in index)

    def __str__(self):
        return "explicit(" + ",".join(f"{t}:{''.join(map(str, f))}" for t, f in self.maps) + ")"


@dataclass(frozen=True)
class ForcingSpec:
    input: ConditionTerm
    output: ConditionTerm

    def term(self, side: str) -> ConditionTerm:
        return self.input if side == INPUT else self.output

    def __str__(self):
        return f"({self.input}, {self.output})"


# -- precomputations ----------------------------------------------------------


def _family_requirements(site, ctx, side, key, families: dict, identity=True) -> list:
    """For each element, the masks that must be present for one of the
    families to pull it into the structure."""
    ck = ("reqs", side, key)
    if ck in ctx.cache:
        return ctx.cache[ck]
    cat = site.category
    elems = ctx.in_elems if side == INPUT else ctx.out_elems
    index = ctx.in_index if side == INPUT else ctx.out_index
    table = []
    for t, f in elems:
        fams = list(families.get(t, []))
        if identity:
            fams.append([cat.identity(t)])
        reqs = []
        for fam in fams:
            r = 0
            for m in fam:
                if side == INPUT:
                    r |= 1 << index[(cat.dom(m), compose(f, site.umap(m)))]
                else:
                    r |= 1 << index[(cat.cod(m), compose(site.umap(m), f))]
            reqs.append(r)
        table.append(reqs)
    ctx.cache[ck] = table
    return table


def _any_family(reqs: list, fam: int) -> int:
    mask = 0
    for k, rs in enumerate(reqs):
        if any(r & ~fam == 0 for r in rs):
            mask |= 1 << k
    return mask


def _local_agreement(ctx) -> list:
    """Per output element, per point: mask of output elements agreeing with
    it on the point's minimal open neighbourhood."""
    x = ctx.carrier
    nbhd = [x.minimal_nbhd(p) for p in range(x.size)]
    table = []
    for t, f in ctx.out_elems:
        per_point = []
        for p in range(x.size):
            pts = [q for q in range(x.size) if nbhd[p] >> q & 1]
            a = 0
            for k2, (t2, g) in enumerate(ctx.out_elems):
                if t2 == t and all(f[q] == g[q] for q in pts):
                    a |= 1 << k2
            per_point.append(a)
        table.append(per_point)
    return table


@lru_cache(maxsize=None)
def _detector_masks(site: Site, t: str, side: str) -> tuple:
    """Morphisms sitting at ``t`` (into it for inputs, out of it for outputs)
    and, for every underlying map outside im u on the other side of ``t``,
    the mask of those morphisms that expose it."""
    cat = site.category
    mors = cat.into(t) if side == INPUT else cat.out_of(t)
    detectors = []
    for s in site.objects:
        if side == INPUT:
            for h in all_maps(site.carrier(t), site.carrier(s)):
                if site.in_im(t, s, h):
                    continue
                d = 0
                for pos, m in enumerate(mors):
                    if not site.in_im(cat.dom(m), s, compose(h, site.umap(m))):
                        d |= 1 << pos
                detectors.append(d)
        else:
            for h in all_maps(site.carrier(s), site.carrier(t)):
                if site.in_im(s, t, h):
                    continue
                d = 0
                for pos, m in enumerate(mors):
                    if not site.in_im(s, cat.cod(m), compose(site.umap(m), h)):
                        d |= 1 << pos
                detectors.append(d)
    return tuple(mors), tuple(detectors)


def detects(site: Site, t: str, family: Sequence[str], side: str = INPUT) -> bool:
    """Whether the family of morphisms at ``t`` detects membership in im u."""
    mors, detectors = _detector_masks(site, t, side)
    fam = sum(1 << mors.index(m) for m in family)
    return all(d & fam for d in detectors)


def _determined_table(site, ref, ctx, side) -> list:
    table = []
    elems = ctx.in_elems if side == INPUT else ctx.out_elems
    own = site.category.morphisms
    for t, f in elems:
        mors, detectors = _detector_masks(ref, t, side)
        req_bits = []
        for pos, m in enumerate(mors):
            if m not in own:
                continue
            if side == INPUT:
                req_bits.append((pos, ctx.in_index[(ref.category.dom(m), compose(f, ref.umap(m)))]))
            else:
                req_bits.append((pos, ctx.out_index[(ref.category.cod(m), compose(ref.umap(m), f))]))
        table.append((tuple(req_bits), detectors))
    return table


# -- forced sets and satisfaction --------------------------------------------


def forced_masks(cfg: SmoothConfig, ctx: FibreContext, im: int, om: int) -> tuple:
    spec = cfg.forcing
    fin = spec.input.direct(INPUT, cfg.site, ctx, im, om)
    fout = spec.output.direct(OUTPUT, cfg.site, ctx, im, om)
    return ctx.in_closure(fin), ctx.out_closure(fout)


def satisfies_masks(cfg: SmoothConfig, ctx: FibreContext, im: int, om: int) -> bool:
    fin, fout = forced_masks(cfg, ctx, im, om)
    return fin & ~im == 0 and fout & ~om == 0


def forced_set(x: VObject, cfg: SmoothConfig, direction: str = INPUT) -> dict:
    """Forced maps at ``x``, per test object."""
    ctx = context(cfg.site, x.carrier)
    fin, fout = forced_masks(cfg, ctx, *ctx.masks(x))
    out: dict = {t: set() for t in cfg.site.objects}
    if direction == INPUT:
        for k in bits(fin):
            t, f = ctx.in_elems[k]
            out[t].add(f)
    else:
        for k in bits(fout):
            t, f = ctx.out_elems[k]
            out[t].add(f)
    return {t: frozenset(v) for t, v in out.items()}


def is_forced(f: UMap, t: str, x: VObject, direction: str, cfg: SmoothConfig) -> bool:
    ctx = context(cfg.site, x.carrier)
    index = ctx.in_index if direction == INPUT else ctx.out_index
    if (t, tuple(f)) not in index:
        raise SmoothcatError(f"{f} is not a candidate {direction} map at {t}")
    return tuple(f) in forced_set(x, cfg, direction)[t]


def satisfies_forcing(x: VObject, cfg: SmoothConfig) -> bool:
    ctx = context(cfg.site, x.carrier)
    return satisfies_masks(cfg, ctx, *ctx.masks(x))


@dataclass(frozen=True)
class Trial:
    """A probe for a candidate map: a test morphism on one side and a
    V-morphism (given by its underlying map and target) on the other."""

    direction: str
    test_leg: str
    space_leg: tuple


def saturation_trials(x: VObject, t: str, site: Site) -> list[Trial]:
    """The generating trials of input saturation at ``(t, x)``."""
    ident = site.category.identity(t)
    return [Trial(INPUT, ident, (s, o)) for s, fam in x.otest for o in sorted(fam)]


# -- audits and comparisons -------------------------------------------------------


def audit_non_stupid(cfg: SmoothConfig) -> list[Violation]:
    """Nothing outside im u may be forced at an embedded test object."""
    site = cfg.site
    out = []
    for side in (INPUT, OUTPUT):
        out.extend(cfg.forcing.term(side).check(side, site))
    if out:
        return out
    for t2 in site.objects:
        x = embed_test(t2, site)
        forced_in = forced_set(x, cfg, INPUT)
        forced_out = forced_set(x, cfg, OUTPUT)
        for t1 in site.objects:
            for f in sorted(forced_in[t1]):
                if not site.in_im(t1, t2, f):
                    out.append(Violation("non-stupid", f"input {f}: u({t1}) -> u({t2}) forced at s({t2})"))
            for f in sorted(forced_out[t1]):
                if not site.in_im(t2, t1, f):
                    out.append(Violation("non-stupid", f"output {f}: u({t2}) -> u({t1}) forced at s({t2})"))
    return out


def probe_objects(site: Site, max_carrier: int = 2) -> list:
    """All V-objects on carriers with at most ``max_carrier`` points."""
    out = []
    for c in carriers_up_to(site.kind, max_carrier):
        ctx = context(site, c)
        out.extend((ctx, p) for p in ctx.valid_pairs())
    return out


@lru_cache(maxsize=None)
def condition_leq(a: ForcingSpec, b: ForcingSpec, site: Site, max_carrier: int = 2) -> bool:
    """``a <= b``: every map forced under ``a`` is forced under ``b``, on every
    probe object."""
    ca, cb = SmoothConfig(site, a), SmoothConfig(site, b)
    for ctx, (im, om) in probe_objects(site, max_carrier):
        fa = forced_masks(ca, ctx, im, om)
        fb = forced_masks(cb, ctx, im, om)
        if fa[0] & ~fb[0] or fa[1] & ~fb[1]:
            return False
    return True


# -- forcing functors ---------------------------------------------------------


def _check_pair(a: VObject, weak: SmoothConfig, strong: SmoothConfig):
    if weak.site is not strong.site:
        raise ForcingError("forcing functors need a common site")
    if not condition_leq(weak.forcing, strong.forcing, weak.site):
        raise ForcingError(f"{weak.forcing} is not below {strong.forcing}")
    if not satisfies_forcing(a, weak):
        raise ForcingError("argument does not satisfy the weaker forcing condition")


def forcing_meet(a: VObject, weak: SmoothConfig, strong: SmoothConfig) -> VObject:
    """Meet of all strong structures above ``a``."""
    _check_pair(a, weak, strong)
    fib = fibre_enumerate(a.carrier, strong)
    am = fib.ctx.masks(a)
    upper = [m for m in fib.masks if masks_leq(am, m)]
    return fib.ctx.vobject(*lattice_meet_masks(fib, upper))


def forcing_join(a: VObject, weak: SmoothConfig, strong: SmoothConfig) -> VObject:
    """Join of all strong structures below ``a``."""
    _check_pair(a, weak, strong)
    fib = fibre_enumerate(a.carrier, strong)
    am = fib.ctx.masks(a)
    lower = [m for m in fib.masks if masks_leq(m, am)]
    return fib.ctx.vobject(*lattice_join_masks(fib, lower))


@dataclass(frozen=True)
class ForadjReport:
    leq_holds: bool
    otest_preserved: bool
    outputs_equal: bool
    output_saturated: bool


def check_foradj(a: VObject, weak: SmoothConfig, strong: SmoothConfig) -> ForadjReport:
    from smoothcat.spaces import order_leq

    m = forcing_meet(a, weak, strong)
    return ForadjReport(
        leq_holds=order_leq(a, m),
        otest_preserved=m.otest == a.otest,
        outputs_equal=weak.forcing.output == strong.forcing.output,
        output_saturated=isinstance(strong.forcing.output, Saturation),
    )


# -- textual syntax ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_][\w\-]*|[(),])")


def _tokens(text: str) -> list:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ForcingError(f"cannot parse forcing term near {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse_term(text: str) -> ConditionTerm:
    toks = _tokens(text)
    term, rest = _parse(toks)
    if rest:
        raise ForcingError(f"trailing input in forcing term {text!r}")
    return term


def _parse(toks):
    if not toks:
        raise ForcingError("empty forcing term")
    head, rest = toks[0], toks[1:]
    simple = {"empty": Empty, "terminal": Terminal, "saturation": Saturation, "determined": Determined}
    if head in simple:
        return simple[head](), rest
    if head == "sheaf":
        if rest and rest[0] == "(":
            if len(rest) < 3 or rest[2] != ")":
                raise ForcingError("sheaf takes one coverage name")
            name = rest[1]
            return Sheaf(None if name in ("open", "default") else name), rest[3:]
        return Sheaf(), rest
    if head == "specdet":
        if len(rest) < 3 or rest[0] != "(" or rest[2] != ")":
            raise ForcingError("specdet takes one family-list name")
        return SpecDet(rest[1]), rest[3:]
    if head == "union":
        if not rest or rest[0] != "(":
            raise ForcingError("union needs an argument list")
        rest = rest[1:]
        terms = []
        while True:
            t, rest = _parse(rest)
            terms.append(t)
            if not rest:
                raise ForcingError("unterminated union")
            if rest[0] == ",":
                rest = rest[1:]
                continue
            if rest[0] == ")":
                return Union(tuple(terms)), rest[1:]
            raise ForcingError(f"unexpected {rest[0]!r} in union")
    raise ForcingError(f"unknown condition {head!r}")


def parse_spec(text: str) -> ForcingSpec:
    """Parse ``"(input-term, output-term)"``."""
    toks = _tokens(text)
    if not toks or toks[0] != "(":
        raise ForcingError("forcing spec must look like (input, output)")
    first, rest = _parse(toks[1:])
    if not rest or rest[0] != ",":
        raise ForcingError("forcing spec needs two terms")
    second, rest = _parse(rest[1:])
    if rest != [")"]:
        raise ForcingError("forcing spec must end with ')'")
    return ForcingSpec(first, second)


SAT_SAT = ForcingSpec(Saturation(), Saturation())
EMPTY_EMPTY = ForcingSpec(Empty(), Empty())


def catalogue_terms(site: Site, side: str) -> list:
    """Every single catalogue entry applicable on this side of the site."""
    terms: list = [Empty(), Saturation(), Determined()]
    if site.terminal() is not None:
        terms.append(Terminal())
    if side == INPUT:
        terms.extend(Sheaf(name if name != "default" else None) for name in sorted(site.coverages))
        if not site.coverages:
            terms.append(Sheaf())
    elif site.kind == "top":
        terms.append(Sheaf())
    for name in sorted(site.families):
        terms.append(SpecDet(name))
    return terms
