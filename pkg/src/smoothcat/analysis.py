"""Presets, Galois and adjunction checks, censuses, monoids and searches.

Everything "for all objects" is checked on a truncated probe category: all
forcing-satisfying structures on small carriers and all V-morphisms between
them.  Reports say so through their ``probe`` fields.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from smoothcat.basechange import BaseFunctor, coarsest_lift, finest_lift, map_vobject
from smoothcat.fincat import (
    CapExceeded,
    Carrier,
    FinSet,
    FinTop,
    Site,
    SmoothcatError,
    all_topologies,
    carriers_up_to,
    compose,
)
from smoothcat.fixtures import chain_site, fixture, sierpinski_powers_site
from smoothcat.forcing import (
    EMPTY_EMPTY,
    ForcingSpec,
    condition_leq,
    forcing_join,
    forcing_meet,
    parse_spec,
    satisfies_forcing,
    satisfies_masks,
)
from smoothcat.spaces import (
    SmoothConfig,
    VObject,
    context,
    fibre_enumerate,
    is_vmorphism,
    order_leq,
    vhom,
)
from smoothcat.testchange import SiteInclusion, extend_join, extend_meet, restrict

# -- presets ---------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    config: SmoothConfig
    note: str


_PRESETS = {
    "frolicher_like": (
        lambda: fixture("F1").site,
        "(saturation, saturation)",
        "two test objects (point, two-point set) with im u missing the swap",
    ),
    "souriau_like": (
        chain_site,
        "(union(sheaf, terminal), saturation)",
        "chains of 1-3 points with monotone maps; the 3-chain is covered by its 2-point intervals",
    ),
    "chen_like": (
        chain_site,
        "(union(sheaf, terminal), saturation)",
        "same site as souriau_like; chains stand in for convex sets as well as open ones",
    ),
    "smith_like": (
        lambda: fixture("F3").site,
        "(saturation, saturation)",
        "point and Sierpinski space with all continuous maps",
    ),
    "sikorski_like": (
        sierpinski_powers_site,
        "(saturation, union(sheaf, specdet(proj), terminal))",
        "point, Sierpinski space and its square; outputs detected by the two projections",
    ),
}
PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> Preset:
    if name not in _PRESETS:
        raise SmoothcatError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    site, spec, note = _PRESETS[name]
    return Preset(name, SmoothConfig(site(), parse_spec(spec)), note)


# -- Galois connections between forcing strengths ------------------------------


@dataclass
class GaloisReport:
    carrier: Carrier
    weak_size: int
    strong_size: int
    pairs: int
    # (weak index, strong index, side) for each pair where an equivalence fails
    violations: list = field(default_factory=list)
    # hypotheses under which the side is guaranteed to hold
    meet_hypothesis: bool = False
    join_hypothesis: bool = False
    foradj_consistent: bool = True

    @property
    def unexplained(self) -> list:
        return [
            v
            for v in self.violations
            if (v[2] == "M" and self.meet_hypothesis) or (v[2] == "J" and self.join_hypothesis)
        ]


def verify_galois(weak: SmoothConfig, strong: SmoothConfig, carrier: Carrier) -> GaloisReport:
    """For every weak ``a`` and strong ``b`` on the carrier compare
    ``M(a) <= b`` with ``a <= b`` and ``b <= J(a)`` with ``b <= a``."""
    if not condition_leq(weak.forcing, strong.forcing, weak.site):
        raise SmoothcatError("verify_galois needs weak <= strong")
    wf, sf = fibre_enumerate(carrier, weak), fibre_enumerate(carrier, strong)
    rep = GaloisReport(
        carrier,
        len(wf),
        len(sf),
        len(wf) * len(sf),
        meet_hypothesis=weak.forcing.output == strong.forcing.output,
        join_hypothesis=weak.forcing.input == strong.forcing.input,
    )
    for i, a in enumerate(wf.elements):
        m, j = forcing_meet(a, weak, strong), forcing_join(a, weak, strong)
        m_fail = j_fail = False
        for k, b in enumerate(sf.elements):
            if order_leq(m, b) != order_leq(a, b):
                rep.violations.append((i, k, "M"))
                m_fail = True
            if order_leq(b, j) != order_leq(b, a):
                rep.violations.append((i, k, "J"))
                j_fail = True
        # a fibrewise Galois connection for M exists exactly when a <= M(a)
        if m_fail == order_leq(a, m) or j_fail == order_leq(j, a):
            rep.foradj_consistent = False
    return rep


# -- adjunctions -----------------------------------------------------------------


@dataclass
class AdjunctionReport:
    name: str
    pairs: int = 0
    bijections: int = 0
    squares: int = 0
    failed_squares: int = 0
    first_failure: object = None

    @property
    def ok(self) -> bool:
        return self.bijections == self.pairs and self.failed_squares == 0


def verify_adjunction(
    name: str,
    left: Callable,
    right: Callable,
    a_probes: Sequence[VObject],
    b_probes: Sequence[VObject],
    naturality: bool = True,
) -> AdjunctionReport:
    """Check ``Hom(left(a), b) = Hom(a, right(b))`` as sets of underlying maps
    (every functor here fixes maps, so the candidate bijection is the
    identity) and that it commutes with pre- and postcomposition by probe
    morphisms."""
    rep = AdjunctionReport(name)
    la = [left(a) for a in a_probes]
    rb = [right(b) for b in b_probes]
    a_morphs = {}
    if naturality:
        for i, a1 in enumerate(a_probes):
            for k, a2 in enumerate(a_probes):
                if a1.carrier.size <= a2.carrier.size:
                    a_morphs[(i, k)] = vhom(a1, a2)
    homs = {}
    for i, a in enumerate(a_probes):
        for k, b in enumerate(b_probes):
            if la[i].carrier.size != a.carrier.size or rb[k].carrier.size != b.carrier.size:
                raise SmoothcatError("functors must preserve carrier size")
            lhs = set(vhom(la[i], b))
            rhs = set(vhom(a, rb[k]))
            rep.pairs += 1
            if lhs == rhs:
                rep.bijections += 1
            elif rep.first_failure is None:
                rep.first_failure = ("hom", i, k, sorted(lhs ^ rhs)[:1])
            homs[(i, k)] = lhs
    if not naturality:
        return rep
    # precomposition: for h: a1 -> a2 and f in Hom(L a2, b), f.h must lie
    # in Hom(L a1, b) and in Hom(a1, R b)
    for (i1, i2), hs in a_morphs.items():
        for h in hs:
            for k, b in enumerate(b_probes):
                for f in homs[(i2, k)]:
                    g = compose(f, h)
                    rep.squares += 1
                    if not (is_vmorphism(g, la[i1], b) and is_vmorphism(g, a_probes[i1], rb[k])):
                        rep.failed_squares += 1
                        if rep.first_failure is None:
                            rep.first_failure = ("square", i1, i2, k, h, f)
    return rep


def probes_up_to(cfg: SmoothConfig, max_carrier: int) -> list:
    out = []
    for c in carriers_up_to(cfg.site.kind, max_carrier):
        out.extend(fibre_enumerate(c, cfg).elements)
    return out


def adjunction_checks(max_carrier: int = 2) -> dict:
    """The adjunctions between the engine's functors on the fixtures."""
    f1 = fixture("F1")
    f3 = fixture("F3")
    out = {}
    inc = SiteInclusion.forcing_from_big(f1, ["e"])
    small = probes_up_to(inc.small, max_carrier)
    big = probes_up_to(inc.big, max_carrier)
    out["extend_meet-restrict"] = verify_adjunction(
        "extend_meet -| restrict", lambda a: extend_meet(a, inc), lambda b: restrict(b, inc), small, big
    )
    out["restrict-extend_join"] = verify_adjunction(
        "restrict -| extend_join", lambda a: restrict(a, inc), lambda b: extend_join(b, inc), big, small
    )
    # on this inclusion J = M, so the join extension is also a left adjoint
    out["extend_join-restrict"] = verify_adjunction(
        "extend_join -| restrict", lambda a: extend_join(a, inc), lambda b: restrict(b, inc), small, big
    )
    # {p} in F3 separates J from M and pins down the directions
    inc3 = SiteInclusion.forcing_from_big(f3, ["p"])
    small3 = probes_up_to(inc3.small, max_carrier)
    big3 = probes_up_to(inc3.big, max_carrier)
    out["extend_meet-restrict@F3p"] = verify_adjunction(
        "extend_meet -| restrict (F3, p)", lambda a: extend_meet(a, inc3), lambda b: restrict(b, inc3), small3, big3
    )
    out["restrict-extend_join@F3p"] = verify_adjunction(
        "restrict -| extend_join (F3, p)", lambda a: restrict(a, inc3), lambda b: extend_join(b, inc3), big3, small3
    )
    top = f3.with_forcing(EMPTY_EMPTY)
    g = BaseFunctor.forget(top.site)
    sets = probes_up_to(SmoothConfig(g.target, EMPTY_EMPTY), max_carrier)
    tops = probes_up_to(top, max_carrier)
    out["finest-forget"] = verify_adjunction(
        "finest_lift -| forget", lambda b: finest_lift(b, top.site), lambda y: map_vobject(g, y), sets, tops
    )
    out["forget-coarsest"] = verify_adjunction(
        "forget -| coarsest_lift", lambda y: map_vobject(g, y), lambda b: coarsest_lift(b, top.site), tops, sets
    )
    plain = f1.with_forcing(EMPTY_EMPTY)
    d = BaseFunctor.discrete(plain.site)
    ind = BaseFunctor.indiscrete(plain.site)
    back_d = BaseFunctor.forget(d.target)
    back_i = BaseFunctor.forget(ind.target)
    sets = probes_up_to(plain, max_carrier)
    dis_tops = probes_up_to(SmoothConfig(d.target, EMPTY_EMPTY), max_carrier)
    ind_tops = probes_up_to(SmoothConfig(ind.target, EMPTY_EMPTY), max_carrier)
    out["discrete-forget"] = verify_adjunction(
        "discrete -| forget", lambda b: map_vobject(d, b), lambda y: map_vobject(back_d, y), sets, dis_tops
    )
    out["forget-indiscrete"] = verify_adjunction(
        "forget -| indiscrete", lambda y: map_vobject(back_i, y), lambda b: map_vobject(ind, b), ind_tops, sets
    )
    ident = sets
    out["identity"] = verify_adjunction("identity -| identity", lambda a: a, lambda b: b, ident, ident)
    return out


# -- censuses --------------------------------------------------------------------


def _raw_maps(a: Carrier, b: Carrier) -> list:
    """Maps a -> b by brute force over all assignments (continuity checked
    by open preimages)."""
    out = []
    for f in itertools.product(range(b.size), repeat=a.size):
        if isinstance(b, FinTop) and isinstance(a, FinTop):
            ok = all(sum(1 << i for i, y in enumerate(f) if v >> y & 1) in a.opens for v in b.opens)
            if not ok:
                continue
        out.append(tuple(f))
    return out


def _closed_subsets(n: int, implications: list, cap: int) -> np.ndarray:
    """All subsets of ``range(n)`` (as integers) respecting every
    implication ``a in S => b in S``, by vectorised filtering of the power
    set."""
    if n > 24:
        raise CapExceeded("power-set oracle elements", 24, n)
    total = 1 << n
    keep = []
    step = 1 << 20
    for lo in range(0, total, step):
        arr = np.arange(lo, min(total, lo + step), dtype=np.int64)
        ok = np.ones(arr.shape, dtype=bool)
        for a, b in implications:
            ok &= ~(((arr >> a) & 1).astype(bool) & ~((arr >> b) & 1).astype(bool))
        keep.append(arr[ok])
    out = np.concatenate(keep) if keep else np.zeros(0, dtype=np.int64)
    if len(out) > cap:
        raise CapExceeded("power-set oracle subsets", cap, len(out))
    return out


def oracle_fibre(cfg: SmoothConfig, carrier: Carrier) -> list:
    """Forcing-satisfying structures on the carrier found by filtering the raw
    power sets of candidate input and output maps; returns sorted mask pairs
    in the engine's indexing."""
    site = cfg.site
    cat = site.category
    ins = [(t, f) for t in site.objects for f in _raw_maps(site.carrier(t), carrier)]
    outs = [(t, f) for t in site.objects for f in _raw_maps(carrier, site.carrier(t))]
    in_pos = {e: k for k, e in enumerate(ins)}
    out_pos = {e: k for k, e in enumerate(outs)}
    in_imp = set()
    for k, (t, f) in enumerate(ins):
        for m in cat.into(t):
            j = in_pos[(cat.dom(m), compose(f, site.umap(m)))]
            if j != k:
                in_imp.add((k, j))
    out_imp = set()
    for k, (t, f) in enumerate(outs):
        for m in cat.out_of(t):
            j = out_pos[(cat.cod(m), compose(site.umap(m), f))]
            if j != k:
                out_imp.add((k, j))
    cap = site.caps.max_candidates
    in_sets = _closed_subsets(len(ins), sorted(in_imp), cap)
    out_sets = _closed_subsets(len(outs), sorted(out_imp), cap)
    # compat[ko]: inputs whose composite with output ko comes from the site
    compat = []
    for to, o in outs:
        m = 0
        for ki, (ti, i) in enumerate(ins):
            if site.in_im(ti, to, compose(o, i)):
                m |= 1 << ki
        compat.append(m)
    ctx = context(site, carrier)
    to_ctx_in = [ctx.in_index[e] for e in ins]
    to_ctx_out = [ctx.out_index[e] for e in outs]

    def translate(mask, table):
        return sum(1 << table[k] for k in range(len(table)) if mask >> k & 1)

    found = []
    for om in out_sets.tolist():
        allowed = (1 << len(ins)) - 1
        for k in range(len(outs)):
            if om >> k & 1:
                allowed &= compat[k]
        ok = in_sets[(in_sets & ~np.int64(allowed)) == 0] if len(ins) < 63 else in_sets
        com = translate(om, to_ctx_out)
        for im in ok.tolist():
            pair = (translate(im, to_ctx_in), com)
            if satisfies_masks(cfg, ctx, *pair):
                found.append(pair)
    found.sort()
    return found


@dataclass
class Census:
    config: str
    rows: list  # (carrier, engine count, oracle count)

    @property
    def topologies(self) -> int:
        return len(self.rows)

    @property
    def agrees(self) -> bool:
        return all(e == o for _, e, o in self.rows)

    def counts(self) -> list:
        return [e for _, e, _ in self.rows]


def two_point_census(cfg: SmoothConfig, with_oracle: bool = True) -> Census:
    carriers = [FinSet(2)] if cfg.site.kind == "set" else list(all_topologies(2))
    rows = []
    for c in carriers:
        n = len(fibre_enumerate(c, cfg))
        o = len(oracle_fibre(cfg, c)) if with_oracle else n
        rows.append((c, n, o))
    return Census(str(cfg.forcing), rows)


def census_specs(site: Site) -> list:
    """A spread of forcing conditions used for monotonicity checks."""
    texts = ["(empty, empty)", "(saturation, empty)", "(empty, saturation)", "(saturation, saturation)"]
    if site.terminal() is not None:
        texts += ["(terminal, empty)", "(terminal, terminal)"]
    return [parse_spec(t) for t in texts]


def census_monotone(site: Site, specs: Sequence[ForcingSpec]) -> list:
    """Pairs ``(a, b)`` with ``a <= b`` but a larger census under ``b``."""
    counts = {s: two_point_census(SmoothConfig(site, s), with_oracle=False).counts() for s in specs}
    bad = []
    for a in specs:
        for b in specs:
            if a != b and condition_leq(a, b, site):
                if any(cb > ca for ca, cb in zip(counts[a], counts[b])):
                    bad.append((str(a), str(b)))
    return bad


# -- monoids and terminal objects ------------------------------------------------


@dataclass
class MonoidTable:
    elements: list
    table: list  # table[i][j] = index of elements[i] . elements[j]

    def validate(self) -> list:
        n = len(self.elements)
        out = []
        if any(v is None for row in self.table for v in row):
            out.append("not closed under composition")
            return out
        ident = tuple(range(len(self.elements[0]))) if n else None
        if ident not in self.elements:
            out.append("identity missing")
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        out.append(f"associativity fails at {a},{b},{c}")
        return out


def endo_monoid(x: VObject) -> MonoidTable:
    elems = vhom(x, x)
    pos = {f: k for k, f in enumerate(elems)}
    table = [[pos.get(compose(g, f)) for f in elems] for g in elems]
    return MonoidTable(elems, table)


@dataclass
class TerminalReport:
    candidate: VObject
    terminal: bool
    concrete: list  # per probe: |Hom(term, x)| == |x|
    probes: int

    @property
    def all_concrete(self) -> bool:
        return all(self.concrete)


def terminal_concreteness(cfg: SmoothConfig, max_carrier: int | None = None) -> TerminalReport:
    if max_carrier is None:
        max_carrier = 3 if cfg.site.kind == "set" else 2
    one = FinSet(1) if cfg.site.kind == "set" else FinTop.discrete(1)
    term = fibre_enumerate(one, cfg).maximum
    probes = probes_up_to(cfg, max_carrier)
    terminal = all(len(vhom(x, term)) == 1 for x in probes)
    concrete = [len(vhom(term, x)) == x.carrier.size for x in probes]
    return TerminalReport(term, terminal, concrete, len(probes))


# -- counterexample search ---------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    law: str
    instance: dict

    def describe(self) -> str:
        return f"witness for {self.law}: " + ", ".join(f"{k}={v}" for k, v in self.instance.items())


@dataclass(frozen=True)
class Exhausted:
    budget: int
    examined: int

    def describe(self) -> str:
        return f"exhausted({self.budget})"


def search_domains() -> list:
    """(label, weak config, strong config) triples examined in order."""
    out = []
    for name in ("F1", "F2", "F3"):
        cfg = fixture(name)
        out.append((name, cfg.with_forcing(EMPTY_EMPTY), cfg))
    for name in PRESET_NAMES:
        if name == "chen_like":
            continue
        cfg = preset(name).config
        out.append((name, cfg.with_forcing(EMPTY_EMPTY), cfg))
    return out


def _brute_join(fib, chosen: list) -> VObject:
    ups = [b for b in fib.elements if all(order_leq(a, b) for a in chosen)]
    least = [b for b in ups if all(order_leq(b, c) for c in ups)]
    return least[0]


def _brute_meet(fib, chosen: list) -> VObject:
    lows = [b for b in fib.elements if all(order_leq(b, a) for a in chosen)]
    great = [b for b in lows if all(order_leq(c, b) for c in lows)]
    return great[0]


def _brute_J(a, strong_fib):
    return _brute_join(strong_fib, [b for b in strong_fib.elements if order_leq(b, a)])


def _brute_M(a, strong_fib):
    return _brute_meet(strong_fib, [b for b in strong_fib.elements if order_leq(a, b)])


def _law_instances(law: str, max_carrier: int):
    """Yield (instance description, holds?, recheck) in canonical order."""
    for label, weak, strong in search_domains():
        kind = weak.site.kind
        bound = max_carrier if kind == "set" else min(max_carrier, 2)
        for c in carriers_up_to(kind, bound):
            if law in ("restrict_preserves_forcing",):
                yield from _restrict_instances(label, strong, c)
                continue
            wf = fibre_enumerate(c, weak)
            sf = fibre_enumerate(c, strong)
            for i, a in enumerate(wf.elements):
                base = {"domain": label, "carrier": repr(c), "weak": str(weak.forcing), "strong": str(strong.forcing)}
                if law == "J_below_id":
                    j = forcing_join(a, weak, strong)
                    yield dict(base, index=i), order_leq(j, a), lambda a=a, sf=sf: order_leq(_brute_J(a, sf), a)
                elif law == "M_above_id":
                    m = forcing_meet(a, weak, strong)
                    yield dict(base, index=i), order_leq(a, m), lambda a=a, sf=sf: order_leq(a, _brute_M(a, sf))
                elif law == "J_below_M":
                    ok = order_leq(forcing_join(a, weak, strong), forcing_meet(a, weak, strong))
                    yield dict(base, index=i), ok, lambda a=a, sf=sf: order_leq(_brute_J(a, sf), _brute_M(a, sf))
                elif law in ("M_preserves_meets", "J_preserves_joins"):
                    for k in range(i + 1, len(wf)):
                        b = wf.elements[k]
                        if law == "M_preserves_meets":
                            lhs = forcing_meet(_brute_meet(wf, [a, b]), weak, strong)
                            rhs = _brute_meet(sf, [forcing_meet(a, weak, strong), forcing_meet(b, weak, strong)])

                            def recheck(a=a, b=b, wf=wf, sf=sf):
                                return _brute_M(_brute_meet(wf, [a, b]), sf) == _brute_meet(
                                    sf, [_brute_M(a, sf), _brute_M(b, sf)]
                                )

                        else:
                            lhs = forcing_join(_brute_join(wf, [a, b]), weak, strong)
                            rhs = _brute_join(sf, [forcing_join(a, weak, strong), forcing_join(b, weak, strong)])

                            def recheck(a=a, b=b, wf=wf, sf=sf):
                                return _brute_J(_brute_join(wf, [a, b]), sf) == _brute_join(
                                    sf, [_brute_J(a, sf), _brute_J(b, sf)]
                                )

                        yield dict(base, index=i, other=k), lhs == rhs, recheck


def _restrict_instances(label, strong, c):
    objs = strong.site.objects
    for r in range(1, len(objs)):
        for sub in itertools.combinations(objs, r):
            inc = SiteInclusion.forcing_from_big(strong, sub)
            try:
                fib = fibre_enumerate(c, strong)
            except CapExceeded:
                continue
            for i, y in enumerate(fib.elements):
                inst = {"domain": label, "carrier": repr(c), "small": ",".join(sub), "index": i}
                ok = satisfies_forcing(restrict(y, inc), inc.small)
                yield inst, ok, lambda y=y, inc=inc: _oracle_satisfies(restrict(y, inc), inc.small)


def _oracle_satisfies(x: VObject, cfg: SmoothConfig) -> bool:
    # recheck through the engine's object-level entry point on a fresh context
    from smoothcat.spaces import FibreContext
    from smoothcat.forcing import forced_masks

    ctx = FibreContext(cfg.site, x.carrier)
    im, om = ctx.masks(x)
    fin, fout = forced_masks(cfg, ctx, im, om)
    return fin & ~im == 0 and fout & ~om == 0


LAWS = ("J_below_id", "M_above_id", "J_below_M", "restrict_preserves_forcing", "M_preserves_meets", "J_preserves_joins")


def counterexample_search(law: str, budget: int, max_carrier: int = 3):
    """First instance (in canonical order) on which ``law`` fails, re-checked
    by brute force, or ``Exhausted`` after ``budget`` instances."""
    if law not in LAWS:
        raise SmoothcatError(f"unknown law {law!r}; registered: {', '.join(LAWS)}")
    examined = 0
    if budget <= 0:
        return Exhausted(budget, 0)
    for inst, ok, recheck in _law_instances(law, max_carrier):
        examined += 1
        if not ok:
            if recheck():
                raise SmoothcatError(f"engine and brute force disagree on {inst}")
            return Witness(law, inst)
        if examined >= budget:
            break
    return Exhausted(budget, examined)
