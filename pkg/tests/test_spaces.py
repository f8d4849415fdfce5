import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import Oracle, as_pair, glb, leq, lub
from smoothcat.fincat import FinSet, SmoothcatError, carriers_up_to
from smoothcat.fixtures import FIXTURES, fixture
from smoothcat.forcing import parse_spec
from smoothcat.spaces import (
    VObject,
    all_vobjects,
    embed_test,
    fibre_enumerate,
    fibre_max,
    fibre_min,
    is_vmorphism,
    join_structures,
    meet_structures,
    order_leq,
    validate_vobject,
    vhom,
)


@pytest.mark.parametrize("name", FIXTURES)
def test_all_vobjects_match_oracle(name):
    site = fixture(name).site
    for c in carriers_up_to(site.kind, 2):
        engine = {as_pair(x) for x in all_vobjects(site, c)}
        assert engine == set(Oracle(site, c).structures())


def test_f1_vobject_and_fibre_counts():
    cfg = fixture("F1")
    plain = cfg.with_forcing(parse_spec("(empty, empty)"))
    assert [len(all_vobjects(cfg.site, FinSet(n))) for n in range(4)] == [2, 4, 28, 958]
    assert [len(fibre_enumerate(FinSet(n), cfg)) for n in range(4)] == [1, 1, 4, 29]
    assert len(fibre_enumerate(FinSet(2), plain)) == 28


def test_embedded_test_object_sizes():
    x = embed_test("e", fixture("F1"))
    assert x.sizes() == {"p": (2, 1), "e": (3, 3)}
    assert validate_vobject(x, fixture("F1")) == []


def test_fibre_max_has_all_inputs():
    x = fibre_max(FinSet(2), fixture("F1"))
    assert len(x.inputs("p")) == 2 and len(x.inputs("e")) == 4


def test_fibre_extremes_bound_everything():
    cfg = fixture("F2")
    lo, hi = fibre_min(FinSet(2), cfg), fibre_max(FinSet(2), cfg)
    for x in fibre_enumerate(FinSet(2), cfg).elements:
        assert order_leq(lo, x) and order_leq(x, hi)


def test_validate_flags_incompatible_pair():
    site = fixture("F1").site
    # the swap as output with the identity as input composes outside im u
    x = VObject.make(FinSet(2), {"e": {(0, 1)}, "p": set()}, {"e": {(1, 0)}, "p": set()}, site.objects)
    assert validate_vobject(x, site)


def test_identity_is_a_morphism_and_vhom_composes():
    cfg = fixture("F1")
    elems = fibre_enumerate(FinSet(2), cfg).elements
    for x in elems:
        assert is_vmorphism((0, 1), x, x)
        for y in elems:
            for f in vhom(x, y):
                for g in vhom(y, y):
                    assert is_vmorphism(tuple(g[i] for i in f), x, y)


def test_meet_of_mismatched_carriers_rejected():
    cfg = fixture("F1")
    with pytest.raises(SmoothcatError):
        meet_structures([fibre_max(FinSet(1), cfg), fibre_max(FinSet(2), cfg)], cfg)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIXTURES), st.data())
def test_lattice_ops_match_brute_force(name, data):
    cfg = fixture(name)
    c = data.draw(st.sampled_from(carriers_up_to(cfg.site.kind, 3 if cfg.site.kind == "set" else 2)))
    fib = fibre_enumerate(c, cfg)
    elems = fib.elements
    chosen = data.draw(st.lists(st.sampled_from(elems), max_size=4))
    pairs = [as_pair(x) for x in elems]
    cp = [as_pair(x) for x in chosen]
    assert [as_pair(meet_structures(chosen, cfg, c))] == glb(pairs, cp)
    assert [as_pair(join_structures(chosen, cfg, c))] == lub(pairs, cp)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FIXTURES), st.data())
def test_order_is_partial(name, data):
    cfg = fixture(name)
    elems = fibre_enumerate(carriers_up_to(cfg.site.kind, 2)[-1], cfg).elements
    a, b, c = (data.draw(st.sampled_from(elems)) for _ in range(3))
    assert order_leq(a, a)
    assert order_leq(a, b) == leq(as_pair(a), as_pair(b))
    if order_leq(a, b) and order_leq(b, a):
        assert a == b
    if order_leq(a, b) and order_leq(b, c):
        assert order_leq(a, c)


def test_ambiguous_aliases_warn():
    from smoothcat.spaces import discrete_structure, indiscrete_structure

    cfg = fixture("F1")
    with pytest.warns(UserWarning):
        assert indiscrete_structure(FinSet(2), cfg) == fibre_min(FinSet(2), cfg)
    with pytest.warns(UserWarning):
        assert discrete_structure(FinSet(2), cfg) == fibre_max(FinSet(2), cfg)
