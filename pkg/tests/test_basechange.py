import pytest

from smoothcat.analysis import probes_up_to
from smoothcat.basechange import (
    BaseFunctor,
    TransferRefused,
    check_injective,
    check_witness,
    coarsest_lift,
    finest_lift,
    initial_lift,
    is_lift,
    lifted_forcing,
    map_vobject,
    scan_initial_lift,
    transfer_forcing,
    unit_counit_ok,
)
from smoothcat.fincat import FinSet, FinTop, SmoothcatError, carriers_up_to
from smoothcat.fixtures import fixture
from smoothcat.forcing import EMPTY_EMPTY, SAT_SAT, forced_set, parse_spec, satisfies_forcing
from smoothcat.spaces import SmoothConfig, embed_test, fibre_enumerate, vhom

TOP = fixture("F3").with_forcing(EMPTY_EMPTY)
FORGET = BaseFunctor.forget(TOP.site)
SETS = SmoothConfig(FORGET.target, EMPTY_EMPTY)


def test_witnesses_valid():
    assert check_witness(FORGET) == []
    assert check_witness(BaseFunctor.discrete(fixture("F1").site)) == []
    assert check_witness(BaseFunctor.indiscrete(fixture("F1").site)) == []
    assert check_witness(BaseFunctor.identity(fixture("F1").site)) == []


def test_forget_needs_topology():
    with pytest.raises(SmoothcatError):
        BaseFunctor.forget(fixture("F1").site)


def test_lifts_are_sections_of_forget():
    for t in TOP.site.objects:
        s = map_vobject(FORGET, embed_test(t, TOP))
        assert map_vobject(FORGET, finest_lift(s, TOP.site)) == s
        assert map_vobject(FORGET, coarsest_lift(s, TOP.site)) == s


def test_lifts_of_embedded_objects_recover_topology():
    for t in TOP.site.objects:
        s = map_vobject(FORGET, embed_test(t, TOP))
        assert finest_lift(s, TOP.site).carrier == TOP.site.carrier(t)
        assert coarsest_lift(s, TOP.site).carrier == TOP.site.carrier(t)


def test_unit_and_counit():
    bs, ys = probes_up_to(SETS, 2), probes_up_to(TOP, 2)
    r = unit_counit_ok(bs, ys, TOP.site)
    assert r["sections"] == r["total_b"]
    assert r["fin_counit"] == r["coa_unit"] == r["total_y"]


def test_hom_bijections():
    bs, ys = probes_up_to(SETS, 2), probes_up_to(TOP, 2)
    for b in bs[::7]:
        fb, cb = finest_lift(b, TOP.site), coarsest_lift(b, TOP.site)
        for y in ys[::5]:
            fy = map_vobject(FORGET, y)
            assert set(vhom(fb, y)) == set(vhom(b, fy))
            assert set(vhom(y, cb)) == set(vhom(fy, b))


def test_initial_lift_is_coarsest_by_scan():
    for c in carriers_up_to("set", 3):
        for b in fibre_enumerate(c, SETS).elements[::3]:
            scan = scan_initial_lift(b, (), TOP.site)
            assert scan.coarsest_unique and scan.matches


def test_initial_lift_with_sink_leg():
    b = fibre_enumerate(FinSet(2), SETS).minimum
    y = embed_test("r", TOP)
    for f in vhom(b, map_vobject(FORGET, y)):
        lift = initial_lift(b, [(f, y)], TOP.site)
        assert is_lift(b, lift.carrier, TOP.site, [(f, y)])
        assert scan_initial_lift(b, [(f, y)], TOP.site).matches


def test_transfer_along_forget_matches_direct_saturation():
    spec = transfer_forcing(FORGET, SAT_SAT, [FinSet(2)])
    moved = SmoothConfig(FORGET.target, spec)
    direct = SmoothConfig(FORGET.target, SAT_SAT)
    for b in fibre_enumerate(FinSet(2), SETS).elements:
        assert forced_set(b, moved) == forced_set(b, direct)


def test_transfer_refused_when_not_injective():
    class Collapse(BaseFunctor):
        def on_map(self, f):
            return tuple(0 for _ in f)

    g = Collapse("custom", FORGET.target, FORGET.target)
    assert not check_injective(g, [FinSet(2)])
    with pytest.raises(TransferRefused):
        transfer_forcing(g, SAT_SAT, [FinSet(2)])


@pytest.mark.parametrize("text", ["(saturation, saturation)", "(saturation, union(sheaf,terminal))", "(empty, sheaf)"])
def test_lifts_satisfy_their_own_side(text):
    # finest lifts keep input forcing, coarsest lifts keep output forcing
    top = fixture("F3").with_forcing(parse_spec(text))
    lifted = lifted_forcing(top)
    for b in probes_up_to(lifted, 2):
        fb, cb = finest_lift(b, top.site), coarsest_lift(b, top.site)
        fin_ok = not any(f not in fb.inputs(t) for t, fs in forced_set(fb, top).items() for f in fs)
        cout_ok = not any(
            f not in cb.outputs(t) for t, fs in forced_set(cb, top, "output").items() for f in fs
        )
        assert fin_ok and cout_ok


def test_lifted_forcing_gives_nonempty_fibres():
    lifted = lifted_forcing(fixture("F3"))
    assert len(fibre_enumerate(FinSet(2), lifted)) > 0


def test_discrete_and_indiscrete_carriers():
    d = BaseFunctor.discrete(fixture("F1").site)
    i = BaseFunctor.indiscrete(fixture("F1").site)
    assert d.on_carrier(FinSet(3)) == FinTop.discrete(3)
    assert i.on_carrier(FinSet(3)) == FinTop.indiscrete(3)


def test_transferred_structures_satisfy():
    moved = SmoothConfig(FORGET.target, transfer_forcing(FORGET, SAT_SAT, [FinSet(2)]))
    for b in fibre_enumerate(FinSet(2), moved).elements:
        assert satisfies_forcing(b, moved)
