import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import Oracle
from smoothcat import analysis
from smoothcat.analysis import (
    LAWS,
    PRESET_NAMES,
    Exhausted,
    Witness,
    census_monotone,
    census_specs,
    counterexample_search,
    endo_monoid,
    oracle_fibre,
    preset,
    terminal_concreteness,
    two_point_census,
    verify_adjunction,
    verify_galois,
)
from smoothcat.fincat import FinSet, SmoothcatError, all_topologies
from smoothcat.fixtures import FIXTURES, fixture
from smoothcat.forcing import Saturation, Sheaf, SpecDet, Terminal, Union, audit_non_stupid, parse_spec
from smoothcat.spaces import embed_test, fibre_enumerate, fibre_max


def test_preset_specs():
    assert str(preset("frolicher_like").config.forcing) == "(saturation, saturation)"
    assert preset("souriau_like").config.forcing.input == Union((Sheaf(), Terminal()))
    assert preset("chen_like").config.forcing.output == Saturation()
    out = preset("sikorski_like").config.forcing.output
    assert isinstance(out, Union) and [type(t) for t in out.terms] == [Sheaf, SpecDet, Terminal]
    assert {n: preset(n).config.site.kind for n in PRESET_NAMES} == {
        "frolicher_like": "set",
        "souriau_like": "set",
        "chen_like": "set",
        "smith_like": "top",
        "sikorski_like": "top",
    }


def test_unknown_preset():
    with pytest.raises(SmoothcatError):
        preset("hilbert_like")


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_pass_audits(name):
    cfg = preset(name).config
    assert cfg.site.validate() == []
    assert audit_non_stupid(cfg) == []


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_census_matches_both_oracles(name):
    cfg = preset(name).config
    census = two_point_census(cfg)
    assert census.topologies == (1 if cfg.site.kind == "set" else 4)
    assert census.agrees
    for c, n, _ in census.rows:
        o = Oracle(cfg.site, c)
        assert n == len([s for s in o.structures() if o.satisfies(cfg.forcing, *s)])


def test_census_f1():
    assert two_point_census(fixture("F1")).counts() == [4]


def test_power_set_oracle_on_fixtures():
    for name in FIXTURES:
        cfg = fixture(name)
        cs = [FinSet(2)] if cfg.site.kind == "set" else all_topologies(2)
        for c in cs:
            assert len(oracle_fibre(cfg, c)) == len(fibre_enumerate(c, cfg))


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_stronger_forcing_never_increases_census(name):
    site = preset(name).config.site
    assert census_monotone(site, census_specs(site)) == []


def test_empty_census_dominates_saturated():
    cfg = fixture("F1")
    lo = two_point_census(cfg.with_forcing(parse_spec("(empty, empty)")), with_oracle=False).counts()
    hi = two_point_census(cfg.with_forcing(parse_spec("(saturation, saturation)")), with_oracle=False).counts()
    assert all(a >= b for a, b in zip(lo, hi))


def test_endo_monoid_of_embedded_two_point_object():
    m = endo_monoid(embed_test("e", fixture("F1")))
    assert sorted(m.elements) == [(0, 0), (0, 1), (1, 1)]
    assert m.validate() == []


def test_endo_monoid_of_fibre_max_is_everything():
    m = endo_monoid(fibre_max(FinSet(2), fixture("F1").with_forcing(parse_spec("(empty, empty)"))))
    assert sorted(m.elements) == sorted(itertools.product(range(2), repeat=2))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(FIXTURES), st.data())
def test_endo_monoids_are_submonoids(name, data):
    cfg = fixture(name)
    c = FinSet(2) if cfg.site.kind == "set" else data.draw(st.sampled_from(all_topologies(2)))
    x = data.draw(st.sampled_from(fibre_enumerate(c, cfg).elements))
    m = endo_monoid(x)
    assert m.validate() == []
    assert len(m.elements) <= c.size ** c.size


def test_terminal_concreteness_f1():
    r = terminal_concreteness(fixture("F1"), max_carrier=2)
    assert r.terminal
    assert r.all_concrete
    assert len(analysis.vhom(r.candidate, r.candidate)) == 1


def test_galois_trivial_when_equal():
    cfg = fixture("F1")
    r = verify_galois(cfg, cfg, FinSet(2))
    assert r.violations == []


def test_galois_meet_side_on_f1():
    strong = fixture("F1")
    weak = strong.with_forcing(parse_spec("(empty, saturation)"))
    r = verify_galois(weak, strong, FinSet(2))
    assert r.meet_hypothesis
    assert [v for v in r.violations if v[2] == "M"] == []
    assert r.unexplained == [] and r.foradj_consistent


@pytest.mark.parametrize("name", FIXTURES)
def test_galois_violations_only_without_hypotheses(name):
    strong = fixture(name)
    weak = strong.with_forcing(parse_spec("(empty, empty)"))
    c = FinSet(2) if strong.site.kind == "set" else all_topologies(2)[1]
    r = verify_galois(weak, strong, c)
    assert r.unexplained == []
    assert r.foradj_consistent


def test_galois_requires_order():
    strong = fixture("F1")
    with pytest.raises(SmoothcatError):
        verify_galois(strong, strong.with_forcing(parse_spec("(empty, empty)")), FinSet(2))


def test_identity_adjunction():
    probes = fibre_enumerate(FinSet(2), fixture("F1")).elements
    r = verify_adjunction("id", lambda a: a, lambda b: b, probes, probes)
    assert r.ok


def test_non_adjunction_is_named():
    cfg = fixture("F1")
    probes = analysis.probes_up_to(cfg.with_forcing(parse_spec("(empty, empty)")), 2)
    top = fibre_max(FinSet(2), cfg.with_forcing(parse_spec("(empty, empty)")))
    # constant functor to the maximum is not left adjoint to the identity
    r = verify_adjunction("bad", lambda a: top if a.carrier.size == 2 else a, lambda b: b, probes, probes)
    assert not r.ok and r.first_failure is not None


def test_registered_adjunctions_hold():
    for key, r in analysis.adjunction_checks(1).items():
        assert r.ok, (key, r.first_failure)


def test_search_budget_zero():
    r = counterexample_search("J_below_id", 0)
    assert isinstance(r, Exhausted) and r.describe() == "exhausted(0)"


def test_search_unknown_law():
    with pytest.raises(SmoothcatError):
        counterexample_search("nope", 10)


@pytest.mark.parametrize("law", ["J_below_M", "restrict_preserves_forcing"])
def test_valid_laws_have_no_witness(law):
    assert isinstance(counterexample_search(law, 1500), Exhausted)


@pytest.mark.parametrize("law", ["J_below_id", "M_above_id"])
def test_emitted_witnesses_recheck(law):
    r = counterexample_search(law, 500)
    if isinstance(r, Witness):
        assert r.law == law and r.instance["domain"]


def test_all_laws_run():
    for law in LAWS:
        assert counterexample_search(law, 20) is not None
