"""Shipped sites: the JSON fixtures F1-F3 and two programmatic sites used by
the presets (a chain site over FinSet and a full site on Sierpinski powers)."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from smoothcat.fincat import (
    ConcreteFunctor,
    FinCategory,
    FinSet,
    FinTop,
    Site,
    all_maps,
    full_concrete_site,
    identity_map,
    induced_table,
)
from smoothcat.serial import site_from_dict
from smoothcat.spaces import SmoothConfig

FIXTURES = ("F1", "F2", "F3")


def fixture_dict(name: str) -> dict:
    if name not in FIXTURES:
        raise KeyError(name)
    return json.loads(resources.files("smoothcat.data").joinpath(f"{name}.json").read_text())


@lru_cache(maxsize=None)
def fixture(name: str) -> SmoothConfig:
    from smoothcat.forcing import parse_spec

    site, text = site_from_dict(fixture_dict(name))
    return SmoothConfig(site, parse_spec(text))


@lru_cache(maxsize=None)
def chain_site() -> Site:
    """Chains of 1, 2 and 3 points with all monotone maps; the 3-chain is
    covered by its two 2-point intervals."""
    carriers = {"p": FinSet(1), "L": FinSet(2), "I": FinSet(3)}
    morphisms, maps, ids = {}, {}, {}
    for a, ca in carriers.items():
        for b, cb in carriers.items():
            for f in all_maps(ca, cb):
                if any(f[i] > f[i + 1] for i in range(len(f) - 1)):
                    continue
                mid = f"{a}>{b}:{''.join(map(str, f))}"
                morphisms[mid] = (a, b)
                maps[mid] = f
                if a == b and f == identity_map(ca.size):
                    ids[a] = mid
    cat = FinCategory(tuple(carriers), morphisms, ids, induced_table(morphisms, maps))
    cover = {"I": [["L>I:01", "L>I:12"]]}
    return Site("chain", "set", cat, ConcreteFunctor(carriers, maps), coverages={"default": cover})


def sierpinski_square() -> FinTop:
    # point 2a+b is (a, b); open sets are unions of products of opens
    return FinTop.from_sets(4, [[3], [2, 3], [1, 3], [1, 2, 3]])


@lru_cache(maxsize=None)
def sierpinski_powers_site() -> Site:
    carriers = {"pt": FinTop.discrete(1), "S": FinTop.sierpinski(), "SS": sierpinski_square()}
    return full_concrete_site(
        "sierpinski-powers",
        "top",
        carriers,
        families={"proj": {"SS": [["SS>S:0011", "SS>S:0101"]]}},
    )
