"""JSON encoding of sites and V-objects.

Site files look like::

    {
      "schema_version": 1,
      "name": "F1",
      "kind": "set",
      "objects": {"p": {"size": 1}, "e": {"size": 2}},
      "morphisms": {"c0": {"dom": "p", "cod": "e", "map": [0]}, ...},
      "compose": "induced",
      "coverages": {"default": {"e": [["c0", "c1"]]}},
      "families": {"proj": {"e": [["m1", "m2"]]}},
      "forcing": "(saturation, saturation)"
    }

Topological objects add ``"opens": [[0], [0, 1], ...]``.  ``compose`` is
either ``"induced"`` (read off the maps) or a list of ``[g, f, g.f]``
triples.  Identities are the morphisms whose map is the identity on an
endo-hom-set.
"""
from __future__ import annotations

import json
from pathlib import Path

from smoothcat.fincat import (
    Carrier,
    ConcreteFunctor,
    FinCategory,
    FinSet,
    FinTop,
    Site,
    SmoothcatError,
    identity_map,
    induced_table,
)
from smoothcat.spaces import VObject

SCHEMA_VERSION = 1


def _carrier(kind: str, spec: dict) -> Carrier:
    size = int(spec["size"])
    if kind == "set":
        return FinSet(size)
    if "opens" in spec:
        return FinTop.from_sets(size, spec["opens"])
    return FinTop.discrete(size)


def carrier_to_json(c: Carrier) -> dict:
    if c.kind == "set":
        return {"size": c.size}
    return {"size": c.size, "opens": [sorted(s) for s in c.open_sets()]}


def site_from_dict(d: dict) -> tuple:
    """Returns ``(site, forcing text or None)``."""
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SmoothcatError(f"unsupported schema_version {d.get('schema_version')!r}")
    try:
        kind = d["kind"]
        carriers = {o: _carrier(kind, spec) for o, spec in d["objects"].items()}
        morphisms, maps = {}, {}
        for m, spec in d["morphisms"].items():
            morphisms[m] = (spec["dom"], spec["cod"])
            maps[m] = tuple(spec["map"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SmoothcatError(f"malformed site file: {exc}") from None
    for m, (a, b) in morphisms.items():
        if a not in carriers or b not in carriers:
            raise SmoothcatError(f"morphism {m} refers to an unknown object")
    ids = {}
    for m, (a, b) in morphisms.items():
        if a == b and maps[m] == identity_map(carriers[a].size):
            ids[a] = m
    comp = d.get("compose", "induced")
    if comp == "induced":
        table = induced_table(morphisms, maps)
    else:
        table = {(g, f): h for g, f, h in comp}
    cat = FinCategory(tuple(carriers), morphisms, ids, table)
    site = Site(
        d.get("name", "site"),
        kind,
        cat,
        ConcreteFunctor(carriers, maps),
        coverages=_named_lists(d.get("coverages", {})),
        families=_named_lists(d.get("families", {})),
    )
    return site, d.get("forcing")


def _named_lists(raw: dict) -> dict:
    return {name: {t: [list(f) for f in fams] for t, fams in per.items()} for name, per in raw.items()}


def site_to_dict(site: Site, forcing=None) -> dict:
    cat = site.category
    out = {
        "schema_version": SCHEMA_VERSION,
        "name": site.name,
        "kind": site.kind,
        "objects": {o: carrier_to_json(site.carrier(o)) for o in site.objects},
        "morphisms": {
            m: {"dom": a, "cod": b, "map": list(site.umap(m))} for m, (a, b) in cat.morphisms.items()
        },
        "compose": sorted([g, f, h] for (g, f), h in cat.table.items()),
    }
    if site.coverages:
        out["coverages"] = site.coverages
    if site.families:
        out["families"] = site.families
    if forcing is not None:
        out["forcing"] = str(forcing)
    return out


def load_site(path) -> tuple:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SmoothcatError(f"cannot read site file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SmoothcatError(f"site file {path} is not JSON: {exc}") from None
    return site_from_dict(d)


def vobject_to_json(x: VObject) -> dict:
    return {
        "carrier": carrier_to_json(x.carrier),
        "itest": {t: sorted(list(f) for f in fam) for t, fam in x.itest},
        "otest": {t: sorted(list(f) for f in fam) for t, fam in x.otest},
    }


def vobject_from_json(d: dict, kind: str) -> VObject:
    c = _carrier(kind, d["carrier"])
    ins = {t: {tuple(f) for f in fams} for t, fams in d["itest"].items()}
    outs = {t: {tuple(f) for f in fams} for t, fams in d["otest"].items()}
    return VObject.make(c, ins, outs, list(d["itest"]))


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)
