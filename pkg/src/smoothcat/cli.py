"""Batch front-end.

    smoothcat check --site F1
    smoothcat fibre --site F1 --carrier 2 --format json
    smoothcat search J_below_id --budget 100
    smoothcat report --threads 4

``--site`` takes a fixture name (F1, F2, F3), ``preset:<name>`` or a path to
a site file.  Exit codes: 0 success, 1 a checked law fails, 2 bad input,
3 cap exceeded.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from smoothcat import analysis, basechange, testchange
from smoothcat.fincat import CapExceeded, FinSet, FinTop, SmoothcatError, all_topologies, carriers_up_to
from smoothcat.fixtures import FIXTURES, fixture
from smoothcat.forcing import audit_non_stupid, check_foradj, forcing_join, forcing_meet, parse_spec
from smoothcat.serial import _carrier, carrier_to_json, dumps, load_site, vobject_to_json
from smoothcat.spaces import SmoothConfig, embed_test, fibre_enumerate

EXIT_OK, EXIT_LAW, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("check", "fibre", "forcing", "extend", "basechange", "census", "galois", "adjunction", "search", "report")


@dataclass
class RunConfig:
    command: str
    site: str = "F1"
    forcing: str | None = None
    carrier: str | None = None
    cap: int = 6
    format: str = "text"
    threads: int = 1
    weak: str = "(empty, empty)"
    index: int = 0
    small: str | None = None
    law: str | None = None
    budget: int = 1000

    def validate(self):
        if self.command not in COMMANDS:
            raise SmoothcatError(f"unknown command {self.command!r}")
        if self.cap < 1 or self.threads < 1:
            raise SmoothcatError("--cap and --threads must be at least 1")
        if self.format not in ("text", "json"):
            raise SmoothcatError("--format must be text or json")


class LawViolated(Exception):
    def __init__(self, report):
        self.report = report


# -- input resolution ----------------------------------------------------------------


def load_config(rc: RunConfig) -> SmoothConfig:
    if rc.site in FIXTURES:
        cfg = fixture(rc.site)
    elif rc.site.startswith("preset:"):
        cfg = analysis.preset(rc.site[len("preset:"):]).config
    else:
        site, text = load_site(rc.site)
        site.validate()
        if text is None and rc.forcing is None:
            raise SmoothcatError("site file has no forcing; pass --forcing")
        cfg = SmoothConfig(site, parse_spec(text or "(empty, empty)"))
    if rc.forcing is not None:
        cfg = cfg.with_forcing(parse_spec(rc.forcing))
    return cfg


def load_carrier(rc: RunConfig, kind: str, default: int = 2):
    raw = rc.carrier if rc.carrier is not None else str(default)
    if raw.isdigit():
        n = int(raw)
        if n > rc.cap:
            raise CapExceeded("carrier size", rc.cap, n)
        return FinSet(n) if kind == "set" else FinTop.discrete(n)
    try:
        spec = json.loads(Path(raw).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SmoothcatError(f"cannot read carrier {raw!r}: {exc}") from None
    if int(spec.get("size", 0)) > rc.cap:
        raise CapExceeded("carrier size", rc.cap, int(spec["size"]))
    try:
        return _carrier(kind, spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise SmoothcatError(f"malformed carrier file: {exc}") from None


def _v(x) -> dict:
    return vobject_to_json(x)


def _sizes(x) -> str:
    return " ".join(f"{t}:{a}/{b}" for t, (a, b) in sorted(x.sizes().items()))


# -- commands --------------------------------------------------------------------


def cmd_check(rc, cfg):
    viol = [str(v) for v in cfg.site.validate()] + [str(v) for v in audit_non_stupid(cfg)]
    rep = {"site": cfg.site.name, "forcing": str(cfg.forcing), "violations": viol}
    if viol:
        raise LawViolated(rep)
    return rep


def _fibre_row(cfg, c):
    fib = fibre_enumerate(c, cfg)
    oracle = analysis.oracle_fibre(cfg, c)
    return {
        "carrier": carrier_to_json(c),
        "count": len(fib),
        "oracle_count": len(oracle),
        "minimum": _sizes(fib.minimum),
        "maximum": _sizes(fib.maximum),
    }


def cmd_fibre(rc, cfg):
    c = load_carrier(rc, cfg.site.kind)
    fib = fibre_enumerate(c, cfg)
    row = _fibre_row(cfg, c)
    row["elements"] = [_sizes(x) for x in fib.elements]
    row["covers"] = sum(
        1
        for i in range(len(fib))
        for j in range(len(fib))
        if i != j
        and fib.leq(i, j)
        and not any(k not in (i, j) and fib.leq(i, k) and fib.leq(k, j) for k in range(len(fib)))
    )
    if row["count"] != row["oracle_count"]:
        raise LawViolated(row)
    return row


def cmd_forcing(rc, cfg):
    weak = cfg.with_forcing(parse_spec(rc.weak))
    c = load_carrier(rc, cfg.site.kind)
    fib = fibre_enumerate(c, weak)
    if not 0 <= rc.index < len(fib):
        raise SmoothcatError(f"--index must lie in [0, {len(fib)})")
    a = fib.elements[rc.index]
    rep = check_foradj(a, weak, cfg)
    return {
        "weak": str(weak.forcing),
        "strong": str(cfg.forcing),
        "structure": _v(a),
        "J": _v(forcing_join(a, weak, cfg)),
        "M": _v(forcing_meet(a, weak, cfg)),
        "leq_holds": rep.leq_holds,
        "otest_preserved": rep.otest_preserved,
        "outputs_equal": rep.outputs_equal,
        "output_saturated": rep.output_saturated,
    }


def _subsets(cfg):
    objs = cfg.site.objects
    return [list(s) for r in range(1, len(objs)) for s in itertools.combinations(objs, r)]


def _extend_row(cfg, small, max_carrier):
    inc = testchange.SiteInclusion.forcing_from_big(cfg, small)
    ok, witness = testchange.is_adequate(inc)
    row = {"small": ",".join(small), "adequate": ok, "witness": None if ok else list(map(str, witness))}
    if ok:
        probes = testchange.probe_family(inc.small, max_carrier)
        rows = testchange.chain_report(inc, probes)
        agree = testchange.check_agreement(inc, probes)
        row.update(
            probes=len(rows),
            chain_failures=sum(not r.ok for r in rows),
            agreement_violations=[list(map(str, v)) for v in agree.violations],
        )
    return row


def cmd_extend(rc, cfg):
    smalls = [rc.small.split(",")] if rc.small else _subsets(cfg)
    n = int(rc.carrier) if rc.carrier and rc.carrier.isdigit() else 2
    if n > rc.cap:
        raise CapExceeded("carrier size", rc.cap, n)
    rows = [_extend_row(cfg, s, n) for s in smalls]
    rep = {"site": cfg.site.name, "forcing": str(cfg.forcing), "inclusions": rows}
    if any(r.get("chain_failures") or r.get("agreement_violations") for r in rows):
        raise LawViolated(rep)
    return rep


def cmd_basechange(rc, cfg):
    n = int(rc.carrier) if rc.carrier and rc.carrier.isdigit() else 2
    if n > rc.cap:
        raise CapExceeded("carrier size", rc.cap, n)
    if cfg.site.kind != "top":
        g = basechange.BaseFunctor.discrete(cfg.site)
        return {"site": cfg.site.name, "witness_violations": [str(v) for v in basechange.check_witness(g)]}
    top = cfg.site
    forgotten = basechange.BaseFunctor.forget(top)
    plain = SmoothConfig(forgotten.target, parse_spec("(empty, empty)"))
    bs = analysis.probes_up_to(plain, n)
    ys = analysis.probes_up_to(SmoothConfig(top, parse_spec("(empty, empty)")), n)
    uc = basechange.unit_counit_ok(bs, ys, top)
    scans = [basechange.scan_initial_lift(b, (), top) for b in bs]
    rep = {
        "site": top.name,
        "witness_violations": [str(v) for v in basechange.check_witness(forgotten)],
        "unit_counit": uc,
        "initial_lift_scans": len(scans),
        "initial_lift_matches": sum(s.matches for s in scans),
    }
    if rep["witness_violations"] or rep["initial_lift_matches"] != len(scans) or uc["sections"] != uc["total_b"]:
        raise LawViolated(rep)
    return rep


def _census(cfg):
    c = analysis.two_point_census(cfg)
    return {
        "forcing": c.config,
        "rows": [{"carrier": carrier_to_json(r[0]), "count": r[1], "oracle": r[2]} for r in c.rows],
        "agrees": c.agrees,
    }


def cmd_census(rc, cfg):
    rep = _census(cfg)
    rep["monotonicity_failures"] = [list(p) for p in analysis.census_monotone(cfg.site, analysis.census_specs(cfg.site))]
    if not rep["agrees"] or rep["monotonicity_failures"]:
        raise LawViolated(rep)
    return rep


def _galois(weak, cfg, c):
    r = analysis.verify_galois(weak, cfg, c)
    return {
        "carrier": carrier_to_json(c),
        "pairs": r.pairs,
        "violations": len(r.violations),
        "meet_hypothesis": r.meet_hypothesis,
        "join_hypothesis": r.join_hypothesis,
        "unexplained": [list(v) for v in r.unexplained],
        "foradj_consistent": r.foradj_consistent,
    }


def cmd_galois(rc, cfg):
    weak = cfg.with_forcing(parse_spec(rc.weak))
    c = load_carrier(rc, cfg.site.kind)
    rep = dict(weak=str(weak.forcing), strong=str(cfg.forcing), **_galois(weak, cfg, c))
    if rep["unexplained"] or not rep["foradj_consistent"]:
        raise LawViolated(rep)
    return rep


def _adjunctions(n):
    out = {}
    for key, r in analysis.adjunction_checks(n).items():
        out[key] = {
            "name": r.name,
            "pairs": r.pairs,
            "bijections": r.bijections,
            "squares": r.squares,
            "failed_squares": r.failed_squares,
            "first_failure": None if r.first_failure is None else repr(r.first_failure),
        }
    return out


def cmd_adjunction(rc, cfg):
    n = int(rc.carrier) if rc.carrier and rc.carrier.isdigit() else 2
    if n > rc.cap:
        raise CapExceeded("carrier size", rc.cap, n)
    rep = _adjunctions(n)
    if any(r["first_failure"] for r in rep.values()):
        raise LawViolated(rep)
    return rep


def _search(law, budget):
    res = analysis.counterexample_search(law, budget)
    if isinstance(res, analysis.Witness):
        return {"law": law, "outcome": "witness", "instance": res.instance}
    return {"law": law, "outcome": res.describe(), "examined": res.examined}


def cmd_search(rc, cfg):
    if rc.law is None:
        raise SmoothcatError(f"search needs a law: {', '.join(analysis.LAWS)}")
    if rc.budget < 0:
        raise SmoothcatError("--budget must be non-negative")
    rep = _search(rc.law, rc.budget)
    if rep["outcome"] == "witness":
        raise LawViolated(rep)
    return rep


# -- full regression -----------------------------------------------------------------


def _fixture_section(name):
    cfg = fixture(name)
    kind = cfg.site.kind
    carriers = list(carriers_up_to("set", 2)) if kind == "set" else list(all_topologies(2))
    weak = cfg.with_forcing(parse_spec("(empty, empty)"))
    return {
        "forcing": str(cfg.forcing),
        "violations": [str(v) for v in cfg.site.validate()] + [str(v) for v in audit_non_stupid(cfg)],
        "fibres": [_fibre_row(cfg, c) for c in carriers],
        "census": _census(cfg),
        "endo_monoids": {t: len(analysis.endo_monoid(embed_test(t, cfg)).elements) for t in cfg.site.objects},
        "terminal": _terminal(cfg),
        "galois": _galois(weak, cfg, FinSet(2) if kind == "set" else FinTop.sierpinski()),
        "extensions": [_extend_row(cfg, s, 2 if kind == "set" else 1) for s in _subsets(cfg)],
    }


def _terminal(cfg):
    r = analysis.terminal_concreteness(cfg, max_carrier=2)
    return {"terminal": r.terminal, "concrete": sum(r.concrete), "probes": r.probes}


def _preset_section(name):
    cfg = analysis.preset(name).config
    return {
        "forcing": str(cfg.forcing),
        "violations": [str(v) for v in audit_non_stupid(cfg)],
        "census": _census(cfg),
    }


def cmd_report(rc, cfg):
    jobs = [("fixture", n) for n in FIXTURES] + [("preset", n) for n in analysis.PRESET_NAMES]
    jobs += [("search", law) for law in analysis.LAWS] + [("adjunction", 1)]

    def run(job):
        kind, arg = job
        if kind == "fixture":
            return _fixture_section(arg)
        if kind == "preset":
            return _preset_section(arg)
        if kind == "search":
            return _search(arg, 200)
        return _adjunctions(arg)

    with ThreadPoolExecutor(max_workers=rc.threads) as pool:
        results = list(pool.map(run, jobs))
    rep = {"fixtures": {}, "presets": {}, "searches": {}}
    for (kind, arg), res in zip(jobs, results):
        if kind == "adjunction":
            rep["adjunctions"] = res
        else:
            rep[kind + ("es" if kind == "search" else "s")][arg] = res
    return rep


HANDLERS = {
    "check": cmd_check,
    "fibre": cmd_fibre,
    "forcing": cmd_forcing,
    "extend": cmd_extend,
    "basechange": cmd_basechange,
    "census": cmd_census,
    "galois": cmd_galois,
    "adjunction": cmd_adjunction,
    "search": cmd_search,
    "report": cmd_report,
}


# -- emission --------------------------------------------------------------------


def normalise(obj):
    """Convert to plain JSON types so that emitted JSON parses back equal."""
    if isinstance(obj, dict):
        return {str(k): normalise(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [normalise(v) for v in obj]
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return str(obj)


def emit_text(obj, indent=0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(emit_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}-")
                lines.append(emit_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v)}")
    else:
        lines.append(f"{pad}{json.dumps(obj)}")
    return "\n".join(lines)


def emit(report, fmt: str) -> str:
    report = normalise(report)
    return dumps(report) if fmt == "json" else emit_text(report)


def run(rc: RunConfig) -> tuple:
    """Returns ``(exit code, output text)``."""
    try:
        rc.validate()
        cfg = load_config(rc) if rc.command not in ("search", "report", "adjunction") else None
        status, report = EXIT_OK, HANDLERS[rc.command](rc, cfg)
    except LawViolated as exc:
        status, report = EXIT_LAW, exc.report
    except CapExceeded as exc:
        status, report = EXIT_CAP, {"error": str(exc)}
    except SmoothcatError as exc:
        status, report = EXIT_INPUT, {"error": str(exc)}
    return status, emit(report, rc.format if rc.format in ("text", "json") else "text")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothcat", description="Finite smooth-space categories.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("law", nargs="?", help="law id for search")
    p.add_argument("--site", default="F1")
    p.add_argument("--forcing")
    p.add_argument("--carrier")
    p.add_argument("--cap", type=int, default=6)
    p.add_argument("--format", default="text", choices=("text", "json"))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--weak", default="(empty, empty)", help="weaker forcing for forcing/galois")
    p.add_argument("--index", type=int, default=0, help="fibre index of the structure for forcing")
    p.add_argument("--small", help="comma separated test objects for extend")
    p.add_argument("--budget", type=int, default=1000)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    rc = RunConfig(**vars(ns))
    status, text = run(rc)
    sys.stdout.write(text + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
