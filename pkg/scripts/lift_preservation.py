"""Which halves of a topological forcing condition survive the finest and
coarsest lifts of structures satisfying the lifted condition."""
from smoothcat.analysis import probes_up_to
from smoothcat.basechange import coarsest_lift, finest_lift, lifted_forcing
from smoothcat.fixtures import fixture
from smoothcat.forcing import forced_set, parse_spec

SPECS = [None, "(saturation, saturation)", "(saturation, empty)", "(empty, sheaf)", "(terminal, terminal)"]


def _holds(x, cfg, side):
    fam = x.inputs if side == "input" else x.outputs
    return all(f in fam(t) for t, fs in forced_set(x, cfg, side).items() for f in fs)


def main():
    base = fixture("F3")
    print(f"{'forcing':42s} {'n':>4s} fin-in fin-out coa-in coa-out")
    for text in SPECS:
        top = base if text is None else base.with_forcing(parse_spec(text))
        probes = probes_up_to(lifted_forcing(top), 2)
        counts = [0, 0, 0, 0]
        for b in probes:
            fb, cb = finest_lift(b, top.site), coarsest_lift(b, top.site)
            for k, (x, side) in enumerate(((fb, "input"), (fb, "output"), (cb, "input"), (cb, "output"))):
                counts[k] += _holds(x, top, side)
        print(f"{str(top.forcing):42s} {len(probes):4d} " + " ".join(f"{c:6d}" for c in counts))


if __name__ == "__main__":
    main()
