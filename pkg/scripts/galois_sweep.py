"""Fibrewise Galois checks for weaker conditions against each fixture."""
from smoothcat.analysis import verify_galois
from smoothcat.fincat import carriers_up_to
from smoothcat.fixtures import FIXTURES, fixture
from smoothcat.forcing import condition_leq, parse_spec

WEAK = ["(empty, empty)", "(empty, saturation)", "(saturation, empty)"]


def main():
    for name in FIXTURES:
        strong = fixture(name)
        for text in WEAK:
            weak = strong.with_forcing(parse_spec(text))
            if not condition_leq(weak.forcing, strong.forcing, strong.site):
                print(f"{name} {text}: not weaker, skipped")
                continue
            for c in carriers_up_to(strong.site.kind, 2):
                r = verify_galois(weak, strong, c)
                m = sum(v[2] == "M" for v in r.violations)
                j = sum(v[2] == "J" for v in r.violations)
                print(
                    f"{name} {text:22s} {c!r:28s} pairs={r.pairs:5d} M-fail={m:4d} "
                    f"(hyp {'y' if r.meet_hypothesis else 'n'}) J-fail={j:4d} "
                    f"(hyp {'y' if r.join_hypothesis else 'n'}) unexplained={len(r.unexplained)}"
                )


if __name__ == "__main__":
    main()
