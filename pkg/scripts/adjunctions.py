"""Hom-set bijections and naturality for the registered adjunctions."""
import sys

from smoothcat.analysis import adjunction_checks


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    for key, r in adjunction_checks(n).items():
        status = "ok" if r.ok else f"fails at {r.first_failure}"
        print(f"{r.name:34s} pairs={r.pairs:5d} squares={r.squares:7d} {status}")


if __name__ == "__main__":
    main()
