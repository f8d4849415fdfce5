"""Run the counterexample search for every registered law."""
import argparse

from smoothcat.analysis import LAWS, counterexample_search


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--budget", type=int, default=2000)
    args = p.parse_args()
    for law in LAWS:
        r = counterexample_search(law, args.budget)
        print(f"{law:28s} {r.describe()}")


if __name__ == "__main__":
    main()
