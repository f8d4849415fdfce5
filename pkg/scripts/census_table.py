"""Two-point censuses for every preset and fixture, engine vs power-set oracle."""
from smoothcat.analysis import PRESET_NAMES, preset, two_point_census
from smoothcat.fixtures import FIXTURES, fixture


def main():
    rows = [(n, preset(n).config) for n in PRESET_NAMES] + [(n, fixture(n)) for n in FIXTURES]
    for name, cfg in rows:
        c = two_point_census(cfg)
        cells = " ".join(f"{r[1]}/{r[2]}" for r in c.rows)
        print(f"{name:16s} {str(cfg.forcing):50s} total={sum(c.counts()):3d}  engine/oracle: {cells}")


if __name__ == "__main__":
    main()
