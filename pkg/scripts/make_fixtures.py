"""Regenerate the synthetic benchmark-layout fixtures under tests/fixtures."""

from pathlib import Path

from optw.core import GroupTag
from optw.instance_io import write_benchmark_text
from optw.synthetic import synthetic_region

FIXTURES = {
    # 100 POIs, short horizon and narrow windows, like the r1 Solomon set
    "solomon_syn100": dict(n_poi=100, seed=101, group=GroupTag.SOLOMON, horizon=230, window=(10, 40)),
    # 100 POIs, long horizon and wide windows, like the c2/r2 Solomon sets
    "solomon_long100": dict(n_poi=100, seed=201, group=GroupTag.SOLOMON, horizon=1000, window=(100, 400)),
    "cordeau_syn48": dict(n_poi=48, seed=1, group=GroupTag.CORDEAU),
    "gavalas_syn100": dict(n_poi=100, seed=1, group=GroupTag.GAVALAS),
    # desk-scale learning region
    "solomon_desk20": dict(n_poi=20, seed=7, group=GroupTag.SOLOMON, horizon=500, window=(60, 250)),
}


def main(out_dir: Path = Path(__file__).resolve().parents[1] / "tests" / "fixtures") -> None:
    for name, kw in FIXTURES.items():
        inst = synthetic_region(name=name, **kw)
        print(write_benchmark_text(inst, out_dir / f"{name}.txt"))


if __name__ == "__main__":
    main()
