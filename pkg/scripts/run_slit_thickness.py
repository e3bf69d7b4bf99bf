"""Stokes on slit bands of shrinking thickness, converging to the weak slit solution."""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from stokeslab import io
from stokeslab.geometry import BcMode, Direction, Family, Grid, make_sequence
from stokeslab.harness import MIDDLE_SLIT, ExperimentSpec, crossflow, run_experiment


@dataclass(frozen=True)
class SlitThicknessConfig:
    n: int = 128
    offsets: tuple = (8, 4, 2, 1, 0)
    precond: str | None = None

    def spec(self) -> ExperimentSpec:
        seq = make_sequence(Family("slit", MIDDLE_SLIT, offsets=self.offsets), Grid.unit_square(self.n))
        return ExperimentSpec("stokes", Direction.INCREASING, crossflow(MIDDLE_SLIT), sequence=seq,
                              modes=(BcMode.WEAK,), precond=self.precond)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--offsets", type=int, nargs="+", default=[8, 4, 2, 1, 0])
    ap.add_argument("--precond", choices=["jacobi", "block"])
    ap.add_argument("--out", type=Path, default=Path("results/slit_thickness"))
    args = ap.parse_args(argv)
    cfg = SlitThicknessConfig(args.n, tuple(args.offsets), args.precond)
    report = run_experiment(cfg.spec())
    io.atomic_write(args.out / "report.csv", io.format_report(report))
    io.atomic_write(args.out / "report.svg", io.report_svg(report))
    for k, r in zip(cfg.offsets, report.records(BcMode.WEAK)):
        print(f"half thickness {k}: error {r.error:.3e}  ({r.iterations} iterations)")
    print(f"monotone: {report.monotone(BcMode.WEAK)}")


if __name__ == "__main__":
    main()
