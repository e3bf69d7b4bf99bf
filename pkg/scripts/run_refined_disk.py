"""Refined-grid disk experiments: Laplace and Stokes, increasing and decreasing.

    python3 scripts/run_refined_disk.py --operator laplace --out results/disk
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from stokeslab import io
from stokeslab.forcing import Forcing
from stokeslab.geometry import BcMode, Direction, Disk, Grid
from stokeslab.harness import ExperimentSpec, run_experiment


@dataclass(frozen=True)
class RefinedDiskConfig:
    operator: str = "laplace"
    radius: float = 0.4
    base: int = 8
    levels: int = 4
    threads: int = 1

    def forcing(self) -> Forcing:
        if self.operator == "laplace":
            return Forcing("indicator", center=(0.5, 0.5), radius=self.radius)
        return Forcing("vortex", center=(0.5, 0.5), radius=0.75 * self.radius)

    def spec(self, direction: Direction) -> ExperimentSpec:
        return ExperimentSpec(self.operator, direction, self.forcing(), shape=Disk((0.5, 0.5), self.radius),
                              base_grid=Grid.unit_square(self.base), levels=self.levels, threads=self.threads)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--operator", choices=["laplace", "stokes"], default="laplace")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/refined_disk"))
    args = ap.parse_args(argv)
    cfg = RefinedDiskConfig(args.operator, levels=args.levels, threads=args.threads)
    for direction in Direction:
        report = run_experiment(cfg.spec(direction))
        stem = args.out / f"{cfg.operator}_{direction.value}"
        io.atomic_write(stem.with_suffix(".csv"), io.format_report(report))
        io.atomic_write(stem.with_suffix(".svg"), io.report_svg(report))
        print(f"{cfg.operator} {direction.value}: floor {report.floor:.3e}")
        for r in report.records(BcMode.WEAK):
            print(f"  h=1/{round(1 / r.h):<4d} error {r.error:.3e}  rate {r.rate:.2f}")
        ok = all(report.strictly_decreasing(m) for m in report.families)
        print(f"  strictly decreasing: {ok}, final/floor: {report.final_error(BcMode.WEAK) / report.floor:.2f}")


if __name__ == "__main__":
    main()
