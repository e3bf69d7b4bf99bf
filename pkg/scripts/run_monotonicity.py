"""Pointwise ordering of scalar resolvents on random nested slit-free masks."""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from stokeslab.fields import VertexField
from stokeslab.geometry import DomainMask, Grid
from stokeslab.harness import monotonicity_check


@dataclass(frozen=True)
class MonotonicityConfig:
    pairs: int = 10
    seed: int = 0
    min_n: int = 8
    max_n: int = 24
    slack: float = 1e-12


def random_pair(rng, cfg: MonotonicityConfig):
    n = int(rng.integers(cfg.min_n, cfg.max_n + 1))
    big = rng.random((n, n)) < 0.85
    small = big & (rng.random((n, n)) < 0.8)
    g = Grid.unit_square(n)
    return DomainMask(g, small), DomainMask(g, big)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cfg = MonotonicityConfig(args.pairs, args.seed)
    rng = np.random.default_rng(cfg.seed)
    failures = 0
    for i in range(cfg.pairs):
        small, big = random_pair(rng, cfg)
        f = VertexField(big.grid, rng.random(big.grid.shape_vertices))
        r = monotonicity_check(small, big, f, slack=cfg.slack)
        failures += not r.ok
        print(f"pair {i}: n={big.grid.nx} cells {small.n_cells}/{big.n_cells} ok={r.ok} "
              f"min {r.min_value:.1e} violation {r.max_violation:.1e}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
