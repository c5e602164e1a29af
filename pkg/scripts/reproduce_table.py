"""Reproduce the simulated benchmark table.

Runs the static baseline on both layouts (1000 realizations per cell) and,
when a checkpoint is given, the trained policy on the isosceles layout.

Usage: python scripts/reproduce_table.py out.csv [checkpoint] [seed]
"""

import sys

from uwb_active_loc import bench
from uwb_active_loc.config import AppConfig
from uwb_active_loc.control import load_policy


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    out = sys.argv[1]
    ckpt = sys.argv[2] if len(sys.argv) > 2 else None
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0
    cfg = AppConfig()
    methods = ["SUL-EQ", "SUL-IS"]
    policies = {}
    if ckpt:
        methods.append("AUL-IS")
        policies["AUL-IS"] = load_policy(ckpt)
    cells = bench.scenario_grid(methods, cfg.bench.init_cms, cfg.bench.modes,
                                cfg.bench.n_runs)
    results = bench.run_benchmark(cells, policies, seed, model=cfg.model,
                                  params=cfg.reward)
    bench.benchmark_to_csv(results, seed, out)
    for sc, rep in results:
        print(f"{sc.method:9s} {sc.mode:13s} {sc.init_cm:5.0f} cm   "
              f"mu {rep.mu_cm:7.2f} cm   sigma {rep.sigma_cm:6.2f} cm")
    return 0


if __name__ == "__main__":
    sys.exit(main())
