"""Train the desk-scale policy and save checkpoint plus learning curve.

Usage: python scripts/train_desk.py [seed] [out_prefix]
"""

import sys
from pathlib import Path

import numpy as np

from uwb_active_loc.config import env_factory, load_config
from uwb_active_loc.control import save_policy, train

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    prefix = sys.argv[2] if len(sys.argv) > 2 else str(ROOT / "desk_policy")
    cfg = load_config(ROOT / "configs" / "desk.yaml")
    policy, curve = train(env_factory(cfg), cfg.train,
                          np.random.default_rng(seed))
    save_policy(policy, prefix + ".ckpt")
    with open(prefix + "_curve.csv", "w") as fh:
        fh.write("step,eval_return\n")
        for s, r in zip(curve["eval_steps"], curve["eval_returns"]):
            fh.write(f"{s},{r:.6f}\n")
    print(f"saved {prefix}.ckpt; eval {curve['eval_returns'][0]:.2f} -> "
          f"{curve['eval_returns'][-1]:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
