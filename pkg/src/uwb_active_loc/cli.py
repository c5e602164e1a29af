"""Command line front end.

Every subcommand is seedable and writes CSV (or a checkpoint); identical
seeds give byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import bench
from .config import AppConfig, env_factory, load_config, loss_setup
from .control.policies import GeometricPolicy, StaticPolicy, load_policy, save_policy
from .control.sac import train
from .geometry import layout_by_name
from .sim import run_episode, trace_to_csv


def _config(args) -> AppConfig:
    return load_config(args.config) if args.config else AppConfig()


def _cmd_gdop_map(args) -> int:
    layout = layout_by_name(args.layout)
    bench.export_gdop_map(layout, args.out, r_min=args.rmin, r_max=args.rmax,
                          res=args.res)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate_gdop(args) -> int:
    layout = layout_by_name(args.layout)
    rows = bench.validate_gdop(layout, n_trials=args.trials, sigma=args.sigma,
                               step_deg=args.step_deg, seed=args.seed)
    bench.validate_gdop_to_csv(rows, args.out)
    pairs = [(a, e) for _, _, a, e in rows if a is not None and e is not None]
    worst = max(abs(e - a) / a for a, e in pairs) if pairs else float("nan")
    print(f"wrote {args.out}; worst relative disagreement {worst:.4f}")
    return 0


def _cmd_loss_map(args) -> int:
    cfg = _config(args)
    overrides = {"layout": args.layout}
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, **overrides))
    _layout, loss_cfg, extrema = loss_setup(cfg)
    bench.export_loss_map(loss_cfg, extrema, args.out, res=args.res)
    print(f"wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _config(args)
    train_cfg = cfg.train
    if args.steps is not None:
        train_cfg = dataclasses.replace(train_cfg, total_steps=args.steps)
    rng = np.random.default_rng(args.seed)
    policy, curve = train(env_factory(cfg), train_cfg, rng)
    save_policy(policy, args.out)
    if curve["eval_returns"]:
        print(f"final eval return {curve['eval_returns'][-1]:.3f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _config(args)
    methods = list(cfg.bench.methods)
    policies: dict = {}
    if args.policy:
        actor = load_policy(args.policy)
        for m in ("AUL-IS", "AUL-EQ"):
            if m in methods:
                policies[m] = actor
        if not any(m.startswith("AUL") for m in methods):
            methods.append("AUL-IS")
            policies["AUL-IS"] = actor
    if "heuristic" in methods:
        _layout, _loss_cfg, extrema = loss_setup(cfg)
        policies["heuristic"] = GeometricPolicy(
            layout_by_name("is"), extrema.argmin,
            sigma_guard=cfg.model.sigma_range or None)
    cells = bench.scenario_grid(methods, cfg.bench.init_cms, cfg.bench.modes,
                                cfg.bench.n_runs)
    results = bench.run_benchmark(cells, policies, args.seed, model=cfg.model,
                                  params=cfg.reward,
                                  tag_speed=cfg.bench.tag_speed,
                                  line_length=cfg.bench.line_length,
                                  square_side=cfg.bench.square_side)
    bench.benchmark_to_csv(results, args.seed, args.out)
    print(f"wrote {args.out} ({len(results)} cells)")
    return 0


def _cmd_episode(args) -> int:
    cfg = _config(args)
    layout, loss_cfg, extrema = loss_setup(cfg)
    if args.policy == "static":
        policy = StaticPolicy()
    elif args.policy == "heuristic":
        policy = GeometricPolicy(layout, extrema.argmin,
                                 sigma_guard=cfg.model.sigma_range or None)
    else:
        policy = load_policy(args.policy)
    scenario = bench.Scenario("SUL-EQ" if cfg.sim.layout == "eq" else "SUL-IS",
                              cfg.sim.layout, args.init_cm, args.scenario, 1)
    path = bench.benchmark_path(scenario, cfg.bench.tag_speed,
                                cfg.bench.line_length, cfg.bench.square_side)
    env = env_factory(cfg)()
    trace = run_episode(policy, env, path, np.random.default_rng(args.seed))
    trace_to_csv(trace, args.trace)
    print(f"wrote {args.trace} ({len(trace)} steps, ended by {trace.reason})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="uwbloc",
        description="UWB relative localization simulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("gdop-map", help="export an analytical GDOP grid to CSV")
    q.add_argument("--layout", choices=("eq", "is"), required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--rmin", type=float, default=0.35, help="inner radius, m")
    q.add_argument("--rmax", type=float, default=2.0, help="outer radius, m")
    q.add_argument("--res", type=float, default=0.02, help="grid step, m")
    q.set_defaults(func=_cmd_gdop_map)

    q = sub.add_parser("validate-gdop",
                       help="compare analytical and Monte Carlo GDOP on rings")
    q.add_argument("--layout", choices=("eq", "is"), required=True)
    q.add_argument("--trials", type=int, default=1000)
    q.add_argument("--sigma", type=float, default=0.05, help="range noise std, m")
    q.add_argument("--step-deg", type=float, default=5.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_validate_gdop)

    q = sub.add_parser("loss-map", help="export the localization loss landscape")
    q.add_argument("--layout", choices=("eq", "is"), default="is")
    q.add_argument("--alpha", type=float, default=None)
    q.add_argument("--res", type=float, default=0.02)
    q.add_argument("--config", default=None)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_loss_map)

    q = sub.add_parser("train", help="train the ranging-only control policy")
    q.add_argument("--config", default=None)
    q.add_argument("--steps", type=int, default=None,
                   help="override total environment steps")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True, help="checkpoint file to write")
    q.set_defaults(func=_cmd_train)

    q = sub.add_parser("benchmark", help="run the localization error table")
    q.add_argument("--config", default=None)
    q.add_argument("--policy", default=None, help="trained checkpoint for AUL rows")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_benchmark)

    q = sub.add_parser("episode", help="roll one episode and dump its trace")
    q.add_argument("--policy", required=True,
                   help="'static', 'heuristic', or a checkpoint path")
    q.add_argument("--scenario", choices=bench.MODES, default="static_front")
    q.add_argument("--init-cm", type=float, default=100.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--config", default=None)
    q.add_argument("--trace", required=True, help="trace CSV to write")
    q.set_defaults(func=_cmd_episode)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
