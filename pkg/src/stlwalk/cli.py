"""Command-line entry points: walk, push, sweep, train-collision."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .collision import sample_dataset, train_mlp
from .config import ConfigError, load_config
from .harness import (BASELINE, STL_MPC, InfeasibleConfiguration,
                      Perturbation, write_trace_csv)


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the collision/dataset seed")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stlwalk",
        description="STL-MPC push recovery on a reduced-order biped")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", help="nominal closed-loop walking demo")
    _add_common(p)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--controller", choices=["stl", "baseline"], default="stl")
    p.add_argument("--out", default="walk_trace.csv")
    p.add_argument("--model", default=None, help="collision model JSON")

    p = sub.add_parser("push", help="single perturbation episode")
    _add_common(p)
    p.add_argument("--dir", type=int, required=True, dest="direction")
    p.add_argument("--phase", type=float, required=True)
    p.add_argument("--force", type=float, required=True)
    p.add_argument("--controller", choices=["stl", "baseline"], default="stl")
    p.add_argument("--steps", type=int, default=7)
    p.add_argument("--out", default="push_episode")
    p.add_argument("--model", default=None, help="collision model JSON")

    p = sub.add_parser("sweep", help="max recoverable force grid")
    _add_common(p)
    p.add_argument("--phases", default=None,
                   help="comma-separated stance phases, e.g. 0.25,0.5,0.75")
    p.add_argument("--out", required=True, dest="out_dir")
    p.add_argument("--model", default=None, help="collision model JSON")

    p = sub.add_parser("train-collision", help="train the margin MLP")
    _add_common(p)
    p.add_argument("--n", type=int, default=50000)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-out", default=None,
                   help="also dump the sampled dataset as CSV")
    return parser


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        col = cfg.collision
        fields = {f: getattr(col, f) for f in col.__dataclass_fields__}
        fields["seed"] = args.seed
        from .config import CollisionConfig
        cfg = type(cfg)(**{**{f: getattr(cfg, f)
                              for f in cfg.__dataclass_fields__},
                           "collision": CollisionConfig(**fields)})
    return cfg


def _net(cfg, args):
    if getattr(args, "model", None):
        from .collision import Mlp
        return Mlp.load(args.model)
    return harness.default_collision_net(cfg)


def _controller_id(name):
    return STL_MPC if name == "stl" else BASELINE


def cmd_walk(args):
    cfg = _load(args)
    controller = _controller_id(args.controller)
    net = _net(cfg, args) if controller == STL_MPC else None
    res = harness.run_episode(controller, None, args.steps, cfg, net=net)
    write_trace_csv(res.trace, args.out)
    print(f"recovered={res.recovered} steps_to_recover={res.steps_to_recover} "
          f"min_collision_margin={res.min_collision_margin:.4f}")
    print(f"trace written to {args.out}")
    return 0 if res.recovered else 2


def cmd_push(args):
    cfg = _load(args)
    controller = _controller_id(args.controller)
    net = _net(cfg, args) if controller == STL_MPC else None
    push = Perturbation(args.direction, args.force, args.phase,
                        cfg.sweep.push_duration)
    res = harness.run_episode(controller, push, args.steps, cfg, net=net)
    write_trace_csv(res.trace, args.out + "_trace.csv")
    report = {
        "controller": controller,
        "direction_index": args.direction,
        "phase": args.phase,
        "force": args.force,
        "recovered": res.recovered,
        "steps_to_recover": res.steps_to_recover,
        "min_collision_margin": res.min_collision_margin,
        "push_time": res.push_time,
        "crossed": res.crossed,
        "foot_bounds_ok": res.foot_bounds_ok,
        "diverged": res.diverged,
    }
    with open(args.out + ".json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(json.dumps(report, indent=2))
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    phases = cfg.sweep.phases
    if args.phases:
        phases = tuple(float(x) for x in args.phases.split(","))
    net = _net(cfg, args)
    table = harness.sweep([STL_MPC, BASELINE], phases, cfg,
                          out_dir=args.out_dir, net=net)
    summary = harness.summarize(table)
    print(f"wrote {os.path.join(args.out_dir, 'sweep.csv')}")
    print(f"dominance fraction: {summary['dominance_fraction']}")
    return 0


def cmd_train_collision(args):
    cfg = _load(args)
    col = cfg.collision
    X, y = sample_dataset(args.n, col.geometry, col.ranges, col.seed)
    net = train_mlp(X, y, col.layers, col.epochs, col.seed, col.lr,
                    col.momentum, col.batch_size)
    net.save(args.out)
    if args.dataset_out:
        from .collision import save_dataset_csv
        save_dataset_csv(args.dataset_out, X, y)
    pred = net.forward(X)
    agree = float(np.mean(np.sign(pred) == np.sign(y)))
    print(f"model written to {args.out} (train sign agreement {agree:.3f})")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "walk": cmd_walk,
        "push": cmd_push,
        "sweep": cmd_sweep,
        "train-collision": cmd_train_collision,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, InfeasibleConfiguration) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
