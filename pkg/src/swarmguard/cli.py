"""Command-line entry points: train, eval, experiment, replay, serve."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import harness, nets
from .bridge import BridgeServer, SessionConfig
from .harness import (ExperimentConfig, ScenarioSpec, load_experiment_config,
                      run_experiment)
from .training import TrainerConfig


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="experiment config file")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--scenario", choices=["random", "overloaded", "decoy"],
                   default=None)
    p.add_argument("--advice-prob", type=float, default=None)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("artifacts"))


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_experiment_config(args.config) if args.config \
        else ExperimentConfig()
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.scenario is not None:
        cfg.scenario = args.scenario
        spec = ScenarioSpec.make(args.scenario)
        cfg.n_ad, cfg.n_ed = spec.n_ad, spec.n_ed
    if args.advice_prob is not None:
        cfg.advice_probs = [args.advice_prob]
    if args.episodes is not None:
        cfg.episodes = args.episodes
    return cfg


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    advice = cfg.advice_probs[0]
    metrics = harness.train_one_repetition(cfg, advice, rep=0,
                                           out_dir=args.out)
    print(f"trained {len(metrics)} episodes, advice_prob={advice}, "
          f"artifacts in {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    spec = ScenarioSpec.make(cfg.scenario, n_ad=cfg.n_ad, n_ed=cfg.n_ed,
                             world=dataclasses.replace(cfg.world),
                             sensors=cfg.sensors)
    paths = [Path(p) for p in args.checkpoints]
    rates = harness.evaluate(paths, spec, args.n_eval,
                             (cfg.master_seed, 999))
    args.out.mkdir(parents=True, exist_ok=True)
    report_path = args.out / "eval.csv"
    with open(report_path, "w") as f:
        f.write("checkpoint,success_rate\n")
        for p, r in zip(paths, rates):
            f.write(f"{p},{r:.6g}\n")
            print(f"{p}: success rate {r:.3f}")
    if args.save_trials:
        _save_trials(cfg, spec, paths[-1], args)
    return 0


def _save_trials(cfg, spec, ckpt, args) -> None:
    actor, _, cfg_dict = nets.load_checkpoint(ckpt)
    tcfg = TrainerConfig.from_dict(cfg_dict)
    for i in range(args.save_trials):
        seed_parts = (cfg.master_seed, 999, 5000 + i)
        mission_seed = abs(hash(seed_parts)) % (2 ** 31)
        mission = harness.make_mission(spec, mission_seed)
        result, traj = harness.run_trial(
            mission, actor, tcfg, harness._seed_for(*seed_parts),
            seed=mission_seed, scenario_id=spec.kind, record_trajectory=True)
        path = args.out / f"trial_{i:03d}.json"
        harness.write_trial_record(path, spec, mission_seed, seed_parts,
                                   str(ckpt), result, traj)
        harness.write_trajectory_csv(traj, args.out / f"trial_{i:03d}.csv")
        print(f"trial {i}: {result.termination.value} in {result.steps} "
              f"steps -> {path}")


def cmd_experiment(args) -> int:
    cfg = _load_cfg(args)
    manifest = run_experiment(cfg, args.out)
    print(f"experiment '{cfg.name}' complete={manifest['complete']}, "
          f"artifacts in {args.out}")
    return 0


def cmd_replay(args) -> int:
    result, matches = harness.replay_trial(args.trial)
    print(f"replayed: {result.termination.value} in {result.steps} steps, "
          f"log match: {matches}")
    return 0 if matches else 1


def cmd_serve(args) -> int:
    scfg = SessionConfig(host=args.host, port=args.port,
                         tick_rate=args.tick_rate,
                         scenario=args.scenario or "decoy",
                         seed=args.seed or 0,
                         checkpoint=str(args.checkpoint) if args.checkpoint
                         else None)
    print(f"serving on ws://{scfg.host}:{scfg.port} "
          f"(scenario={scfg.scenario}, seed={scfg.seed})", flush=True)
    BridgeServer(scfg).serve_forever()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="swarmguard")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one repetition")
    _common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints")
    _common_flags(p)
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--n-eval", type=int, default=100)
    p.add_argument("--save-trials", type=int, default=0,
                   help="also record N trial files with trajectory logs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="full experiment from a config file")
    _common_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="re-step a recorded trial")
    p.add_argument("--trial", type=Path, required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="live operator session")
    _common_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--tick-rate", type=float, default=20.0)
    p.add_argument("--checkpoint", type=Path)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
