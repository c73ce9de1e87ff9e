"""Defend against a 50-vs-100 saturation attack and log the trajectories.

Runs the overloaded scenario (50 defenders, 100 attackers arriving as a
staggered column of four-drone clusters) under the built-in tactical
stack, prints the outcome per seed, and writes a per-tick trajectory CSV
for the first trial — one row per entity per tick: tick, kind, id, x, y,
heading, functional — suitable for plotting the engagement.

Pass a checkpoint path as argv[1] to fly the trained policy instead of
the scripted expert.
"""

import sys
from pathlib import Path

from swarmguard import nets
from swarmguard.harness import (make_mission, run_trial, write_trajectory_csv,
                                _seed_for)
from swarmguard.scenarios import ScenarioSpec
from swarmguard.training import TrainerConfig
from swarmguard.world import Termination

checkpoint = sys.argv[1] if len(sys.argv) > 1 else None
if checkpoint:
    actor, _, cfg_dict = nets.load_checkpoint(checkpoint)
    tcfg = TrainerConfig.from_dict(cfg_dict)
    use_heuristic = False
    print(f"flying policy from {checkpoint}")
else:
    actor, tcfg, use_heuristic = None, TrainerConfig(), True
    print("flying the scripted expert (pass a checkpoint path to override)")

out = Path("artifacts/overloaded")
out.mkdir(parents=True, exist_ok=True)
wins = 0
for seed in range(10):
    mission = make_mission(ScenarioSpec.make("overloaded", seed=seed), seed)
    result, traj = run_trial(mission, actor, tcfg, _seed_for(seed, 1),
                             record_trajectory=(seed == 0),
                             use_heuristic=use_heuristic)
    wins += result.termination is Termination.SUCCESS
    print(f"seed {seed}: {result.termination.value} in {result.steps} ticks")
    if seed == 0:
        write_trajectory_csv(traj, out / "trial_seed0.csv")
        print(f"  trajectory log -> {out / 'trial_seed0.csv'}")
print(f"\nsuccess: {wins}/10")
