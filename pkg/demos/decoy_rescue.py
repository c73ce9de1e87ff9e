"""Show the decoy attack defeating the automated stack, then a human rescue.

The decoy scenario sends two attackers to orbit just outside the defense
ring while a third — the real threat — swings around the flank.  The
threat-ordered assignment logic commits every defender to the two nearest
orbiting targets, so the autonomous defense loses.

A scripted operator then replays the same seeds, taking over one drone
via the rank-1 takeover channel and posting it as a stationary picket on
the line between the protected asset and the true threat.  One drone in
the right place is enough to flip the outcome.

Pass a checkpoint path as argv[1] to fly the trained policy instead of
the scripted expert.
"""

import sys

from swarmguard import nets
from swarmguard.harness import (make_mission, rescue_operator, run_trial,
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

auto_wins = rescued_wins = 0
for seed in range(10):
    mission = make_mission(ScenarioSpec.make("decoy", seed=seed), seed)
    result, _ = run_trial(mission, actor, tcfg, _seed_for(seed, 2),
                          use_heuristic=use_heuristic)
    auto_wins += result.termination is Termination.SUCCESS

    mission = make_mission(ScenarioSpec.make("decoy", seed=seed), seed)
    human_source, on_tick = rescue_operator(mission, drone=0, target=-1)
    result2, _ = run_trial(mission, actor, tcfg, _seed_for(seed, 2),
                           use_heuristic=use_heuristic,
                           human_source=human_source,
                           on_tick=on_tick)
    rescued_wins += result2.termination is Termination.SUCCESS
    print(f"seed {seed}: autonomous={result.termination.value}, "
          f"with operator={result2.termination.value}")

print(f"\nautonomous successes: {auto_wins}/10 (deception works)")
print(f"operator-rescued successes: {rescued_wins}/10")
