"""2D UAV swarm-defense simulator with a human-in-the-loop actor-critic
training engine, scenario harness and live operator bridge."""

from .control import (AdvisorOutput, ControlProposal, arbitrate,
                      assign_closest, control_step, drone_state,
                      heuristic_advisor, policy_advisor)
from .harness import (EvalReport, ExperimentConfig, ScenarioSpec, TrialResult,
                      evaluate, load_experiment_config, run_experiment,
                      run_trial)
from .nets import Net, forward, grad, load_checkpoint, save_checkpoint
from .scenarios import generate_scenario
from .sensing import (Detection, SensorConfig, TrackEstimate, detect,
                      detect_eo, detect_rf, fuse, noise_offset,
                      observe_enemies)
from .training import (ReplayBuffers, TrainerConfig, Transition, actor_step,
                       critic_step, q_target, run_episode, sample_batch,
                       select_action, train)
from .world import (AllyAction, AllyDrone, EnemyDrone, GroundRadar,
                    ScriptedPath, StepOutcome, Termination, WorldConfig,
                    WorldState, evaluate_termination, neutralization_reward,
                    neutralize_enabled, step_ally, step_ground_radar,
                    step_world, tracking_reward, update_enemies, vec2,
                    wrap_angle)

__version__ = "0.1.0"
