"""Human-in-the-loop actor-critic engine.

Three-phase loop per environment step: epsilon-greedy action selection where
the human (or pseudo-human advisor) can take the exploration slot, dual
human/AI replay buffers mixed by an advice probability, and plain
gradient-descent updates of the critic (regularized TD regression with the
human reward folded into the target) and the actor (blend of policy-gradient
and behavior-cloning terms).
"""

from __future__ import annotations

import csv
import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import nets
from .control import TransitionSkeleton, control_step, per_drone_rewards
from .nets import Net
from .sensing import SensorConfig, fuse, observe_enemies
from .world import EnemyPaths, Termination, WorldConfig, WorldState, step_world


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainerConfig:
    eps0: float = 1.0
    eps_decay: float = 0.995
    eps_min: float = 0.05
    phi_h: float = 0.5
    advice_prob: float = 0.2
    beta: float = 0.2
    lambda_q: float = 0.0
    lambda_g: float = 0.0
    alpha_q: float = 1e-2
    alpha_g: float = 1e-2
    alpha_decay: float = 1.0
    n_b: int = 32
    gamma: float = 0.95
    exploration_noise_std: float = 0.3
    buffer_capacity: int = 4096
    warmup: int = 32
    state_scale: float = 50.0
    reward_scale: float = 1.0
    actor_layers: list[int] = field(default_factory=lambda: [2, 64, 64, 2])
    critic_layers: list[int] = field(default_factory=lambda: [4, 64, 64, 1])
    checkpoint_interval: int = 10

    def __post_init__(self) -> None:
        if not 0.0 <= self.phi_h <= 1.0:
            raise ValueError("phi_h must be in [0,1]")
        if not 0.0 <= self.advice_prob <= 1.0:
            raise ValueError("advice_prob must be in [0,1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0,1]")
        if self.lambda_q < 0 or self.lambda_g < 0:
            raise ValueError("regularization must be >= 0")
        if self.alpha_q <= 0 or self.alpha_g <= 0:
            raise ValueError("step sizes must be > 0")
        if not 0.0 < self.alpha_decay <= 1.0:
            raise ValueError("alpha_decay must be in (0,1]")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0,1)")
        if not 0.0 < self.eps_decay <= 1.0:
            raise ValueError("eps_decay must be in (0,1]")

    def epsilon(self, k: int) -> float:
        return max(self.eps_min, self.eps0 * self.eps_decay ** k)

    def lr_scale(self, k: int) -> float:
        """Episode-indexed multiplier applied to both step sizes."""
        return self.alpha_decay ** k

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        return cls(**d)


@dataclass
class Transition:
    x: np.ndarray
    u: np.ndarray
    r: float
    r_h: float
    x_next: np.ndarray
    done: int
    source: str  # "human" | "ai"


class ReplayBuffers:
    def __init__(self, capacity: int = 100_000):
        self.human: deque[Transition] = deque(maxlen=capacity)
        self.ai: deque[Transition] = deque(maxlen=capacity)
        self.capacity = capacity

    def push(self, tr: Transition) -> None:
        (self.human if tr.source == "human" else self.ai).append(tr)

    def __len__(self) -> int:
        return len(self.human) + len(self.ai)


def select_action(actor: Net, x: np.ndarray, k: int, cfg: TrainerConfig,
                  human_action: Optional[np.ndarray],
                  rng: np.random.Generator) -> tuple[np.ndarray, str]:
    """Epsilon-greedy with a human slot inside the exploration branch."""
    eps = cfg.epsilon(k)
    if rng.random() < 1.0 - eps:
        return np.asarray(nets.forward(actor, x)), "ai"
    if rng.random() < cfg.phi_h and human_action is not None:
        return np.asarray(human_action, dtype=np.float64), "human"
    raw = nets.forward(actor, x, raw=True)
    noisy = raw + rng.normal(0.0, cfg.exploration_noise_std, size=raw.shape)
    return np.asarray(nets._apply_head(np.atleast_2d(noisy), nets.ACTOR_HEAD)[0]), "ai"


def sample_batch(buffers: ReplayBuffers, cfg: TrainerConfig,
                 rng: np.random.Generator) -> list[Transition]:
    if len(buffers) == 0:
        raise ValueError("cannot sample from empty buffers")
    batch = []
    for _ in range(cfg.n_b):
        use_human = rng.random() < cfg.advice_prob
        pool = buffers.human if use_human else buffers.ai
        if not pool:
            pool = buffers.ai if use_human else buffers.human
        batch.append(pool[rng.integers(len(pool))])
    return batch


def _stack(batch: Sequence[Transition]):
    x = np.stack([tr.x for tr in batch])
    u = np.stack([tr.u for tr in batch])
    r = np.array([tr.r for tr in batch])
    r_h = np.array([tr.r_h for tr in batch])
    x_next = np.stack([tr.x_next for tr in batch])
    done = np.array([tr.done for tr in batch], dtype=np.float64)
    return x, u, r, r_h, x_next, done


def q_target(batch: Sequence[Transition], critic: Net, actor: Net,
             cfg: TrainerConfig) -> np.ndarray:
    if not batch:
        raise ValueError("empty batch")
    _, _, r, r_h, x_next, done = _stack(batch)
    g_next = np.atleast_2d(nets.forward(actor, x_next))
    q_next = np.atleast_2d(
        nets.forward(critic, np.hstack([x_next, g_next])))[:, 0]
    return r + r_h + cfg.gamma * (1.0 - done) * q_next


def critic_step(critic: Net, batch: Sequence[Transition],
                targets: np.ndarray, cfg: TrainerConfig,
                lr_scale: float = 1.0) -> float:
    x, u, *_ = _stack(batch)
    inputs = np.hstack([x, u])
    n = len(batch)

    def loss_head(q):
        q = q[:, 0]
        resid = q - targets
        loss = (float(resid @ resid) + cfg.lambda_q * float(q @ q)) / n
        dq = (2.0 * resid + 2.0 * cfg.lambda_q * q) / n
        return loss, dq[:, None]

    loss, d_w, d_b = nets.grad(critic, inputs, loss_head)
    if not math.isfinite(loss):
        raise DivergenceError(f"critic loss diverged: {loss}")
    nets.apply_update(critic, d_w, d_b, cfg.alpha_q * lr_scale)
    return loss


def actor_step(actor: Net, critic: Net, batch: Sequence[Transition],
               cfg: TrainerConfig, lr_scale: float = 1.0) -> float:
    x, u, *_ = _stack(batch)
    n = len(batch)
    g, actor_cache = nets.forward_cached(actor, x)

    # Self-learning term: the critic evaluated at the actor's own output;
    # gradients flow through the action input of the frozen critic.
    q_in = np.hstack([x, g])
    q, critic_cache = nets.forward_cached(critic, q_in)
    _, _, d_qin = nets.backward(critic, critic_cache,
                                np.full((n, 1), -cfg.beta / n))
    dg = d_qin[:, x.shape[1]:].copy()

    # Behavior-cloning distance in the action space's own metric: the
    # movement angle is circular, so its residual is wrapped to (-pi, pi].
    # Without this, demonstrations pointing just either side of the +-pi
    # seam average to a bearing of zero instead of "due west".
    diff = g - u
    diff[:, 0] = np.mod(diff[:, 0] + math.pi, 2.0 * math.pi) - math.pi
    dg += 2.0 * (1.0 - cfg.beta) * diff / n
    dg += 2.0 * cfg.lambda_g * g / n
    loss = (cfg.beta * (-float(q.sum()))
            + (1.0 - cfg.beta) * float((diff * diff).sum())
            + cfg.lambda_g * float((g * g).sum())) / n
    if not math.isfinite(loss):
        raise DivergenceError(f"actor loss diverged: {loss}")
    d_w, d_b, _ = nets.backward(actor, actor_cache, dg)
    nets.apply_update(actor, d_w, d_b, cfg.alpha_g * lr_scale)
    return loss


@dataclass
class EpisodeResult:
    steps: int
    return_: float
    termination: Termination
    critic_loss: float = 0.0
    actor_loss: float = 0.0
    human_sample_fraction: float = 0.0
    trajectory: Optional[list[tuple]] = None


@dataclass
class Mission:
    """An initial world plus the scenario context needed to run it."""
    world: WorldState
    world_cfg: WorldConfig
    sensor_cfg: SensorConfig
    enemy_paths: EnemyPaths = None


AdvisorFactory = Callable[[WorldConfig], Callable]


def run_episode(mission: Mission, actor: Net, cfg: TrainerConfig,
                rng: np.random.Generator, k: int = 0,
                advisor: Optional[Callable] = None,
                critic: Optional[Net] = None,
                buffers: Optional[ReplayBuffers] = None,
                greedy: bool = False,
                human_source: Optional[Callable[[int], dict]] = None,
                reward_source: Optional[Callable[[int], float]] = None,
                record_trajectory: bool = False,
                on_tick: Optional[Callable] = None) -> EpisodeResult:
    """Roll one trial; optionally collect transitions and run updates.

    human_source / reward_source are per-tick callbacks used by the live
    bridge to inject takeovers and operator reward.
    """
    state = mission.world
    wcfg, scfg = mission.world_cfg, mission.sensor_cfg
    tracks: list = []
    pending: list[TransitionSkeleton] = []
    pending_rewards: list[float] = []
    pending_rh = 0.0
    total_return = 0.0
    discount = 1.0
    critic_losses: list[float] = []
    actor_losses: list[float] = []
    human_slots = 0
    total_slots = 0
    trajectory: list[tuple] = [] if record_trajectory else None
    training = buffers is not None and critic is not None

    def act_fn(i, x, human_action):
        if greedy:
            return np.asarray(nets.forward(actor, x)), "ai"
        return select_action(actor, x, k, cfg, human_action, rng)

    steps = 0
    termination = Termination.RUNNING
    while True:
        detections = observe_enemies(state, scfg, rng)
        tracks = fuse(detections, [tr for tr in tracks if tr.age <= 60])
        human_inputs = human_source(state.t) if human_source else None
        tick_rh = reward_source(state.t) if reward_source else 0.0

        # Close out last tick's transitions now that successor states exist.
        if training and pending:
            _complete(pending, pending_rewards, pending_rh, state, tracks,
                      cfg, buffers, done=0, wcfg=wcfg)
        actions, skeletons, assignment = control_step(
            state, tracks, act_fn, wcfg, advisor=advisor,
            human_inputs=human_inputs, scale=cfg.state_scale)
        if record_trajectory:
            _log_tick(trajectory, state)
        outcome = step_world(state, actions,
                             [1.0] * len(state.radars), wcfg, rng,
                             enemy_paths=mission.enemy_paths)
        team_r = outcome.r_track + outcome.r_neut
        total_return += discount * team_r
        discount *= wcfg.gamma
        steps += 1

        if training:
            rewards = per_drone_rewards(state, actions, wcfg, outcome.r_track)
            pending = [sk for sk in skeletons if sk is not None]
            pending_rewards = [rewards[sk.drone_index] for sk in pending]
            pending_rh = tick_rh
            if len(buffers) >= max(cfg.warmup, cfg.n_b):
                batch = sample_batch(buffers, cfg, rng)
                human_slots += sum(tr.source == "human" for tr in batch)
                total_slots += len(batch)
                targets = q_target(batch, critic, actor, cfg)
                scale = cfg.lr_scale(k)
                critic_losses.append(
                    critic_step(critic, batch, targets, cfg, scale))
                actor_losses.append(
                    actor_step(actor, critic, batch, cfg, scale))

        state = outcome.next
        if on_tick is not None:
            on_tick(state, outcome)
        if outcome.termination is not Termination.RUNNING:
            termination = outcome.termination
            if record_trajectory:
                _log_tick(trajectory, state)
            if training and pending:
                _complete(pending, pending_rewards, pending_rh, state, tracks,
                          cfg, buffers, done=1, wcfg=wcfg)
            break

    return EpisodeResult(
        steps=steps, return_=total_return, termination=termination,
        critic_loss=float(np.mean(critic_losses)) if critic_losses else 0.0,
        actor_loss=float(np.mean(actor_losses)) if actor_losses else 0.0,
        human_sample_fraction=(human_slots / total_slots) if total_slots else 0.0,
        trajectory=trajectory)


def _complete(pending, rewards, tick_rh, state, tracks, cfg, buffers, done,
              wcfg=None):
    from .control import assign_closest, guidance_state
    by_index = {tr.enemy_index: tr for tr in tracks}
    p_defend = np.asarray(wcfg.p_ra, float) if wcfg is not None else None
    assignment = assign_closest(tracks, state.allies, p_defend=p_defend) \
        if not done else None
    for sk, r in zip(pending, rewards):
        x_next = sk.x
        if not done and assignment is not None and wcfg is not None:
            ei = assignment.get(sk.drone_index)
            if ei is not None and ei in by_index:
                x_next = guidance_state(state.allies[sk.drone_index],
                                        by_index[ei], wcfg, cfg.state_scale)
        buffers.push(Transition(
            x=sk.x, u=sk.u, r=r * cfg.reward_scale,
            r_h=tick_rh + sk.advisor_bonus, x_next=x_next, done=done,
            source=sk.source))


def _log_tick(trajectory: list, state: WorldState) -> None:
    for i, d in enumerate(state.allies):
        trajectory.append((state.t, "ally", i, d.p[0], d.p[1], d.phi,
                           d.functional))
    for i, e in enumerate(state.enemies):
        trajectory.append((state.t, "enemy", i, e.p[0], e.p[1], 0.0,
                           e.functional))
    for i, gr in enumerate(state.radars):
        trajectory.append((state.t, "radar", i, gr.p[0], gr.p[1], gr.phi, 1))


MissionFactory = Callable[[int, np.random.Generator], Mission]


def train(mission_factory: MissionFactory, advisor: Optional[Callable],
          cfg: TrainerConfig, episodes: int, rng: np.random.Generator,
          out_dir: Optional[Path] = None,
          metrics_path: Optional[Path] = None) -> tuple[Net, Net, list[dict]]:
    """Full training loop; emits periodic checkpoints and per-episode metrics."""
    actor = Net.init(cfg.actor_layers, nets.ACTOR_HEAD, rng)
    critic = Net.init(cfg.critic_layers, nets.CRITIC_HEAD, rng)
    buffers = ReplayBuffers(cfg.buffer_capacity)
    metrics: list[dict] = []

    def checkpoint(ep: int) -> None:
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            nets.save_checkpoint(actor, critic, cfg.to_dict(),
                                 out_dir / f"checkpoint_{ep:05d}.ckpt")

    checkpoint(0)
    for ep in range(episodes):
        mission = mission_factory(ep, rng)
        res = run_episode(mission, actor, cfg, rng, k=ep, advisor=advisor,
                          critic=critic, buffers=buffers)
        metrics.append({
            "episode": ep, "steps": res.steps, "return": res.return_,
            "termination": res.termination.value,
            "epsilon": cfg.epsilon(ep),
            "human_sample_fraction": res.human_sample_fraction,
            "critic_loss": res.critic_loss, "actor_loss": res.actor_loss,
        })
        if (ep + 1) % cfg.checkpoint_interval == 0:
            checkpoint(ep + 1)
    if episodes % cfg.checkpoint_interval != 0:
        checkpoint(episodes)
    if metrics_path is not None:
        write_metrics(metrics, metrics_path)
    return actor, critic, metrics


METRICS_FIELDS = ["episode", "steps", "return", "termination", "epsilon",
                  "human_sample_fraction", "critic_loss", "actor_loss"]


def write_metrics(metrics: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=METRICS_FIELDS)
        writer.writeheader()
        for row in metrics:
            writer.writerow({key: _fmt(row[key]) for key in METRICS_FIELDS})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v
