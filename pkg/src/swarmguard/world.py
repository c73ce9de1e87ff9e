"""Ground-truth world dynamics: kinematics, neutralization, rewards, termination.

Everything here is deterministic given the random stream passed in; the world
holds no hidden RNG state, so trials replay bit-exactly from a seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

Vec2 = np.ndarray  # shape (2,), float64


def vec2(x: float, y: float) -> Vec2:
    return np.array([float(x), float(y)], dtype=np.float64)


def wrap_angle(phi: float) -> float:
    """Wrap an angle into [-pi, pi] by adding multiples of 2*pi."""
    if not math.isfinite(phi):
        raise ValueError(f"non-finite angle: {phi!r}")
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class WorldConfig:
    n_ad: int = 1
    n_ed: int = 1
    n_gr: int = 1
    p_ra: Vec2 = field(default_factory=lambda: vec2(3000.0, 3000.0))
    r_ra: float = 100.0
    r_gc: float = 3000.0
    r_egcs: float = 3000.0
    r_n: float = 10.0
    v_max_sr: float = 10.0
    v_max_as: float = 0.2
    v_max_eo: float = math.pi
    v_max_gr: float = 0.2
    phi_max_eo: float = 300.0 / 180.0 * math.pi
    pr_empd: float = 0.25
    gamma: float = 0.95
    timelimit: int = 2000
    # GCS range is tracked but by default imposes nothing on allies.
    enforce_ally_gcs_range: bool = False

    def __post_init__(self) -> None:
        self.p_ra = np.asarray(self.p_ra, dtype=np.float64)
        for name in ("r_ra", "r_gc", "r_egcs", "r_n", "v_max_sr", "v_max_as",
                     "v_max_eo", "v_max_gr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.pr_empd <= 1.0:
            raise ValueError("pr_empd must be in [0,1]")
        if not 0.0 <= self.phi_max_eo <= 300.0 / 180.0 * math.pi + 1e-12:
            raise ValueError("phi_max_eo out of range")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0,1)")
        if self.timelimit < 1:
            raise ValueError("timelimit must be >= 1")


@dataclass
class AllyDrone:
    p: Vec2
    phi: float = 0.0
    phi_eo: float = 0.0
    functional: int = 1
    gcs_controlled: int = 1
    p_gc: Vec2 = field(default_factory=lambda: vec2(3000.0, 3000.0))
    radar_enabled: int = 1
    emp_used: int = 0

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        self.p_gc = np.asarray(self.p_gc, dtype=np.float64)


@dataclass
class AllyAction:
    u_ma: float = 0.0   # movement angle, [-pi, pi]
    u_sr: float = 0.0   # speed ratio, [0, 1]
    u_heading: float = 0.0  # [-1, 1]
    u_eo: float = 0.0   # [-1, 1]
    u_er: int = 1
    u_emp: int = 0
    u_ej: int = 0
    u_gpss: int = 0
    u_eh: int = 0

    def validate(self) -> "AllyAction":
        if not -math.pi - 1e-9 <= self.u_ma <= math.pi + 1e-9:
            raise ValueError(f"u_ma out of range: {self.u_ma}")
        if not 0.0 <= self.u_sr <= 1.0:
            raise ValueError(f"u_sr out of range: {self.u_sr}")
        if not -1.0 <= self.u_heading <= 1.0:
            raise ValueError(f"u_heading out of range: {self.u_heading}")
        if not -1.0 <= self.u_eo <= 1.0:
            raise ValueError(f"u_eo out of range: {self.u_eo}")
        for name in ("u_er", "u_emp", "u_ej", "u_gpss", "u_eh"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        return self


@dataclass
class EnemyDrone:
    p: Vec2
    payload: int = 1  # 0 safe, 1 unknown, 2 moderate, 3 dangerous
    gcs_controlled: int = 1
    p_egcs: Vec2 = field(default_factory=lambda: vec2(0.0, 0.0))
    functional: int = 1

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        self.p_egcs = np.asarray(self.p_egcs, dtype=np.float64)
        if self.payload not in (0, 1, 2, 3):
            raise ValueError(f"payload out of range: {self.payload}")


@dataclass
class GroundRadar:
    p: Vec2
    phi: float = 0.0

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        self.phi = wrap_angle(self.phi)


@dataclass
class WorldState:
    allies: list[AllyDrone]
    enemies: list[EnemyDrone]
    radars: list[GroundRadar]
    t: int = 1
    absorbing: int = 1  # 1 while running, latches to 0 on termination


class Termination(enum.Enum):
    RUNNING = "running"
    TIMEOUT = "timeout"
    SUCCESS = "success"
    DEFEAT = "defeat"


@dataclass
class StepOutcome:
    next: WorldState
    r_track: float
    r_neut: float
    termination: Termination


# A scripted enemy follows an explicit position-vs-time curve instead of the
# default straight run at the restricted area.
@dataclass
class ScriptedPath:
    points: np.ndarray  # (k, 2)
    times: np.ndarray   # (k,), strictly increasing, starts at the spawn tick
    loop: bool = False

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        self.times = np.asarray(self.times, dtype=np.float64)

    def position_at(self, t: float) -> Vec2:
        times, pts = self.times, self.points
        if self.loop:
            span = times[-1] - times[0]
            t = times[0] + (t - times[0]) % span
        if t <= times[0]:
            return pts[0].copy()
        if t >= times[-1]:
            return pts[-1].copy()
        i = int(np.searchsorted(times, t) - 1)
        w = (t - times[i]) / (times[i + 1] - times[i])
        return (1.0 - w) * pts[i] + w * pts[i + 1]


EnemyPaths = Optional[Sequence[Optional[ScriptedPath]]]


def step_ground_radar(gr: GroundRadar, u: float, cfg: WorldConfig) -> GroundRadar:
    if abs(u) > 1.0:
        raise ValueError(f"radar action out of range: {u}")
    return GroundRadar(p=gr.p.copy(), phi=wrap_angle(gr.phi + cfg.v_max_gr * u))


def step_ally(drone: AllyDrone, a: AllyAction, cfg: WorldConfig,
              rng: np.random.Generator) -> AllyDrone:
    a.validate()
    if not drone.functional:
        return replace(drone, p=drone.p.copy(), p_gc=drone.p_gc.copy())
    p = drone.p + cfg.v_max_sr * a.u_sr * np.array(
        [math.cos(a.u_ma), math.sin(a.u_ma)])
    phi = wrap_angle(drone.phi + cfg.v_max_as * a.u_heading)
    phi_eo = float(np.clip(drone.phi_eo + cfg.v_max_eo * a.u_eo,
                           -cfg.phi_max_eo, cfg.phi_max_eo))
    emp_used = int(a.u_emp or drone.emp_used)
    # Self-destruction risk keys off emp_used at the start of the step: the
    # step on which the EMP is first fired is always survived.
    functional = 1
    if drone.emp_used:
        functional = int(rng.random() < 1.0 - cfg.pr_empd)
    return AllyDrone(p=p, phi=phi, phi_eo=phi_eo, functional=functional,
                     gcs_controlled=drone.gcs_controlled, p_gc=drone.p_gc.copy(),
                     radar_enabled=int(a.u_er), emp_used=emp_used)


def neutralize_enabled(a: AllyAction, enemy_gcs_controlled: int) -> int:
    g = int(enemy_gcs_controlled)
    return int(a.u_emp or a.u_gpss or (g and a.u_ej) or (g and a.u_eh))


def _ally_positions(state: WorldState) -> np.ndarray:
    return np.array([d.p for d in state.allies]).reshape(len(state.allies), 2)


def _enemy_positions(state: WorldState) -> np.ndarray:
    return np.array([e.p for e in state.enemies]).reshape(len(state.enemies), 2)


def update_enemies(state: WorldState, actions: Sequence[AllyAction],
                   cfg: WorldConfig, paths: EnemyPaths = None) -> list[EnemyDrone]:
    """Neutralization / GCS-range death, then movement of the survivors.

    All death checks use positions and functional flags at the current tick,
    matching the enemy state recursion.
    """
    if len(actions) != len(state.allies):
        raise ValueError("one action per ally drone required")
    if not state.enemies:
        return []
    ap = _ally_positions(state)
    ep = _enemy_positions(state)
    af = np.array([d.functional for d in state.allies], dtype=bool)
    dists = np.linalg.norm(ep[:, None, :] - ap[None, :, :], axis=2)  # (ne, na)

    out: list[EnemyDrone] = []
    for i, e in enumerate(state.enemies):
        functional = e.functional
        if functional:
            killer = False
            for j, a in enumerate(actions):
                if af[j] and neutralize_enabled(a, e.gcs_controlled) \
                        and dists[i, j] <= cfg.r_n:
                    killer = True
                    break
            if killer:
                functional = 0
            elif e.gcs_controlled and \
                    np.linalg.norm(e.p - e.p_egcs) > cfg.r_egcs:
                functional = 0
        p = e.p.copy()
        if functional:
            path = paths[i] if paths is not None and i < len(paths) else None
            if path is not None:
                p = path.position_at(state.t + 1)
            else:
                to_ra = cfg.p_ra - e.p
                d = np.linalg.norm(to_ra)
                if d > 1e-12:
                    p = e.p + to_ra / d * min(cfg.v_max_sr, d)
        out.append(EnemyDrone(p=p, payload=e.payload,
                              gcs_controlled=e.gcs_controlled,
                              p_egcs=e.p_egcs.copy(), functional=functional))
    return out


def tracking_reward(state: WorldState, actions: Sequence[AllyAction]) -> float:
    if len(actions) != len(state.allies):
        raise ValueError("one action per ally drone required")
    total = 0.0
    for i, d in enumerate(state.allies):
        if not d.functional:
            continue
        for e in state.enemies:
            if e.functional:
                l1 = float(np.abs(d.p - e.p).sum())
                total -= e.payload * math.tanh(l1)
        a = actions[i]
        total -= math.tanh(abs(a.u_ma) + abs(a.u_sr))
    return total


def neutralization_reward(state: WorldState, actions: Sequence[AllyAction],
                          cfg: WorldConfig) -> float:
    if len(actions) != len(state.allies):
        raise ValueError("one action per ally drone required")
    total = 0.0
    for i, d in enumerate(state.allies):
        if not d.functional:
            continue
        a = actions[i]
        for e in state.enemies:
            if e.functional and neutralize_enabled(a, e.gcs_controlled) \
                    and np.linalg.norm(d.p - e.p) <= cfg.r_n:
                total += e.payload
    return total


def evaluate_termination(state: WorldState, cfg: WorldConfig) -> Termination:
    if state.enemies:
        dists = np.linalg.norm(_enemy_positions(state) - cfg.p_ra, axis=1)
        if bool(np.any(dists <= cfg.r_ra)):
            return Termination.DEFEAT
        if all(e.functional == 0 for e in state.enemies) and \
                bool(np.all(dists > cfg.r_ra)):
            return Termination.SUCCESS
    else:
        return Termination.SUCCESS
    if state.t > cfg.timelimit:
        return Termination.TIMEOUT
    return Termination.RUNNING


def step_world(state: WorldState, ally_actions: Sequence[AllyAction],
               radar_actions: Sequence[float], cfg: WorldConfig,
               rng: np.random.Generator,
               enemy_paths: EnemyPaths = None) -> StepOutcome:
    if not state.absorbing:
        raise ValueError("cannot step a terminated world")
    if len(radar_actions) != len(state.radars):
        raise ValueError("one action per ground radar required")

    # Rewards are earned against the state the actions were chosen in.
    r_track = state.absorbing * tracking_reward(state, ally_actions)
    r_neut = state.absorbing * neutralization_reward(state, ally_actions, cfg)

    enemies = update_enemies(state, ally_actions, cfg, paths=enemy_paths)
    allies = [step_ally(d, a, cfg, rng)
              for d, a in zip(state.allies, ally_actions)]
    radars = [step_ground_radar(gr, u, cfg)
              for gr, u in zip(state.radars, radar_actions)]
    nxt = WorldState(allies=allies, enemies=enemies, radars=radars,
                     t=state.t + 1, absorbing=state.absorbing)
    term = evaluate_termination(nxt, cfg)
    if term is not Termination.RUNNING:
        nxt.absorbing = 0
    return StepOutcome(next=nxt, r_track=r_track, r_neut=r_neut,
                       termination=term)
