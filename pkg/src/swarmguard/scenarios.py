"""Scenario generation: random engagements, the overloaded attack and the
scripted decoy attack.

All layouts are deterministic functions of the spec and the random stream, so
trials regenerate bit-exactly from (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sensing import SensorConfig
from .training import Mission
from .world import (AllyDrone, EnemyDrone, GroundRadar, ScriptedPath, Vec2,
                    WorldConfig, WorldState, vec2)

KINDS = ("random", "overloaded", "decoy", "custom")

# Decoy scenario timing: decoys orbit until this tick, then depart outward
# far enough to stray past their GCS operating range.
DECOY_DEPART_TICK = 500.0


@dataclass
class ScenarioSpec:
    kind: str = "random"
    n_ad: int = 1
    n_ed: int = 1
    seed: int = 0
    world: WorldConfig = field(default_factory=WorldConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    scripted_paths: Optional[list[Optional[ScriptedPath]]] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind: {self.kind}")

    @classmethod
    def make(cls, kind: str, seed: int = 0, n_ad: Optional[int] = None,
             n_ed: Optional[int] = None, world: Optional[WorldConfig] = None,
             sensors: Optional[SensorConfig] = None) -> "ScenarioSpec":
        if kind == "overloaded":
            n_ad, n_ed = n_ad or 50, n_ed or 100
        elif kind == "decoy":
            n_ad, n_ed = n_ad or 5, n_ed or 3
        else:
            n_ad, n_ed = n_ad or 1, n_ed or 1
        world = world or WorldConfig()
        world.n_ad, world.n_ed = n_ad, n_ed
        return cls(kind=kind, n_ad=n_ad, n_ed=n_ed, seed=seed, world=world,
                   sensors=sensors or SensorConfig())


def _ground_radars(cfg: WorldConfig, rng: np.random.Generator) -> list[GroundRadar]:
    base = vec2(2000.0, 3000.0)
    radars = []
    for i in range(cfg.n_gr):
        offset = vec2(0.0, 0.0) if i == 0 else vec2(
            rng.uniform(-500, 500), rng.uniform(-500, 500))
        radars.append(GroundRadar(p=base + offset,
                                  phi=rng.uniform(-math.pi, math.pi)))
    return radars


def _ally_ring(cfg: WorldConfig, n: int, rng: np.random.Generator,
               r_lo: float = 150.0, r_hi: float = 250.0) -> list[AllyDrone]:
    allies = []
    for i in range(n):
        ang = 2.0 * math.pi * i / n + rng.uniform(-0.2, 0.2)
        radius = rng.uniform(r_lo, r_hi)
        p = cfg.p_ra + radius * np.array([math.cos(ang), math.sin(ang)])
        allies.append(AllyDrone(p=p, phi=rng.uniform(-math.pi, math.pi),
                                p_gc=cfg.p_ra.copy()))
    return allies


def _perimeter_enemy(cfg: WorldConfig, rng: np.random.Generator,
                     d_lo: float = 2500.0, d_hi: float = 2900.0,
                     bearing: Optional[float] = None) -> EnemyDrone:
    ang = rng.uniform(-math.pi, math.pi) if bearing is None else bearing
    dist = rng.uniform(d_lo, d_hi)
    p = cfg.p_ra + dist * np.array([math.cos(ang), math.sin(ang)])
    return EnemyDrone(p=p, payload=int(rng.integers(1, 4)),
                      gcs_controlled=1, p_egcs=p.copy())


def generate_scenario(spec: ScenarioSpec,
                      rng: np.random.Generator) -> Mission:
    cfg = spec.world
    if spec.kind == "random":
        allies = _ally_ring(cfg, spec.n_ad, rng)
        enemies = [_perimeter_enemy(cfg, rng) for _ in range(spec.n_ed)]
        paths = spec.scripted_paths
    elif spec.kind == "overloaded":
        allies = _ally_ring(cfg, spec.n_ad, rng, r_lo=150.0, r_hi=300.0)
        enemies = []
        # Enemies arrive in tight clusters of four: one EMP burst can take
        # out a whole cluster, which is what makes 50-vs-100 winnable.  The
        # clusters stream down one attack axis with staggered depth, so
        # they arrive as a sustained column instead of hitting every bearing
        # at once, and each
        # cluster's ground station sits partway down its own attack line so
        # the full run stays inside the GCS operating range.
        n_clusters = max(1, spec.n_ed // 4)
        axis = rng.uniform(-math.pi, math.pi)
        for c in range(n_clusters):
            ang = axis + rng.uniform(-0.5, 0.5)
            dist = rng.uniform(2300.0, 5300.0)
            u = np.array([math.cos(ang), math.sin(ang)])
            center = cfg.p_ra + dist * u
            egcs = cfg.p_ra + 0.45 * dist * u
            size = min(4, spec.n_ed - len(enemies))
            for _ in range(size):
                p = center + rng.uniform(-2.5, 2.5, size=2)
                enemies.append(EnemyDrone(p=p, payload=int(rng.integers(1, 4)),
                                          gcs_controlled=1,
                                          p_egcs=egcs.copy()))
        while len(enemies) < spec.n_ed:
            enemies.append(_perimeter_enemy(cfg, rng))
        paths = spec.scripted_paths
    elif spec.kind == "decoy":
        allies = _ally_ring(cfg, spec.n_ad, rng, r_lo=180.0, r_hi=220.0)
        enemies, paths = _decoy_layout(cfg, spec.n_ed, rng)
    elif spec.kind == "custom":
        if spec.scripted_paths is None:
            raise ValueError("custom scenario requires scripted paths")
        allies = _ally_ring(cfg, spec.n_ad, rng)
        paths = spec.scripted_paths
        enemies = [EnemyDrone(p=p.position_at(1.0), payload=3,
                              gcs_controlled=1,
                              p_egcs=p.position_at(1.0).copy())
                   for p in paths if p is not None]
    else:  # pragma: no cover - guarded by ScenarioSpec
        raise ValueError(spec.kind)
    world = WorldState(allies=allies, enemies=enemies,
                       radars=_ground_radars(cfg, rng), t=1, absorbing=1)
    return Mission(world=world, world_cfg=cfg, sensor_cfg=spec.sensors,
                   enemy_paths=paths)


def _orbit_then_depart(center: Vec2, radius: float, phase: float,
                       direction: float, speed: float,
                       depart_tick: float) -> ScriptedPath:
    """Circle the restricted area, then run outward past GCS range."""
    omega = direction * speed / radius
    n_seg = 36
    times = [1.0]
    points = [center + radius * np.array([math.cos(phase), math.sin(phase)])]
    seg_dt = (depart_tick - 1.0) / n_seg
    for s in range(1, n_seg + 1):
        t = 1.0 + s * seg_dt
        ang = phase + omega * (t - 1.0)
        times.append(t)
        points.append(center + radius * np.array([math.cos(ang), math.sin(ang)]))
    # Departure leg: radially outward 4000 m, enough to break the GCS link.
    last = points[-1]
    away = (last - center) / np.linalg.norm(last - center)
    far = last + 4000.0 * away
    times.append(depart_tick + 4000.0 / speed)
    points.append(far)
    return ScriptedPath(points=np.array(points), times=np.array(times))


def _decoy_layout(cfg: WorldConfig, n_ed: int, rng: np.random.Generator
                  ) -> tuple[list[EnemyDrone], list[Optional[ScriptedPath]]]:
    enemies: list[EnemyDrone] = []
    paths: list[Optional[ScriptedPath]] = []
    n_decoys = min(2, n_ed - 1) if n_ed > 1 else 0
    direction = 1.0 if rng.random() < 0.5 else -1.0
    for d in range(n_decoys):
        radius = rng.uniform(280.0, 340.0)
        phase = rng.uniform(-math.pi, math.pi)
        path = _orbit_then_depart(cfg.p_ra, radius, phase, direction,
                                  speed=cfg.v_max_sr,
                                  depart_tick=DECOY_DEPART_TICK)
        p0 = path.position_at(1.0)
        enemies.append(EnemyDrone(p=p0, payload=int(rng.integers(1, 4)),
                                  gcs_controlled=1, p_egcs=p0.copy()))
        paths.append(path)
    # The real threat: a flanking dogleg into the restricted area.
    bearing = rng.uniform(-math.pi, math.pi)
    dist = rng.uniform(2500.0, 2800.0)
    spawn = cfg.p_ra + dist * np.array([math.cos(bearing), math.sin(bearing)])
    mid = cfg.p_ra + 0.5 * (spawn - cfg.p_ra)
    perp = np.array([-(spawn - cfg.p_ra)[1], (spawn - cfg.p_ra)[0]])
    perp /= np.linalg.norm(perp)
    mid = mid + rng.uniform(500.0, 900.0) * perp
    leg1 = float(np.linalg.norm(mid - spawn))
    leg2 = float(np.linalg.norm(cfg.p_ra - mid))
    t_mid = 1.0 + leg1 / cfg.v_max_sr
    t_end = t_mid + leg2 / cfg.v_max_sr
    threat_path = ScriptedPath(points=np.array([spawn, mid, cfg.p_ra]),
                               times=np.array([1.0, t_mid, t_end]))
    for _ in range(n_ed - n_decoys):
        enemies.append(EnemyDrone(p=spawn.copy(), payload=3,
                                  gcs_controlled=1, p_egcs=spawn.copy()))
        paths.append(threat_path)
    return enemies, paths


def threat_index(spec_kind: str, paths) -> int:
    """Index of the non-decoy enemy in a decoy scenario (last one)."""
    if spec_kind != "decoy":
        raise ValueError("threat_index only applies to decoy scenarios")
    return len(paths) - 1
