"""Stochastic observation of enemy drones and track fusion.

Four sensor families share one detection geometry (range + field of view +
per-step detection probability): ground radar, drone radar, EO sensor and RF
sensor.  All are pure functions of their inputs and an explicit random
stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .world import AllyDrone, EnemyDrone, Vec2, WorldState, wrap_angle


@dataclass
class SensorConfig:
    r_gr: float = 3000.0
    r_ad: float = 500.0
    r_eo: float = 250.0
    r_rf: float = 2000.0
    # Payload-identification range of the EO sensor; not pinned by any
    # published value, defaults to half the EO range.
    r_eo_payload: float = 125.0
    rho_gr: float = math.pi / 2.0
    rho_ad: float = math.pi / 2.0
    rho_eo: float = math.pi / 3.0
    pr_gr: float = 0.95
    pr_dr: float = 0.95
    pr_eo: float = 0.95
    pr_rf: float = 0.95
    d_de: float = 10.0
    d_ae: float = math.pi / 180.0

    def __post_init__(self) -> None:
        for name in ("r_gr", "r_ad", "r_eo", "r_rf", "r_eo_payload",
                     "d_de", "d_ae"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("rho_gr", "rho_ad", "rho_eo"):
            if not 0.0 <= getattr(self, name) <= 2.0 * math.pi:
                raise ValueError(f"{name} must be in [0, 2*pi]")
        for name in ("pr_gr", "pr_dr", "pr_eo", "pr_rf"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0,1]")


class SensorKind(enum.Enum):
    GR = "gr"
    DRONE_RADAR = "drone_radar"
    EO = "eo"
    RF = "rf"


@dataclass
class Detection:
    enemy_index: int
    observed_pos: Vec2
    sensor_kind: SensorKind
    payload_seen: Optional[int] = None


@dataclass
class TrackEstimate:
    enemy_index: int
    est_pos: Vec2
    age: int = 0

    @property
    def stale(self) -> bool:
        return self.age > 0


def noise_offset(delta_p: Vec2, cfg: SensorConfig,
                 rng: np.random.Generator) -> Vec2:
    """Line-of-sight plus angular measurement noise for one relative position.

    The line-of-sight term has magnitude at most d_de/2 regardless of range;
    the angular term is perpendicular to delta_p and grows with range.
    """
    delta_p = np.asarray(delta_p, dtype=np.float64)
    dist = float(np.linalg.norm(delta_p))
    u_d = rng.uniform(-0.5, 0.5)
    u_a = rng.uniform(-0.5, 0.5)
    if dist == 0.0:
        return np.zeros(2)
    perp = np.array([delta_p[1], -delta_p[0]])
    return delta_p / dist * cfg.d_de * u_d + perp * cfg.d_ae * u_a


def detect(target_pos: Vec2, sensor_pos: Vec2, sensor_heading: float,
           range_: float, fov: float, prob: float, cfg: SensorConfig,
           rng: np.random.Generator) -> Optional[Vec2]:
    """Generic range/FOV/probability detection; returns a noisy position or None.

    The random stream is consumed only for geometrically visible targets, so
    misses outside range or FOV are certain regardless of draws.
    """
    if not 0.0 <= fov <= 2.0 * math.pi:
        raise ValueError("fov must be in [0, 2*pi]")
    delta = np.asarray(target_pos, dtype=np.float64) - np.asarray(
        sensor_pos, dtype=np.float64)
    dist = float(np.linalg.norm(delta))
    if dist > range_:
        return None
    bearing = wrap_angle(math.atan2(delta[1], delta[0]) - sensor_heading)
    if abs(bearing) > fov / 2.0:
        return None
    if rng.random() >= prob:
        return None
    return np.asarray(target_pos, dtype=np.float64) + noise_offset(delta, cfg, rng)


def detect_eo(drone: AllyDrone, enemy: EnemyDrone, cfg: SensorConfig,
              rng: np.random.Generator,
              enemy_index: int = 0) -> Optional[Detection]:
    if not drone.functional:
        raise ValueError("EO sensing requires a functional drone")
    pos = detect(enemy.p, drone.p, wrap_angle(drone.phi + drone.phi_eo),
                 cfg.r_eo, cfg.rho_eo, cfg.pr_eo, cfg, rng)
    if pos is None:
        return None
    payload = None
    if np.linalg.norm(enemy.p - drone.p) <= cfg.r_eo_payload:
        payload = enemy.payload
    return Detection(enemy_index=enemy_index, observed_pos=pos,
                     sensor_kind=SensorKind.EO, payload_seen=payload)


def detect_rf(sensor_pos: Vec2, enemy: EnemyDrone, cfg: SensorConfig,
              rng: np.random.Generator,
              enemy_index: int = 0) -> Optional[Detection]:
    if not enemy.gcs_controlled:
        return None
    # RF sensing is omnidirectional: full 2*pi field of view.
    pos = detect(enemy.p, sensor_pos, 0.0, cfg.r_rf, 2.0 * math.pi,
                 cfg.pr_rf, cfg, rng)
    if pos is None:
        return None
    return Detection(enemy_index=enemy_index, observed_pos=pos,
                     sensor_kind=SensorKind.RF)


def observe_enemies(state: WorldState, cfg: SensorConfig,
                    rng: np.random.Generator) -> list[Detection]:
    """One sensing pass of the whole ally side over all functional enemies.

    Vectorized over enemies per sensor so large engagements stay cheap; the
    per-pair semantics match detect / detect_eo / detect_rf.
    """
    enemies = [(i, e) for i, e in enumerate(state.enemies) if e.functional]
    if not enemies:
        return []
    idx = np.array([i for i, _ in enemies])
    ep = np.array([e.p for _, e in enemies])          # (m, 2)
    gcs = np.array([e.gcs_controlled for _, e in enemies], dtype=bool)
    payloads = np.array([e.payload for _, e in enemies])
    detections: list[Detection] = []

    def scan(sensor_pos, heading, range_, fov, prob, kind,
             mask=None, payload_range=None):
        delta = ep - np.asarray(sensor_pos)
        dist = np.linalg.norm(delta, axis=1)
        visible = dist <= range_
        if fov < 2.0 * math.pi:
            bearing = np.arctan2(delta[:, 1], delta[:, 0]) - heading
            bearing = (bearing + math.pi) % (2.0 * math.pi) - math.pi
            visible &= np.abs(bearing) <= fov / 2.0
        if mask is not None:
            visible &= mask
        for j in np.nonzero(visible)[0]:
            if rng.random() >= prob:
                continue
            obs = ep[j] + noise_offset(delta[j], cfg, rng)
            payload = None
            if payload_range is not None and dist[j] <= payload_range:
                payload = int(payloads[j])
            detections.append(Detection(enemy_index=int(idx[j]),
                                        observed_pos=obs, sensor_kind=kind,
                                        payload_seen=payload))

    for gr in state.radars:
        scan(gr.p, gr.phi, cfg.r_gr, cfg.rho_gr, cfg.pr_gr, SensorKind.GR)
    for d in state.allies:
        if not d.functional:
            continue
        if d.radar_enabled:
            scan(d.p, d.phi, cfg.r_ad, cfg.rho_ad, cfg.pr_dr,
                 SensorKind.DRONE_RADAR)
        scan(d.p, wrap_angle(d.phi + d.phi_eo), cfg.r_eo, cfg.rho_eo,
             cfg.pr_eo, SensorKind.EO, payload_range=cfg.r_eo_payload)
        scan(d.p, 0.0, cfg.r_rf, 2.0 * math.pi, cfg.pr_rf, SensorKind.RF,
             mask=gcs)
    return detections


def fuse(detections: Sequence[Detection],
         previous: Sequence[TrackEstimate]) -> list[TrackEstimate]:
    """Centroid-per-enemy fusion with carry-forward of undetected tracks."""
    by_enemy: dict[int, list[Vec2]] = {}
    for d in detections:
        by_enemy.setdefault(d.enemy_index, []).append(d.observed_pos)
    tracks: dict[int, TrackEstimate] = {}
    for prev in previous:
        tracks[prev.enemy_index] = TrackEstimate(
            enemy_index=prev.enemy_index, est_pos=prev.est_pos.copy(),
            age=prev.age + 1)
    for i, positions in by_enemy.items():
        tracks[i] = TrackEstimate(enemy_index=i,
                                  est_pos=np.mean(positions, axis=0), age=0)
    return [tracks[i] for i in sorted(tracks)]
