"""Three-layer control stack: supervision override, threat-ordered tactics,
and the per-drone policy, plus the pseudo-human advisors.

The per-drone state handed to the policy is a normalized relative position
(the tactical guidance vector toward the assigned enemy), so its dimension
is fleet-size independent and the steering law the drone layer has to
realize is a function of that single vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import nets
from .sensing import TrackEstimate
from .world import AllyAction, AllyDrone, Vec2, WorldConfig, WorldState, \
    neutralize_enabled, wrap_angle

# Tracks older than this many steps are no longer assignable.  Kept short:
# anything inside engagement range is under near-continuous RF coverage, and
# a dead target's final estimate must stop attracting drones quickly.
MAX_ASSIGNABLE_TRACK_AGE = 5

RANK_SUPERVISOR = 0
RANK_HUMAN = 1
RANK_ADVISOR = 2
RANK_POLICY = 3


@dataclass
class ControlProposal:
    source_priority: int
    action: AllyAction


@dataclass
class AdvisorOutput:
    action: Optional[np.ndarray]  # (u_ma, u_sr) or None
    reward_bonus: float = 0.0


def assign_closest(tracks: Sequence[TrackEstimate],
                   allies: Sequence[AllyDrone],
                   p_defend: Optional[Vec2] = None,
                   ) -> dict[int, Optional[int]]:
    """Greedy closest-enemy assignment; ties go to the lowest enemy index.

    With p_defend given, allocation is threat-ordered instead of purely
    drone-centric: tracks are ranked by distance to the defended point,
    and each track in turn claims up to max(3, allies/tracks) drones with
    the best intercept margin (track's remaining run minus the drone's own
    distance to the defended point).  At matched speeds a drone can only
    meet a target it can still get in front of, so the margin ranking
    reserves the innermost drones for the most imminent threats and keeps
    a saturation raid from drawing the whole defense onto its leading
    element.  Leftover drones after every track is at capacity fall back
    to their closest track.
    """
    usable = [tr for tr in tracks if tr.age <= MAX_ASSIGNABLE_TRACK_AGE]
    usable.sort(key=lambda tr: tr.enemy_index)
    assignment: dict[int, Optional[int]] = {
        i: None for i in range(len(allies))}
    if not usable:
        return assignment
    idle = [i for i, a in enumerate(allies) if a.functional]
    if p_defend is None:
        for i in idle:
            best = min(usable, key=lambda tr: (
                float(np.linalg.norm(tr.est_pos - allies[i].p)),
                tr.enemy_index))
            assignment[i] = best.enemy_index
        return assignment

    cap = max(3, -(-len(idle) // len(usable)))
    by_threat = sorted(usable, key=lambda tr: (
        float(np.linalg.norm(tr.est_pos - p_defend)), tr.enemy_index))
    pool = list(idle)
    for tr in by_threat:
        if not pool:
            break
        run = float(np.linalg.norm(tr.est_pos - p_defend))
        pool.sort(key=lambda i: (
            float(np.linalg.norm(allies[i].p - p_defend)) - run,
            float(np.linalg.norm(tr.est_pos - allies[i].p)), i))
        for i in pool[:cap]:
            assignment[i] = tr.enemy_index
        pool = pool[cap:]
    for i in pool:
        best = min(usable, key=lambda tr: (
            float(np.linalg.norm(tr.est_pos - allies[i].p)),
            tr.enemy_index))
        assignment[i] = best.enemy_index
    return assignment


def drone_state(ally: AllyDrone, assigned_track: TrackEstimate,
                scale: float = 3000.0) -> np.ndarray:
    return (assigned_track.est_pos - ally.p) / scale


def _aim_vector(p_ally: Vec2, est_pos: Vec2, r_n: float,
                p_defend: Optional[Vec2],
                guard_band: tuple[float, float] = (150.0, 500.0),
                ) -> np.ndarray:
    """Guidance vector from a drone to where it should actually fly.

    Close to the target this is the relative position itself; farther out
    it points at the intercept point on the target's inbound line (or a
    guard spot when the intercept would overextend past the guard band).
    Computed by the tactics layer so the drone layer below it stays a pure
    function of this single relative vector.
    """
    delta = est_pos - p_ally
    if p_defend is None:
        return np.asarray(delta, dtype=float)
    dist = float(np.linalg.norm(delta))
    if dist <= 3.0 * r_n:
        return np.asarray(delta, dtype=float)
    q = _intercept_point(p_ally, est_pos, p_defend)
    if float(np.linalg.norm(q - p_defend)) > guard_band[1]:
        q = _guard_point(p_ally, est_pos, p_defend, guard_band)
    return np.asarray(q - p_ally, dtype=float)


def guidance_state(ally: AllyDrone, assigned_track: TrackEstimate,
                   cfg: WorldConfig, scale: float = 50.0) -> np.ndarray:
    """Normalized guidance vector: the drone-layer policy input.

    Relative to the tactical guidance point instead of the raw track
    estimate, so the steering law the drone layer has to realize (fly
    along x, slow down when short) is a well-posed function of x alone.

    Encoded as d / (|d| + scale): direction is preserved at near-unit
    magnitude for every range while the norm still encodes distance
    (|x| = |d| / (|d| + scale) in [0, 1)).  A plain linear scaling puts
    the bulk of real engagement geometry within a few metres of the
    origin, where a direction task has unbounded frequency and networks
    cannot separate the inputs."""
    aim = _aim_vector(ally.p, assigned_track.est_pos, cfg.r_n,
                      np.asarray(cfg.p_ra, float))
    return aim / (float(np.linalg.norm(aim)) + scale)


def arbitrate(proposals: Sequence[ControlProposal]) -> AllyAction:
    if not proposals:
        raise ValueError("arbitrate requires at least one proposal")
    return min(proposals, key=lambda pr: pr.source_priority).action


def heuristic_advisor(ally: AllyDrone, track: TrackEstimate,
                      r_n: float = 10.0, shaping_gain: float = 0.0,
                      prev_distance: Optional[float] = None,
                      p_defend: Optional[Vec2] = None,
                      v_max: float = 10.0,
                      guard_band: tuple[float, float] = (150.0, 500.0),
                      ) -> AdvisorOutput:
    """Pursuit expert: run at the track, full speed until close.

    With p_defend given, far-away targets are intercepted on their inbound
    line instead of tail-chased; at equal speeds a pure tail chase never
    closes the gap, while meeting the attack line head-on always does.
    """
    delta = track.est_pos - ally.p
    dist = float(np.linalg.norm(delta))
    if p_defend is None:
        aim = delta
        u_sr = 1.0 if dist > r_n / 2.0 else 0.0
    else:
        # Never overextend: intercept points beyond the guard band are
        # replaced by a parking spot on the attacker's inbound line, where
        # the kill happens head-on instead of as a hopeless tail chase.
        aim = _aim_vector(ally.p, track.est_pos, r_n, p_defend, guard_band)
        if dist <= r_n / 2.0:
            u_sr = 0.0
        elif dist <= 3.0 * r_n:
            u_sr = 1.0
        else:
            u_sr = min(1.0, float(np.linalg.norm(aim)) / max(v_max, 1e-9))
    u_ma = math.atan2(aim[1], aim[0]) if np.linalg.norm(aim) > 0 else 0.0
    bonus = 0.0
    if shaping_gain and prev_distance is not None:
        bonus = shaping_gain * (prev_distance - dist)
    return AdvisorOutput(action=np.array([u_ma, u_sr]), reward_bonus=bonus)


def _intercept_point(p_ally: Vec2, p_target: Vec2, p_defend: Vec2,
                     margin: float = 30.0) -> Vec2:
    """Equal-speed intercept of a target running straight at p_defend.

    Finds the point q on the target's inbound ray that the ally reaches a
    travel margin before the target does: |q - p_ally| = s - margin where
    s is the target's run to q.  A zero-margin solution (equal arrival)
    leaves the ally exactly alongside, and any lag from turning or
    measurement noise then converts the engagement into an uncatchable
    tail chase; arriving early instead lets the target fly head-on through
    the waiting ally.  When no such point exists, fall back to guarding
    the defended point itself.
    """
    to_goal = p_defend - p_target
    goal_dist = float(np.linalg.norm(to_goal))
    if goal_dist < 1e-9:
        return p_target
    h = to_goal / goal_dist
    d0 = p_target - p_ally
    denom = 2.0 * (float(d0 @ h) + margin)
    if denom >= -1e-9:
        return p_defend
    s = (margin * margin - float(d0 @ d0)) / denom
    if s <= 0.0:
        return p_defend
    return p_target + min(s, goal_dist) * h


def _guard_point(p_ally: Vec2, p_target: Vec2, p_defend: Vec2,
                 band: tuple[float, float]) -> Vec2:
    """Parking spot on the target's inbound line at the ally's own radius.

    Keeping each drone at its current distance from the defended point makes
    repositioning purely tangential, so drones holding distinct radii never
    collapse onto a single spot where one passing attacker would draw
    simultaneous fire from all of them."""
    out = p_target - p_defend
    d = float(np.linalg.norm(out))
    if d < 1e-9:
        return p_defend
    out = out / d
    rho = float(np.linalg.norm(p_ally - p_defend))
    rho = float(np.clip(rho, band[0], min(band[1], d)))
    return p_defend + rho * out


def policy_advisor(checkpoint_path, ally: AllyDrone, track: TrackEstimate,
                   scale: float = 3000.0) -> AdvisorOutput:
    actor, _, _ = nets.load_checkpoint(checkpoint_path)
    u = nets.forward(actor, drone_state(ally, track, scale))
    return AdvisorOutput(action=np.asarray(u), reward_bonus=0.0)


def emp_trigger(ally: AllyDrone, tracks: Sequence[TrackEstimate],
                cfg: WorldConfig,
                allies: Sequence[AllyDrone] = ()) -> int:
    """Fire when a fresh estimate is in the envelope and no teammate is
    better placed for the shot.

    The pulse is omnidirectional, so the trigger is not gated on the
    drone's own assigned target: an unassigned attacker sweeping past at
    close range is exactly the shot that matters in a saturation attack.
    Two restrictions keep the fleet from spending itself:
    - only fresh estimates count: a carried-forward estimate of a target
      that has moved (or already died) is a likely miss, and after its
      first pulse a drone risks self-destruction every step, so each
      trigger pull mortgages the drone;
    - per track, only the single nearest functional teammate fires.  One
      pulse kills everything in range, so a second simultaneous firer adds
      nothing except one more mortgaged airframe.
    """
    for tr in tracks:
        if tr.age != 0:
            continue
        d = float(np.linalg.norm(tr.est_pos - ally.p))
        if d > cfg.r_n:
            continue
        if all(float(np.linalg.norm(tr.est_pos - other.p)) >= d
               for other in allies
               if other.functional and other is not ally):
            return 1
    return 0


def _rule_toggles(ally: AllyDrone, track: Optional[TrackEstimate],
                  u_ma: float, u_sr: float, cfg: WorldConfig,
                  u_emp: int = 0) -> AllyAction:
    """Fill the non-learned action fields from fixed rules.

    Heading steers toward the track bearing; the EMP toggle is computed by
    emp_trigger over all tracks and passed in.
    """
    u_heading = 0.0
    if track is not None:
        delta = track.est_pos - ally.p
        dist = float(np.linalg.norm(delta))
        bearing = math.atan2(delta[1], delta[0]) if dist > 0 else ally.phi
        u_heading = float(np.clip(wrap_angle(bearing - ally.phi)
                                  / max(cfg.v_max_as, 1e-9), -1.0, 1.0))
    return AllyAction(u_ma=float(wrap_angle(u_ma)),
                      u_sr=float(np.clip(u_sr, 0.0, 1.0)),
                      u_heading=u_heading, u_eo=0.0, u_er=1, u_emp=u_emp)


@dataclass
class TransitionSkeleton:
    drone_index: int
    x: np.ndarray
    u: np.ndarray            # executed (u_ma, u_sr)
    source: str              # "human" | "ai"
    advisor_bonus: float = 0.0


ActFn = Callable[[int, np.ndarray, Optional[np.ndarray]],
                 tuple[np.ndarray, str]]
AdvisorFn = Callable[[AllyDrone, TrackEstimate], AdvisorOutput]
SupervisorFn = Callable[[int, AllyDrone, AllyAction], Optional[np.ndarray]]


def control_step(world: WorldState, tracks: Sequence[TrackEstimate],
                 act_fn: ActFn, cfg: WorldConfig,
                 advisor: Optional[AdvisorFn] = None,
                 human_inputs: Optional[dict[int, np.ndarray]] = None,
                 supervisor: Optional[SupervisorFn] = None,
                 scale: float = 3000.0,
                 ) -> tuple[list[AllyAction], list[Optional[TransitionSkeleton]],
                            dict[int, Optional[int]]]:
    """One tick of the full stack for every ally drone.

    act_fn is the drone-layer policy (typically a closure over the rl-engine
    action selection); human_inputs are live rank-1 takeovers keyed by drone
    index; the returned skeletons carry the executed action per drone so the
    caller can fill in rewards and successor states after the world step.
    """
    human_inputs = human_inputs or {}
    by_index = {tr.enemy_index: tr for tr in tracks}
    assignment = assign_closest(tracks, world.allies,
                                p_defend=np.asarray(cfg.p_ra, float))
    actions: list[AllyAction] = []
    skeletons: list[Optional[TransitionSkeleton]] = []

    for i, ally in enumerate(world.allies):
        track = by_index.get(assignment[i]) if assignment[i] is not None else None
        fire = emp_trigger(ally, tracks, cfg, world.allies) \
            if ally.functional else 0
        if not ally.functional or track is None:
            # Takeovers work even without an assigned track; there is just
            # no policy transition to record for the drone.
            if ally.functional and i in human_inputs:
                hu = human_inputs[i]
                actions.append(_rule_toggles(ally, None, hu[0], hu[1], cfg,
                                             fire))
            else:
                actions.append(AllyAction(u_ma=0.0, u_sr=0.0, u_emp=fire))
            skeletons.append(None)
            continue

        x = guidance_state(ally, track, cfg, scale)
        advisor_action = None
        advisor_bonus = 0.0
        if advisor is not None:
            out = advisor(ally, track)
            advisor_action = out.action
            advisor_bonus = out.reward_bonus
        u, source = act_fn(i, x, advisor_action)

        proposals = [ControlProposal(
            RANK_POLICY, _rule_toggles(ally, track, u[0], u[1], cfg, fire))]
        if i in human_inputs:
            hu = human_inputs[i]
            proposals.append(ControlProposal(
                RANK_HUMAN, _rule_toggles(ally, track, hu[0], hu[1], cfg,
                                          fire)))
            source = "human"
        if supervisor is not None:
            veto = supervisor(i, ally, proposals[0].action)
            if veto is not None:
                proposals.append(ControlProposal(
                    RANK_SUPERVISOR,
                    _rule_toggles(ally, track, veto[0], veto[1], cfg, fire)))
        chosen = arbitrate(proposals)
        actions.append(chosen)
        skeletons.append(TransitionSkeleton(
            drone_index=i, x=x, u=np.array([chosen.u_ma, chosen.u_sr]),
            source=source, advisor_bonus=advisor_bonus))
    return actions, skeletons, assignment


def per_drone_rewards(state: WorldState, actions: Sequence[AllyAction],
                      cfg: WorldConfig, r_track: float) -> list[float]:
    """Equal split of the team tracking reward plus own neutralization credit."""
    n = max(len(state.allies), 1)
    rewards = []
    for i, d in enumerate(state.allies):
        own = 0.0
        if d.functional:
            a = actions[i]
            for e in state.enemies:
                if e.functional and neutralize_enabled(a, e.gcs_controlled) \
                        and np.linalg.norm(d.p - e.p) <= cfg.r_n:
                    own += e.payload
        rewards.append(r_track / n + own)
    return rewards
