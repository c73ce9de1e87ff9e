"""Live operator session: streams world frames over a websocket and injects
takeover actions and operator reward at tick boundaries.

One simulation thread owns the world; network handlers only enqueue decoded
messages.  Frame emission goes through a bounded per-client queue with
drop-oldest backpressure, so a slow client never stalls the simulation.
"""

from __future__ import annotations

import dataclasses
import json
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import nets
from .control import control_step
from .harness import _seed_for, _zero_actor, make_mission
from .scenarios import ScenarioSpec
from .sensing import fuse, observe_enemies
from .training import Mission, TrainerConfig
from .world import Termination, step_world


class ProtocolError(ValueError):
    pass


@dataclass
class OperatorMessage:
    type: str
    drone_id: Optional[int] = None
    u_ma: Optional[float] = None
    u_sr: Optional[float] = None
    value: Optional[float] = None
    scenario: Optional[str] = None
    seed: Optional[int] = None


def decode_operator(text: str) -> OperatorMessage:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid json: {exc}") from exc
    if not isinstance(data, dict) or "type" not in data:
        raise ProtocolError("missing field: type")
    mtype = data["type"]
    if mtype == "takeover":
        for f_ in ("drone_id", "u_ma", "u_sr"):
            if f_ not in data:
                raise ProtocolError(f"missing field: {f_}")
        u_ma, u_sr = float(data["u_ma"]), float(data["u_sr"])
        if not -math.pi <= u_ma <= math.pi:
            raise ProtocolError("field out of range: u_ma")
        if not 0.0 <= u_sr <= 1.0:
            raise ProtocolError("field out of range: u_sr")
        return OperatorMessage("takeover", drone_id=int(data["drone_id"]),
                               u_ma=u_ma, u_sr=u_sr)
    if mtype == "release":
        if "drone_id" not in data:
            raise ProtocolError("missing field: drone_id")
        return OperatorMessage("release", drone_id=int(data["drone_id"]))
    if mtype == "reward":
        if "value" not in data:
            raise ProtocolError("missing field: value")
        value = float(data["value"])
        if not -1.0 <= value <= 1.0:
            raise ProtocolError("field out of range: value")
        return OperatorMessage("reward", value=value)
    if mtype == "start":
        return OperatorMessage("start", scenario=data.get("scenario", "random"),
                               seed=int(data.get("seed", 0)))
    if mtype in ("pause", "resume"):
        return OperatorMessage(mtype)
    raise ProtocolError(f"unknown message type: {mtype}")


def encode_frame(frame: dict) -> str:
    return json.dumps(frame, separators=(",", ":"))


def build_frame(state, outcome, tracks, assignment, rh: float) -> dict:
    entities = []
    for i, d in enumerate(state.allies):
        entities.append({"k": "ally", "id": i, "x": round(d.p[0], 3),
                         "y": round(d.p[1], 3), "phi": round(d.phi, 5),
                         "f": int(d.functional)})
    for i, e in enumerate(state.enemies):
        entities.append({"k": "enemy", "id": i, "x": round(e.p[0], 3),
                         "y": round(e.p[1], 3), "phi": 0.0,
                         "f": int(e.functional)})
    for i, gr in enumerate(state.radars):
        entities.append({"k": "radar", "id": i, "x": round(gr.p[0], 3),
                         "y": round(gr.p[1], 3), "phi": round(gr.phi, 5),
                         "f": 1})
    term = outcome.termination.value if outcome else Termination.RUNNING.value
    return {
        "type": "frame",
        "tick": int(state.t),
        "entities": entities,
        "term": term,
        "rt": round(outcome.r_track, 6) if outcome else 0.0,
        "rn": round(outcome.r_neut, 6) if outcome else 0.0,
        "rh": rh,
        "tracks": [{"id": tr.enemy_index, "x": round(tr.est_pos[0], 3),
                    "y": round(tr.est_pos[1], 3), "age": tr.age}
                   for tr in tracks],
        "assign": {str(k): v for k, v in assignment.items()
                   if v is not None},
    }


class SimulationDriver:
    """Tick-at-a-time stepping of one mission with live operator inputs."""

    def __init__(self, mission: Mission, actor: nets.Net,
                 trainer_cfg: TrainerConfig, rng: np.random.Generator):
        self.mission = mission
        self.actor = actor
        self.cfg = trainer_cfg
        self.rng = rng
        self.state = mission.world
        self.tracks: list = []
        self.takeovers: dict[int, np.ndarray] = {}
        self.tick_reward = 0.0
        self.terminated: Optional[Termination] = None
        # One row per tick: (tick, takeover drone ids, r_h).
        self.log: list[tuple[int, tuple[int, ...], float]] = []
        self.trajectory: list[tuple] = []

    def apply(self, msg: OperatorMessage) -> None:
        if msg.type == "takeover":
            self.takeovers[msg.drone_id] = np.array([msg.u_ma, msg.u_sr])
        elif msg.type == "release":
            self.takeovers.pop(msg.drone_id, None)
        elif msg.type == "reward":
            self.tick_reward = msg.value

    def release_all(self) -> None:
        self.takeovers.clear()

    def step(self) -> dict:
        if self.terminated is not None:
            raise RuntimeError("trial already terminated")
        detections = observe_enemies(self.state, self.mission.sensor_cfg,
                                     self.rng)
        self.tracks = fuse(detections,
                           [tr for tr in self.tracks if tr.age <= 60])

        def act_fn(i, x, human_action):
            return np.asarray(nets.forward(self.actor, x)), "ai"

        actions, _, assignment = control_step(
            self.state, self.tracks, act_fn, self.mission.world_cfg,
            human_inputs=dict(self.takeovers), scale=self.cfg.state_scale)
        outcome = step_world(self.state, actions,
                             [1.0] * len(self.state.radars),
                             self.mission.world_cfg, self.rng,
                             enemy_paths=self.mission.enemy_paths)
        self.log.append((self.state.t, tuple(sorted(self.takeovers)),
                         self.tick_reward))
        for i, d in enumerate(self.state.allies):
            self.trajectory.append((self.state.t, "ally", i, d.p[0], d.p[1],
                                    d.phi, d.functional))
        for i, e in enumerate(self.state.enemies):
            self.trajectory.append((self.state.t, "enemy", i, e.p[0], e.p[1],
                                    0.0, e.functional))
        rh = self.tick_reward
        self.tick_reward = 0.0
        self.state = outcome.next
        if outcome.termination is not Termination.RUNNING:
            self.terminated = outcome.termination
        return build_frame(self.state, outcome, self.tracks, assignment, rh)


@dataclass
class SessionConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    tick_rate: float = 20.0
    scenario: str = "decoy"
    seed: int = 0
    checkpoint: Optional[str] = None
    n_ad: Optional[int] = None
    n_ed: Optional[int] = None
    outbound_queue: int = 64
    autostart: bool = True


class BridgeServer:
    """One-operator live session over a websocket."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.mailbox: "queue.Queue[OperatorMessage]" = queue.Queue()
        self.paused = False
        self.running = True
        self.driver: Optional[SimulationDriver] = None
        self.dropped_frames = 0
        self._client_queue: Optional[queue.Queue] = None
        self._client_lock = threading.Lock()
        self._server = None
        if cfg.checkpoint:
            self.actor, _, cfg_dict = nets.load_checkpoint(cfg.checkpoint)
            self.trainer_cfg = TrainerConfig.from_dict(cfg_dict)
        else:
            self.trainer_cfg = TrainerConfig()
            self.actor = _zero_actor(self.trainer_cfg)
        if cfg.autostart:
            self._start_trial(cfg.scenario, cfg.seed)

    def _start_trial(self, scenario: str, seed: int) -> None:
        spec = ScenarioSpec.make(scenario, n_ad=self.cfg.n_ad,
                                 n_ed=self.cfg.n_ed)
        mission = make_mission(spec, seed)
        self.driver = SimulationDriver(mission, self.actor, self.trainer_cfg,
                                       _seed_for(seed, 1))

    def _drain_mailbox(self) -> None:
        while True:
            try:
                msg = self.mailbox.get_nowait()
            except queue.Empty:
                return
            if msg.type == "start":
                self._start_trial(msg.scenario, msg.seed or 0)
            elif msg.type == "pause":
                self.paused = True
            elif msg.type == "resume":
                self.paused = False
            elif self.driver is not None:
                self.driver.apply(msg)

    def _broadcast(self, text: str) -> None:
        with self._client_lock:
            q = self._client_queue
        if q is None:
            return
        try:
            q.put_nowait(text)
        except queue.Full:
            try:
                q.get_nowait()
                self.dropped_frames += 1
                q.put_nowait(text)
            except (queue.Empty, queue.Full):
                pass

    def sim_loop(self) -> None:
        period = 1.0 / self.cfg.tick_rate
        while self.running:
            start = time.perf_counter()
            self._drain_mailbox()
            if (not self.paused and self.driver is not None
                    and self.driver.terminated is None):
                frame = self.driver.step()
                self._broadcast(encode_frame(frame))
            elapsed = time.perf_counter() - start
            time.sleep(max(0.0, period - elapsed))

    def handler(self, ws) -> None:
        out_q: queue.Queue = queue.Queue(maxsize=self.cfg.outbound_queue)
        with self._client_lock:
            if self._client_queue is not None:
                ws.close(1013, "session already has an operator")
                return
            self._client_queue = out_q

        def sender():
            while True:
                text = out_q.get()
                if text is None:
                    return
                try:
                    ws.send(text)
                except Exception:
                    return

        sender_thread = threading.Thread(target=sender, daemon=True)
        sender_thread.start()
        try:
            for raw in ws:
                try:
                    msg = decode_operator(raw)
                except ProtocolError as exc:
                    out_q.put(json.dumps({"type": "error",
                                          "detail": str(exc)}))
                    continue
                self.mailbox.put(msg)
        finally:
            with self._client_lock:
                self._client_queue = None
            out_q.put(None)
            if self.driver is not None:
                self.driver.release_all()

    def serve_forever(self) -> None:
        from websockets.sync.server import serve
        sim_thread = threading.Thread(target=self.sim_loop, daemon=True)
        sim_thread.start()
        with serve(self.handler, self.cfg.host, self.cfg.port) as server:
            self._server = server
            try:
                server.serve_forever()
            finally:
                self.running = False

    def shutdown(self) -> None:
        self.running = False
        if self._server is not None:
            self._server.shutdown()


def serve(cfg: SessionConfig) -> BridgeServer:
    server = BridgeServer(cfg)
    server.serve_forever()
    return server
