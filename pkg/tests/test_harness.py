import dataclasses
import math

import numpy as np
import pytest

from swarmguard.harness import (EvalReport, ExperimentConfig, ScenarioSpec,
                                TrialResult, _seed_for, checkpoint_columns,
                                evaluate, load_experiment_config,
                                make_mission, read_eval_report, replay_trial,
                                run_experiment, run_trial, write_eval_report,
                                write_trajectory_csv, write_trial_record)
from swarmguard.scenarios import (DECOY_DEPART_TICK, generate_scenario,
                                  threat_index)
from swarmguard.sensing import SensorConfig
from swarmguard.training import Mission, TrainerConfig
from swarmguard.world import (EnemyDrone, ScriptedPath, Termination,
                              WorldConfig, WorldState, vec2)


def positions(world: WorldState):
    return ([d.p.copy() for d in world.allies],
            [e.p.copy() for e in world.enemies],
            [gr.p.copy() for gr in world.radars])


class TestScenarios:
    def test_deterministic_regeneration(self):
        for kind in ("random", "overloaded", "decoy"):
            spec = ScenarioSpec.make(kind, seed=42)
            a = generate_scenario(spec, np.random.default_rng(42))
            b = generate_scenario(spec, np.random.default_rng(42))
            for pa, pb in zip(positions(a.world), positions(b.world)):
                assert all(np.array_equal(x, y) for x, y in zip(pa, pb))

    def test_random_layout(self):
        spec = ScenarioSpec.make("random", n_ad=4, n_ed=6)
        mission = generate_scenario(spec, np.random.default_rng(0))
        cfg = mission.world_cfg
        assert len(mission.world.allies) == 4
        assert len(mission.world.enemies) == 6
        for d in mission.world.allies:
            assert 100.0 <= np.linalg.norm(d.p - cfg.p_ra) <= 300.0
        for e in mission.world.enemies:
            assert 2400.0 <= np.linalg.norm(e.p - cfg.p_ra) <= 3000.0
            assert e.payload in (1, 2, 3)
            assert np.allclose(e.p_egcs, e.p)

    def test_overloaded_layout(self):
        spec = ScenarioSpec.make("overloaded")
        mission = generate_scenario(spec, np.random.default_rng(1))
        assert len(mission.world.allies) == 50
        assert len(mission.world.enemies) == 100
        # Enemies come in groups of four within a tight footprint.
        pts = np.array([e.p for e in mission.world.enemies])
        for c in range(25):
            cluster = pts[4 * c:4 * c + 4]
            spread = np.linalg.norm(cluster - cluster.mean(axis=0), axis=1)
            assert np.all(spread < 12.0)

    def test_decoy_layout(self):
        spec = ScenarioSpec.make("decoy", seed=7)
        mission = generate_scenario(spec, np.random.default_rng(7))
        cfg = mission.world_cfg
        assert len(mission.world.enemies) == 3
        assert len(mission.enemy_paths) == 3
        ti = threat_index("decoy", mission.enemy_paths)
        assert ti == 2
        d_threat = np.linalg.norm(mission.world.enemies[ti].p - cfg.p_ra)
        for i in (0, 1):
            d_decoy = np.linalg.norm(mission.world.enemies[i].p - cfg.p_ra)
            assert d_decoy < 400.0 < d_threat

    def test_decoys_orbit_then_leave(self):
        spec = ScenarioSpec.make("decoy", seed=3)
        mission = generate_scenario(spec, np.random.default_rng(3))
        cfg = mission.world_cfg
        path = mission.enemy_paths[0]
        for t in (1.0, 100.0, 300.0, DECOY_DEPART_TICK):
            d = np.linalg.norm(path.position_at(t) - cfg.p_ra)
            assert 270.0 <= d <= 350.0
        late = np.linalg.norm(path.position_at(1e9) - cfg.p_ra)
        assert late > cfg.r_gc  # eventually beyond the GCS operating range

    def test_threat_reaches_restricted_area(self):
        spec = ScenarioSpec.make("decoy", seed=11)
        mission = generate_scenario(spec, np.random.default_rng(11))
        cfg = mission.world_cfg
        path = mission.enemy_paths[threat_index("decoy", mission.enemy_paths)]
        end = path.position_at(float(path.times[-1]))
        assert np.linalg.norm(end - cfg.p_ra) < 1.0

    def test_custom_requires_paths(self):
        with pytest.raises(ValueError):
            generate_scenario(ScenarioSpec(kind="custom"),
                              np.random.default_rng(0))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(kind="surprise")


def _static_enemy(cfg: WorldConfig, dist: float) -> tuple[EnemyDrone, ScriptedPath]:
    p = cfg.p_ra + vec2(dist, 0.0)
    path = ScriptedPath(points=np.array([p, p]), times=np.array([1.0, 1e9]))
    return EnemyDrone(p=p.copy(), payload=1, gcs_controlled=1,
                      p_egcs=p.copy()), path


class TestRunTrial:
    def test_no_enemies_is_immediate_success(self):
        cfg = WorldConfig()
        mission = Mission(world=WorldState(allies=[], enemies=[], radars=[]),
                          world_cfg=cfg, sensor_cfg=SensorConfig())
        result, _ = run_trial(mission, None, TrainerConfig(),
                              np.random.default_rng(0), use_heuristic=True)
        assert result.termination is Termination.SUCCESS
        assert result.steps == 1

    def test_undefended_attack_matches_travel_time(self):
        # A lone enemy 2000 m out closes at 10 m per step; defeat triggers
        # when it crosses the 100 m boundary, i.e. after ceil(1900/10) steps.
        cfg = WorldConfig()
        enemy = EnemyDrone(p=cfg.p_ra + vec2(2000.0, 0.0), payload=1,
                           gcs_controlled=1,
                           p_egcs=cfg.p_ra + vec2(2000.0, 0.0))
        mission = Mission(world=WorldState(allies=[], enemies=[enemy],
                                           radars=[]),
                          world_cfg=cfg, sensor_cfg=SensorConfig())
        result, _ = run_trial(mission, None, TrainerConfig(),
                              np.random.default_rng(0), use_heuristic=True)
        assert result.termination is Termination.DEFEAT
        assert result.steps == math.ceil((2000.0 - cfg.r_ra) / cfg.v_max_sr)

    def test_timeout_with_frozen_enemy(self):
        cfg = WorldConfig(timelimit=6)
        enemy, path = _static_enemy(cfg, 2000.0)
        mission = Mission(world=WorldState(allies=[], enemies=[enemy],
                                           radars=[]),
                          world_cfg=cfg, sensor_cfg=SensorConfig(),
                          enemy_paths=[path])
        result, _ = run_trial(mission, None, TrainerConfig(),
                              np.random.default_rng(0), use_heuristic=True)
        assert result.termination is Termination.TIMEOUT
        assert result.steps == cfg.timelimit  # t runs 1..timelimit inclusive

    def test_heuristic_defense_wins_one_on_one(self):
        spec = ScenarioSpec.make("random", seed=5)
        mission = make_mission(spec, 5)
        result, _ = run_trial(mission, None, TrainerConfig(),
                              _seed_for(5, 0), use_heuristic=True)
        assert result.termination is Termination.SUCCESS

    def test_trajectory_recorded(self):
        cfg = WorldConfig(timelimit=3)
        enemy, path = _static_enemy(cfg, 2000.0)
        mission = Mission(world=WorldState(allies=[], enemies=[enemy],
                                           radars=[]),
                          world_cfg=cfg, sensor_cfg=SensorConfig(),
                          enemy_paths=[path])
        result, traj = run_trial(mission, None, TrainerConfig(),
                                 np.random.default_rng(0),
                                 record_trajectory=True, use_heuristic=True)
        ticks = sorted({row[0] for row in traj})
        assert ticks == list(range(1, result.steps + 2))

    def test_terminated_world_rejected(self):
        world = WorldState(allies=[], enemies=[], radars=[], absorbing=0)
        mission = Mission(world=world, world_cfg=WorldConfig(),
                          sensor_cfg=SensorConfig())
        with pytest.raises(ValueError):
            run_trial(mission, None, TrainerConfig(),
                      np.random.default_rng(0), use_heuristic=True)


def _tiny_experiment(tmp_path, name="exp"):
    return ExperimentConfig(
        name=name, scenario="random", n_ad=1, n_ed=1, episodes=4,
        repetitions=1, n_eval=2, eval_columns=2, master_seed=9,
        advice_probs=[0.5],
        world=WorldConfig(timelimit=40),
        trainer=TrainerConfig(n_b=8, warmup=8, checkpoint_interval=2))


class TestExperiment:
    def test_checkpoint_columns(self):
        cfg = ExperimentConfig(episodes=100, eval_columns=5,
                               trainer=TrainerConfig(checkpoint_interval=10))
        assert checkpoint_columns(cfg) == [10, 30, 50, 80, 100]
        cfg2 = ExperimentConfig(episodes=20, eval_columns=5,
                                trainer=TrainerConfig(checkpoint_interval=10))
        assert checkpoint_columns(cfg2) == [10, 20]

    def test_run_experiment_artifacts(self, tmp_path):
        cfg = _tiny_experiment(tmp_path)
        manifest = run_experiment(cfg, tmp_path / "out")
        assert manifest["complete"]
        rep_dir = tmp_path / "out" / "advice_0.5" / "rep_0"
        assert (rep_dir / "metrics.csv").exists()
        assert (rep_dir / "checkpoint_00004.ckpt").exists()
        report = read_eval_report(tmp_path / "out" / "advice_0.5"
                                  / "eval_report.csv")
        assert report.checkpoint_episodes == [2, 4]
        assert report.rates.shape == (1, 2)
        assert np.all((report.rates >= 0) & (report.rates <= 1))

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = _tiny_experiment(tmp_path)
        run_experiment(cfg, tmp_path / "a")
        run_experiment(cfg, tmp_path / "b")
        for rel in ("advice_0.5/rep_0/metrics.csv",
                    "advice_0.5/eval_report.csv",
                    "advice_0.5/rep_0/checkpoint_00004.ckpt"):
            assert (tmp_path / "a" / rel).read_bytes() == \
                (tmp_path / "b" / rel).read_bytes()

    def test_evaluate_deterministic(self, tmp_path):
        cfg = _tiny_experiment(tmp_path)
        run_experiment(cfg, tmp_path / "out")
        ckpt = tmp_path / "out" / "advice_0.5" / "rep_0" / "checkpoint_00004.ckpt"
        spec = ScenarioSpec.make("random", world=WorldConfig(timelimit=40))
        r1 = evaluate([ckpt], spec, 3, (1, 2))
        r2 = evaluate([ckpt], spec, 3, (1, 2))
        assert r1 == r2

    def test_config_round_trip(self, tmp_path):
        ini = tmp_path / "exp.ini"
        ini.write_text(
            "[experiment]\n"
            "name = sweep\n"
            "scenario = overloaded\n"
            "episodes = 12\n"
            "repetitions = 2\n"
            "advice_probs = 0.1 0.2 0.5\n"
            "[world]\n"
            "timelimit = 500\n"
            "r_n = 12.5\n"
            "[trainer]\n"
            "beta = 0.7\n"
            "n_b = 16\n")
        cfg = load_experiment_config(ini)
        assert cfg.name == "sweep"
        assert cfg.scenario == "overloaded"
        assert cfg.episodes == 12
        assert cfg.advice_probs == [0.1, 0.2, 0.5]
        assert cfg.world.timelimit == 500
        assert cfg.world.r_n == 12.5
        assert cfg.trainer.beta == 0.7
        assert cfg.trainer.n_b == 16

    def test_config_unknown_key(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[world]\nwarp_drive = 1\n")
        with pytest.raises(ValueError):
            load_experiment_config(ini)

    def test_config_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_experiment_config(tmp_path / "nope.ini")


class TestReports:
    def test_eval_report_round_trip(self, tmp_path):
        report = EvalReport(checkpoint_episodes=[10, 20, 30],
                            rates=np.array([[0.1, 0.5, 0.9],
                                            [0.2, 0.4, 1.0]]),
                            n_eval_trials=50)
        path = tmp_path / "r.csv"
        write_eval_report(report, path)
        back = read_eval_report(path)
        assert back.checkpoint_episodes == [10, 20, 30]
        assert np.allclose(back.rates, report.rates)
        assert np.allclose(back.mean, report.mean)
        assert np.allclose(back.std, report.std)

    def test_trajectory_csv(self, tmp_path):
        rows = [(1, "ally", 0, 1.5, 2.5, 0.1, 1),
                (1, "enemy", 0, 9.0, 9.0, 0.0, 1)]
        path = tmp_path / "traj.csv"
        write_trajectory_csv(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("tick,kind,id")
        assert len(lines) == 3


class TestReplay:
    def test_record_and_replay_matches(self, tmp_path):
        spec = ScenarioSpec.make("random", seed=21,
                                 world=WorldConfig(timelimit=400))
        mission = make_mission(spec, 21)
        result, traj = run_trial(mission, None, TrainerConfig(),
                                 _seed_for(21, 1), seed=21,
                                 record_trajectory=True, use_heuristic=True)
        record_path = tmp_path / "trial.json"
        write_trial_record(record_path, spec, 21, [21, 1], None, result, traj)
        replayed, matches = replay_trial(record_path)
        assert matches
        assert replayed.termination is result.termination
        assert replayed.steps == result.steps

    def test_tampered_log_detected(self, tmp_path):
        import json
        spec = ScenarioSpec.make("random", seed=22,
                                 world=WorldConfig(timelimit=400))
        mission = make_mission(spec, 22)
        result, traj = run_trial(mission, None, TrainerConfig(),
                                 _seed_for(22, 1), seed=22,
                                 record_trajectory=True, use_heuristic=True)
        record_path = tmp_path / "trial.json"
        write_trial_record(record_path, spec, 22, [22, 1], None, result, traj)
        record = json.loads(record_path.read_text())
        record["trajectory"][0][3] += 5.0
        record_path.write_text(json.dumps(record))
        _, matches = replay_trial(record_path)
        assert not matches
