import math
import os
from pathlib import Path

import numpy as np
import pytest

import teamnav

SCENARIOS = Path(os.environ.get("TEAMNAV_SCENARIO_DIR", Path(__file__).resolve().parents[2] / "scenarios"))


def test_repulsion_boundaries():
    m = teamnav.VoxelMap(0.2)
    m.insert(0, 0, 0)
    c = m.center(0, 0, 0)
    assert np.linalg.norm(teamnav.repulsion_force(c, m)) == pytest.approx(25.0, abs=1e-9)
    assert np.linalg.norm(teamnav.repulsion_force(c + np.array([3.0, 0, 0]), m)) == 0.0
    assert teamnav.repulsion_magnitude(1.5) == pytest.approx(1.9986312012673246, abs=1e-12)


def test_box_and_keys():
    m = teamnav.VoxelMap()
    assert m.insert_box([2, 0, 0], [3, 1, 1]) == 125
    assert len(m) == 125
    assert m.key_of([0.1, 0.1, 0.1]) == (0, 0, 0)


def test_plan_free_space():
    path = teamnav.plan([0, 0, 0], [0, 0, 0], [1.5, 0, 0], teamnav.VoxelMap())
    assert not path.partial
    assert np.linalg.norm(path.position(path.total_duration) - np.array([1.5, 0, 0])) <= 0.5
    samples = path.sample(0.1)
    assert len(samples) >= 2


def test_user_cost_anti_aligned():
    prims = []
    p = np.zeros(3)
    for _ in range(3):
        prim = teamnav.MotionPrimitive(p, [0.5, 0, 0], [0, 0, 0], 1.3)
        prims.append(prim)
        p = prim.position(1.3)
    path = teamnav.PlannedPath(prims)
    expect = 2 * 2.0 * 0.8 * (1 - math.exp(-3.9 / 0.8))
    assert teamnav.user_cost(path, [-2, 0, 0]) == pytest.approx(expect, rel=1e-3)
    assert teamnav.user_cost(path, [2, 0, 0]) == 0.0


def test_admittance_equilibrium():
    p, v = np.zeros(3), np.zeros(3)
    for _ in range(2000):
        p, v = teamnav.admittance_step(p, v, np.zeros(3), np.zeros(3), [1, 0, 0])
    assert p[0] == pytest.approx(1 / 8, abs=1e-6)


def test_world_run_and_trace(tmp_path):
    sc = teamnav.load_scenario_file(SCENARIOS / "minimal.yaml")
    w = teamnav.World(sc)
    m = w.run()
    assert w.goal_reached and not m["timeout"]
    assert m["time_to_goal"] > 0
    assert math.isinf(m["min_obstacle_distance"])
    w.write_trace(tmp_path / "t.jsonl")
    t = teamnav.read_trace(tmp_path / "t.jsonl")
    assert t["agents"] == 1
    assert t["ticks"] == int(round(m["time_to_goal"] / 0.02)) + 1


def test_replan_cadence():
    sc = teamnav.load_scenario_file(SCENARIOS / "open_field.yaml")
    sc.goal = [40, 0, 1]
    sc.duration_max = 10.0
    w = teamnav.World(sc)
    w.run()
    assert w.plan_times == pytest.approx([0, 2, 4, 6, 8, 10])


def test_live_commands():
    w = teamnav.World(teamnav.load_scenario_file(SCENARIOS / "open_field.yaml"))
    w.set_control(True)
    w.set_target([1, 1, 1])
    w.step()
    assert np.allclose(w.operator_target, [1, 1, 1])
    assert w.positions.shape == (3, 3)


def test_scenario_errors():
    with pytest.raises(teamnav.ScenarioError, match="colour"):
        teamnav.load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\ncolour: red\n")
    sc = teamnav.load_scenario("goal: [1, 0, 1]\nagents: [[0, 0, 1]]\n")
    with pytest.raises(teamnav.ScenarioError):
        sc.mode = "hybrid"
