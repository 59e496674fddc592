import math
from pathlib import Path

import numpy as np
import pytest

import crashforge as cf

GOLDEN = Path(__file__).resolve().parents[1] / "golden"


def test_catalog():
    rows = cf.list_scenarios()
    assert len(rows) == 15
    assert sum(r["environment"] == "Intersection" for r in rows) == 8
    assert sum(not r["in_default_dataset"] for r in rows) == 3


def test_rng_matches_golden():
    lines = (GOLDEN / "rng_streams.txt").read_text().split("\n")
    first = next(l for l in lines if l and not l.startswith("#"))
    master, index, *values = first.split()
    assert cf.rng_stream(int(master, 0), int(index), len(values)) == [int(v) for v in values]


def test_sampling_is_deterministic_and_bounded():
    a = cf.sample_parameters("RunningRedLight", 42, 3)
    assert a == cf.sample_parameters("RunningRedLight", 42, 3)
    assert 800 <= a["mass_kg"] <= 2500
    assert 0 <= a["fog_density_per_m"] <= 0.05


def test_geometry_and_kinematics():
    assert cf.obb_intersect((0, 0, 2, 1, 0), (3.9, 0, 2, 1, 0))
    assert not cf.obb_intersect((0, 0, 2, 1, 0), (4.1, 0, 2, 1, 0))
    assert cf.min_clearance((0, 0, 2, 1, 0), (5, 0, 2, 1, 0)) == pytest.approx(1.0)
    x, y, h, v, s = cf.step_kinematic((0, 0, 0, 10, 0), 0.0, 0.1, 0.01)
    assert h == pytest.approx(10 / 2.7 * math.tan(0.1) * 0.01)
    with pytest.raises(cf.NonFinite):
        cf.step_kinematic((0, 0, 0, 10, 0), float("nan"), 0.0, 0.01)


def test_fog_closed_form():
    assert cf.apply_fog(100, 60.0, 0.0, 200) == 100
    assert cf.apply_fog(100, 60.0, 0.05, 200) == 195


def test_episode_and_preview():
    ep = cf.simulate_episode("RunningRedLight", 7, 0, render=True, frame_rate=2)
    assert ep["outcome"] in {"Collision", "NearMiss", "Pass"}
    assert len(ep["images"]) == len(ep["frames"]) > 0
    assert ep["images"][0].shape == (66, 200) and ep["images"][0].dtype == np.uint8
    img = cf.render_preview("ChangingLanesSameDirection", 3)
    assert np.array_equal(img, cf.render_preview("ChangingLanesSameDirection", 3))
    assert not np.array_equal(img, cf.render_preview("ChangingLanesSameDirection", 3, "shifted"))


def test_errors_are_typed():
    assert issubclass(cf.UnknownScenario, cf.Error)
    with pytest.raises(cf.UnknownScenario):
        cf.sample_parameters("NoSuchScenario", 0)


def test_network_and_gradcheck():
    assert cf.network_info()["parameters"] == 251019
    r = cf.gradient_check(0, 18)
    assert r["probes"] == 18
    assert r["max_relative_error"] < 1e-3


def test_pipeline(tmp_path):
    s1, s2 = tmp_path / "s1", tmp_path / "s2"
    g = cf.generate(s1, 10, 1, frame_rate=1)
    assert g["episodes"] == 10
    assert cf.stats(s1)["overall"]["episodes"] == 10
    cf.generate(s2, 10, 2, frame_rate=1, render_profile="shifted")
    counts = cf.split(s1, (0.6, 0.2, 0.2), 0)
    assert all(c > 0 for c in counts)
    metrics = cf.train(s1 / "train.csv", s1 / "val.csv", tmp_path / "m", epochs=1, batch=8)
    assert [m["epoch"] for m in metrics] == [0, 1]
    ev = cf.evaluate(tmp_path / "m" / "final.cfw", s1 / "test.csv")
    assert ev["frames"] == len(ev["deviations_deg"]) > 0
    tx = cf.transfer_experiment(s1, s2, seeds=1, epochs=1, batch=8)
    assert len(tx["seeds"]) == 1 and "# summary" in tx["report"]
