import math

import pytest

import prolonet

EXAMPLE = "if x_position > 0 then left else right"


def test_compile_and_forward():
    model = prolonet.compile_source("cartpole", EXAMPLE)
    assert model["format"] == "prolonet-v1"
    assert len(model["nodes"]) == 1 and len(model["leaves"]) == 2
    raw, probs = prolonet.forward(model, [2.0, 0.0, 0.0, 0.0])
    s = 1.0 / (1.0 + math.exp(-2.0))
    assert raw == pytest.approx([s, 1.0 - s], abs=1e-12)
    e = [math.exp(v) for v in raw]
    assert probs == pytest.approx([v / sum(e) for v in e], abs=1e-12)


def test_compile_request_matches_source():
    status, body = prolonet.compile_request({"domain": "cartpole", "source": EXAMPLE})
    assert status == 200
    assert body["summary"] == "1 node, 2 leaves"
    assert body["model"] == prolonet.compile_source("cartpole", EXAMPLE)
    status, body = prolonet.compile_request({"domain": "cartpole", "source": "if > 0 then left"})
    assert status == 400
    assert body["errors"][0]["path"] == "/source"


def test_bad_source_raises():
    with pytest.raises(prolonet.InvalidInput):
        prolonet.compile_source("cartpole", "if > 0")


def test_heuristic_balances_the_pole():
    r = prolonet.evaluate("cartpole", episodes=5)
    assert r["mean"] >= 25
    assert len(r["rewards"]) == 5


def test_short_training_is_deterministic(tmp_path):
    cfg = {"domain": "wildfire", "episodes": 3, "seeds": [1], "eval_episodes": 2}
    a = prolonet.train(cfg, tmp_path / "a")
    b = prolonet.train(cfg)
    assert a["mean_curve"] == b["mean_curve"]
    assert len(a["mean_curve"]) == 3
    assert (tmp_path / "a" / "seed_1" / "init.json").exists()


def test_helpers():
    assert prolonet.leaf_entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert prolonet.mistake_cap(0.1, 5) == 1
    v = prolonet.vocabulary("wildfire")
    assert len(v["actions"]) == 4
