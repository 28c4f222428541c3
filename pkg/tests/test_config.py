import json

import pytest

from fockbound.config import RunConfig
from fockbound.errors import ConfigError


def test_defaults():
    cfg = RunConfig()
    assert cfg.n == 2 and cfg.depth == 8 and cfg.weights_obj().omega == (0.5, 0.5)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("bad", [
    {"weights": [0.7, 0.2]},
    {"weights": [1.0]},
    {"weights": [1.5, -0.5]},
    {"weights": "skewed"},
    {"depth": 1},
    {"depth": 3, "word_bound": 2},
    {"n": 0},
    {"n": 2.0},
    {"svd_tol": 0},
    {"eigen_tol": float("nan")},
    {"seed": -1},
    {"max_iter": 0},
    {"lambda_order": 0},
    {"basis": []},
    {"basis": [1]},
    {"outputs": []},
    {"colour": "blue"},
])
def test_invalid(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_fraction_weights():
    cfg = RunConfig.from_dict({"n": 3, "weights": ["1/2", "1/3", "1/6"]})
    assert abs(sum(cfg.weights_obj().omega) - 1) < 1e-15


def test_load(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n": 2, "depth": 6}))
    assert RunConfig.load(path).depth == 6
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.load(path)
