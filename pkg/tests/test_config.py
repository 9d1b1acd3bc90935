import pytest

from dynrec.config import OPTIONS, Config, ConfigError, describe_options
from dynrec.profile import DAY


def test_defaults():
    cfg = Config()
    assert cfg["decay.half_life_days"] == 30
    assert cfg["cf.k_neighbors"] == 40
    assert cfg["cf.min_overlap"] == 2
    assert cfg["cf.sim"] == "pearson"
    assert cfg["rules.min_support"] == 0.01
    assert cfg["rules.min_confidence"] == 0.3
    assert cfg["rules.max_len"] == 3
    assert cfg["fusion.weights"] is None
    assert (cfg["eval.k"], cfg["eval.folds"], cfg["eval.seed"], cfg["eval.relevance_threshold"]) == (10, 5, 42, 4)


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown"):
        Config({"cf.neighbours": 3})


@pytest.mark.parametrize(
    "key,value",
    [
        ("rules.min_support", 0),
        ("rules.min_support", 1.5),
        ("cf.k_neighbors", 0),
        ("cf.k_neighbors", 2.5),
        ("cf.sim", "jaccard"),
        ("eval.relevance_threshold", 6),
        ("decay.half_life_days", -1),
        ("behavior.click", -0.1),
        ("fusion.weights", "svd=1"),
        ("fusion.weights", "content=0,cf=0"),
    ],
)
def test_out_of_range(key, value):
    with pytest.raises(ConfigError):
        Config({key: value})


def test_yaml_file_and_overrides(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("cf:\n  k_neighbors: 12\nfusion:\n  weights: {content: 1, cf: 1}\neval.k: 7\n")
    cfg = Config.load(path, ["eval.k=3", "decay.half_life_days=7.5"])
    assert cfg["cf.k_neighbors"] == 12
    assert cfg["eval.k"] == 3
    assert cfg["fusion.weights"] == {"content": 0.5, "cf": 0.5}
    assert cfg.decay().half_life == 7.5 * DAY


def test_json_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"rules": {"min_support": 0.2}}')
    assert Config.load(path)["rules.min_support"] == 0.2


def test_weights_string():
    cfg = Config.load(None, ["fusion.weights=content=0.2,cf=0.6,rules=0.2"])
    assert cfg["fusion.weights"] == pytest.approx({"content": 0.2, "cf": 0.6, "rules": 0.2})


def test_bad_override_syntax():
    with pytest.raises(ConfigError):
        Config.load(None, ["eval.k"])


def test_describe_lists_every_key():
    text = describe_options()
    for o in OPTIONS:
        assert o.key in text
