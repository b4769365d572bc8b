import os

import mock
import numpy as np
import pandas as pd
import pytest
import yaml

from SkillRL import cli
from SkillRL.exp import derive_seed, make_rng, parse_args, restore_rng, rng_state, setup
from SkillRL.exp.config import fingerprint_config, get_profile, validate_config
from SkillRL.logger import CsvLogger
from SkillRL.misc import NameSpace, hash_config, safe_eval
from SkillRL.misc.errors import ConfigError


def test_desk_profile_defaults():
    config = get_profile("desk")
    assert config["sim"]["physics_hz"] == 120
    assert config["sim"]["control_hz"] == 30
    assert config["skill"]["latent_dim"] == 16
    assert config["rewards"]["w_pos"] == 0.3
    assert sum(v["weight"] for v in config["data"]["walk_variants"]) == pytest.approx(1.0)
    validate_config(config)


def test_paper_profile_overrides():
    config = get_profile("paper")
    assert config["skill"]["latent_dim"] == 64
    assert config["skill"]["lr"] == pytest.approx(2e-5)
    assert config["task"]["lr"] == pytest.approx(2e-5)
    # untouched sections stay at the desk values
    assert config["rewards"] == get_profile("desk")["rewards"]
    with pytest.raises(ConfigError) as e:
        get_profile("cluster")
    assert e.value.key == "profile"


def test_config_layers(tmp_path):
    path = str(tmp_path / "run.yaml")
    with open(path, "w") as fp:
        yaml.safe_dump({"skill": {"lr": 0.001, "iterations": 5}, "seed": 4}, fp)
    config = parse_args(path, overrides=["skill.lr=2e-3"])
    assert isinstance(config, NameSpace)
    assert config.skill.lr == pytest.approx(2e-3)
    assert config.skill.iterations == 5
    assert config.seed == 4
    assert config["sim"]["physics_hz"] == 120
    assert config.profile == "desk"

    paper = parse_args(None, profile="paper", overrides=["skill.latent_dim=8"], convert=False)
    assert paper["skill"]["latent_dim"] == 8
    assert paper["skill"]["lr"] == pytest.approx(2e-5)


def test_smoke_config_parses():
    from conftest import SMOKE_CONFIG
    config = parse_args(SMOKE_CONFIG)
    assert config.skill.iterations == 20
    assert config.log.backup_stdout is True


@pytest.mark.parametrize("overrides,key", [
    (["skill.nope=1"], "skill.nope"),
    (["nope.lr=1"], "nope"),
    (["skill.gamma=1.5"], "skill.gamma"),
    (["sim.control_hz=7"], "sim.control_hz"),
    (["skill.num_envs=2.5"], "skill.num_envs"),
    (["active.strategy=greedy"], "active.strategy"),
    (["log.level=loud"], "log.level"),
])
def test_invalid_overrides(overrides, key):
    with pytest.raises(ConfigError) as e:
        parse_args(None, overrides=overrides)
    assert e.value.key == key


def test_invalid_config_file(tmp_path):
    path = str(tmp_path / "run.yaml")
    with open(path, "w") as fp:
        yaml.safe_dump({"skill": {"learning_rate": 0.1}}, fp)
    with pytest.raises(ConfigError) as e:
        parse_args(path)
    assert e.value.key == "skill.learning_rate"
    with pytest.raises(ConfigError):
        parse_args(str(tmp_path / "missing.yaml"))
    with pytest.raises(ConfigError):
        parse_args(str(tmp_path / "run.toml"))


def test_fingerprint_ignores_run_control():
    a = get_profile("desk")
    b = get_profile("desk")
    b["seed"] = 99
    b["skill"]["iterations"] = 7
    b["log"]["level"] = "debug"
    assert hash_config(fingerprint_config(a)) == hash_config(fingerprint_config(b))
    b["skill"]["lr"] = 1e-3
    assert hash_config(fingerprint_config(a)) != hash_config(fingerprint_config(b))
    assert len(hash_config(a)) == 12
    # the original is left intact
    assert b["seed"] == 99


def test_safe_eval():
    assert safe_eval("3") == 3
    assert safe_eval("1e-4") == pytest.approx(1e-4)
    assert safe_eval("2.5E3") == pytest.approx(2500.0)
    assert safe_eval("true") is True
    assert safe_eval("[256, 128]") == [256, 128]
    assert safe_eval("foo") == "foo"
    assert safe_eval("null") is None
    with pytest.raises(TypeError):
        safe_eval(3)


def test_seed_streams():
    assert derive_seed(0, "skill.env", 1, 2) == derive_seed(0, "skill.env", 1, 2)
    assert derive_seed(0, "skill.env", 1, 2) != derive_seed(0, "skill.env", 2, 1)
    assert derive_seed(0, "skill.env") != derive_seed(0, "task.env")
    assert derive_seed(0, "skill.env") != derive_seed(1, "skill.env")
    assert 0 <= derive_seed(5, "x") < 2**32

    rng = make_rng(3, "data")
    rng.normal(size=4)
    state = rng_state(rng)
    expected = rng.normal(size=3)
    assert np.array_equal(restore_rng(state).normal(size=3), expected)
    assert np.array_equal(make_rng(3, "data").normal(size=2), make_rng(3, "data").normal(size=2))


def test_csv_logger_constants(tmp_path):
    log = CsvLogger(str(tmp_path), unique_name="run", constants={"config_hash": "abc", "seed": 1})
    log.log_scalars("skill", {"b": 1.0, "a": 2.0}, step=3)
    log.log_scalars("skill", {"a": 4.0}, step=4)
    frame = pd.read_csv(os.path.join(log.log_dir, "metrics.csv"))
    assert list(frame.columns) == ["step", "config_hash", "seed", "skill/a", "skill/b"]
    assert list(frame["step"]) == [3, 4]
    assert list(frame["config_hash"]) == ["abc", "abc"]
    assert np.isnan(frame["skill/b"][1])

    path = log.log_frame(pd.DataFrame({"tap": ["f1"], "fid": [0.5]}), "pilot_fid.csv")
    table = pd.read_csv(path)
    assert list(table.columns) == ["config_hash", "seed", "tap", "fid"]


def test_setup_opens_run_dir(run_root):
    config = parse_args(None, overrides=["seed=3"])
    ctx = setup(config, "train-space", "r1")
    try:
        assert ctx.run_dir == os.path.join(str(run_root), "r1")
        assert ctx.seed == 3
        assert len(ctx.config_hash) == 12
        with open(os.path.join(ctx.run_dir, "config.yaml")) as fp:
            saved = yaml.safe_load(fp)
        assert saved["seed"] == 3
        assert saved["sim"]["physics_hz"] == 120
    finally:
        ctx.logger.close()


def test_setup_hash_ignores_seed(run_root):
    a = setup(parse_args(None, overrides=["seed=1"]), "x", "a")
    b = setup(parse_args(None, overrides=["seed=2"]), "x", "b")
    c = setup(parse_args(None, overrides=["skill.lr=1e-3"]), "x", "c")
    for ctx in (a, b, c):
        ctx.logger.close()
    assert a.config_hash == b.config_hash != c.config_hash


def test_cli_usage_errors(run_root):
    assert cli.run_command(["bogus"]) == 2
    assert cli.run_command(["evaluate", "--run-name", "ev"]) == 1
    assert cli.run_command(["gen-data", "--set", "skill.nope=1"]) == 1
    assert cli.run_command(["gen-data", "--set", "novalue"]) == 1


def test_cli_dispatch(run_root):
    seen = {}

    def fake(args, ctx):
        seen["lr"] = ctx.config.skill.lr
        seen["seed"] = ctx.seed
        seen["run_dir"] = ctx.run_dir
        return {}

    with mock.patch.dict(cli.HANDLERS, {"train-space": fake}):
        code = cli.run_command(["train-space", "--set", "skill.lr=2e-3", "--seed", "7", "--run-name", "ts"])
    assert code == 0
    assert seen["lr"] == pytest.approx(2e-3)
    assert seen["seed"] == 7
    assert os.path.isfile(os.path.join(seen["run_dir"], "config.yaml"))


def test_cli_reports_handler_failure(run_root):
    with mock.patch.dict(cli.HANDLERS, {"pilot": mock.Mock(side_effect=RuntimeError("boom"))}):
        assert cli.run_command(["pilot", "--run-name", "p"]) == 1


def test_cli_gen_data(run_root):
    code = cli.run_command(["gen-data", "--profile", "desk", "--run-name", "gen", "--set", "analysis.pilot_samples=30"])
    assert code == 0
    for name in ("walk", "heldout", "reach"):
        directory = os.path.join(str(run_root), "gen", "data", name)
        assert os.path.isdir(directory)
        assert len(os.listdir(directory)) > 0
    frame = pd.read_csv(os.path.join(str(run_root), "gen", "metrics.csv"))
    assert frame["gen_data/reach_clips"][0] >= 1
