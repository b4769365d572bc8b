import os

import numpy as np
import pytest
import torch

from SkillRL.data import reference_walk_dataset
from SkillRL.env.character import Character
from SkillRL.env.sim2d import Scene, World
from SkillRL.exp.config import get_profile, validate_config
from SkillRL.logger import CsvLogger
from SkillRL.skill.trainer import SkillTrainer

SMOKE_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs", "smoke.yaml")


def tiny_profile() -> dict:
    """The desk profile shrunk until a whole training iteration takes well under a second. """
    config = get_profile("desk")
    config["net"].update({
        "actor_hidden": [32, 32],
        "high_level_hidden": [32, 16],
        "disc_hidden": [32, 16],
        "critic_part_dim": 8,
        "critic_hidden": [16, 16, 8],
    })
    for section in ("skill", "task"):
        config[section].update({
            "iterations": 2,
            "num_envs": 2,
            "horizon": 4,
            "episode_length": 6,
            "epochs": 1,
            "policy_minibatch": 4,
            "disc_minibatch": 4,
            "checkpoint_every": 1,
        })
    config["skill"]["latent_dim"] = 4
    config["active"].update({"num_bins": 2, "episodes_per_bin": 1, "clips_per_bin": 1, "iterations": 1})
    config["analysis"].update({"pilot_samples": 64, "export_samples": 4, "episodes": 2})
    config["align"].update({"window": 4, "stats_episodes": 1})
    config["data"]["interp_frames"] = 10
    return validate_config(config)


@pytest.fixture
def config():
    return tiny_profile()


@pytest.fixture(scope="session")
def character():
    return Character.from_config(get_profile("desk")["character"])


@pytest.fixture
def world(character):
    return World.from_config(character.articulation, get_profile("desk")["sim"])


@pytest.fixture
def scene():
    return Scene(table_height=0.5, table_width=0.6, table_x=3.0, object_size=0.1, start_x=0.0, goal_x=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(autouse=True)
def torch_seed():
    torch.manual_seed(0)


@pytest.fixture
def run_logger(tmp_path):
    return CsvLogger(str(tmp_path), unique_name="run", constants={"config_hash": "0123abcd", "seed": 0})


@pytest.fixture
def run_root(tmp_path, monkeypatch):
    monkeypatch.setenv("SKILLRL_RUN_ROOT", str(tmp_path))
    return tmp_path


@pytest.fixture
def walking_trainer(character, run_logger):
    """Trains a desk-profile skill space on the procedural walk; returns the trainer and its per-iteration rows. """
    def train(seed: int, iterations: int=100):
        config = validate_config(get_profile("desk"))
        walk = reference_walk_dataset(config, character=character)
        trainer = SkillTrainer(config, walk, run_logger, seed=seed, character=character)
        rows = [trainer.run_iteration() for _ in range(iterations)]
        return trainer, rows
    return train
